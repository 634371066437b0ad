"""Performance model of capacitor-powered (battery-less) LoRaWAN Class A
devices: circuit closed forms, airtime arithmetic, an event-based
simulator, a discrete-voltage Markov chain and characterization drivers.
"""

from .energy import (
    CapacitorConfig,
    CircuitConfig,
    DeviceState,
    DeviceThresholds,
    HarvesterConfig,
    LoadTable,
    equivalent_resistance,
    load_resistance,
    time_to_voltage,
    voltage_after,
)
from .errors import (
    InfeasibleScenario,
    NegativeIdleError,
    NoFeasibleCapacitance,
    NonConvergence,
    ScenarioError,
)
from .timing import (
    RadioConfig,
    TimingSchedule,
    class_a_schedule,
    min_interval_bound,
    payload_symbols,
    preamble_time,
    symbol_time,
    time_on_air,
)
from .simulator import (
    Scenario,
    SimStats,
    TracePoint,
    run_simulation,
    single_cycle_trace,
    trace_to_csv,
)
from .markov import (
    ChainResult,
    ChainState,
    ThresholdLevels,
    TransitionMatrix,
    build_transition_matrix,
    chain_metrics,
    discrete_time_to_level,
    discrete_voltage_after,
    solve_chain,
    stationary_direct,
    stationary_distribution,
    threshold_levels,
)
from .characterize import (
    AccuracyRow,
    SweepRow,
    SweepSpec,
    accuracy_study,
    accuracy_summary,
    min_capacitance,
    min_tx_interval,
    required_cycle_voltage,
    threshold_sweep,
    wakeup_time,
)
from .config import LoadedScenario, dump_scenario, load_scenario, parse_scenario

__version__ = "1.0.0"
