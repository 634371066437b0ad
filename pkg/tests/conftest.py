import math

import pytest

from caplora import defaults
from caplora.energy import (
    CapacitorConfig,
    CircuitConfig,
    DeviceThresholds,
    HarvesterConfig,
    LoadTable,
)


def make_loads(**overrides) -> LoadTable:
    values = dict(defaults.LOAD_OHMS)
    values.update(overrides)
    return LoadTable(**values)


def make_circuit(power_w: float = defaults.HARVEST_POWER_W,
                 c_farads: float = defaults.CAPACITANCE_F,
                 esr: float = 0.0,
                 epr: float = math.inf,
                 turn_on_fraction: float = defaults.TURN_ON_FRACTION,
                 loads: LoadTable | None = None) -> CircuitConfig:
    return CircuitConfig(
        harvester=HarvesterConfig(defaults.OPERATING_VOLTAGE, power_w),
        capacitor=CapacitorConfig(c_farads, esr=esr, epr=epr),
        loads=loads or make_loads(),
        thresholds=DeviceThresholds(
            v_min=defaults.TURN_OFF_VOLTAGE,
            v_sl=turn_on_fraction * defaults.OPERATING_VOLTAGE,
        ),
    )


@pytest.fixture
def circuit_1mw() -> CircuitConfig:
    return make_circuit()


@pytest.fixture
def circuit_100mw() -> CircuitConfig:
    return make_circuit(power_w=0.1)


def make_scenario(sf: int = 7,
                  ul_pl: int = 16,
                  dl_pl: int = 1,
                  interval_m: float = 10.0,
                  p1: float = 0.0,
                  p2: float = 0.0,
                  power_w: float = defaults.HARVEST_POWER_W,
                  c_farads: float = defaults.CAPACITANCE_F,
                  turn_on_fraction: float = defaults.TURN_ON_FRACTION):
    from caplora.simulator import Scenario
    from caplora.timing import RadioConfig

    return Scenario(
        circuit=make_circuit(power_w=power_w, c_farads=c_farads,
                             turn_on_fraction=turn_on_fraction),
        radio=RadioConfig(sf=sf),
        ul_pl=ul_pl,
        dl_pl=dl_pl,
        interval_m=interval_m,
        p1=p1,
        p2=p2,
    )
