"""Event-based simulation of the intermittent Class A device.

The device starts Off at the turn-off voltage and uplinks are scheduled
every `interval_m` seconds starting at t = 0.  Between cycles it charges
in Off until the turn-on threshold, then sleeps.  A scheduled uplink is
lost when the device is Off (or still busy with the previous cycle),
aborted when the capacitor hits the turn-off voltage mid-transmission,
and successful otherwise.  Every phase is advanced with the closed-form
voltage expressions; turn-off crossings are located analytically with
time_to_voltage, never by time stepping.

Two downlink-cost conventions live here, mirroring how such devices are
analyzed versus simulated:

* run_simulation (and the Markov chain built on the same rules) treats a
  detected downlink as the full preamble window at the listening load
  followed by the whole packet airtime at the receiving load.
* single_cycle_trace implements the leaner analytic cycle used by the
  capacitance/interval characterization, where a downlink simply replaces
  the corresponding listening window with one packet reception.

Draw order of the seeded PRNG (Python's random.Random, MT19937): one
uniform draw when reception window 1 opens, one more when window 2 opens
(only reached if window 1 detected nothing and the device is still on).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

from .energy import CircuitConfig, DeviceState, time_to_voltage, voltage_after
from .errors import ScenarioError
from .timing import RadioConfig, TimingSchedule, class_a_schedule, min_interval_bound


@dataclass(frozen=True)
class Scenario:
    """One complete operating point: circuit, radio, traffic and downlink odds."""

    circuit: CircuitConfig
    radio: RadioConfig
    ul_pl: int
    dl_pl: int
    interval_m: float
    p1: float = 0.0
    p2: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.p1 <= 1.0 and 0.0 <= self.p2 <= 1.0):
            raise ScenarioError(f"p1/p2 must be probabilities, got {self.p1}, {self.p2}")
        bound = min_interval_bound(self.schedule)
        if self.interval_m <= bound:
            raise ScenarioError(
                f"transmission interval {self.interval_m} s must exceed the "
                f"uplink/downlink sequence bound {bound:.6f} s"
            )

    @cached_property
    def schedule(self) -> TimingSchedule:
        return class_a_schedule(self.radio, self.ul_pl, self.dl_pl)


@dataclass(frozen=True)
class TracePoint:
    time: float
    voltage: float
    device_state: DeviceState


@dataclass(frozen=True)
class SimStats:
    """Per-run outcome counters; every scheduled uplink lands in exactly
    one of success / lost-while-off / aborted."""

    n_scheduled: int
    n_tx_success: int
    n_tx_lost_off: int
    n_tx_aborted: int
    n_dl1_success: int
    n_dl1_aborted: int
    n_dl2_success: int
    n_dl2_aborted: int

    @property
    def pdr(self) -> float:
        return self.n_tx_success / self.n_scheduled

    @property
    def pdl1(self) -> float:
        return self.n_dl1_success / self.n_scheduled

    @property
    def pdl2(self) -> float:
        return self.n_dl2_success / self.n_scheduled


class _DeviceWalk:
    """Advances one device through phases using the closed forms."""

    def __init__(self, circuit: CircuitConfig, trace: bool):
        self.circuit = circuit
        self.v = circuit.v_min
        self.off = True
        self.points: list[TracePoint] | None = [] if trace else None

    def record(self, t: float, state: DeviceState) -> None:
        if self.points is None:
            return
        point = TracePoint(t, self.v, state)
        if self.points and self.points[-1].time == t:
            self.points[-1] = point  # zero-duration phase; keep the outcome
        else:
            self.points.append(point)

    def run_phase(self, t_start: float, state: DeviceState, duration: float) -> tuple[bool, float]:
        """Spend `duration` in `state`; returns (survived, elapsed).

        A turn-off crossing ends the phase at the crossing instant with the
        device Off at v_min.  Only genuinely discharging phases can cross.
        """
        self.record(t_start, state)
        if self.circuit.asymptote(state) < self.v:
            t_cross = time_to_voltage(self.circuit, state, self.v, self.circuit.v_min)
            if t_cross <= duration:
                self.v = self.circuit.v_min
                self.off = True
                self.record(t_start + t_cross, DeviceState.OFF)
                return False, t_cross
        self.v = voltage_after(self.circuit, state, self.v, duration)
        return True, duration

    def advance_idle_until(self, t_from: float, t_to: float) -> None:
        """Move through Off-charging / wake / Sleep up to time t_to."""
        if t_to <= t_from:
            return
        if self.off:
            t_wake = time_to_voltage(self.circuit, DeviceState.OFF, self.v, self.circuit.v_sl)
            if t_from + t_wake > t_to:
                self.v = voltage_after(self.circuit, DeviceState.OFF, self.v, t_to - t_from)
                return
            self.v = self.circuit.v_sl
            self.off = False
            self.record(t_from + t_wake, DeviceState.SLEEP)
            t_from += t_wake
        self.v = voltage_after(self.circuit, DeviceState.SLEEP, self.v, t_to - t_from)


def run_simulation(scenario: Scenario, seed: int, n_scheduled: int = 1000,
                   trace: bool = False) -> tuple[SimStats, list[TracePoint]]:
    """Simulate n_scheduled uplink opportunities at t = 0, M, 2M, ...

    Deterministic for a fixed (scenario, seed, n_scheduled).  Returns the
    outcome counters and, when trace is set, the state/voltage trajectory
    at phase boundaries.
    """
    if n_scheduled < 1:
        raise ScenarioError(f"n_scheduled must be >= 1, got {n_scheduled}")
    sched = scenario.schedule
    circuit = scenario.circuit
    rng = random.Random(seed)
    walk = _DeviceWalk(circuit, trace)
    walk.record(0.0, DeviceState.OFF)

    tx_success = tx_lost = tx_aborted = 0
    dl1_success = dl1_aborted = dl2_success = dl2_aborted = 0
    t_cursor = 0.0

    for k in range(n_scheduled):
        t_k = k * scenario.interval_m
        if t_cursor > t_k:
            tx_lost += 1  # previous cycle still occupying the radio
            continue
        walk.advance_idle_until(t_cursor, t_k)
        t_cursor = t_k
        if walk.off:
            tx_lost += 1
            continue

        ok, dt = walk.run_phase(t_cursor, DeviceState.TX, sched.t_tx)
        t_cursor += dt
        if not ok:
            tx_aborted += 1
            continue
        tx_success += 1

        ok, dt = walk.run_phase(t_cursor, DeviceState.IDLE, sched.t_id1)
        t_cursor += dt
        if not ok:
            continue

        # Reception window 1: preamble at the listening load, then the
        # packet itself at the receiving load when one was detected.
        detected1 = rng.random() < scenario.p1
        ok, dt = walk.run_phase(t_cursor, DeviceState.LISTEN, sched.t_l1)
        t_cursor += dt
        if not ok:
            if detected1:
                dl1_aborted += 1
            continue
        if detected1:
            ok, dt = walk.run_phase(t_cursor, DeviceState.RX, sched.t_rx1)
            t_cursor += dt
            if ok:
                dl1_success += 1
                walk.record(t_cursor, DeviceState.SLEEP)
            else:
                dl1_aborted += 1
            continue  # window 2 only opens when window 1 stayed silent

        ok, dt = walk.run_phase(t_cursor, DeviceState.IDLE, sched.t_id2)
        t_cursor += dt
        if not ok:
            continue

        detected2 = rng.random() < scenario.p2
        ok, dt = walk.run_phase(t_cursor, DeviceState.LISTEN, sched.t_l2)
        t_cursor += dt
        if not ok:
            if detected2:
                dl2_aborted += 1
            continue
        if detected2:
            ok, dt = walk.run_phase(t_cursor, DeviceState.RX, sched.t_rx2)
            t_cursor += dt
            if ok:
                dl2_success += 1
                walk.record(t_cursor, DeviceState.SLEEP)
            else:
                dl2_aborted += 1
        else:
            walk.record(t_cursor, DeviceState.SLEEP)

    stats = SimStats(
        n_scheduled=n_scheduled,
        n_tx_success=tx_success,
        n_tx_lost_off=tx_lost,
        n_tx_aborted=tx_aborted,
        n_dl1_success=dl1_success,
        n_dl1_aborted=dl1_aborted,
        n_dl2_success=dl2_success,
        n_dl2_aborted=dl2_aborted,
    )
    return stats, (walk.points or [])


def cycle_phases(sched: TimingSchedule, dl_case: str) -> list[tuple[DeviceState, float]]:
    """Phases of the analytic uplink/downlink cycle for one dl_case.

    A downlink replaces its listening window: 'rx1' receives right after
    the first idle second (and the cycle ends there), 'rx2' receives in
    place of the second listening window, 'none' listens through both.
    """
    if dl_case == "none":
        return [
            (DeviceState.TX, sched.t_tx),
            (DeviceState.IDLE, sched.t_id1),
            (DeviceState.LISTEN, sched.t_l1),
            (DeviceState.IDLE, sched.t_id2),
            (DeviceState.LISTEN, sched.t_l2),
        ]
    if dl_case == "rx1":
        return [
            (DeviceState.TX, sched.t_tx),
            (DeviceState.IDLE, sched.t_id1),
            (DeviceState.RX, sched.t_rx1),
        ]
    if dl_case == "rx2":
        return [
            (DeviceState.TX, sched.t_tx),
            (DeviceState.IDLE, sched.t_id1),
            (DeviceState.LISTEN, sched.t_l1),
            (DeviceState.IDLE, sched.t_id2),
            (DeviceState.RX, sched.t_rx2),
        ]
    raise ScenarioError(f"dl_case must be 'none', 'rx1' or 'rx2', got {dl_case!r}")


def single_cycle_trace(scenario: Scenario, v_start: float,
                       dl_case: str = "none") -> tuple[list[TracePoint], float, bool]:
    """Run exactly one deterministic uplink/downlink cycle from v_start.

    Returns (trace, final_voltage, completed); completed is False when the
    capacitor touched the turn-off voltage anywhere in the cycle.
    """
    circuit = scenario.circuit
    if not circuit.v_min <= v_start <= circuit.operating_voltage:
        raise ScenarioError(
            f"v_start must lie in [{circuit.v_min}, {circuit.operating_voltage}], got {v_start}"
        )
    walk = _DeviceWalk(circuit, trace=True)
    walk.v = v_start
    walk.off = False
    t = 0.0
    for state, duration in cycle_phases(scenario.schedule, dl_case):
        ok, dt = walk.run_phase(t, state, duration)
        t += dt
        if not ok:
            return walk.points or [], walk.v, False
    walk.record(t, DeviceState.SLEEP)
    return walk.points or [], walk.v, True


def trace_to_csv(points: Iterable[TracePoint]) -> str:
    """Render a trace as CSV: 9 significant digits for time, 6 for voltage."""
    lines = ["time_s,voltage_v,state"]
    for p in points:
        lines.append(f"{p.time:.9g},{p.voltage:.6g},{p.device_state}")
    return "\n".join(lines) + "\n"
