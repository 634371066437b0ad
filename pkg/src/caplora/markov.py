"""Discrete-time, discrete-voltage Markov chain of the device.

The chain is embedded at the scheduled transmission instants (every
`interval_m` seconds).  Voltage is quantized to integer levels,
level = round(v * g) with g levels per volt; time stays continuous within
a cycle.  System states pair a coarse kind with a voltage level:

    OFF  device below the turn-on threshold, packet lost;
    SL0  awake but without the energy to finish an uplink (it starts and
         aborts at the turn-off voltage);
    SL1  awake with enough energy, the uplink succeeds.

Transitions compose the discrete voltage map V(state, level, duration)
phase by phase, re-quantizing after every phase exactly like the voltage
bookkeeping the metrics use.  Within SL1 the downlink branches follow the
same window rules as the event simulator: a window always costs its
preamble at the listening load, a detected downlink additionally costs
the packet airtime at the receiving load, and any brush with the turn-off
voltage lands the device Off at v_min, recharging for whatever remains of
the interval.

The chain is built only over states reachable from (OFF, level(v_min)),
which keeps the recurrent class unique and the matrix small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph
import scipy.sparse.linalg

from .energy import CircuitConfig, DeviceState, time_to_voltage, voltage_after
from .errors import InfeasibleScenario, NonConvergence, ScenarioError
from .simulator import Scenario

OFF, SL0, SL1 = "OFF", "SL0", "SL1"


class ChainState(NamedTuple):
    kind: str
    level: int


@dataclass(frozen=True)
class ThresholdLevels:
    """Quantized decision levels of the chain (all in voltage levels)."""

    v_min: int
    v_sl: int
    v_tx: int    # minimal sleep level from which an uplink still finishes
    v_rx1: int   # minimal reception-start level surviving window 1 (v_max+1 if none)
    v_rx2: int   # minimal reception-start level surviving window 2 (v_max+1 if none)
    v_max: int


def level_of(v: float, g: int) -> int:
    """round-to-nearest voltage level (ties to even, Python round)."""
    return round(v * g)


def _check_granularity(g: int) -> None:
    if not isinstance(g, int) or g < 1:
        raise ScenarioError(f"granularity must be an integer >= 1, got {g!r}")


def discrete_voltage_after(circuit: CircuitConfig, state: DeviceState,
                           level0: int, t: float, g: int) -> int:
    """Quantized voltage evolution: de-quantize, evolve, round, clamp."""
    _check_granularity(g)
    v = voltage_after(circuit, state, level0 / g, t)
    return min(max(level_of(v, g), 0), level_of(circuit.operating_voltage, g))


def discrete_time_to_level(circuit: CircuitConfig, state: DeviceState,
                           level_i: int, level_f: int, g: int) -> float:
    """Time between two quantized levels; math.inf when unreachable."""
    _check_granularity(g)
    return time_to_voltage(circuit, state, level_i / g, level_f / g)


class _VoltageSteps:
    """Per-(state, duration) cached one-step discrete voltage maps.

    Each device phase has a fixed duration, so its exponential decay
    factor is a constant; one step is then level -> round of a linear map,
    with no exp() in the hot path.
    """

    def __init__(self, circuit: CircuitConfig, g: int):
        self.circuit = circuit
        self.g = g
        self.v_max = level_of(circuit.operating_voltage, g)
        self._decay: dict[tuple[DeviceState, float], tuple[float, float]] = {}

    def step(self, state: DeviceState, level0: int, duration: float) -> int:
        key = (state, duration)
        cached = self._decay.get(key)
        if cached is None:
            p = self.circuit.state_params(state)
            cached = (math.exp(-duration / p.tau), p.v_limit)
            self._decay[key] = cached
        decay, v_limit = cached
        v = v_limit + (level0 / self.g - v_limit) * decay
        return min(max(level_of(v, self.g), 0), self.v_max)


def _min_level_surviving(steps: _VoltageSteps, state: DeviceState, duration: float,
                         lo: int, hi: int, target: int) -> int | None:
    """Smallest start level in [lo, hi] whose end level reaches `target`.

    The end level is nondecreasing in the start level, so binary search.
    """
    if steps.step(state, hi, duration) < target:
        return None
    while lo < hi:
        mid = (lo + hi) // 2
        if steps.step(state, mid, duration) >= target:
            hi = mid
        else:
            lo = mid + 1
    return lo


def threshold_levels(scenario: Scenario, g: int) -> ThresholdLevels:
    """Quantized feasibility thresholds for transmit and both receptions.

    Raises InfeasibleScenario when no level can fund a full transmission
    (the capacitor is simply too small); the reception thresholds use the
    sentinel v_max + 1 instead, because an unreceivable downlink still
    leaves a working uplink-only device.
    """
    _check_granularity(g)
    circuit, sched = scenario.circuit, scenario.schedule
    steps = _VoltageSteps(circuit, g)
    v_min = level_of(circuit.v_min, g)
    v_max = steps.v_max
    survive = v_min + 1
    v_tx = _min_level_surviving(steps, DeviceState.TX, sched.t_tx, v_min, v_max, survive)
    if v_tx is None:
        raise InfeasibleScenario(
            f"no voltage level up to {circuit.operating_voltage} V can fund a "
            f"{sched.t_tx * 1e3:.1f} ms transmission with C = "
            f"{circuit.capacitor.capacitance * 1e3:.3g} mF"
        )
    v_rx1 = _min_level_surviving(steps, DeviceState.RX, sched.t_rx1, v_min, v_max, survive)
    v_rx2 = _min_level_surviving(steps, DeviceState.RX, sched.t_rx2, v_min, v_max, survive)
    return ThresholdLevels(
        v_min=v_min,
        v_sl=level_of(circuit.v_sl, g),
        v_tx=v_tx,
        v_rx1=v_max + 1 if v_rx1 is None else v_rx1,
        v_rx2=v_max + 1 if v_rx2 is None else v_rx2,
        v_max=v_max,
    )


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic transition matrix over the reachable chain states."""

    states: tuple[ChainState, ...]
    index: dict
    matrix: sp.csr_matrix
    thresholds: ThresholdLevels
    granularity: int

    def coordinate_lines(self) -> Iterable[str]:
        """Debug dump: one 'src_kind,src_level,dst_kind,dst_level,prob' per entry."""
        coo = self.matrix.tocoo()
        for i, j, p in zip(coo.row, coo.col, coo.data):
            src, dst = self.states[i], self.states[j]
            yield f"{src.kind},{src.level},{dst.kind},{dst.level},{p:.12g}"


class _RowBuilder:
    """Computes the outgoing distribution of one chain state."""

    def __init__(self, scenario: Scenario, g: int, thr: ThresholdLevels):
        self.scenario = scenario
        self.circuit = scenario.circuit
        self.sched = scenario.schedule
        self.g = g
        self.thr = thr
        self.steps = _VoltageSteps(self.circuit, g)
        self.v_min_volts = self.circuit.v_min
        # Off-state recharge from the turn-off voltage to the turn-on
        # threshold; a constant of the circuit (inf if v_sl is unreachable).
        self.t_recharge = time_to_voltage(
            self.circuit, DeviceState.OFF, self.circuit.v_min, self.circuit.v_sl)
        if scenario.p2 > 0:
            window2_total = (self.sched.t_tx + self.sched.t_id1 + self.sched.t_l1
                             + self.sched.t_id2 + self.sched.t_l2 + self.sched.t_rx2)
            if scenario.interval_m <= window2_total:
                raise ScenarioError(
                    f"interval {scenario.interval_m} s cannot contain a "
                    f"detected window-2 reception ({window2_total:.3f} s)"
                )

    def _sleep_kind(self, level: int) -> str:
        return SL1 if level >= self.thr.v_tx else SL0

    def _to_sleep(self, level: int, elapsed: float) -> ChainState:
        """Finish the cycle asleep and advance to the next instant."""
        nxt = self.steps.step(DeviceState.SLEEP, level, self.scenario.interval_m - elapsed)
        return ChainState(self._sleep_kind(nxt), nxt)

    def _to_off(self, elapsed: float) -> ChainState:
        """Die at v_min at `elapsed`, then recharge for the remainder."""
        remaining = self.scenario.interval_m - elapsed
        if self.t_recharge >= remaining:
            nxt = self.steps.step(DeviceState.OFF, self.thr.v_min, remaining)
            return ChainState(OFF, min(nxt, self.thr.v_sl - 1))
        nxt = self.steps.step(DeviceState.SLEEP, self.thr.v_sl,
                              remaining - self.t_recharge)
        return ChainState(self._sleep_kind(nxt), nxt)

    def _die_time(self, state: DeviceState, level: int, duration: float) -> float:
        """Continuous time until v_min inside one phase, capped at its length.

        The cap covers quantization edges where the rounded end level says
        "died" but the continuous trajectory grazes just above v_min.
        """
        t = time_to_voltage(self.circuit, state, level / self.g, self.v_min_volts)
        return min(t, duration)

    def row(self, state: ChainState) -> dict[ChainState, float]:
        sched, thr, m = self.sched, self.thr, self.scenario.interval_m
        dests: dict[ChainState, float] = {}

        def add(dest: ChainState, prob: float) -> None:
            if prob > 0.0:
                dests[dest] = dests.get(dest, 0.0) + prob

        if state.kind == OFF:
            t_charge = time_to_voltage(
                self.circuit, DeviceState.OFF, state.level / self.g, self.circuit.v_sl)
            if t_charge >= m:
                nxt = self.steps.step(DeviceState.OFF, state.level, m)
                add(ChainState(OFF, min(nxt, thr.v_sl - 1)), 1.0)
            else:
                nxt = self.steps.step(DeviceState.SLEEP, thr.v_sl, m - t_charge)
                add(ChainState(self._sleep_kind(nxt), nxt), 1.0)
            return dests

        if state.kind == SL0:
            # The uplink starts but runs out of energy mid-air.
            t_abort = self._die_time(DeviceState.TX, state.level, sched.t_tx)
            add(self._to_off(t_abort), 1.0)
            return dests

        # SL1: the uplink completes, then the two receive windows.
        p1, p2 = self.scenario.p1, self.scenario.p2
        after_tx = self.steps.step(DeviceState.TX, state.level, sched.t_tx)
        v1 = self.steps.step(DeviceState.IDLE, after_tx, sched.t_id1)
        t_base = sched.t_tx + sched.t_id1

        w1 = self.steps.step(DeviceState.LISTEN, v1, sched.t_l1)
        if p1 > 0.0:
            if w1 >= thr.v_rx1:
                rx_end = self.steps.step(DeviceState.RX, w1, sched.t_rx1)
                add(self._to_sleep(rx_end, t_base + sched.t_l1 + sched.t_rx1), p1)
            elif w1 <= thr.v_min:
                add(self._to_off(t_base + self._die_time(DeviceState.LISTEN, v1, sched.t_l1)), p1)
            else:
                t_die = sched.t_l1 + self._die_time(DeviceState.RX, w1, sched.t_rx1)
                add(self._to_off(t_base + t_die), p1)
        if p1 < 1.0:
            silent = 1.0 - p1
            if w1 <= thr.v_min:
                add(self._to_off(t_base + self._die_time(DeviceState.LISTEN, v1, sched.t_l1)),
                    silent)
                return dests
            v2 = self.steps.step(DeviceState.IDLE, w1, sched.t_id2)
            t_win2 = t_base + sched.t_l1 + sched.t_id2
            w2 = self.steps.step(DeviceState.LISTEN, v2, sched.t_l2)
            if p2 > 0.0:
                if w2 >= thr.v_rx2:
                    rx_end = self.steps.step(DeviceState.RX, w2, sched.t_rx2)
                    add(self._to_sleep(rx_end, t_win2 + sched.t_l2 + sched.t_rx2), silent * p2)
                elif w2 <= thr.v_min:
                    add(self._to_off(t_win2 + self._die_time(DeviceState.LISTEN, v2, sched.t_l2)),
                        silent * p2)
                else:
                    t_die = sched.t_l2 + self._die_time(DeviceState.RX, w2, sched.t_rx2)
                    add(self._to_off(t_win2 + t_die), silent * p2)
            if p2 < 1.0:
                quiet = silent * (1.0 - p2)
                if w2 <= thr.v_min:
                    add(self._to_off(t_win2 + self._die_time(DeviceState.LISTEN, v2, sched.t_l2)),
                        quiet)
                else:
                    add(self._to_sleep(w2, t_win2 + sched.t_l2), quiet)
        return dests


def build_transition_matrix(scenario: Scenario, g: int) -> TransitionMatrix:
    """Build the chain over every state reachable from (OFF, level(v_min))."""
    thr = threshold_levels(scenario, g)
    builder = _RowBuilder(scenario, g, thr)
    initial = ChainState(OFF, thr.v_min)
    index: dict[ChainState, int] = {initial: 0}
    states: list[ChainState] = [initial]
    rows: list[dict[ChainState, float]] = []
    frontier = 0
    while frontier < len(states):
        row = builder.row(states[frontier])
        rows.append(row)
        for dest in row:
            if dest not in index:
                index[dest] = len(states)
                states.append(dest)
        frontier += 1

    data, cols, indptr = [], [], [0]
    for row in rows:
        for dest, prob in row.items():
            cols.append(index[dest])
            data.append(prob)
        indptr.append(len(data))
    n = len(states)
    matrix = sp.csr_matrix((np.asarray(data), np.asarray(cols), np.asarray(indptr)),
                           shape=(n, n))
    return TransitionMatrix(states=tuple(states), index=index, matrix=matrix,
                            thresholds=thr, granularity=g)


def stationary_distribution(tm: TransitionMatrix, initial: ChainState | None = None,
                            tol: float = 1e-10, max_iter: int = 10**6) -> np.ndarray:
    """Long-run state distribution observed from `initial`.

    Fully deterministic chains (every row one entry, i.e. p1 and p2 are 0
    or 1) settle into a single cycle; the distribution is computed exactly
    as the uniform measure on that cycle.  Otherwise averaged power
    iteration runs on the half-lazy chain (P + I) / 2, which shares P's
    stationary vectors but mixes geometrically even through periodic
    sub-cycles.
    """
    n = tm.matrix.shape[0]
    start = tm.index[initial] if initial is not None else 0
    counts = np.diff(tm.matrix.indptr)
    if counts.max(initial=1) == 1:
        succ = tm.matrix.indices
        seen: dict[int, int] = {}
        order: list[int] = []
        node = start
        while node not in seen:
            seen[node] = len(order)
            order.append(node)
            node = int(succ[node])
        cycle = order[seen[node]:]
        pi = np.zeros(n)
        pi[cycle] = 1.0 / len(cycle)
        return pi

    pt = tm.matrix.transpose().tocsr()
    x = np.zeros(n)
    x[start] = 1.0
    epoch = 64
    done = 0
    residual = math.inf
    while done < max_iter:
        acc = np.zeros(n)
        for _ in range(min(epoch, max_iter - done)):
            x = 0.5 * (x + pt @ x)
            acc += x
            done += 1
        avg = acc / acc.sum()
        residual = float(np.abs(pt @ avg - avg).max())
        if residual < tol:
            return avg
        x = avg
        epoch *= 2
    raise NonConvergence("stationary distribution did not converge", residual)


def stationary_direct(tm: TransitionMatrix, initial: ChainState | None = None) -> np.ndarray:
    """Cross-check solver: exact linear solve on the recurrent class(es).

    Finds the closed strongly-connected classes, solves pi P = pi on each,
    and when several are reachable weighs them by the absorption
    probability from `initial`.
    """
    p = tm.matrix
    n = p.shape[0]
    start = tm.index[initial] if initial is not None else 0
    n_comp, labels = scipy.sparse.csgraph.connected_components(
        p, directed=True, connection="strong")
    coo = p.tocoo()
    closed = np.ones(n_comp, dtype=bool)
    for i, j in zip(coo.row, coo.col):
        if labels[i] != labels[j]:
            closed[labels[i]] = False

    def class_stationary(members: np.ndarray) -> np.ndarray:
        sub = p[np.ix_(members, members)].toarray()
        k = len(members)
        a = np.vstack([sub.T - np.eye(k), np.ones((1, k))])
        b = np.zeros(k + 1)
        b[-1] = 1.0
        pi_c, *_ = np.linalg.lstsq(a, b, rcond=None)
        pi_c = np.clip(pi_c, 0.0, None)
        return pi_c / pi_c.sum()

    closed_ids = [c for c in range(n_comp) if closed[c]]
    pi = np.zeros(n)
    if labels[start] in closed_ids:
        members = np.flatnonzero(labels == labels[start])
        pi[members] = class_stationary(members)
        return pi

    transient = np.flatnonzero(~closed[labels])
    t_index = {int(s): k for k, s in enumerate(transient)}
    q = p[np.ix_(transient, transient)]
    lhs = sp.eye(len(transient), format="csc") - q.tocsc()
    for c in closed_ids:
        members = np.flatnonzero(labels == c)
        rhs = np.asarray(p[np.ix_(transient, members)].sum(axis=1)).ravel()
        absorb = scipy.sparse.linalg.spsolve(lhs, rhs)
        weight = float(absorb[t_index[start]])
        if weight > 0.0:
            pi[members] += weight * class_stationary(members)
    return pi / pi.sum()


@dataclass(frozen=True)
class ChainResult:
    """Stationary distribution plus the three delivery metrics."""

    pi: np.ndarray
    states: tuple[ChainState, ...]
    pdr: float
    pdl1: float
    pdl2: float


def chain_metrics(pi: np.ndarray, tm: TransitionMatrix, scenario: Scenario,
                  strict_rx2_threshold: bool = False) -> ChainResult:
    """Delivery metrics from a stationary vector.

    pdr is one minus the OFF and SL0 mass.  pdl1 multiplies the SL1 mass
    by p1 and an indicator that the post-transmit, post-idle voltage can
    fund the window-1 packet.  pdl2 multiplies by (1 - p1) * p2 and, as
    the model defines it, only requires the pre-window-2 voltage to sit at
    or above the turn-off level; strict_rx2_threshold switches that
    indicator to the window-2 reception threshold instead.
    """
    thr, g = tm.thresholds, tm.granularity
    steps = _VoltageSteps(scenario.circuit, g)
    sched = scenario.schedule
    off_sl0 = sum(float(pi[i]) for i, s in enumerate(tm.states) if s.kind != SL1)
    pdr = 1.0 - off_sl0
    pdl1 = 0.0
    pdl2 = 0.0
    rx2_floor = thr.v_rx2 if strict_rx2_threshold else thr.v_min
    for i, s in enumerate(tm.states):
        if s.kind != SL1 or pi[i] == 0.0:
            continue
        v1 = steps.step(DeviceState.IDLE,
                        steps.step(DeviceState.TX, s.level, sched.t_tx), sched.t_id1)
        if v1 >= thr.v_rx1:
            pdl1 += scenario.p1 * float(pi[i])
        v2 = steps.step(DeviceState.IDLE,
                        steps.step(DeviceState.LISTEN, v1, sched.t_l1), sched.t_id2)
        if v2 >= rx2_floor:
            pdl2 += (1.0 - scenario.p1) * scenario.p2 * float(pi[i])
    return ChainResult(pi=pi, states=tm.states, pdr=pdr, pdl1=pdl1, pdl2=pdl2)


def solve_chain(scenario: Scenario, g: int,
                strict_rx2_threshold: bool = False) -> ChainResult:
    """Build the chain, solve for the stationary vector, return the metrics."""
    tm = build_transition_matrix(scenario, g)
    pi = stationary_distribution(tm)
    return chain_metrics(pi, tm, scenario, strict_rx2_threshold=strict_rx2_threshold)
