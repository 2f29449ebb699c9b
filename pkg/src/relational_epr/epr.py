"""EPR-Bohm setup with two observers and spacelike-separated measurements.

Observer O1 measures particle S1 at event R, observer O2 measures S2 at
event L. Each reasons only from its own ledger entries plus the spacetime
geometry of the two measurement events. Whether the incompleteness or
nonlocality conclusion follows for an observer depends on which measurement
comes first in the frame used to order the bookkeeping.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .hilbert import (
    ATOL,
    INPUT_TOL,
    DensityMatrix,
    StateVector,
    born_probabilities,
    identity,
    joint_probabilities,
    partial_trace,
    sample_outcome,
    singlet,
    spin_observable,
    tensor_op,
)
from .relational import EPSILON, Ledger, LedgerError, SystemId, observe
from .spacetime import (
    LAB,
    SIMULTANEITY_TOL,
    Event,
    Frame,
    Ordering,
    Separation,
    boosted_time,
    classify,
    order_in_frame,
)

S1, S2 = "S1", "S2"
PAIR = SystemId((S1, S2))


class Side(enum.Enum):
    R = "r"
    L = "l"


class Case(enum.Enum):
    A = "a"  # M_R precedes M_L
    B = "b"  # M_R follows M_L
    C = "c"  # simultaneous


class Conclusion(enum.Enum):
    ARGUMENT_APPLIES = "argument-applies"
    ARGUMENT_FAILS = "argument-fails"
    OUTCOME_OUTCOME_DEPENDENCE = "outcome-outcome-dependence"


def _unit_tuple(v, name):
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be a finite 3-vector")
    if abs(np.linalg.norm(arr) - 1.0) > INPUT_TOL:
        raise ValueError(f"{name} must be a unit vector (|{name}| = {np.linalg.norm(arr):.12g})")
    return tuple(float(x) for x in arr)


@dataclass(frozen=True)
class EPRScenario:
    axis_r: tuple
    axis_l: tuple
    event_r: Event
    event_l: Event
    t0: float = -1.0
    observers: tuple = ("O1", "O2")
    seed: int = 0
    forced_outcomes: Optional[tuple] = None  # (outcome at R, outcome at L)

    def __post_init__(self):
        object.__setattr__(self, "axis_r", _unit_tuple(self.axis_r, "axis_r"))
        object.__setattr__(self, "axis_l", _unit_tuple(self.axis_l, "axis_l"))
        if classify(self.event_r, self.event_l) is not Separation.SPACELIKE:
            raise ValueError("event_r and event_l must be spacelike separated")
        if not float(self.t0) < min(self.event_r.t, self.event_l.t):
            raise ValueError("t0 must precede both measurement events in the lab frame")
        if len(self.observers) != 2 or len(set(self.observers)) != 2:
            raise ValueError("two distinct observer names are required")
        if self.forced_outcomes is not None:
            forced = tuple(float(v) for v in self.forced_outcomes)
            if len(forced) != 2 or any(v not in (1.0, -1.0) for v in forced):
                raise ValueError("forced outcomes must be a pair of ±1 values")
            object.__setattr__(self, "forced_outcomes", forced)

    def observer(self, side: Side) -> str:
        return self.observers[0] if side is Side.R else self.observers[1]

    def side_of(self, observer: str) -> Side:
        if observer == self.observers[0]:
            return Side.R
        if observer == self.observers[1]:
            return Side.L
        raise ValueError(f"{observer!r} is not an observer of this scenario")

    def event(self, side: Side) -> Event:
        return self.event_r if side is Side.R else self.event_l

    def axis(self, side: Side) -> tuple:
        return self.axis_r if side is Side.R else self.axis_l

    @property
    def axes_aligned(self) -> bool:
        return abs(abs(float(np.dot(self.axis_r, self.axis_l))) - 1.0) <= INPUT_TOL


def _position(side: Side) -> int:
    return 0 if side is Side.R else 1


def _other(side: Side) -> Side:
    return Side.L if side is Side.R else Side.R


def _local_system(side: Side) -> str:
    return S1 if side is Side.R else S2


def local_observable(scenario: EPRScenario, side: Side):
    sigma = spin_observable(scenario.axis(side))
    pair = [sigma, identity(2)] if side is Side.R else [identity(2), sigma]
    return tensor_op(*pair)


def initialize(scenario: EPRScenario) -> Ledger:
    """Both observers agree on the singlet at t0, and on the reduced mixtures."""
    ledger = Ledger()
    ledger.add_system(S1, 2)
    ledger.add_system(S2, 2)
    psi = singlet()
    for obs in scenario.observers:
        ledger.add_observer(obs)
        ledger.add_state(obs, PAIR, scenario.t0, psi)
        ledger.add_state(obs, S1, scenario.t0, partial_trace(psi, 0, (2, 2)))
        ledger.add_state(obs, S2, scenario.t0, partial_trace(psi, 1, (2, 2)))
    return ledger


def _reduced(state, keep: int):
    rho = partial_trace(state, keep, (2, 2))
    return rho.to_state(("+", "-")) if rho.is_pure() else rho


def measure_side(
    ledger: Ledger,
    scenario: EPRScenario,
    side: Side,
    forced_outcome: Optional[float] = None,
    rng: Optional[np.random.Generator] = None,
):
    """The side's observer measures spin on its local particle at its event.

    Besides the collapsed pair state, the observer's ledger gains the reduced
    state of each particle; for the singlet the remote one is the pure
    opposite-spin eigenstate.
    """
    side = Side(side)
    observer = scenario.observer(side)
    event = scenario.event(side)
    if any(r.event == event for r in ledger.records(observer, PAIR)):
        raise LedgerError(f"{observer} already measured side {side.value}")
    obs = local_observable(scenario, side)
    observe(ledger, observer, PAIR, obs, event.t, rng=rng, forced_outcome=forced_outcome, event=event)
    post = ledger.state_of(observer, PAIR, event.t)
    ledger.add_state(observer, S1, event.t, _reduced(post, 0))
    ledger.add_state(observer, S2, event.t, _reduced(post, 1))
    return ledger.records(observer, PAIR)[-1]


@dataclass(frozen=True)
class Prediction:
    value: Optional[float]
    probability: float
    certain: bool
    distribution: dict


def predict_remote(ledger: Ledger, scenario: EPRScenario, observer: str, time: Optional[float] = None) -> Prediction:
    """What ``observer`` predicts for the remote side's spin measurement, from its own ledger."""
    side = scenario.side_of(observer)
    remote = _other(side)
    when = scenario.event(side).t if time is None else time
    state = ledger.state_of(observer, _local_system(remote), when)
    dist = born_probabilities(state, spin_observable(scenario.axis(remote)))
    value, prob = max(dist.items(), key=lambda kv: kv[1])
    certain = prob >= 1.0 - ATOL
    return Prediction(value if certain else None, prob, certain, dist)


@dataclass(frozen=True)
class Property:
    """Spin value along the remote axis attributed to ``system`` relative to ``observer``."""

    observer: str
    system: str
    value: float
    time: float
    state: StateVector


@dataclass(frozen=True)
class TraceItem:
    premise: str
    note: str
    refs: tuple = ()


@dataclass(frozen=True)
class PremiseSet:
    observer: str
    reality: bool
    r_locality: bool
    completeness: bool
    adequacy: bool
    outcome_dependence: bool
    objective_property: Optional[Property]
    backtracked: Optional[Property]
    trace: tuple = field(default=())

    @property
    def clash(self) -> bool:
        return self.backtracked is not None and not self.completeness

    @property
    def conclusion(self) -> Conclusion:
        if self.clash:
            return Conclusion.ARGUMENT_APPLIES
        if self.outcome_dependence:
            return Conclusion.OUTCOME_OUTCOME_DEPENDENCE
        return Conclusion.ARGUMENT_FAILS


def evaluate_premises(
    ledger: Ledger,
    observer: str,
    scenario: EPRScenario,
    frame: Frame = LAB,
    tol: float = SIMULTANEITY_TOL,
) -> PremiseSet:
    """Run the observer-relative premises against ``observer``'s own entries.

    Reality* fires when the observer can predict the remote spin with
    probability one after a local-only measurement. R-Locality* then carries
    the property back to t0, unless in ``frame`` the remote measurement does
    not come strictly later (then the remote value is not created at a
    distance but fixed at the remote site, or, when simultaneous, is plain
    outcome-outcome dependence). The clash is the backtracked pure-state
    property meeting the observer's own t0 mixture for the remote particle.
    """
    side = scenario.side_of(observer)
    remote = _other(side)
    remote_sys = _local_system(remote)
    trace = [TraceItem("adequacy", "outcome statistics follow the Born rule")]
    empty = dict(reality=False, r_locality=False, completeness=True, adequacy=True,
                 objective_property=None, backtracked=None)

    ordering = order_in_frame(frame, scenario.event(side), scenario.event(remote), tol)
    simultaneous = ordering is Ordering.SIMULTANEOUS
    own = ledger.records(observer, PAIR)
    if not own:
        trace.append(TraceItem("reality*", f"{observer} has made no spin measurement"))
        return PremiseSet(observer, outcome_dependence=False, trace=tuple(trace), **empty)

    record = own[-1]
    t = record.time
    pred = predict_remote(ledger, scenario, observer, t)
    if not pred.certain:
        trace.append(TraceItem(
            "reality*",
            f"no probability-one prediction for {remote_sys} along its axis: {pred.distribution}",
            (record.key,),
        ))
        return PremiseSet(observer, outcome_dependence=simultaneous, trace=tuple(trace), **empty)

    remote_entry = ledger.entry_of(observer, remote_sys, t)
    remote_state = remote_entry.state
    if isinstance(remote_state, DensityMatrix):
        remote_state = remote_state.to_state(("+", "-"))
    objective = Property(observer, remote_sys, pred.value, t + EPSILON, remote_state)
    trace.append(TraceItem(
        "reality*",
        f"[{pred.value:+g}] of {remote_sys} objective relative to {observer} at t={t + EPSILON!r}",
        (record.key, remote_entry.key),
    ))

    if ordering is not Ordering.FIRST_PRECEDES_SECOND:
        why = ("remote measurement is simultaneous: only outcome-outcome dependence"
               if simultaneous else "remote measurement already happened in this frame")
        trace.append(TraceItem("r-locality*", f"backtracking not licensed, {why}"))
        return PremiseSet(observer, True, False, True, True, simultaneous, objective, None, tuple(trace))

    backtracked = Property(observer, remote_sys, pred.value, scenario.t0, remote_state)
    trace.append(TraceItem(
        "r-locality*",
        f"[{pred.value:+g}] carried back to t0={scenario.t0!r}, since a spacelike measurement cannot create it",
        (remote_entry.key,),
    ))
    t0_entry = ledger.entry_of(observer, remote_sys, scenario.t0)
    t0_prob = born_probabilities(t0_entry.state, spin_observable(scenario.axis(remote)))[pred.value]
    completeness = t0_prob >= 1.0 - ATOL
    if completeness:
        trace.append(TraceItem("completeness*", "t0 state already carries the property", (t0_entry.key,)))
    else:
        trace.append(TraceItem(
            "completeness*",
            f"t0 state of {remote_sys} gives [{pred.value:+g}] probability {t0_prob:.6g}: "
            "a relative-objective property the quantum state does not account for",
            (t0_entry.key,),
        ))
    return PremiseSet(observer, True, True, completeness, True, False, objective, backtracked, tuple(trace))


def classify_case(frame: Frame, scenario: EPRScenario, tol: float = SIMULTANEITY_TOL) -> Case:
    ordering = order_in_frame(frame, scenario.event_r, scenario.event_l, tol)
    return {
        Ordering.FIRST_PRECEDES_SECOND: Case.A,
        Ordering.SECOND_PRECEDES_FIRST: Case.B,
        Ordering.SIMULTANEOUS: Case.C,
    }[ordering]


def draw_outcomes(scenario: EPRScenario, rng: Optional[np.random.Generator] = None) -> tuple:
    """Joint Born draw of the (R, L) spin outcomes, or the scenario's forced pair."""
    if scenario.forced_outcomes is not None:
        return scenario.forced_outcomes
    rng = np.random.default_rng(scenario.seed) if rng is None else rng
    dist = joint_probabilities(
        singlet(), spin_observable(scenario.axis_r), spin_observable(scenario.axis_l)
    )
    return sample_outcome(dist, rng)


@dataclass(frozen=True)
class Verdict:
    case: Case
    conclusions: dict
    premises: dict = field(default_factory=dict, compare=False)
    outcomes: tuple = ()

    def __post_init__(self):
        values = list(self.conclusions.values())
        if self.case is Case.C:
            if any(v is not Conclusion.OUTCOME_OUTCOME_DEPENDENCE for v in values):
                raise ValueError("case c requires outcome-outcome dependence for both observers")
        elif Conclusion.OUTCOME_OUTCOME_DEPENDENCE in values:
            raise ValueError("outcome-outcome dependence only arises in case c")


def expected_conclusions(case: Case, scenario: EPRScenario) -> dict:
    o1, o2 = scenario.observers
    if case is Case.C:
        return {o1: Conclusion.OUTCOME_OUTCOME_DEPENDENCE, o2: Conclusion.OUTCOME_OUTCOME_DEPENDENCE}
    if not scenario.axes_aligned:
        return {o1: Conclusion.ARGUMENT_FAILS, o2: Conclusion.ARGUMENT_FAILS}
    first, second = (o1, o2) if case is Case.A else (o2, o1)
    return {first: Conclusion.ARGUMENT_APPLIES, second: Conclusion.ARGUMENT_FAILS}


def run_in_frame(
    frame: Frame, scenario: EPRScenario, outcomes: tuple, tol: float = SIMULTANEITY_TOL
) -> Ledger:
    """Ledger with both measurements inserted in ``frame``'s temporal order."""
    ledger = initialize(scenario)
    sides = [Side.R, Side.L]
    if classify_case(frame, scenario, tol) is Case.B:
        sides.reverse()
    for side in sides:
        measure_side(ledger, scenario, side, forced_outcome=outcomes[_position(side)])
    return ledger


def verdict_in_frame(
    frame: Frame,
    scenario: EPRScenario,
    rng: Optional[np.random.Generator] = None,
    outcomes: Optional[tuple] = None,
    tol: float = SIMULTANEITY_TOL,
) -> Verdict:
    """Per-observer conclusion in ``frame``, derived from each observer's premises.

    The measured values come from one joint draw (``outcomes``, or a draw
    from ``rng``/the scenario seed) so that frames differ only in bookkeeping.
    """
    outcomes = draw_outcomes(scenario, rng) if outcomes is None else tuple(outcomes)
    case = classify_case(frame, scenario, tol)
    ledger = run_in_frame(frame, scenario, outcomes, tol)
    premises = {o: evaluate_premises(ledger, o, scenario, frame, tol) for o in scenario.observers}
    for p in premises.values():
        if p.backtracked is not None:
            ledger.annotate(p.backtracked)
    conclusions = {o: p.conclusion for o, p in premises.items()}
    expected = expected_conclusions(case, scenario)
    if conclusions != expected:
        raise RuntimeError(f"premise evaluation {conclusions} disagrees with case {case.value}: {expected}")
    return Verdict(case, conclusions, premises, tuple(outcomes))


@dataclass(frozen=True)
class FrameRow:
    frame: Frame
    case: Case
    verdict: Verdict
    ordering: Ordering
    boosted_times: tuple  # (t'_R, t'_L)


def frame_scan(
    scenario: EPRScenario, velocities: Sequence, tol: float = SIMULTANEITY_TOL
) -> list:
    """One row per frame; every row shares the same measured outcomes."""
    frames = [v if isinstance(v, Frame) else Frame(tuple(v)) for v in velocities]
    outcomes = draw_outcomes(scenario)
    rows = []
    for frame in frames:
        verdict = verdict_in_frame(frame, scenario, outcomes=outcomes, tol=tol)
        rows.append(FrameRow(
            frame,
            verdict.case,
            verdict,
            order_in_frame(frame, scenario.event_r, scenario.event_l, tol),
            (boosted_time(frame, scenario.event_r), boosted_time(frame, scenario.event_l)),
        ))
    return rows


def worked_example(seed: int = 42) -> EPRScenario:
    return EPRScenario(
        axis_r=(0.0, 0.0, 1.0),
        axis_l=(0.0, 0.0, 1.0),
        event_r=Event(0.0, (0.0, 0.0, 0.0)),
        event_l=Event(0.5, (2.0, 0.0, 0.0)),
        t0=-1.0,
        seed=seed,
    )
