"""Observer-relative states.

There is no global state anywhere in this module: a state only exists as a
ledger entry keyed by ``(observer, system, time)``. Observing a system is
stochastic and leaves a record; describing an interaction one did not take
part in is a deterministic unitary update with no outcome.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numpy as np

from .hilbert import (
    ATOL,
    DensityMatrix,
    Observable,
    StateVector,
    born_probabilities,
    is_eigenstate,
    lift,
    project_collapse,
    sample_outcome,
    tensor_state,
)
from .spacetime import Event

# "immediately after t"
EPSILON = 1e-6


class LedgerError(ValueError):
    """An insertion would break a ledger invariant."""


class MissingStateError(LookupError):
    """No state of the system is recorded relative to the observer."""


class HiddenOutcomeError(PermissionError):
    """The reader has not interacted with the observer holding the record."""


class IncompatibleMeasurementError(ValueError):
    """An observable incompatible with Q was measured between the two compared times."""


@dataclass(frozen=True)
class SystemId:
    """Atomic or composite system; ``parts`` is the tensor-factor order."""

    parts: tuple

    def __post_init__(self):
        parts = (self.parts,) if isinstance(self.parts, str) else tuple(self.parts)
        if not parts or not all(isinstance(p, str) and p for p in parts):
            raise ValueError(f"invalid system id {self.parts!r}")
        if len(set(parts)) != len(parts):
            raise ValueError(f"composite system lists a constituent twice: {parts}")
        object.__setattr__(self, "parts", parts)

    @classmethod
    def of(cls, *names: str) -> "SystemId":
        return cls(names)

    @property
    def name(self) -> str:
        return "+".join(self.parts)

    @property
    def is_composite(self) -> bool:
        return len(self.parts) > 1

    def __str__(self):
        return self.name


SystemLike = Union[SystemId, str]


def as_system(system: SystemLike) -> SystemId:
    return system if isinstance(system, SystemId) else SystemId((system,))


@dataclass(frozen=True, eq=False)
class RelativeState:
    observer: str
    system: SystemId
    time: float
    state: Union[StateVector, DensityMatrix]

    @property
    def key(self) -> tuple:
        return (self.observer, self.system, self.time)


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    """Observer ``observer`` measured ``observable`` on ``system`` at ``time``."""

    observer: str
    time: float
    observable: Observable
    system: SystemId
    premeasurement_state: Union[StateVector, DensityMatrix]
    outcome: float
    event: Optional[Event] = None

    def __post_init__(self):
        value = self.observable.canonical_eigenvalue(self.outcome)
        object.__setattr__(self, "outcome", value)
        if born_probabilities(self.premeasurement_state, self.observable)[value] <= ATOL:
            raise LedgerError(f"outcome {value!r} has zero probability in the premeasurement state")

    @property
    def key(self) -> tuple:
        return (self.observer, self.system, self.time)


@dataclass(frozen=True)
class Interaction:
    """Two observers interacted at ``time``; each may read the other's earlier records."""

    first: str
    second: str
    time: float


@dataclass
class Ledger:
    """Append-only store of relative states and measurement records."""

    dims: dict = field(default_factory=dict)
    observers: list = field(default_factory=list)
    entries: list = field(default_factory=list)
    annotations: list = field(default_factory=list)

    def add_system(self, name: str, dim: int) -> SystemId:
        if name in self.dims:
            raise LedgerError(f"system {name!r} already registered")
        if int(dim) < 1:
            raise LedgerError(f"system {name!r} needs a positive dimension")
        self.dims[name] = int(dim)
        return SystemId((name,))

    def add_observer(self, name: str) -> str:
        if name in self.observers:
            raise LedgerError(f"observer {name!r} already registered")
        self.observers.append(name)
        return name

    def factor_dims(self, system: SystemLike) -> tuple:
        system = as_system(system)
        try:
            return tuple(self.dims[p] for p in system.parts)
        except KeyError as exc:
            raise LedgerError(f"unknown system {exc.args[0]!r}") from None

    def _check_observer(self, observer: str):
        if observer not in self.observers:
            raise LedgerError(f"unknown observer {observer!r}")

    def _check_time(self, time: float) -> float:
        time = float(time)
        if not math.isfinite(time):
            raise LedgerError("ledger times must be finite")
        return time

    def add_state(self, observer: str, system: SystemLike, time: float, state) -> RelativeState:
        self._check_observer(observer)
        system = as_system(system)
        time = self._check_time(time)
        expected = int(np.prod(self.factor_dims(system)))
        if state.dim != expected:
            raise LedgerError(f"state of {system} must have dim {expected}, got {state.dim}")
        if any(isinstance(e, RelativeState) and e.key == (observer, system, time) for e in self.entries):
            raise LedgerError(f"{observer} already holds a state of {system} at t={time!r}")
        entry = RelativeState(observer, system, time, state)
        self.entries.append(entry)
        return entry

    def add_record(self, record: MeasurementRecord) -> MeasurementRecord:
        self._check_observer(record.observer)
        self._check_time(record.time)
        if record.observable.dim != int(np.prod(self.factor_dims(record.system))):
            raise LedgerError("record observable does not act on the recorded system")
        self.entries.append(record)
        return record

    def interact(self, first: str, second: str, time: float) -> Interaction:
        self._check_observer(first)
        self._check_observer(second)
        event = Interaction(first, second, self._check_time(time))
        self.entries.append(event)
        return event

    def annotate(self, annotation) -> None:
        self.annotations.append(annotation)

    def states(self, observer: str, system: SystemLike) -> list:
        system = as_system(system)
        found = [
            e
            for e in self.entries
            if isinstance(e, RelativeState) and e.observer == observer and e.system == system
        ]
        return sorted(found, key=lambda e: e.time)

    def entry_of(self, observer: str, system: SystemLike, time: float) -> RelativeState:
        candidates = [e for e in self.states(observer, system) if e.time <= time]
        if not candidates:
            raise MissingStateError(
                f"no state of {as_system(system)} relative to {observer} at or before t={time!r}"
            )
        return candidates[-1]

    def state_of(self, observer: str, system: SystemLike, time: float):
        return self.entry_of(observer, system, time).state

    def has_entry(self, key: tuple) -> bool:
        return any(
            isinstance(e, (RelativeState, MeasurementRecord)) and e.key == key for e in self.entries
        )

    def records(self, observer: Optional[str] = None, system: Optional[SystemLike] = None) -> list:
        system = None if system is None else as_system(system)
        found = [
            e
            for e in self.entries
            if isinstance(e, MeasurementRecord)
            and (observer is None or e.observer == observer)
            and (system is None or e.system == system)
        ]
        return sorted(found, key=lambda e: e.time)

    def can_read(self, record: MeasurementRecord, reader: str) -> bool:
        if reader == record.observer:
            return True
        return any(
            isinstance(e, Interaction)
            and {e.first, e.second} == {reader, record.observer}
            and e.time >= record.time
            for e in self.entries
        )

    def read_outcome(self, record: MeasurementRecord, reader: str) -> float:
        if not self.can_read(record, reader):
            raise HiddenOutcomeError(
                f"{reader} has not interacted with {record.observer} since t={record.time!r}"
            )
        return record.outcome

    def timeline(self, observer: str) -> list:
        """The observer's own states and records, in time order (insertion order breaks ties)."""
        own = [
            (e.time, i, e)
            for i, e in enumerate(self.entries)
            if isinstance(e, (RelativeState, MeasurementRecord)) and e.observer == observer
        ]
        return [e for _, _, e in sorted(own, key=lambda item: item[:2])]


def state_of(ledger: Ledger, observer: str, system: SystemLike, time: float):
    return ledger.state_of(observer, system, time)


def observe(
    ledger: Ledger,
    observer: str,
    system: SystemLike,
    obs: Observable,
    time: float,
    rng: Optional[np.random.Generator] = None,
    forced_outcome: Optional[float] = None,
    event: Optional[Event] = None,
):
    """``observer`` measures ``obs`` on ``system`` at ``time``.

    Samples an outcome by the Born rule (or uses ``forced_outcome``), appends
    the collapsed state and a measurement record relative to ``observer``
    only, and returns ``(outcome, ledger)``.
    """
    system = as_system(system)
    before = ledger.state_of(observer, system, time)
    if forced_outcome is None:
        if rng is None:
            raise ValueError("an rng is required unless the outcome is forced")
        outcome = sample_outcome(born_probabilities(before, obs), rng)
    else:
        outcome = obs.canonical_eigenvalue(forced_outcome)
    record = MeasurementRecord(observer, float(time), obs, system, before, outcome, event)
    ledger.add_state(observer, system, time, project_collapse(before, obs, outcome))
    ledger.add_record(record)
    return outcome, ledger


def _nondegenerate_basis(Q: Observable) -> list:
    basis = []
    for value, vecs in Q.eigenpairs:
        if vecs.shape[1] != 1:
            raise ValueError(f"Q must have a simple spectrum; eigenvalue {value!r} is degenerate")
        basis.append(vecs[:, 0])
    return basis


def _unitary_sending_to_first(psi: np.ndarray) -> np.ndarray:
    d = psi.size
    pivot = int(np.argmax(np.abs(psi)))
    cols = [psi] + [np.eye(d)[:, k] for k in range(d) if k != pivot]
    m, r = np.linalg.qr(np.column_stack(cols).astype(complex))
    m[:, 0] *= r[0, 0]
    return m.conj().T


def measurement_unitary(psi_init: StateVector, Q: Observable) -> np.ndarray:
    """Unitary on pointer ⊗ system taking ψ_init ⊗ φ_i to ψ_i ⊗ φ_i.

    ψ_i is the i-th pointer basis vector, φ_i the eigenvector of Q for its
    i-th smallest eigenvalue. On the rest of the space the map is one of many
    unitary extensions; only its action on ψ_init ⊗ H_S is physical here.
    """
    phis = _nondegenerate_basis(Q)
    d = psi_init.dim
    if d != len(phis):
        raise ValueError(f"pointer dim {d} must equal the number of Q outcomes {len(phis)}")
    w = _unitary_sending_to_first(psi_init.amplitudes)
    u = np.zeros((d * d, d * d), dtype=complex)
    for i, phi in enumerate(phis):
        swap = np.eye(d)
        swap[[0, i]] = swap[[i, 0]]
        u += np.kron(swap @ w, np.outer(phi, phi.conj()))
    return u


def describe_interaction(
    ledger: Ledger, observer_prime: str, observer: str, system: SystemLike, Q: Observable, time: float
) -> Ledger:
    """``observer_prime`` describes, without measuring, ``observer`` measuring Q on ``system``.

    The composite is ordered (pointer, system). The product premeasurement
    state is logged at the latest prerequisite time if not already present,
    then the correlated state at ``time``.
    """
    system = as_system(system)
    pointer = as_system(observer)
    composite = SystemId(pointer.parts + system.parts)
    pointer_entry = ledger.entry_of(observer_prime, pointer, time)
    system_entry = ledger.entry_of(observer_prime, system, time)
    psi_init, alpha = pointer_entry.state, system_entry.state
    if not (isinstance(psi_init, StateVector) and isinstance(alpha, StateVector)):
        raise LedgerError("describe_interaction needs pure prerequisite states")
    product = tensor_state(psi_init, alpha)
    t_pre = max(pointer_entry.time, system_entry.time)
    if t_pre < time and not ledger.has_entry((observer_prime, composite, t_pre)):
        ledger.add_state(observer_prime, composite, t_pre, product)
    u = measurement_unitary(psi_init, Q)
    labels = tuple(f"ψ{i}⊗φ{j}" for i in range(psi_init.dim) for j in range(alpha.dim))
    ledger.add_state(observer_prime, composite, time, StateVector.normalized(u @ product.amplitudes, labels))
    return ledger


def correlation_operator(pointer_dim: int = 2, system_dim: int = 2, Q: Optional[Observable] = None) -> Observable:
    """Projector onto "pointer recorded the system's Q value correctly".

    Eigenvalue 1 on span{ψ_i ⊗ φ_i}, 0 on the mismatched products. With the
    computational basis for Q and dims (2, 2) this is diag(1, 0, 0, 1).
    """
    if pointer_dim != system_dim:
        raise ValueError("pointer and system need the same number of outcomes")
    if Q is None:
        phis = list(np.eye(system_dim, dtype=complex))
    else:
        if Q.dim != system_dim:
            raise ValueError("Q does not act on the system")
        phis = _nondegenerate_basis(Q)
    c = np.zeros((pointer_dim * system_dim,) * 2, dtype=complex)
    for i, phi in enumerate(phis):
        e = np.zeros(pointer_dim)
        e[i] = 1
        c += np.kron(np.outer(e, e), np.outer(phi, phi.conj()))
    return Observable(c, label="C(O,S)")


def pointer_observable(Q: Observable) -> Observable:
    """Pointer quantity whose i-th basis state reads Q's i-th eigenvalue."""
    return Observable(np.diag(np.array(Q.eigenvalues, dtype=float)), label="pointer")


def _touches(record_system: SystemId, system: SystemId) -> bool:
    return bool(set(record_system.parts) & set(system.parts))


def _check_no_incompatible(ledger: Ledger, system: SystemId, Q: Observable, start: float, stop: float):
    for rec in ledger.records():
        if not (start < rec.time < stop) or not _touches(rec.system, system):
            continue
        if rec.system == system:
            lifted = Q
        elif set(system.parts) <= set(rec.system.parts) and len(system.parts) == 1:
            lifted = lift(Q, rec.system.parts.index(system.parts[0]), [Q.dim] * len(rec.system.parts))
        else:
            raise IncompatibleMeasurementError(f"cannot compare {rec.system} with {system}")
        if not rec.observable.commutes_with(lifted):
            raise IncompatibleMeasurementError(
                f"{rec.observer} measured an observable incompatible with Q on {rec.system} at t={rec.time!r}"
            )


def check_consistency(
    ledger: Ledger,
    observer: str,
    observer_prime: str,
    system: SystemLike,
    Q: Observable,
    rng: np.random.Generator,
    trials: int = 1000,
    time: Optional[float] = None,
) -> bool:
    """Do the two observers' accounts of the same Q-measurement agree?

    ``observer`` must have measured Q on ``system``; ``observer_prime`` must
    hold the correlated pointer+system state. Two checks, neither of which
    writes to the ledger:

    * correlation form: in every trial ``observer_prime`` measures C, then Q
      on the system, then reads the pointer. C must give 1 (a 0 means the
      record was wrong) and the Q value must equal the pointer reading.
    * sequential form: the recorded outcome must be the eigenvalue of the
      observer's own post-measurement state, and ``observer_prime``, once
      the record is revealed by interaction, must find that same value.

    Measurements of observables not commuting with Q between the record and
    ``time`` are rejected with IncompatibleMeasurementError.
    """
    system = as_system(system)
    pointer = as_system(observer)
    composite = SystemId(pointer.parts + system.parts)
    records = [r for r in ledger.records(observer, system) if np.allclose(r.observable.entries, Q.entries)]
    if not records:
        raise MissingStateError(f"{observer} has no record of measuring Q on {system}")
    record = records[-1]
    entangled_entry = ledger.entry_of(observer_prime, composite, math.inf)
    t_check = time if time is not None else max(record.time, entangled_entry.time) + EPSILON
    _check_no_incompatible(ledger, system, Q, record.time, t_check)
    joint = ledger.state_of(observer_prime, composite, t_check)

    q_own = is_eigenstate(ledger.state_of(observer, system, record.time), Q)
    if q_own is None or q_own != record.outcome:
        return False

    C = correlation_operator(pointer_observable(Q).dim, Q.dim, Q)
    pointer_obs = lift(pointer_observable(Q), 0, [Q.dim, Q.dim])
    q_obs = lift(Q, 1, [Q.dim, Q.dim])
    for _ in range(trials):
        c = sample_outcome(born_probabilities(joint, C), rng)
        if c != 1.0:
            return False
        state = project_collapse(joint, C, c)
        q = sample_outcome(born_probabilities(state, q_obs), rng)
        state = project_collapse(state, q_obs, q)
        reading = sample_outcome(born_probabilities(state, pointer_obs), rng)
        if reading != q:
            return False

    if born_probabilities(joint, pointer_obs)[record.outcome] <= ATOL:
        return False
    informed = project_collapse(joint, pointer_obs, record.outcome)
    found = born_probabilities(informed, q_obs)
    if found[record.outcome] < 1.0 - ATOL:
        return False
    return sample_outcome(found, rng) == q_own


def measurement_setup(
    alpha: Iterable[complex],
    Q: Observable,
    t1: float = 1.0,
    psi_init: Optional[StateVector] = None,
    names: tuple = ("S", "O", "O'"),
) -> Ledger:
    """Ledger for one system S, its observer O, and an outside observer O'.

    At ``t1`` both observers assign S the premeasurement state α, and O'
    assigns O's pointer the ready state ψ_init (default: first pointer state).
    """
    s_name, o_name, op_name = names
    alpha = StateVector(list(alpha), ("φ1", "φ2"))
    psi_init = psi_init or StateVector([1, 0], ("ψ1", "ψ2"))
    ledger = Ledger()
    ledger.add_system(s_name, Q.dim)
    ledger.add_system(o_name, psi_init.dim)
    ledger.add_observer(o_name)
    ledger.add_observer(op_name)
    ledger.add_state(o_name, s_name, t1, alpha)
    ledger.add_state(op_name, s_name, t1, alpha)
    ledger.add_state(op_name, o_name, t1, psi_init)
    return ledger
