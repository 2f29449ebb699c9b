"""Dense linear algebra on small Hilbert spaces.

Composite index convention: in ``a ⊗ b`` the first factor is the slow axis,
so the amplitude of basis pair ``(i, j)`` sits at ``i * b.dim + j``. Every
function in the package follows this ordering.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

# algebraic identities, eigensolver output, user-supplied input
ATOL = 1e-12
EIG_TOL = 1e-10
INPUT_TOL = 1e-9


def _frozen(array) -> np.ndarray:
    out = np.array(array, dtype=complex)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class StateVector:
    """A normalized ket with human-readable basis labels."""

    amplitudes: np.ndarray
    basis_labels: tuple = ()

    def __post_init__(self):
        amps = _frozen(self.amplitudes).reshape(-1)
        object.__setattr__(self, "amplitudes", amps)
        labels = tuple(self.basis_labels) or tuple(str(i) for i in range(amps.size))
        if len(labels) != amps.size:
            raise ValueError(f"{len(labels)} basis labels for {amps.size} amplitudes")
        object.__setattr__(self, "basis_labels", labels)
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > ATOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm2!r})")

    @classmethod
    def normalized(cls, amplitudes, basis_labels=()) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(amps / norm, basis_labels)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def allclose(self, other: "StateVector", atol: float = ATOL, up_to_phase: bool = False) -> bool:
        if self.dim != other.dim:
            return False
        if up_to_phase:
            return abs(abs(np.vdot(self.amplitudes, other.amplitudes)) - 1.0) <= atol
        return bool(np.allclose(self.amplitudes, other.amplitudes, rtol=0, atol=atol))

    def __repr__(self):
        return f"StateVector({np.array2string(self.amplitudes, precision=6)})"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        rho = _frozen(self.entries)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {rho.shape}")
        object.__setattr__(self, "entries", rho)
        if not np.allclose(rho, rho.conj().T, rtol=0, atol=ATOL):
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > ATOL:
            raise ValueError(f"density matrix trace is {tr!r}, expected 1")
        if np.linalg.eigvalsh(rho).min() < -ATOL:
            raise ValueError("density matrix has a negative eigenvalue")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def purity(self) -> float:
        return float(np.trace(self.entries @ self.entries).real)

    def is_pure(self, atol: float = EIG_TOL) -> bool:
        return abs(self.purity() - 1.0) <= atol

    def to_state(self, basis_labels=()) -> StateVector:
        """Return the ket of a pure density matrix, phase fixed so its largest entry is real positive."""
        if not self.is_pure():
            raise ValueError("density matrix is mixed; no state vector exists")
        _, vecs = np.linalg.eigh(self.entries)
        vec = vecs[:, -1]
        k = int(np.argmax(np.abs(vec)))
        vec = vec * (abs(vec[k]) / vec[k])
        return StateVector.normalized(vec, basis_labels)

    def allclose(self, other: "DensityMatrix", atol: float = ATOL) -> bool:
        return self.dim == other.dim and bool(
            np.allclose(self.entries, other.entries, rtol=0, atol=atol)
        )


def as_density(state) -> DensityMatrix:
    return state.density() if isinstance(state, StateVector) else state


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian operator together with its spectral decomposition.

    ``eigenpairs`` lists ``(eigenvalue, basis)`` in ascending eigenvalue order,
    where ``basis`` is a ``dim x k`` matrix with orthonormal columns spanning
    the (possibly degenerate) eigenspace. Eigenvalues within ``EIG_TOL`` of an
    integer are snapped to it, so spin outcomes come out as exactly +1 and -1.
    """

    entries: np.ndarray
    label: str = ""
    eigenpairs: tuple = field(init=False, repr=False)

    def __post_init__(self):
        op = _frozen(self.entries)
        if op.ndim != 2 or op.shape[0] != op.shape[1]:
            raise ValueError(f"observable must be square, got shape {op.shape}")
        if not np.allclose(op, op.conj().T, rtol=0, atol=ATOL):
            raise ValueError("observable is not Hermitian")
        object.__setattr__(self, "entries", op)
        object.__setattr__(self, "eigenpairs", _spectral_groups(op))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def eigenvalues(self) -> tuple:
        return tuple(value for value, _ in self.eigenpairs)

    def eigenspace(self, value: float) -> np.ndarray:
        for ev, basis in self.eigenpairs:
            if abs(ev - value) <= EIG_TOL:
                return basis
        raise ValueError(f"{value!r} is not an eigenvalue of {self.label or 'observable'}")

    def projector(self, value: float) -> np.ndarray:
        basis = self.eigenspace(value)
        return basis @ basis.conj().T

    def canonical_eigenvalue(self, value: float) -> float:
        for ev, _ in self.eigenpairs:
            if abs(ev - value) <= EIG_TOL:
                return ev
        raise ValueError(f"{value!r} is not an eigenvalue of {self.label or 'observable'}")

    def commutes_with(self, other: "Observable", atol: float = ATOL) -> bool:
        comm = self.entries @ other.entries - other.entries @ self.entries
        return float(np.linalg.norm(comm)) < atol


def _spectral_groups(op: np.ndarray) -> tuple:
    values, vectors = np.linalg.eigh(op)
    groups: list[list[int]] = []
    for idx, val in enumerate(values):
        if groups and abs(val - values[groups[-1][0]]) <= EIG_TOL:
            groups[-1].append(idx)
        else:
            groups.append([idx])
    pairs = []
    for members in groups:
        value = float(np.mean(values[members]))
        if abs(value - round(value)) <= EIG_TOL:
            value = float(round(value)) + 0.0
        # re-orthonormalize degenerate blocks; eigh's columns drift at ~1e-15
        basis, _ = np.linalg.qr(vectors[:, members])
        basis.setflags(write=False)
        pairs.append((value, basis))
    return tuple(pairs)


def identity(dim: int = 2) -> Observable:
    return Observable(np.eye(dim), label=f"I{dim}")


def diagonal_observable(values: Sequence[float], label: str = "Q") -> Observable:
    return Observable(np.diag(np.asarray(values, dtype=float)), label=label)


def tensor_state(a: StateVector, b: StateVector) -> StateVector:
    labels = tuple(f"{la}⊗{lb}" for la in a.basis_labels for lb in b.basis_labels)
    return StateVector(np.kron(a.amplitudes, b.amplitudes), labels)


def tensor_op(a: Observable, b: Observable) -> Observable:
    label = f"{a.label}⊗{b.label}" if a.label and b.label else ""
    return Observable(np.kron(a.entries, b.entries), label=label)


def lift(op: Observable, position: int, dims: Sequence[int]) -> Observable:
    """Embed a single-factor observable at ``position`` of a composite space."""
    if op.dim != dims[position]:
        raise ValueError(f"observable of dim {op.dim} cannot act on factor of dim {dims[position]}")
    result = np.eye(1)
    for i, d in enumerate(dims):
        result = np.kron(result, op.entries if i == position else np.eye(d))
    labels = [op.label if i == position else "I" for i in range(len(dims))]
    return Observable(result, label="⊗".join(labels))


def _unit(direction, tol: float = INPUT_TOL) -> np.ndarray:
    n = np.asarray(direction, dtype=float).reshape(-1)
    if n.shape != (3,) or not np.all(np.isfinite(n)):
        raise ValueError(f"direction must be a finite 3-vector, got {direction!r}")
    if abs(np.linalg.norm(n) - 1.0) > tol:
        raise ValueError(f"direction must be a unit vector (|n| = {np.linalg.norm(n):.6g})")
    return n


def spin_observable(direction) -> Observable:
    """Pauli operator n·σ along a unit direction."""
    nx, ny, nz = _unit(direction)
    mat = np.array([[nz, nx - 1j * ny], [nx + 1j * ny, -nz]])
    return Observable(mat, label=f"σ({nx:.3g},{ny:.3g},{nz:.3g})")


def spin_eigenstate(direction, sign: int) -> StateVector:
    return StateVector(spin_observable(direction).eigenspace(sign)[:, 0], ("+", "-"))


SINGLET_LABELS = ("+⊗+", "+⊗-", "-⊗+", "-⊗-")


def singlet() -> StateVector:
    """Two-spin singlet in the z basis, "+-" amplitude chosen real positive."""
    r = np.sqrt(0.5)
    return StateVector([0, r, -r, 0], SINGLET_LABELS)


def born_probabilities(state, obs: Observable) -> dict:
    """Outcome distribution ``{eigenvalue: probability}`` in ascending order."""
    if state.dim != obs.dim:
        raise ValueError(f"state dim {state.dim} does not match observable dim {obs.dim}")
    probs = {}
    for value, basis in obs.eigenpairs:
        if isinstance(state, StateVector):
            amp = basis.conj().T @ state.amplitudes
            probs[value] = float(np.vdot(amp, amp).real)
        else:
            probs[value] = float(np.trace(basis.conj().T @ state.entries @ basis).real)
    return probs


def joint_probabilities(state, first: Observable, second: Observable) -> dict:
    """Distribution of ``(a, b)`` for ``first ⊗ second`` measured on a bipartite state."""
    rho = as_density(state).entries
    if first.dim * second.dim != rho.shape[0]:
        raise ValueError("observable dimensions do not match the state")
    out = {}
    for a in first.eigenvalues:
        for b in second.eigenvalues:
            proj = np.kron(first.projector(a), second.projector(b))
            out[(a, b)] = max(float(np.trace(proj @ rho).real), 0.0)
    return out


def project_collapse(state, obs: Observable, outcome: float):
    """Post-measurement state for ``outcome``; mixed inputs stay mixed."""
    proj = obs.projector(outcome)
    prob = born_probabilities(state, obs)[obs.canonical_eigenvalue(outcome)]
    if prob <= ATOL:
        raise ValueError(f"outcome {outcome!r} has probability {prob!r}; cannot collapse onto it")
    if isinstance(state, StateVector):
        return StateVector.normalized(proj @ state.amplitudes, state.basis_labels)
    rho = proj @ state.entries @ proj / prob
    return DensityMatrix((rho + rho.conj().T) / 2)


def partial_trace(rho, keep: int, dims: Sequence[int]) -> DensityMatrix:
    """Reduce a composite state to factor ``keep``."""
    rho = as_density(rho)
    dims = tuple(int(d) for d in dims)
    if int(np.prod(dims)) != rho.dim:
        raise ValueError(f"factor dims {dims} inconsistent with state dim {rho.dim}")
    if not 0 <= keep < len(dims):
        raise ValueError(f"keep={keep} out of range for {len(dims)} factors")
    n = len(dims)
    tensor = rho.entries.reshape(dims + dims)
    row = list(range(n))
    col = [n + i if i == keep else i for i in range(n)]
    reduced = np.einsum(tensor, row + col, [keep, n + keep])
    return DensityMatrix((reduced + reduced.conj().T) / 2)


def schmidt_coefficients(state: StateVector, dims: Sequence[int]) -> np.ndarray:
    da, db = dims
    if da * db != state.dim:
        raise ValueError(f"factor dims {tuple(dims)} inconsistent with state dim {state.dim}")
    return np.linalg.svd(state.amplitudes.reshape(da, db), compute_uv=False)


def is_eigenstate(state, obs: Observable, atol: float = ATOL):
    """Eigenvalue whose eigenspace contains ``state``, or None."""
    for value, prob in born_probabilities(state, obs).items():
        if prob >= 1.0 - atol:
            return value
    return None


def _cdf(probabilities: Mapping) -> tuple[list, np.ndarray]:
    keys = sorted(probabilities)
    p = np.clip(np.array([probabilities[k] for k in keys], dtype=float), 0.0, None)
    if abs(p.sum() - 1.0) > INPUT_TOL:
        raise ValueError(f"probabilities sum to {p.sum()!r}, expected 1")
    return keys, np.cumsum(p) / p.sum()


def sample_outcome(probabilities: Mapping, rng: np.random.Generator):
    """Inverse-CDF draw over outcomes sorted ascending."""
    keys, cdf = _cdf(probabilities)
    idx = int(np.searchsorted(cdf, rng.random(), side="right"))
    return keys[min(idx, len(keys) - 1)]


def sample_outcomes(probabilities: Mapping, rng: np.random.Generator, size: int) -> list:
    keys, cdf = _cdf(probabilities)
    idx = np.minimum(np.searchsorted(cdf, rng.random(size), side="right"), len(keys) - 1)
    return [keys[i] for i in idx]
