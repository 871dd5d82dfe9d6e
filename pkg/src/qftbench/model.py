"""Transverse-field Ising chain, annealing schedules and measured observables.

Conventions
-----------
* Hamiltonians are stored as ``H / (2 pi hbar)`` in GHz, times in microseconds.
* Qubit 0 is the most significant bit of a basis index. Bit value 0 is
  spin up (sigma_z = +1), bit value 1 is spin down (sigma_z = -1).
* Observables are kept in spectral form: for every distinct eigenvalue an
  orthonormal basis of its eigenspace (a ``dim x rank`` isometry ``B`` with
  projector ``B @ B.conj().T``).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import hadamard

from .errors import CapacityError, DegeneracyError, ValidationError

MAX_QUBITS = 14

# (s, g_ghz, delta_ghz); linear interpolation in between.
DEFAULT_KNOTS = ((0.0, 5.0, 0.01), (1.0, 0.01, 5.0))

SCHEDULE_CSV_HEADER = ("s", "g_ghz", "delta_ghz")


def check_capacity(L: int, max_qubits: int = MAX_QUBITS) -> None:
    if L > max_qubits:
        raise CapacityError(
            f"L={L} needs a {2**L}-dimensional Hilbert space; dense limit is L <= {max_qubits}"
        )


def _sign(x: float) -> int:
    return -1 if x < 0 else 1


@dataclass(frozen=True)
class ChainSpec:
    """Open Ising chain of ``L`` spins with bond couplings ``J`` and fields ``h``."""

    L: int
    J: tuple[float, ...]
    h: tuple[float, ...] = None  # type: ignore[assignment]

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 2:
            raise ValidationError(f"chain length must be an integer >= 2, got {self.L!r}")
        object.__setattr__(self, "L", int(self.L))
        J = tuple(float(j) for j in np.atleast_1d(self.J))
        h = (0.0,) * self.L if self.h is None else tuple(float(x) for x in np.atleast_1d(self.h))
        if len(J) != self.L - 1:
            raise ValidationError(f"expected {self.L - 1} couplings, got {len(J)}")
        if len(h) != self.L:
            raise ValidationError(f"expected {self.L} fields, got {len(h)}")
        if not all(math.isfinite(x) for x in J + h):
            raise ValidationError("couplings and fields must be finite")
        if not any(j != 0 for j in J):
            raise ValidationError("at least one coupling must be nonzero")
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "h", h)

    @classmethod
    def uniform(cls, L: int, J: float = 1.0) -> "ChainSpec":
        return cls(L, (float(J),) * (L - 1))

    @property
    def dim(self) -> int:
        return 2**self.L

    @property
    def bond_signs(self) -> tuple[int, ...]:
        """Ground-state orientation of each bond (+1 ferro, -1 antiferro; zero bonds count as +1)."""
        return tuple(_sign(j) for j in self.J)

    def flipped(self) -> "ChainSpec":
        """The same chain with every coupling negated (gauge partner)."""
        return ChainSpec(self.L, tuple(-j for j in self.J), self.h)


@dataclass(frozen=True)
class AnnealSchedule:
    """Amplitudes g(s) and Delta(s) on normalized time s = t / tau, tau in microseconds."""

    tau: float
    knots: tuple[tuple[float, float, float], ...] = field(default=DEFAULT_KNOTS)

    def __post_init__(self):
        tau = float(self.tau)
        if not (math.isfinite(tau) and tau > 0):
            raise ValidationError(f"anneal time must be positive, got {self.tau!r}")
        knots = tuple(tuple(float(v) for v in k) for k in self.knots)
        if len(knots) < 2 or any(len(k) != 3 for k in knots):
            raise ValidationError("schedule needs at least two (s, g, delta) knots")
        s = np.array([k[0] for k in knots])
        if not np.all(np.isfinite(np.asarray(knots))):
            raise ValidationError("schedule knots must be finite")
        if s[0] != 0.0 or s[-1] != 1.0 or np.any(np.diff(s) <= 0):
            raise ValidationError("knot times must increase strictly from 0 to 1")
        g0, d0 = knots[0][1:]
        g1, d1 = knots[-1][1:]
        if not (g0 > d0 >= 0):
            raise ValidationError("schedule must start transverse dominated: g(0) > delta(0) >= 0")
        if not (d1 > g1 >= 0):
            raise ValidationError("schedule must end coupling dominated: delta(1) > g(1) >= 0")
        if any(k[1] < 0 or k[2] < 0 for k in knots):
            raise ValidationError("schedule amplitudes must be non-negative")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "knots", knots)

    @property
    def s_knots(self) -> np.ndarray:
        return np.array([k[0] for k in self.knots])

    def g(self, s):
        return np.interp(s, self.s_knots, [k[1] for k in self.knots])

    def delta(self, s):
        return np.interp(s, self.s_knots, [k[2] for k in self.knots])

    def with_tau(self, tau: float) -> "AnnealSchedule":
        return replace(self, tau=tau)


def default_schedule(tau: float) -> AnnealSchedule:
    return AnnealSchedule(tau, DEFAULT_KNOTS)


def read_schedule_csv(path, tau: float) -> AnnealSchedule:
    """Load knots from a CSV with header ``s,g_ghz,delta_ghz``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(c.strip() for c in header) != SCHEDULE_CSV_HEADER:
            raise ValidationError(f"{path}: schedule header must be {','.join(SCHEDULE_CSV_HEADER)}")
        knots = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                s, g, d = (float(c) for c in row)
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: expected three numbers, got {row!r}") from None
            knots.append((s, g, d))
    return AnnealSchedule(tau, tuple(knots))


def write_schedule_csv(path, schedule: AnnealSchedule) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCHEDULE_CSV_HEADER)
        for knot in schedule.knots:
            writer.writerow([repr(v) for v in knot])


# --- operators ---------------------------------------------------------------


def spin_configurations(L: int) -> np.ndarray:
    """``(2**L, L)`` int8 table of sigma_z eigenvalues for every basis index."""
    idx = np.arange(2**L)[:, None]
    bits = (idx >> np.arange(L - 1, -1, -1)) & 1
    return (1 - 2 * bits).astype(np.int8)


def transverse_operator(L: int) -> np.ndarray:
    """Dense sum of sigma_x over all sites."""
    dim = 2**L
    X = np.zeros((dim, dim))
    rows = np.arange(dim)
    for n in range(L):
        X[rows, rows ^ (1 << (L - 1 - n))] += 1.0
    return X


def bond_diagonal(L: int, weights: Sequence[float]) -> np.ndarray:
    """Diagonal of sum_n w_n sigma_z_n sigma_z_{n+1}."""
    spins = spin_configurations(L).astype(float)
    return (spins[:, :-1] * spins[:, 1:]) @ np.asarray(weights, dtype=float)


def field_diagonal(L: int, weights: Sequence[float]) -> np.ndarray:
    return spin_configurations(L).astype(float) @ np.asarray(weights, dtype=float)


def build_hamiltonian(
    spec: ChainSpec, schedule: AnnealSchedule, s: float, max_qubits: int = MAX_QUBITS
) -> np.ndarray:
    """H(s)/(2 pi hbar) in GHz as a dense real symmetric matrix."""
    if not 0.0 <= s <= 1.0:
        raise ValidationError(f"normalized time must lie in [0, 1], got {s}")
    check_capacity(spec.L, max_qubits)
    g = float(schedule.g(s))
    d = float(schedule.delta(s))
    diag = bond_diagonal(spec.L, spec.J) + field_diagonal(spec.L, spec.h)
    H = -g * transverse_operator(spec.L)
    H[np.diag_indices_from(H)] -= d * diag
    return H


# --- observables ---------------------------------------------------------------


class Observable:
    """Hermitian operator held as distinct eigenvalues with eigenspace bases."""

    def __init__(self, eigenvalues: Sequence[float], bases: Sequence[np.ndarray]):
        if len(eigenvalues) != len(bases) or not bases:
            raise ValidationError("need one eigenspace basis per eigenvalue")
        self.eigenvalues = tuple(float(w) for w in eigenvalues)
        if len(set(self.eigenvalues)) != len(self.eigenvalues):
            raise ValidationError("eigenvalues must be distinct")
        self.bases = tuple(np.asarray(b) for b in bases)
        self.dim = self.bases[0].shape[0]
        if any(b.ndim != 2 or b.shape[0] != self.dim for b in self.bases):
            raise ValidationError("eigenspace bases must be dim x rank arrays")
        if sum(b.shape[1] for b in self.bases) != self.dim:
            raise ValidationError("eigenspace ranks must add up to the dimension")

    def __len__(self):
        return len(self.eigenvalues)

    def __repr__(self):
        pairs = ", ".join(f"{w:g}:{r}" for w, r in zip(self.eigenvalues, self.ranks))
        return f"Observable(dim={self.dim}, {{{pairs}}})"

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(b.shape[1] for b in self.bases)

    def projector(self, m: int) -> np.ndarray:
        B = self.bases[m]
        return B @ B.conj().T

    @property
    def projectors(self) -> list[np.ndarray]:
        return [self.projector(m) for m in range(len(self))]

    def apply_function(self, f: Callable[[float], float]) -> np.ndarray:
        """Dense ``sum_m f(w_m) P_m``."""
        out = np.zeros((self.dim, self.dim), dtype=np.result_type(*self.bases))
        for w, B in zip(self.eigenvalues, self.bases):
            out += f(w) * (B @ B.conj().T)
        return out

    def matrix(self) -> np.ndarray:
        return self.apply_function(lambda w: w)

    def trace(self) -> float:
        return sum(w * r for w, r in zip(self.eigenvalues, self.ranks))

    def check(self, atol: float = 1e-10) -> None:
        """Raise unless the projectors are orthogonal idempotents summing to identity."""
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for m, Bm in enumerate(self.bases):
            gram = Bm.conj().T @ Bm
            if np.max(np.abs(gram - np.eye(gram.shape[0])), initial=0.0) > atol:
                raise ValidationError(f"eigenspace {m} basis is not orthonormal")
            for Bn in self.bases[m + 1 :]:
                if np.max(np.abs(Bm.conj().T @ Bn), initial=0.0) > atol:
                    raise ValidationError("eigenspaces are not mutually orthogonal")
            total += Bm @ Bm.conj().T
        if np.max(np.abs(total - np.eye(self.dim))) > atol:
            raise ValidationError("projectors do not resolve the identity")


def _group_basis_vectors(values: np.ndarray, vectors: np.ndarray) -> Observable:
    """Build an Observable from exact (integer-valued) labels attached to basis columns."""
    keys = np.rint(values).astype(int)
    eigenvalues = sorted(set(keys.tolist()), reverse=True)
    bases = [vectors[:, keys == w] for w in eigenvalues]
    return Observable(eigenvalues, bases)


def build_omega_initial(L: int, max_qubits: int = MAX_QUBITS) -> Observable:
    """sum_n sigma_x_n - I; eigenvalue L-1-2m has rank binomial(L, m)."""
    if L < 2:
        raise ValidationError("chain length must be >= 2")
    check_capacity(L, max_qubits)
    dim = 2**L
    vectors = hadamard(dim).astype(float) / math.sqrt(dim)
    flips = np.array([bin(j).count("1") for j in range(dim)])
    return _group_basis_vectors(L - 1 - 2 * flips, vectors)


def build_omega_final(L: int, J: Sequence[float] | None = None, max_qubits: int = MAX_QUBITS) -> Observable:
    """sum_n o_n sigma_z_n sigma_z_{n+1}, diagonal in the computational basis.

    ``o_n`` is the ground-state orientation of bond ``n`` (sign of ``J_n``);
    without ``J`` every bond is ferromagnetic. In both cases eigenvalue
    L-1-2k counts k broken bonds and has rank 2*binomial(L-1, k).
    """
    if L < 2:
        raise ValidationError("chain length must be >= 2")
    check_capacity(L, max_qubits)
    signs = [1] * (L - 1) if J is None else [_sign(j) for j in J]
    if len(signs) != L - 1:
        raise ValidationError(f"expected {L - 1} couplings, got {len(signs)}")
    return _group_basis_vectors(bond_diagonal(L, signs), np.eye(2**L))


def spectral_decompose(H: np.ndarray, rtol: float = 1e-8) -> Observable:
    """Cluster the spectrum of a Hermitian matrix into distinct eigenvalues.

    Neighbouring eigenvalues closer than ``rtol * max(1, max|eigenvalue|)``
    share one eigenspace; the cluster mean is reported as its eigenvalue.
    """
    H = np.asarray(H)
    check_hermitian(H)
    vals, vecs = np.linalg.eigh(H)
    scale = rtol * max(1.0, float(np.max(np.abs(vals))))
    splits = np.nonzero(np.diff(vals) > scale)[0] + 1
    groups = np.split(np.arange(len(vals)), splits)
    eigenvalues = [float(np.mean(vals[g])) for g in groups][::-1]
    bases = [vecs[:, g] for g in groups][::-1]
    return Observable(eigenvalues, bases)


def ground_state(H: np.ndarray, gap_tol: float = 1e-9) -> np.ndarray:
    """Normalized eigenvector of the lowest eigenvalue; raises if it is not unique."""
    H = np.asarray(H)
    check_hermitian(H)
    vals, vecs = np.linalg.eigh(H)
    if len(vals) > 1 and vals[1] - vals[0] <= gap_tol:
        raise DegeneracyError(
            f"ground space is degenerate: E0={vals[0]:.12g}, E1={vals[1]:.12g} (gap tolerance {gap_tol:g})"
        )
    psi = vecs[:, 0]
    # fix the global phase so that the largest component is real positive
    k = int(np.argmax(np.abs(psi)))
    return psi * (abs(psi[k]) / psi[k])


# --- states ---------------------------------------------------------------------


def check_hermitian(A: np.ndarray, atol: float = 1e-10) -> None:
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A), initial=0.0)))
    if np.max(np.abs(A - A.conj().T), initial=0.0) > atol * scale:
        raise ValidationError("matrix is not Hermitian")


def validate_state(state: np.ndarray, dim: int | None = None, atol: float = 1e-10) -> np.ndarray:
    """Check a statevector or density matrix and return it as an array."""
    state = np.asarray(state)
    if dim is not None and state.shape[0] != dim:
        raise ValidationError(f"state dimension {state.shape[0]} does not match {dim}")
    if state.ndim == 1:
        norm = np.linalg.norm(state)
        if abs(norm - 1.0) > atol:
            raise ValidationError(f"statevector is not normalized (norm {norm:.12g})")
    elif state.ndim == 2:
        check_hermitian(state, atol)
        tr = np.trace(state).real
        if abs(tr - 1.0) > atol:
            raise ValidationError(f"density matrix trace is {tr:.12g}")
        if np.linalg.eigvalsh(state)[0] < -atol:
            raise ValidationError("density matrix is not positive semidefinite")
    else:
        raise ValidationError(f"state must be 1-D or 2-D, got shape {state.shape}")
    return state


def density_matrix(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state)
    if state.ndim == 1:
        return np.outer(state, state.conj())
    return state


def paramagnetic_state(L: int) -> np.ndarray:
    """|-> -> ... ->>, all spins along +x."""
    return np.full(2**L, 2.0 ** (-L / 2))
