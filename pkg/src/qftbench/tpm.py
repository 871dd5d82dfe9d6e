"""Two-point measurement statistics and the general fluctuation theorem.

A first projective measurement of ``omega_i`` is followed by the map ``E``
and a second measurement of ``omega_f``. The change of outcome ``dw`` is
collected into a :class:`WorkDistribution` with exact integer keys, whose
exponential average ``<exp(-dw)>`` equals the efficacy
``tr[exp(-omega_f) E(M(rho0) exp(omega_i))]`` for every linear
trace-preserving ``E``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .archive import ShotArchive
from .dynamics import AnnealMap, EvolutionConfig, QuantumMap
from .errors import ChannelError, ValidationError
from .model import (
    AnnealSchedule,
    ChainSpec,
    Observable,
    build_hamiltonian,
    build_omega_final,
    build_omega_initial,
    density_matrix,
    ground_state,
)
from .noise import NoiseModel

TRACE_ATOL = 1e-9
# rows whose first-measurement weight is below this are reported as zero
ZERO_WEIGHT = 1e-28


def post_measurement_state(rho0: np.ndarray, omega_i: Observable) -> np.ndarray:
    """Non-selective measurement: sum_m P_m rho0 P_m."""
    rho = density_matrix(np.asarray(rho0))
    if rho.shape != (omega_i.dim, omega_i.dim):
        raise ValidationError(f"state of shape {rho.shape} does not fit a {omega_i.dim}-dim observable")
    out = np.zeros_like(rho, dtype=np.result_type(rho, *omega_i.bases))
    for B in omega_i.bases:
        Bh = B.conj().T
        out += B @ (Bh @ rho @ B) @ Bh
    return out


@dataclass(frozen=True)
class TransitionMatrix:
    """``p[m, n]``: probability of reading ``initial[m]`` and then ``final[n]``."""

    p: np.ndarray
    initial: tuple[float, ...]
    final: tuple[float, ...]

    @property
    def total(self) -> float:
        return math.fsum(self.p.ravel())


def _int_key(x: float) -> int:
    k = round(x)
    if abs(x - k) > 1e-9:
        raise ValidationError(f"outcome difference {x!r} is not an integer; work distributions need integer spectra")
    return int(k)


def _branches(rho0: np.ndarray, omega_i: Observable) -> tuple[list[int], list[np.ndarray]]:
    """First-measurement branches ``P_m rho0 P_m`` with non-negligible weight."""
    rho = density_matrix(rho0)
    live, stack = [], []
    for m, B in enumerate(omega_i.bases):
        Bh = B.conj().T
        op = B @ (Bh @ rho @ B) @ Bh
        if abs(np.trace(op)) > ZERO_WEIGHT:
            live.append(m)
            stack.append(op)
    return live, stack


def _read_transitions(evolved, live, omega_i: Observable, omega_f: Observable) -> TransitionMatrix:
    p = np.zeros((len(omega_i), len(omega_f)))
    for row, m in enumerate(live):
        for n, C in enumerate(omega_f.bases):
            p[m, n] = np.trace(C.conj().T @ evolved[row] @ C).real
    tm = TransitionMatrix(p, omega_i.eigenvalues, omega_f.eigenvalues)
    if abs(tm.total - 1.0) > TRACE_ATOL:
        raise ChannelError(f"transition probabilities sum to {tm.total:.12g}; map is not trace preserving")
    return tm


def transition_matrix(
    rho0: np.ndarray, omega_i: Observable, omega_f: Observable, emap: QuantumMap
) -> TransitionMatrix:
    """p_{m->n} = tr[P_n^f E(P_m^i rho0 P_m^i)]."""
    rho0 = np.asarray(rho0)
    dim = omega_i.dim
    if omega_f.dim != dim or emap.dim != dim or rho0.shape[0] != dim:
        raise ValidationError("state, observables and map must share one dimension")
    if rho0.ndim == 1 and emap.unitary:
        live, cols = [], []
        for m, B in enumerate(omega_i.bases):
            psi_m = B @ (B.conj().T @ rho0)
            if np.vdot(psi_m, psi_m).real > ZERO_WEIGHT:
                live.append(m)
                cols.append(psi_m)
        evolved = emap.apply_vector(np.stack(cols, axis=1))
        p = np.zeros((len(omega_i), len(omega_f)))
        for col, m in enumerate(live):
            for n, C in enumerate(omega_f.bases):
                amp = C.conj().T @ evolved[:, col]
                p[m, n] = np.vdot(amp, amp).real
        tm = TransitionMatrix(p, omega_i.eigenvalues, omega_f.eigenvalues)
        if abs(tm.total - 1.0) > TRACE_ATOL:
            raise ChannelError(f"transition probabilities sum to {tm.total:.12g}; map is not trace preserving")
        return tm
    live, stack = _branches(rho0, omega_i)
    return _read_transitions(emap.apply(np.array(stack)), live, omega_i, omega_f)


class WorkDistribution(Mapping):
    """Probabilities over integer outcome keys, plus free-form metadata."""

    def __init__(self, probabilities: Mapping[int, float], meta: dict | None = None):
        self._p = {int(k): float(v) for k, v in sorted(probabilities.items())}
        self.meta = dict(meta or {})

    def __getitem__(self, key):
        return self._p[key]

    def __iter__(self):
        return iter(self._p)

    def __len__(self):
        return len(self._p)

    def __repr__(self):
        body = ", ".join(f"{k}: {v:.6g}" for k, v in self._p.items())
        return f"WorkDistribution({{{body}}})"

    @property
    def total(self) -> float:
        return math.fsum(self._p.values())

    def keys_array(self) -> np.ndarray:
        return np.array(list(self._p), dtype=np.int64)

    def probs_array(self) -> np.ndarray:
        return np.array(list(self._p.values()))

    def renormalized(self, L: int) -> dict[float, float]:
        """Re-key by ``key / (L - 1)``."""
        return {k / (L - 1): v for k, v in self._p.items()}

    def to_csv(self, path, key_name: str = "delta_omega") -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([key_name, "probability"])
            for k, v in self._p.items():
                writer.writerow([k, repr(v)])

    @classmethod
    def from_csv(cls, path) -> "WorkDistribution":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            next(reader)
            return cls({int(k): float(v) for k, v in reader})


def total_variation(p: Mapping, q: Mapping) -> float:
    keys = set(p) | set(q)
    return 0.5 * math.fsum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def work_distribution(tm: TransitionMatrix, meta: dict | None = None) -> WorkDistribution:
    """Aggregate p_{m->n} on the exact keys final[n] - initial[m]."""
    acc: dict[int, list[float]] = {}
    for m, wi in enumerate(tm.initial):
        for n, wf in enumerate(tm.final):
            if tm.p[m, n] != 0.0:
                acc.setdefault(_int_key(wf - wi), []).append(tm.p[m, n])
    return WorkDistribution({k: math.fsum(v) for k, v in acc.items()}, meta)


def abs_final_marginal(tm: TransitionMatrix) -> WorkDistribution:
    """Distribution of |final outcome|."""
    acc: dict[int, list[float]] = {}
    col = tm.p.sum(axis=0)
    for n, wf in enumerate(tm.final):
        acc.setdefault(abs(_int_key(wf)), []).append(col[n])
    return WorkDistribution({k: math.fsum(v) for k, v in acc.items()})


def exponential_average(P: Mapping[int, float]) -> float:
    """sum_k exp(-k) P(k), with the largest exponent factored out."""
    items = [(k, v) for k, v in P.items() if v != 0.0]
    if not items:
        raise ValidationError("empty distribution")
    shift = max(-k for k, _ in items)
    return math.exp(shift) * math.fsum(v * math.exp(-k - shift) for k, v in items)


def _efficacy_operator(rho0: np.ndarray, omega_i: Observable) -> np.ndarray:
    return post_measurement_state(rho0, omega_i) @ omega_i.apply_function(math.exp)


def _efficacy_readout(evolved: np.ndarray, omega_f: Observable) -> float:
    readout = omega_f.apply_function(lambda w: math.exp(-w))
    return float(math.fsum((readout * evolved.T).ravel().real))


def efficacy(rho0: np.ndarray, omega_i: Observable, omega_f: Observable, emap: QuantumMap) -> float:
    """gamma = tr[exp(-omega_f) E(M(rho0) exp(omega_i))] from the spectral forms."""
    return _efficacy_readout(emap.apply(_efficacy_operator(rho0, omega_i)), omega_f)


def ideal_distribution(L: int) -> WorkDistribution:
    """Point mass at |omega_f| = L - 1: the readout of a defect-free chain."""
    if L < 2:
        raise ValidationError("chain length must be >= 2")
    return WorkDistribution({L - 1: 1.0}, {"L": L, "axis": "abs_omega"})


def final_state_probabilities(state: np.ndarray) -> np.ndarray:
    """z-basis readout probabilities of a statevector or density matrix."""
    state = np.asarray(state)
    if state.ndim == 1:
        probs = np.abs(state) ** 2
    else:
        probs = np.diagonal(state).real.copy()
    probs[probs < 0] = 0.0
    return probs / probs.sum()


def sample_shots(source, N: int, seed: int, meta: dict | None = None) -> ShotArchive:
    """Draw ``N`` categorical outcomes with a seeded generator.

    ``source`` is either a :class:`WorkDistribution` (the archive then holds
    ``delta_omega`` outcomes) or a final statevector / density matrix (the
    archive holds z-basis bitstrings).
    """
    if int(N) != N or N < 1:
        raise ValidationError(f"shot count must be a positive integer, got {N!r}")
    rng = np.random.default_rng(seed)
    meta = dict(meta or {})
    meta.setdefault("seed", seed)
    if isinstance(source, Mapping):
        if not source:
            raise ValidationError("empty distribution")
        keys = np.array(list(source.keys()), dtype=np.int64)
        probs = np.clip(np.array(list(source.values()), dtype=float), 0.0, None)
        if probs.sum() <= 0:
            raise ValidationError("empty distribution")
        counts = rng.multinomial(int(N), probs / probs.sum())
        keep = counts > 0
        return ShotArchive(meta, counts[keep], delta_omega=keys[keep])
    probs = final_state_probabilities(source)
    L = len(probs).bit_length() - 1
    meta.setdefault("L", L)
    counts = rng.multinomial(int(N), probs)
    idx = np.nonzero(counts)[0]
    bits = (idx[:, None] >> np.arange(L - 1, -1, -1)) & 1
    return ShotArchive(meta, counts[idx], spins=(1 - 2 * bits).astype(np.int8))


@dataclass
class AnnealResult:
    """Exact two-point statistics of one simulated anneal."""

    spec: ChainSpec
    schedule: AnnealSchedule
    noise: NoiseModel
    transitions: TransitionMatrix
    work: WorkDistribution
    abs_final: WorkDistribution
    final_state: np.ndarray
    efficacy: float | None

    @property
    def exponential_average(self) -> float:
        return exponential_average(self.work)

    @property
    def final_probabilities(self) -> np.ndarray:
        return final_state_probabilities(self.final_state)

    def meta(self) -> dict:
        return {
            "L": self.spec.L,
            "J": list(self.spec.J),
            "tau_us": self.schedule.tau,
            "noise": self.noise.describe(),
        }


def simulate_anneal(
    spec: ChainSpec,
    schedule: AnnealSchedule,
    noise: NoiseModel | None = None,
    config: EvolutionConfig = EvolutionConfig(),
    rho0: np.ndarray | None = None,
    with_efficacy: bool = True,
) -> AnnealResult:
    """Full two-point pipeline for the chain.

    ``rho0`` defaults to the ground state of H(0). The final observable is
    oriented along the couplings, so the defect-free readout always has the
    top eigenvalue L - 1.
    """
    noise = noise or NoiseModel()
    if rho0 is None:
        rho0 = ground_state(build_hamiltonian(spec, schedule, 0.0, config.max_qubits))
    omega_i = build_omega_initial(spec.L, config.max_qubits)
    omega_f = build_omega_final(spec.L, spec.J, config.max_qubits)
    emap = AnnealMap(spec, schedule, noise, config)
    if emap.unitary:
        tm = transition_matrix(rho0, omega_i, omega_f, emap)
        final = emap.apply(post_measurement_state(rho0, omega_i))
        gamma = efficacy(rho0, omega_i, omega_f, emap) if with_efficacy else None
    else:
        # one pass over the slices: the branches, then the efficacy operator
        live, stack = _branches(rho0, omega_i)
        if with_efficacy:
            stack.append(_efficacy_operator(rho0, omega_i))
        evolved = emap.apply(np.array(stack))
        tm = _read_transitions(evolved, live, omega_i, omega_f)
        final = evolved[: len(live)].sum(axis=0)
        gamma = _efficacy_readout(evolved[-1], omega_f) if with_efficacy else None
    result = AnnealResult(spec, schedule, noise, tm, None, abs_final_marginal(tm), final, gamma)
    result.work = work_distribution(tm, result.meta())
    return result
