"""Closed and open evolution of the annealed chain.

The anneal is cut into ``steps`` slices of length ``dt = tau / steps``. Each
slice uses the Hamiltonian at its midpoint ``s_k = (k + 1/2) / steps`` and is
exponentiated exactly through its eigendecomposition. With noise, every
unitary slice is followed by one application of the single-qubit channel on
every site (first-order splitting), with slice probability ``rate * dt``.

Slow closed anneals can instead use the ``adiabatic-frame`` integrator, which
propagates in the instantaneous eigenbasis; see :func:`_frame_sweep`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ChannelError, ValidationError
from .model import (
    MAX_QUBITS,
    AnnealSchedule,
    ChainSpec,
    bond_diagonal,
    check_capacity,
    field_diagonal,
    transverse_operator,
    validate_state,
)
from .noise import NoiseModel, apply_channel_all, check_trace_preserving, kraus_for

# GHz * us -> cycles
GHZ_US = 1e3
MODES = ("unitary", "channel")
INTEGRATORS = ("midpoint", "adiabatic-frame")


@dataclass(frozen=True)
class EvolutionConfig:
    steps: int = 2000
    mode: str = "unitary"
    max_qubits: int = MAX_QUBITS
    integrator: str = "midpoint"

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValidationError(f"steps must be a positive integer, got {self.steps!r}")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.integrator not in INTEGRATORS:
            raise ValidationError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if self.integrator != "midpoint" and self.mode != "unitary":
            raise ValidationError(f"the {self.integrator} integrator only supports closed evolution")


def slice_spectra(spec: ChainSpec, schedule: AnnealSchedule, steps: int) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(energies, eigenvectors)`` of H(s_k) for every midpoint slice.

    Without longitudinal fields H commutes with the global spin flip, so each
    slice is diagonalized as two half-size blocks in the flip-symmetric and
    flip-antisymmetric sectors.
    """
    X = transverse_operator(spec.L)
    diag = bond_diagonal(spec.L, spec.J) + field_diagonal(spec.L, spec.h)
    midpoints = [(k + 0.5) / steps for k in range(steps)]
    if any(spec.h):
        idx = np.diag_indices_from(X)
        for s in midpoints:
            H = -float(schedule.g(s)) * X
            H[idx] -= float(schedule.delta(s)) * diag
            yield np.linalg.eigh(H)
        return
    dim = spec.dim
    half = dim // 2
    rep = np.arange(half)
    partner = rep ^ (dim - 1)
    X_plus = X[np.ix_(rep, rep)] + X[np.ix_(rep, partner)]
    X_minus = X[np.ix_(rep, rep)] - X[np.ix_(rep, partner)]
    d_rep = diag[rep]
    bidx = np.diag_indices(half)
    root = 1 / math.sqrt(2)
    for s in midpoints:
        g, d = float(schedule.g(s)), float(schedule.delta(s))
        Hp = -g * X_plus
        Hp[bidx] -= d * d_rep
        Hm = -g * X_minus
        Hm[bidx] -= d * d_rep
        ep, vp = np.linalg.eigh(Hp)
        em, vm = np.linalg.eigh(Hm)
        vecs = np.empty((dim, dim))
        vecs[:half, :half] = vp * root
        vecs[partner, :half] = vp * root
        vecs[:half, half:] = vm * root
        vecs[partner, half:] = -vm * root
        yield np.concatenate([ep, em]), vecs


def hamiltonian_bound(spec: ChainSpec, schedule: AnnealSchedule) -> float:
    """Upper bound on max_s ||H(s)|| in GHz (the amplitudes are piecewise linear)."""
    zz = sum(abs(j) for j in spec.J) + sum(abs(x) for x in spec.h)
    return max(g * spec.L + d * zz for _, g, d in schedule.knots)


def steps_for(spec: ChainSpec, schedule: AnnealSchedule, max_phase: float = 2.0, minimum: int = 2000) -> int:
    """Slice count keeping the phase ``2 pi ||H|| dt`` of each slice below ``max_phase`` radians.

    Slices with larger phases alias non-adiabatic transitions, so slow
    anneals need a step count growing linearly with ``tau``.
    """
    bound = hamiltonian_bound(spec, schedule)
    return max(minimum, math.ceil(2 * math.pi * GHZ_US * schedule.tau * bound / max_phase))


def _phases(energies: np.ndarray, dt: float) -> np.ndarray:
    return np.exp(-2j * np.pi * GHZ_US * dt * energies)


def _unitary_slice_vec(psi: np.ndarray, vecs: np.ndarray, phase: np.ndarray) -> np.ndarray:
    # psi may hold several column vectors
    coeff = vecs.T @ psi
    coeff *= phase if psi.ndim == 1 else phase[:, None]
    return vecs @ coeff


def _unitary_slice_op(rho: np.ndarray, vecs: np.ndarray, phase: np.ndarray) -> np.ndarray:
    inner = vecs.T @ rho @ vecs
    inner *= phase[:, None] * phase.conj()[None, :]
    return vecs @ inner @ vecs.T


def slice_probability(noise: NoiseModel, dt: float) -> float:
    p = noise.rate * dt
    if p > 1.0:
        warnings.warn(f"noise probability per slice {p:.3g} capped at 1; increase steps", stacklevel=3)
        p = 1.0
    return p


def _check_inputs(state, spec: ChainSpec, config: EvolutionConfig) -> np.ndarray:
    check_capacity(spec.L, config.max_qubits)
    return validate_state(state, spec.dim, atol=1e-9)


def evolve_unitary(state, spec: ChainSpec, schedule: AnnealSchedule, config: EvolutionConfig = EvolutionConfig()):
    """Propagate a statevector (or density matrix) through the closed anneal."""
    state = _check_inputs(state, spec, config)
    return evolve_unitary_sweep(state, spec, schedule, [schedule.tau], config)[0]


def evolve_unitary_sweep(
    state, spec: ChainSpec, schedule: AnnealSchedule, taus: Sequence[float], config: EvolutionConfig = EvolutionConfig()
) -> list[np.ndarray]:
    """Closed evolution for several anneal times sharing one schedule shape.

    The slice eigendecompositions do not depend on ``tau``, so they are
    computed once and applied to every run.
    """
    state = _check_inputs(state, spec, config)
    taus = [float(t) for t in taus]
    if any(not t > 0 for t in taus):
        raise ValidationError("anneal times must be positive")
    if config.integrator == "adiabatic-frame":
        if state.ndim == 1:
            return [out[:, 0] for out in _frame_sweep(state[:, None], spec, schedule, taus, config.steps)]
        unitaries = _frame_sweep(np.eye(spec.dim), spec, schedule, taus, config.steps)
        return [U @ state @ U.conj().T for U in unitaries]
    dts = np.array(taus) / config.steps
    if state.ndim == 1:
        # one column per anneal time
        psi = np.repeat(state.astype(complex)[:, None], len(taus), axis=1)
        for energies, vecs in slice_spectra(spec, schedule, config.steps):
            coeff = vecs.T @ psi
            coeff *= np.exp(-2j * np.pi * GHZ_US * np.outer(energies, dts))
            psi = vecs @ coeff
        return [psi[:, i] for i in range(len(taus))]
    outs = [state.astype(complex) for _ in taus]
    for energies, vecs in slice_spectra(spec, schedule, config.steps):
        for i, dt in enumerate(dts):
            outs[i] = _unitary_slice_op(outs[i], vecs, _phases(energies, dt))
    return outs


def _frame_sweep(
    cols: np.ndarray, spec: ChainSpec, schedule: AnnealSchedule, taus: Sequence[float], steps: int
) -> list[np.ndarray]:
    """Closed evolution of the columns of ``cols`` in the instantaneous eigenbasis.

    The midpoint product is a sequence of phase slices joined by sudden basis
    rotations ``O = V_{k+1}^T V_k``. Here each rotation is spread over the
    time between the two midpoints: its Cayley generator ``G`` is averaged
    against the phases accumulated meanwhile, which multiplies ``G_mn`` by
    ``sinc`` of half the phase difference of levels m and n. Without that
    factor the scheme is the midpoint product exactly; with it, transitions
    between levels whose phases wind many times per slice are no longer
    aliased, so slow anneals converge at step counts independent of ``tau``.
    Eigenvectors are matched across slices by overlap and sign fixed
    (parallel transport), so level crossings become relabelings.
    """
    scale = [2 * np.pi * GHZ_US * t / steps for t in taus]
    coeffs = []
    prev = None
    for energies, vecs in slice_spectra(spec, schedule, steps):
        if prev is None:
            coeffs = [vecs.T @ cols.astype(complex) for _ in taus]
        else:
            prev_energies, prev_vecs = prev
            ov = vecs.T @ prev_vecs
            rows, matched = linear_sum_assignment(-np.abs(ov))
            order = np.empty_like(rows)
            order[matched] = rows
            energies, vecs, ov = energies[order], vecs[:, order], ov[order]
            signs = np.where(np.diag(ov) < 0, -1.0, 1.0)
            vecs = vecs * signs
            ov = ov * signs[:, None]
            eye = np.eye(len(energies))
            # inverse Cayley transform: ov = (I - G/2)^-1 (I + G/2)
            G = np.linalg.solve((ov + eye).T, 2 * (ov - eye).T).T
            mean = (energies + prev_energies) / 2
            gap = mean[:, None] - mean[None, :]
            for i, w in enumerate(scale):
                Gw = G * np.sinc(w * gap / (2 * np.pi))
                coeffs[i] = np.linalg.solve(eye - Gw / 2, (eye + Gw / 2) @ coeffs[i])
        for i, w in enumerate(scale):
            # full phase of this slice: second half of the last interval, first half of the next
            coeffs[i] = coeffs[i] * np.exp(-1j * w * energies)[:, None]
        prev = (energies, vecs)
    return [prev[1] @ c for c in coeffs]


def evolve_channel(
    rho,
    spec: ChainSpec,
    schedule: AnnealSchedule,
    noise: NoiseModel,
    config: EvolutionConfig = EvolutionConfig(mode="channel"),
) -> np.ndarray:
    """Propagate a density matrix through the anneal with per-slice noise."""
    rho = np.asarray(rho)
    if rho.ndim != 2:
        raise ValidationError("channel evolution needs a density matrix")
    rho = _check_inputs(rho, spec, config)
    return _evolve_ops(rho.astype(complex), spec, schedule, noise, config.steps)


def _evolve_ops(ops: np.ndarray, spec, schedule, noise: NoiseModel, steps: int) -> np.ndarray:
    dt = schedule.tau / steps
    kraus = kraus_for(noise, slice_probability(noise, dt)) if not noise.is_trivial else None
    for energies, vecs in slice_spectra(spec, schedule, steps):
        ops = _unitary_slice_op(ops, vecs, _phases(energies, dt))
        if kraus is not None:
            ops = apply_channel_all(ops, kraus, spec.L)
    return ops


def propagator(spec: ChainSpec, schedule: AnnealSchedule, config: EvolutionConfig = EvolutionConfig()) -> np.ndarray:
    """Full time-ordered unitary of the closed anneal."""
    check_capacity(spec.L, config.max_qubits)
    if config.integrator == "adiabatic-frame":
        return _frame_sweep(np.eye(spec.dim), spec, schedule, [schedule.tau], config.steps)[0]
    U = np.eye(spec.dim, dtype=complex)
    dt = schedule.tau / config.steps
    for energies, vecs in slice_spectra(spec, schedule, config.steps):
        U = _unitary_slice_vec(U, vecs, _phases(energies, dt))
    return U


# --- maps ---------------------------------------------------------------------


class QuantumMap:
    """Linear map on operators; ``apply`` accepts stacks of shape ``(..., d, d)``."""

    dim: int
    unitary = False

    def apply(self, ops: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, ops):
        return self.apply(ops)

    def apply_vector(self, psi: np.ndarray) -> np.ndarray:
        raise TypeError(f"{type(self).__name__} does not act on statevectors")

    def check_trace_preserving(self, atol: float = 1e-9, samples: int = 3, seed: int = 0) -> float:
        """Largest trace error over random density matrices; raises ChannelError above ``atol``."""
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(samples, self.dim, self.dim)) + 1j * rng.normal(size=(samples, self.dim, self.dim))
        rhos = A @ A.conj().transpose(0, 2, 1)
        rhos /= np.trace(rhos, axis1=1, axis2=2)[:, None, None]
        dev = float(np.max(np.abs(np.trace(self.apply(rhos), axis1=-2, axis2=-1) - 1)))
        if dev > atol:
            raise ChannelError(f"map is not trace preserving (deviation {dev:.3g})")
        return dev


class IdentityMap(QuantumMap):
    unitary = True

    def __init__(self, dim: int):
        self.dim = dim

    def apply(self, ops):
        return np.array(ops, dtype=complex)

    def apply_vector(self, psi):
        return np.array(psi, dtype=complex)


class UnitaryMap(QuantumMap):
    unitary = True

    def __init__(self, U: np.ndarray):
        self.U = np.asarray(U)
        self.dim = self.U.shape[0]

    def apply(self, ops):
        return self.U @ ops @ self.U.conj().T

    def apply_vector(self, psi):
        return self.U @ psi


class KrausMap(QuantumMap):
    """Map given by full-dimension Kraus operators."""

    def __init__(self, kraus: Sequence[np.ndarray], atol: float = 1e-10):
        self.kraus = [np.asarray(K, dtype=complex) for K in kraus]
        self.dim = self.kraus[0].shape[0]
        check_trace_preserving(self.kraus, atol)

    def apply(self, ops):
        return sum(K @ ops @ K.conj().T for K in self.kraus)


class FullyDepolarizingMap(QuantumMap):
    """rho -> tr(rho) I / d."""

    def __init__(self, dim: int):
        self.dim = dim

    def apply(self, ops):
        ops = np.asarray(ops)
        tr = np.trace(ops, axis1=-2, axis2=-1)
        return tr[..., None, None] * np.eye(self.dim) / self.dim


class AnnealMap(QuantumMap):
    """The anneal of ``spec`` under ``schedule``, optionally with homogeneous noise."""

    def __init__(
        self,
        spec: ChainSpec,
        schedule: AnnealSchedule,
        noise: NoiseModel | None = None,
        config: EvolutionConfig = EvolutionConfig(),
    ):
        check_capacity(spec.L, config.max_qubits)
        self.spec = spec
        self.schedule = schedule
        self.noise = noise or NoiseModel()
        self.config = config
        self.dim = spec.dim
        self.unitary = self.noise.is_trivial
        self._U = None

    @property
    def U(self) -> np.ndarray:
        if not self.unitary:
            raise TypeError("noisy anneal has no propagator")
        if self._U is None:
            self._U = propagator(self.spec, self.schedule, self.config)
        return self._U

    def apply(self, ops):
        ops = np.asarray(ops, dtype=complex)
        if self.unitary:
            return self.U @ ops @ self.U.conj().T
        return _evolve_ops(ops, self.spec, self.schedule, self.noise, self.config.steps)

    def apply_vector(self, psi):
        if not self.unitary:
            raise TypeError("noisy anneal does not act on statevectors")
        if self._U is not None:
            return self.U @ psi
        psi = np.asarray(psi, dtype=complex)
        if self.config.integrator == "adiabatic-frame":
            cols = psi if psi.ndim == 2 else psi[:, None]
            out = _frame_sweep(cols, self.spec, self.schedule, [self.schedule.tau], self.config.steps)[0]
            return out if psi.ndim == 2 else out[:, 0]
        if psi.ndim == 2:
            return self.U @ psi
        dt = self.schedule.tau / self.config.steps
        for energies, vecs in slice_spectra(self.spec, self.schedule, self.config.steps):
            psi = _unitary_slice_vec(psi, vecs, _phases(energies, dt))
        return psi

    def describe(self) -> dict:
        return {
            "L": self.spec.L,
            "tau_us": self.schedule.tau,
            "noise": self.noise.describe(),
            "steps": self.config.steps,
            "integrator": self.config.integrator,
        }


def gauge_operator(L: int) -> np.ndarray:
    """Basis permutation implementing sigma_x on sites 1, 3, 5, ...

    Conjugating by it negates every sigma_z sigma_z bond and leaves sum sigma_x
    unchanged, so it maps the anneal with couplings J onto the one with -J.
    """
    dim = 2**L
    mask = 0
    for n in range(1, L, 2):
        mask |= 1 << (L - 1 - n)
    return np.arange(dim) ^ mask
