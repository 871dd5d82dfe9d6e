"""Homogeneous single-qubit Kraus channels and unitality witnesses.

Amplitude damping relaxes towards spin up (|0>, sigma_z = +1). The thermal
channel is generalized amplitude damping: with weight ``1 - excitation`` it
decays towards up, with weight ``excitation`` towards down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ChannelError, ValidationError

KINDS = ("none", "dephasing", "depolarizing", "amplitude_damping", "thermal")

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)

TP_ATOL = 1e-12


@dataclass(frozen=True)
class NoiseModel:
    """Channel kind and event rate per microsecond, identical on every qubit."""

    kind: str = "none"
    rate: float = 0.0
    excitation: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown noise kind {self.kind!r}; choose from {', '.join(KINDS)}")
        if not (math.isfinite(self.rate) and self.rate >= 0):
            raise ValidationError(f"noise rate must be >= 0, got {self.rate!r}")
        if not 0.0 <= self.excitation <= 1.0:
            raise ValidationError(f"excitation fraction must lie in [0, 1], got {self.excitation!r}")

    @property
    def is_trivial(self) -> bool:
        return self.kind == "none" or self.rate == 0.0

    def describe(self) -> str:
        if self.kind == "none":
            return "none"
        if self.kind == "thermal":
            return f"thermal:{self.rate:g}:{self.excitation:g}"
        return f"{self.kind}:{self.rate:g}"

    @classmethod
    def parse(cls, text: str) -> "NoiseModel":
        """Parse ``kind:rate[:excitation]``, e.g. ``dephasing:0.02`` or ``thermal:0.05:0.1``."""
        parts = text.strip().split(":")
        if parts == ["none"]:
            return cls()
        if len(parts) not in (2, 3):
            raise ValidationError(f"noise must look like kind:rate[:excitation], got {text!r}")
        if len(parts) == 3 and parts[0] != "thermal":
            raise ValidationError("only the thermal channel takes an excitation fraction")
        try:
            values = [float(p) for p in parts[1:]]
        except ValueError:
            raise ValidationError(f"bad number in noise descriptor {text!r}") from None
        return cls(parts[0], *values)


def check_trace_preserving(kraus: Sequence[np.ndarray], atol: float = TP_ATOL) -> float:
    """Return ``max|sum K^dag K - I|``; raise ChannelError above ``atol``."""
    d = kraus[0].shape[0]
    dev = float(np.max(np.abs(sum(K.conj().T @ K for K in kraus) - np.eye(d))))
    if dev > atol:
        raise ChannelError(f"Kraus set is not trace preserving (deviation {dev:.3g})")
    return dev


def kraus_for(model: NoiseModel, p: float) -> list[np.ndarray]:
    """Single-qubit Kraus operators for event probability ``p`` in one slice."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"slice probability must lie in [0, 1], got {p!r}")
    if model.kind == "none" or p == 0.0:
        return [I2.copy()]
    if model.kind == "dephasing":
        ks = [math.sqrt(1 - p) * I2, math.sqrt(p) * SZ]
    elif model.kind == "depolarizing":
        a = math.sqrt(p / 3)
        ks = [math.sqrt(1 - p) * I2, a * SX, a * SY, a * SZ]
    elif model.kind == "amplitude_damping":
        ks = _damping_to_up(p)
    else:
        f = model.excitation
        up = _damping_to_up(p)
        down = [SX @ K @ SX for K in up]
        ks = [math.sqrt(1 - f) * K for K in up] + [math.sqrt(f) * K for K in down]
        ks = [K for K in ks if np.any(K)]
    check_trace_preserving(ks)
    return ks


def _damping_to_up(p: float) -> list[np.ndarray]:
    return [
        np.array([[1, 0], [0, math.sqrt(1 - p)]], dtype=complex),
        np.array([[0, math.sqrt(p)], [0, 0]], dtype=complex),
    ]


def unitality_deviation(kraus: Sequence[np.ndarray]) -> float:
    d = kraus[0].shape[0]
    return float(np.max(np.abs(sum(K @ K.conj().T for K in kraus) - np.eye(d))))


def is_unital(kraus: Sequence[np.ndarray], atol: float = TP_ATOL) -> tuple[bool, float]:
    """Whether the channel fixes the identity, with ``max|sum K K^dag - I|``."""
    dev = unitality_deviation(kraus)
    return dev <= atol, dev


def apply_channel(rho: np.ndarray, kraus: Sequence[np.ndarray], site: int, L: int | None = None) -> np.ndarray:
    """Apply a single-qubit channel to ``site`` of a (stack of) operator(s).

    ``rho`` has shape ``(..., 2**L, 2**L)``. No positivity check is made, so
    the map can be applied to arbitrary operators (it is linear).
    """
    rho = np.asarray(rho)
    dim = rho.shape[-1]
    if L is None:
        L = dim.bit_length() - 1
    if rho.shape[-2] != dim or 2**L != dim:
        raise ValidationError(f"operator shape {rho.shape} is not a square 2**L matrix")
    if not 0 <= site < L:
        raise ValidationError(f"site {site} outside chain of length {L}")
    a, c = 2**site, 2 ** (L - site - 1)
    batch = rho.shape[:-2]
    # superoperator acting on the (row bit, column bit) pair of the site
    sup = sum(np.einsum("ij,lk->iljk", K, K.conj()) for K in kraus).reshape(4, 4)
    t = np.moveaxis(rho.reshape(batch + (a, 2, c, a, 2, c)), (-5, -2), (-2, -1))
    shape = t.shape
    out = (t.reshape(shape[:-2] + (4,)) @ sup.T).reshape(shape)
    return np.moveaxis(out, (-2, -1), (-5, -2)).reshape(rho.shape)


def apply_channel_all(rho: np.ndarray, kraus: Sequence[np.ndarray], L: int | None = None) -> np.ndarray:
    """Apply the same single-qubit channel to every site."""
    if len(kraus) == 1 and np.array_equal(kraus[0], I2):
        return rho
    if L is None:
        L = rho.shape[-1].bit_length() - 1
    for n in range(L):
        rho = apply_channel(rho, kraus, n, L)
    return rho
