"""Eigenstate-filtering baseline: the even filter polynomial and the sin block encoding."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chebyshev import chebyshev_T, chebyshev_ratio
from .circuit import hadamard, is_unitary

__all__ = [
    "FilterSpec",
    "filter_poly",
    "filter_poly_direct",
    "decay_bound",
    "filter_half_degree",
    "filter_pass_probability",
    "block_encode_sin",
]


@dataclass(frozen=True)
class FilterSpec:
    l: int
    Delta: float

    def __post_init__(self):
        if self.l < 1:
            raise ValueError(f"half-degree must be positive, got {self.l}")
        if not 0.0 < self.Delta < 1.0:
            raise ValueError(f"Delta must lie in (0, 1), got {self.Delta}")

    @property
    def degree(self) -> int:
        return 2 * self.l


def _check_domain(x) -> np.ndarray:
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1.0):
        raise ValueError("filter polynomial is defined on [-1, 1]")
    return xa


def filter_poly(spec: FilterSpec, x):
    """Filter polynomial as T_2l(sqrt((1-x^2)/(1-Delta^2))) / T_2l(1/sqrt(1-Delta^2))."""
    xa = _check_domain(x)
    s = 1.0 - spec.Delta ** 2
    out = chebyshev_ratio(2 * spec.l, np.sqrt((1.0 - xa * xa) / s), 1.0 / math.sqrt(s))
    return float(out) if np.ndim(x) == 0 else out


def filter_poly_direct(spec: FilterSpec, x):
    """Filter polynomial from the degree-l form T_l(-1 + 2(x^2-D^2)/(1-D^2)) / T_l(-1 - 2 D^2/(1-D^2))."""
    xa = _check_domain(x)
    d2 = spec.Delta ** 2
    num = chebyshev_T(spec.l, -1.0 + 2.0 * (xa * xa - d2) / (1.0 - d2))
    den = chebyshev_T(spec.l, -1.0 - 2.0 * d2 / (1.0 - d2))
    out = np.asarray(num) / den
    return float(out) if np.ndim(x) == 0 else out


def decay_bound(spec: FilterSpec) -> float:
    """2 exp(-2 l arcsin Delta): bound on the filter for |x| in [Delta, 1]."""
    return 2.0 * math.exp(-2.0 * spec.l * math.asin(spec.Delta))


def filter_half_degree(gap: float, delta: float) -> int:
    """Smallest l with 2l >= ln(2/delta)/gap."""
    if not 0.0 < gap <= math.pi / 2:
        raise ValueError(f"gap must lie in (0, pi/2], got {gap}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return max(1, math.ceil(math.log(2.0 / delta) / (2.0 * gap) - 1e-12))


def filter_pass_probability(phi, gap: float, delta: float):
    """Squared filter at x = sin phi, Delta = sin gap, at the half-degree chosen by :func:`filter_half_degree`.

    Only |sin phi| is visible to the filter, so eigenphases near pi pass
    like phase 0; the delta^2 bound holds for |phi| in [gap, pi - gap].
    """
    spec = FilterSpec(filter_half_degree(gap, delta), math.sin(gap))
    return np.abs(filter_poly(spec, np.sin(phi))) ** 2


def block_encode_sin(U: np.ndarray) -> np.ndarray:
    """(H (x) I)(U^dagger + I)(iI + -iI)(I + U)(H (x) I) with + the direct sum.

    The top-left block is i(U^dagger - U)/2 = sum_j sin(phi_j) |psi_j><psi_j|.
    """
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1] or not is_unitary(U, 1e-8):
        raise ValueError("U must be a square unitary")
    d = U.shape[0]
    eye = np.eye(d)
    Hd = np.kron(hadamard(), eye)
    zero = np.zeros((d, d))
    left = np.block([[U.conj().T, zero], [zero, eye]])
    phase = np.block([[1j * eye, zero], [zero, -1j * eye]])
    right = np.block([[eye, zero], [zero, U]])
    return Hd @ left @ phase @ right @ Hd
