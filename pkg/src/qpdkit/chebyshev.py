"""Chebyshev polynomials, the quasi-Chebyshev recurrence and QPD angle schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AngleSchedule",
    "chebyshev_T",
    "chebyshev_T_recurrence",
    "chebyshev_ratio",
    "schedule_angles",
    "make_schedule",
    "min_odd_depth",
    "tightened_gap",
    "quasi_chebyshev",
]


def chebyshev_T(L: int, x):
    """First-kind Chebyshev polynomial T_L evaluated with the explicit branches.

    cos(L arccos x) on [-1, 1], cosh(L arccosh x) for x >= 1 and
    (-1)^L cosh(L arccosh(-x)) for x <= -1. Accepts scalars or arrays.
    Large arguments overflow to ``inf`` rather than raising.
    """
    if L < 0:
        raise ValueError(f"degree must be non-negative, got {L}")
    xa = np.asarray(x, dtype=float)
    inside = np.abs(xa) <= 1.0
    with np.errstate(over="ignore", invalid="ignore"):
        mid = np.cos(L * np.arccos(np.clip(xa, -1.0, 1.0)))
        outer = np.cosh(L * np.arccosh(np.maximum(np.abs(xa), 1.0)))
    sign = np.where(xa < 0, (-1.0) ** L, 1.0)
    out = np.where(inside, mid, sign * outer)
    if np.ndim(x) == 0:
        return float(out)
    return out


def chebyshev_T_recurrence(L: int, x):
    """T_L via T_{n+1} = 2x T_n - T_{n-1}; the reference the branches are checked against."""
    xa = np.asarray(x, dtype=float)
    prev, cur = np.ones_like(xa), xa.copy()
    if L == 0:
        out = prev
    else:
        for _ in range(L - 1):
            prev, cur = cur, 2.0 * xa * cur - prev
        out = cur
    if np.ndim(x) == 0:
        return float(out)
    return out


def chebyshev_ratio(L: int, y, z: float):
    """T_L(y) / T_L(z) for z >= 1 without overflow.

    Both numerator and denominator can exceed the double range for deep
    circuits; the ratio is formed in log space on the branch |y| > 1.
    """
    if z < 1.0:
        raise ValueError("denominator argument must be >= 1")
    ya = np.asarray(y, dtype=float)
    b = math.acosh(z)
    with np.errstate(over="ignore"):
        denom = math.cosh(L * b) if L * b < 700 else math.inf
        mid = np.cos(L * np.arccos(np.clip(ya, -1.0, 1.0))) / denom
        a = np.arccosh(np.maximum(np.abs(ya), 1.0))
        outer = np.exp(L * (a - b)) * (1.0 + np.exp(-2.0 * L * a)) / (1.0 + math.exp(-2.0 * L * b))
    sign = np.where(ya < 0, (-1.0) ** L, 1.0)
    out = np.where(np.abs(ya) <= 1.0, mid, sign * outer)
    if np.ndim(y) == 0:
        return float(out)
    return out


def schedule_angles(gap: float, L: int) -> np.ndarray:
    """theta_n = 2 arctan(sin(gap/2) tan(n pi / L)) for n = 0..L-1.

    The tangent is never evaluated directly: arctan(s tan a) is rewritten
    as atan2(s sin a sgn(cos a), |cos a|), identical on the principal branch
    and bounded near the pole at n/L ~ 1/2.
    """
    s = math.sin(gap / 2.0)
    a = np.arange(L) * math.pi / L
    c = np.cos(a)
    return 2.0 * np.arctan2(s * np.sin(a) * np.sign(c), np.abs(c))


def min_odd_depth(bound: float) -> int:
    """Smallest odd integer >= bound."""
    L = max(1, math.ceil(bound - 1e-12))
    return L if L % 2 == 1 else L + 1


@dataclass(frozen=True)
class AngleSchedule:
    """Parameters and Y-rotation angles of a QPD circuit.

    ``angle_gap`` is the gap used inside the angle formula. It equals ``gap``
    for the plain schedule and the tightened gap when ``tightened=True`` was
    requested from :func:`make_schedule`.
    """

    gap: float
    delta: float
    L: int
    thetas: np.ndarray = field(repr=False)
    angle_gap: float = math.nan

    def __post_init__(self):
        if self.L < 1 or self.L % 2 == 0:
            raise ValueError(f"depth must be a positive odd integer, got {self.L}")
        if len(self.thetas) != self.L:
            raise ValueError("need exactly L angles")
        if math.isnan(self.angle_gap):
            object.__setattr__(self, "angle_gap", self.gap)
        self.thetas.setflags(write=False)

    @classmethod
    def from_depth(cls, gap: float, L: int, delta: float = math.nan) -> "AngleSchedule":
        """Schedule with an explicitly chosen odd depth."""
        if not 0.0 < gap < math.pi:
            raise ValueError(f"gap must lie in (0, pi), got {gap}")
        if L < 1 or L % 2 == 0:
            raise ValueError(f"depth must be a positive odd integer, got {L}")
        return cls(gap=gap, delta=delta, L=L, thetas=schedule_angles(gap, L))


def make_schedule(gap: float, delta: float, ln_factor: float = 2, tightened: bool = False) -> AngleSchedule:
    """Build the QPD schedule for phase gap ``gap`` and one-sided error ``delta``.

    The depth is the smallest odd L with L >= ln(ln_factor/delta) / (gap/2).
    ``ln_factor=2`` gives the plain discrimination bound, ``ln_factor=4`` the
    depth used by the approximate reflection. With ``tightened=True`` the
    angles are computed from :func:`tightened_gap` so that the worst-case
    leak equals ``delta`` exactly.
    """
    if not 0.0 < gap < math.pi:
        raise ValueError(f"gap must lie in (0, pi), got {gap}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if ln_factor <= 0:
        raise ValueError("ln_factor must be positive")
    L = min_odd_depth(math.log(ln_factor / delta) / (gap / 2.0))
    angle_gap = tightened_gap(L, delta) if tightened else gap
    return AngleSchedule(gap=gap, delta=delta, L=L, thetas=schedule_angles(angle_gap, L), angle_gap=angle_gap)


def tightened_gap(L: int, delta: float) -> float:
    """Gap lambda' with 1/T_L(1/cos(lambda'/2)) = delta exactly."""
    if L < 1 or L % 2 == 0:
        raise ValueError(f"depth must be a positive odd integer, got {L}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return 2.0 * math.asin(math.tanh(math.acosh(1.0 / delta) / L))


def quasi_chebyshev(gamma: float, L: int, x: float) -> complex:
    """a^gamma_L(x) from the two-term complex recurrence.

    a_0 = 1, a_1 = x, a_{n+1} = x (1 + e^{-i theta_n}) a_n - e^{-i theta_n} a_{n-1},
    with theta_n = 2 arctan(sqrt(1 - gamma^2) tan(n pi / L)). The result
    equals T_L(x/gamma) / T_L(1/gamma).
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    if L < 1 or L % 2 == 0:
        raise ValueError(f"L must be a positive odd integer, got {L}")
    # sqrt(1 - gamma^2) = sin(gap/2) with gamma = cos(gap/2)
    gap = 2.0 * math.acos(gamma)
    phases = np.exp(-1j * schedule_angles(gap, L))
    prev, cur = 1.0 + 0j, complex(x)
    for n in range(1, L):
        prev, cur = cur, x * (1.0 + phases[n]) * cur - phases[n] * prev
    return cur
