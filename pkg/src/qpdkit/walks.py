"""Controlled intermittent quantum walks and the approximate reflection about the uniform state.

All operators act on ancilla (x) vertex space with the ancilla most
significant, matching :mod:`qpdkit.circuit`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .chebyshev import AngleSchedule, make_schedule
from .circuit import qpd_blocks, rotation, spectral_operator
from .graphs import GraphSpectrum

__all__ = [
    "MAX_GAP",
    "CIQW",
    "ciqw",
    "reflection_schedule",
    "reflection_blocks",
    "approx_reflection",
    "reflection_steps",
    "phase_oracle",
    "standard_oracle",
]

# Complete graphs put every nonzero eigenphase at exactly pi; schedules need gap < pi.
MAX_GAP = math.pi * (1.0 - 1e-9)


@dataclass(frozen=True)
class CIQW:
    """A composed walk with its cost counters."""

    unitary: np.ndarray
    evolution_time: float
    controlled_walks: int


def ciqw(spec: GraphSpectrum, signals: Sequence[np.ndarray], times: Sequence[float]) -> CIQW:
    """Interleave control-register unitaries with controlled Laplacian walks.

    ``signals`` holds m + 1 unitaries on a k-qubit control register and
    ``times`` the m walk durations; the first signal acts first. Segment j
    evolves the vertices by exp(i l t_j Lap) when the control holds value l.
    Negative durations run the walk backwards. Evolution time sums |t_j|.
    """
    if len(signals) != len(times) + 1:
        raise ValueError("need one more signal unitary than walk segments")
    K = np.asarray(signals[0]).shape[0]
    if K & (K - 1) or K < 2:
        raise ValueError(f"control register dimension must be a power of two, got {K}")
    for U in signals:
        if np.asarray(U).shape != (K, K):
            raise ValueError("all signal unitaries must share the control dimension")
    lam = spec.eigenvalues
    levels = np.arange(K)
    B = np.broadcast_to(np.asarray(signals[0], dtype=complex), (lam.size, K, K)).copy()
    for U, t in zip(signals[1:], times):
        B = np.exp(1j * t * np.outer(lam, levels))[:, :, None] * B
        B = np.asarray(U, dtype=complex) @ B
    total = float(sum(abs(t) for t in times))
    return CIQW(spectral_operator(B, spec.eigenvectors), total, len(times))


def reflection_schedule(spec: GraphSpectrum, delta: float) -> AngleSchedule:
    """Schedule of the approximate reflection: phase gap from the spectral ratio, depth >= ln(4/delta)/(gap/2)."""
    return make_schedule(min(spec.phase_gap, MAX_GAP), delta, ln_factor=4)


def reflection_blocks(spec: GraphSpectrum, delta: float) -> tuple[AngleSchedule, np.ndarray]:
    """Per-Laplacian-eigenvector 2x2 ancilla blocks of the approximate reflection.

    The QPD circuit for the walk exp(i t0 Lap) is run, the ancilla gets a Z
    rotation by pi, and the circuit is undone.
    """
    sched = reflection_schedule(spec, delta)
    C = qpd_blocks(spec.eigenvalues * spec.base_time, sched)
    Ch = np.conj(np.swapaxes(C, -1, -2))
    return sched, rotation("z", -math.pi) @ Ch @ rotation("z", math.pi) @ C


def approx_reflection(spec: GraphSpectrum, delta: float) -> np.ndarray:
    """Dense approximate reflection about the uniform state, on ancilla (x) vertices, ancilla starting in |0>."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    _, blocks = reflection_blocks(spec, delta)
    return spectral_operator(blocks, spec.eigenvectors)


def reflection_steps(spec: GraphSpectrum, delta: float) -> tuple[list[np.ndarray], list[float]]:
    """The approximate reflection as a single-qubit CIQW step list (signals, times).

    The forward half uses L walks of +t0, the inverse half L walks of -t0,
    for a total evolution time 2 L t0.
    """
    sched = reflection_schedule(spec, delta)
    t0 = spec.base_time
    th = sched.thetas
    ry = lambda a: rotation("y", a)
    signals = [ry(th[0]) @ rotation("x", math.pi / 2)]
    signals += [ry(a) for a in th[1:]]
    signals.append(rotation("x", math.pi / 2) @ rotation("z", math.pi) @ rotation("x", -math.pi / 2))
    signals += [ry(-a) for a in th[:0:-1]]
    signals.append(rotation("z", -math.pi) @ rotation("x", -math.pi / 2) @ ry(-th[0]))
    times = [t0] * sched.L + [-t0] * sched.L
    return signals, times


def phase_oracle(n: int, marked: Iterable[int]) -> np.ndarray:
    """Diagonal sign flip on marked vertices."""
    d = np.ones(n)
    idx = list(marked)
    if any(not 0 <= v < n for v in idx):
        raise ValueError("marked vertex out of range")
    d[idx] = -1.0
    return np.diag(d)


def standard_oracle(n: int, marked: Iterable[int]) -> np.ndarray:
    """|b>|v> -> |b xor marked(v)>|v> on a check qubit (most significant) and the vertex register."""
    f = np.zeros(n, dtype=bool)
    idx = list(marked)
    if any(not 0 <= v < n for v in idx):
        raise ValueError("marked vertex out of range")
    f[idx] = True
    O = np.zeros((2 * n, 2 * n))
    for b in (0, 1):
        for v in range(n):
            O[(b ^ int(f[v])) * n + v, b * n + v] = 1.0
    return O
