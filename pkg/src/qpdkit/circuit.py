"""Simulation of the quantum phase discrimination (QPD) circuit.

Register convention: the ancilla qubit is the most significant tensor
factor, so a basis index is ``ancilla * dim + system``. Controlled-U is
``blockdiag(I, U)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import schur

from .chebyshev import AngleSchedule, chebyshev_ratio

__all__ = [
    "StateVector",
    "rotation",
    "hadamard",
    "is_unitary",
    "canonical_phase",
    "unitary_eig",
    "qpd_blocks",
    "ancilla_response",
    "closed_form_response",
    "amplitude_sequence",
    "build_qpd",
    "spectral_operator",
    "max_leak",
]

UNITARY_TOL = 1e-10


@dataclass
class StateVector:
    """Normalized amplitudes over a tensor-factored register layout.

    ``dims`` lists register dimensions, most significant first.
    """

    dims: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if self.amplitudes.size != int(np.prod(self.dims)):
            raise ValueError(f"{self.amplitudes.size} amplitudes do not fit dims {self.dims}")
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state is not normalized (norm {norm!r})")

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)


def rotation(axis: str, theta: float) -> np.ndarray:
    """Single-qubit rotation about ``axis`` by ``theta``."""
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    if axis == "x":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if axis == "y":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if axis == "z":
        return np.array([[np.exp(-0.5j * theta), 0.0], [0.0, np.exp(0.5j * theta)]], dtype=complex)
    raise ValueError(f"unknown rotation axis {axis!r}")


def hadamard() -> np.ndarray:
    return np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)


def is_unitary(M: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    return float(np.max(np.abs(M @ M.conj().T - np.eye(M.shape[0])))) <= tol


def canonical_phase(phi):
    """Map angles to (-pi, pi]."""
    out = np.pi - np.mod(np.pi - np.asarray(phi, dtype=float), 2.0 * np.pi)
    if np.ndim(phi) == 0:
        return float(out)
    return out


def unitary_eig(U: np.ndarray, tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Eigenphases in (-pi, pi] and an orthonormal eigenbasis of a unitary.

    A complex Schur form of a normal matrix is diagonal, and its Schur
    vectors are orthonormal even inside degenerate clusters.
    """
    U = np.asarray(U, dtype=complex)
    T, Z = schur(U, output="complex")
    vals = np.diag(T)
    phases = canonical_phase(np.angle(vals))
    resid = np.linalg.norm(U @ Z - Z * np.exp(1j * phases), axis=0)
    if resid.size and resid.max() > tol:
        raise np.linalg.LinAlgError(f"eigenpair residual {resid.max():.3e} exceeds {tol}")
    return phases, Z


def qpd_blocks(phases, schedule: AngleSchedule) -> np.ndarray:
    """2x2 ancilla unitaries of the QPD circuit on eigenstates with the given eigenphases.

    Returns an array of shape ``phases.shape + (2, 2)``. Entry ``[..., 0, 0]``
    is <0|w>, including the global phase e^{i L phi / 2}.
    """
    phi = np.asarray(phases, dtype=float)
    kick = np.exp(1j * phi)[..., None]
    rx = rotation("x", math.pi / 2)
    # rows of the running product, kept contiguous; this loop dominates deep schedules
    top = np.broadcast_to(rx[0], phi.shape + (2,)).copy()
    bot = np.broadcast_to(rx[1], phi.shape + (2,)).copy()
    for theta in schedule.thetas:
        c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
        top, bot = c * top - s * bot, (s * top + c * bot) * kick
    return rotation("x", -math.pi / 2) @ np.stack([top, bot], axis=-2)


def ancilla_response(phi, schedule: AngleSchedule):
    """<0|w> of the single-eigenstate reduction for eigenphase ``phi``."""
    out = qpd_blocks(canonical_phase(phi), schedule)[..., 0, 0]
    if np.ndim(phi) == 0:
        return complex(out)
    return out


def closed_form_response(phi, schedule: AngleSchedule):
    """|T_L(cos(phi/2)/cos(lambda/2)) / T_L(1/cos(lambda/2))|."""
    g = math.cos(schedule.angle_gap / 2.0)
    x = np.cos(canonical_phase(phi) / 2.0) / g
    return np.abs(chebyshev_ratio(schedule.L, x, 1.0 / g))


def amplitude_sequence(phi: float, schedule: AngleSchedule) -> np.ndarray:
    """a_0..a_L from the partial products A(theta_{n-1}) ... A(theta_0)|0>.

    A(theta) = [[cos(phi/2), -e^{-i theta} sin(phi/2)], [sin(phi/2), e^{-i theta} cos(phi/2)]]
    is the rotated-frame step of the circuit with the R_z phase split off.
    """
    c, s = math.cos(phi / 2.0), math.sin(phi / 2.0)
    v = np.array([1.0 + 0j, 0j])
    out = [v[0]]
    for theta in schedule.thetas:
        e = np.exp(-1j * theta)
        v = np.array([c * v[0] - e * s * v[1], s * v[0] + e * c * v[1]])
        out.append(v[0])
    return np.array(out)


def spectral_operator(blocks: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Assemble sum_j B_j (x) v_j v_j^dagger on ancilla (x) system."""
    k = blocks.shape[-1]
    d = V.shape[0]
    out = np.empty((k * d, k * d), dtype=complex)
    Vh = V.conj().T
    for a in range(k):
        for b in range(k):
            out[a * d:(a + 1) * d, b * d:(b + 1) * d] = (V * blocks[:, a, b]) @ Vh
    return out


def build_qpd(U: np.ndarray, schedule: AngleSchedule, method: str = "spectral") -> np.ndarray:
    """Full (2 dim) x (2 dim) unitary of the QPD circuit.

    ``method="dense"`` multiplies the gate sequence out literally:
    R_x(pi/2), then L rounds of [R_y(theta_n); controlled-U], then
    R_x(-pi/2). ``method="spectral"`` diagonalizes U once and assembles
    the per-eigenphase 2x2 blocks; the two agree to rounding.
    """
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError(f"U must be square, got shape {U.shape}")
    if not is_unitary(U, 1e-8):
        raise ValueError("U is not unitary")
    d = U.shape[0]
    if method == "spectral":
        phases, V = unitary_eig(U)
        return spectral_operator(qpd_blocks(phases, schedule), V)
    if method != "dense":
        raise ValueError(f"unknown method {method!r}")
    rx = rotation("x", math.pi / 2)
    eye = np.eye(d, dtype=complex)
    top = np.hstack([rx[0, 0] * eye, rx[0, 1] * eye])
    bot = np.hstack([rx[1, 0] * eye, rx[1, 1] * eye])
    for theta in schedule.thetas:
        c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
        top, bot = c * top - s * bot, U @ (s * top + c * bot)
    rxd = rotation("x", -math.pi / 2)
    return np.vstack([rxd[0, 0] * top + rxd[0, 1] * bot, rxd[1, 0] * top + rxd[1, 1] * bot])


def max_leak(schedule: AngleSchedule) -> float:
    """Largest |<0|w>| over |phi| in [lambda, pi]: 1/T_L(1/cos(lambda/2))."""
    return float(chebyshev_ratio(schedule.L, 1.0, 1.0 / math.cos(schedule.angle_gap / 2.0)))


def apply_on_axes(op: np.ndarray, state: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Apply ``op`` (matrix acting on the listed tensor axes, first most significant) to ``state``."""
    dims = [state.shape[a] for a in axes]
    opt = op.reshape(dims + dims)
    k = len(axes)
    out = np.tensordot(opt, state, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))
