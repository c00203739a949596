"""Approximate projection onto the 1-eigenspace of a two-reflection product with QPD.

Instances are synthetic: two subspaces A and B of C^dim sharing a planted
unit vector, U_AB = (2 proj_A - I)(2 proj_B - I), and an input state
psi = sqrt(p) varphi + (I - proj_A) phi_vec with phi_vec in B.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.stats import unitary_group

from .chebyshev import AngleSchedule, make_schedule
from .circuit import StateVector, build_qpd, unitary_eig
from .walks import MAX_GAP

__all__ = [
    "TwoSubspaceInstance",
    "make_instance",
    "projection_schedule",
    "qpd_project",
    "effective_gap_check",
    "phase_estimation_budget",
    "instance_report",
]

MAX_RETRIES = 16
_PROJ_TOL = 1e-10


def _check_projector(P: np.ndarray, name: str) -> None:
    if np.max(np.abs(P - P.conj().T)) > _PROJ_TOL:
        raise ValueError(f"{name} is not Hermitian")
    if np.max(np.abs(P @ P - P)) > _PROJ_TOL:
        raise ValueError(f"{name} is not idempotent")


@dataclass(frozen=True)
class TwoSubspaceInstance:
    dim: int
    proj_A: np.ndarray
    proj_B: np.ndarray
    psi: StateVector
    varphi: np.ndarray
    phi_vec: np.ndarray
    p: float
    seed: int | None = None

    def __post_init__(self):
        _check_projector(self.proj_A, "proj_A")
        _check_projector(self.proj_B, "proj_B")
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"p must lie in (0, 1], got {self.p}")
        if abs(np.linalg.norm(self.varphi) - 1.0) > 1e-10:
            raise ValueError("varphi must be a unit vector")
        if np.linalg.norm(self.proj_B @ self.phi_vec - self.phi_vec) > 1e-10:
            raise ValueError("phi_vec must lie in B")
        if np.linalg.norm(self.U_AB @ self.varphi - self.varphi) > 1e-10:
            raise ValueError("U_AB does not fix varphi")
        expect = math.sqrt(self.p) * self.varphi + self.phi_perp
        if np.linalg.norm(self.psi.amplitudes - expect) > 1e-10:
            raise ValueError("psi does not match sqrt(p) varphi + (I - proj_A) phi_vec")

    @cached_property
    def U_AB(self) -> np.ndarray:
        eye = np.eye(self.dim)
        return (2 * self.proj_A - eye) @ (2 * self.proj_B - eye)

    @cached_property
    def phi_perp(self) -> np.ndarray:
        """(I - proj_A) phi_vec."""
        return self.phi_vec - self.proj_A @ self.phi_vec

    @cached_property
    def eig(self) -> tuple[np.ndarray, np.ndarray]:
        return unitary_eig(self.U_AB)

    @property
    def D_tight(self) -> float:
        return float(np.linalg.norm(self.phi_vec) / math.sqrt(self.p))


def _frame(dim: int, rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(dim, random_state=rng)


def make_instance(dim: int, dim_A: int, dim_B: int, p: float, seed: int) -> TwoSubspaceInstance:
    """Random instance with a planted shared vector varphi in A and B.

    A = span(varphi) + random complement, B likewise with an independent
    complement. phi_vec = proj_B g for Gaussian g, scaled so that psi is
    normalized. A draw whose (I - proj_A) phi_vec vanishes is retried with
    a perturbed seed.
    """
    if not (1 <= dim_A < dim and 1 <= dim_B < dim):
        raise ValueError(f"need 1 <= dim_A, dim_B < dim, got {dim_A}, {dim_B}, {dim}")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if p < 1.0 and dim_B == 1:
        raise ValueError("dim_B = 1 forces B = span(varphi), so p < 1 is infeasible")
    for attempt in range(MAX_RETRIES + 1):
        rng = np.random.default_rng(seed if attempt == 0 else [seed, attempt])
        Q = _frame(dim, rng)
        v = Q[:, 0]
        A = Q[:, :dim_A]
        W = _frame(dim, rng)[:, : dim_B - 1]
        W = W - np.outer(v, v.conj() @ W)
        Bc, _ = np.linalg.qr(W)
        B = np.column_stack([v, Bc])
        PA = A @ A.conj().T
        PB = B @ B.conj().T
        if p == 1.0:
            phi = np.zeros(dim, dtype=complex)
        else:
            g = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
            phi = PB @ g
            r = np.linalg.norm(phi - PA @ phi)
            if r < 1e-6:
                continue
            phi *= math.sqrt(1.0 - p) / r
        psi = math.sqrt(p) * v + (phi - PA @ phi)
        psi /= np.linalg.norm(psi)  # rounding only
        return TwoSubspaceInstance(dim, PA, PB, StateVector((dim,), psi), v, phi, float(p), seed)
    raise RuntimeError(f"degenerate draw after {MAX_RETRIES} retries (seed {seed})")


def _resolve_bounds(inst: TwoSubspaceInstance, p_bar, D) -> tuple[float, float]:
    if p_bar is None:
        p_bar = inst.p
    if D is None:
        D = inst.D_tight
    if not 0.0 < p_bar <= inst.p * (1 + 1e-12):
        raise ValueError(f"p_bar must lie in (0, p={inst.p}], got {p_bar}")
    if D < inst.D_tight * (1 - 1e-12):
        raise ValueError(f"D must be >= ||phi_vec||/sqrt(p) = {inst.D_tight}, got {D}")
    return float(p_bar), float(D)


def projection_schedule(inst: TwoSubspaceInstance, eps: float, p_bar: float | None = None,
                        D: float | None = None) -> AngleSchedule:
    """Gap eps/D (capped below pi) and one-sided error sqrt(p_bar/2) eps."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    p_bar, D = _resolve_bounds(inst, p_bar, D)
    gap = MAX_GAP if D == 0 else min(eps / D, MAX_GAP)
    return make_schedule(gap, math.sqrt(p_bar / 2.0) * eps, ln_factor=2)


def qpd_project(inst: TwoSubspaceInstance, eps: float, p_bar: float | None = None,
                D: float | None = None) -> tuple[float, StateVector]:
    """Run the QPD circuit of U_AB with phase gap eps/D on |0>|psi>, post-select ancilla 0.

    Returns the probability of the ancilla-0 outcome and the renormalized
    system state. ``p_bar`` and ``D`` default to the instance's exact
    values.
    """
    sched = projection_schedule(inst, eps, p_bar, D)
    C = build_qpd(inst.U_AB, sched)
    top = C[: inst.dim, : inst.dim] @ inst.psi.amplitudes
    p_out = float(np.vdot(top, top).real)
    return p_out, StateVector((inst.dim,), top / math.sqrt(p_out))


def effective_gap_check(inst: TwoSubspaceInstance, eps: float, tol: float = 1e-9) -> float:
    """Norm of (I - proj_A) phi_vec projected onto the U_AB eigenphases with |theta| <= eps."""
    if not 0.0 <= eps < math.pi:
        raise ValueError(f"eps must lie in [0, pi), got {eps}")
    phases, V = inst.eig
    W = V[:, np.abs(phases) <= eps + tol]
    return float(np.linalg.norm(W.conj().T @ inst.phi_perp))


def phase_estimation_budget(inst: TwoSubspaceInstance, eps: float) -> float:
    """||phi_vec|| / (p eps^2): the U_AB call scale of phase-estimation filtering."""
    return float(np.linalg.norm(inst.phi_vec) / (inst.p * eps * eps))


def instance_report(inst: TwoSubspaceInstance, eps: float, p_bar: float | None = None,
                    D: float | None = None) -> dict:
    """Bounds and margins for one projection run. Margins are >= 0 when the guarantee holds."""
    sched = projection_schedule(inst, eps, p_bar, D)
    p_out, out = qpd_project(inst, eps, p_bar, D)
    ratio = p_out / inst.p
    err = float(np.linalg.norm(out.amplitudes - inst.varphi))
    overlap = np.vdot(inst.varphi, out.amplitudes)
    budget = phase_estimation_budget(inst, eps) if inst.p < 1 else 0.0
    return {
        "seed": inst.seed,
        "dim": inst.dim,
        "rank_A": int(round(np.trace(inst.proj_A).real)),
        "rank_B": int(round(np.trace(inst.proj_B).real)),
        "p": inst.p,
        "eps": eps,
        "L": sched.L,
        "gap": sched.gap,
        "p_out": p_out,
        "ratio": ratio,
        "ratio_margin_low": ratio - (1.0 - 1e-9),
        "ratio_margin_high": 1.0 + 0.75 * eps * eps - ratio,
        "fidelity_error": err,
        "fidelity_margin": eps - err,
        "overlap_error": float(abs(overlap - math.sqrt(inst.p / p_out))),
        "pe_budget": budget,
        "budget_ratio": sched.L / budget if budget else None,
    }
