import math

import numpy as np
import pytest

from qpdkit.circuit import StateVector
from qpdkit.phase_filter import (
    TwoSubspaceInstance,
    effective_gap_check,
    instance_report,
    make_instance,
    phase_estimation_budget,
    projection_schedule,
    qpd_project,
)


def test_instance_invariants():
    inst = make_instance(24, 8, 10, 0.2, seed=3)
    for P in (inst.proj_A, inst.proj_B):
        np.testing.assert_allclose(P @ P, P, atol=1e-10)
        np.testing.assert_allclose(P, P.conj().T, atol=1e-10)
    np.testing.assert_allclose(inst.U_AB @ inst.varphi, inst.varphi, atol=1e-10)
    np.testing.assert_allclose(inst.proj_B @ inst.phi_vec, inst.phi_vec, atol=1e-10)
    assert np.linalg.norm(inst.psi.amplitudes) == pytest.approx(1.0)
    assert np.vdot(inst.varphi, inst.psi.amplitudes) == pytest.approx(math.sqrt(0.2))
    assert round(np.trace(inst.proj_A).real) == 8 and round(np.trace(inst.proj_B).real) == 10


def test_instance_is_seeded():
    a, b = make_instance(16, 5, 6, 0.3, 9), make_instance(16, 5, 6, 0.3, 9)
    np.testing.assert_array_equal(a.psi.amplitudes, b.psi.amplitudes)


def test_u_ab_spectrum_structure():
    inst = make_instance(20, 7, 9, 0.1, seed=1)
    phases, V = inst.eig
    # varphi lies in the 0-eigenspace
    W = V[:, np.abs(phases) < 1e-8]
    assert np.linalg.norm(W.conj().T @ inst.varphi) == pytest.approx(1.0)
    # U_AB is a product of two real-spectrum reflections: nonzero phases pair up as +-theta
    inner = np.sort(phases[(np.abs(phases) > 1e-8) & (np.abs(phases) < math.pi - 1e-8)])
    np.testing.assert_allclose(inner, -inner[::-1], atol=1e-8)


@pytest.mark.parametrize("args", [(8, 0, 3, 0.1), (8, 8, 3, 0.1), (8, 3, 1, 0.5), (8, 3, 3, 0.0)])
def test_make_instance_rejects_infeasible(args):
    with pytest.raises(ValueError):
        make_instance(*args, seed=0)


def test_equal_projectors_give_exact_projection():
    inst0 = make_instance(12, 4, 4, 1.0, seed=2)
    P = inst0.proj_A
    inst = TwoSubspaceInstance(12, P, P, StateVector((12,), inst0.varphi), inst0.varphi,
                               np.zeros(12, complex), 1.0)
    p_out, out = qpd_project(inst, 0.2)
    assert p_out == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(out.amplitudes, inst.varphi, atol=1e-12)


def test_instance_validation_catches_bad_decomposition():
    inst = make_instance(10, 3, 4, 0.3, seed=0)
    with pytest.raises(ValueError):
        TwoSubspaceInstance(10, inst.proj_A, inst.proj_B, inst.psi, inst.varphi, 2 * inst.phi_vec, 0.3)
    with pytest.raises(ValueError):
        TwoSubspaceInstance(10, inst.proj_A + 0.1, inst.proj_B, inst.psi, inst.varphi, inst.phi_vec, 0.3)


def test_projection_bounds_random_instance():
    inst = make_instance(32, 10, 12, 0.1, seed=4)
    eps = 0.2
    p_out, out = qpd_project(inst, eps)
    assert 1 - 1e-9 <= p_out / inst.p <= 1 + 0.75 * eps ** 2
    assert np.linalg.norm(out.amplitudes - inst.varphi) <= eps
    ov = np.vdot(inst.varphi, out.amplitudes)
    assert abs(ov - math.sqrt(inst.p / p_out)) < 1e-9


def test_projection_schedule_arithmetic():
    inst = make_instance(32, 10, 12, 0.1, seed=4)
    D = inst.D_tight
    s = projection_schedule(inst, 0.2)
    assert s.gap == pytest.approx(0.2 / D)
    assert s.L >= math.log(2 * math.sqrt(2) / (math.sqrt(0.1) * 0.2)) * 2 * D / 0.2
    half = projection_schedule(inst, 0.1)
    assert 2 * s.L < half.L < 3 * s.L
    assert np.linalg.norm(qpd_project(inst, 0.1)[1].amplitudes - inst.varphi) <= 0.1


def test_slack_bounds_and_preconditions():
    inst = make_instance(16, 5, 6, 0.2, seed=8)
    p_out, out = qpd_project(inst, 0.2, p_bar=0.05, D=3 * inst.D_tight)
    assert np.linalg.norm(out.amplitudes - inst.varphi) <= 0.2
    with pytest.raises(ValueError):
        qpd_project(inst, 0.2, p_bar=0.5)
    with pytest.raises(ValueError):
        qpd_project(inst, 0.2, D=0.5 * inst.D_tight)
    with pytest.raises(ValueError):
        qpd_project(inst, 1.0)


def test_effective_gap_edges():
    inst = make_instance(24, 8, 9, 0.15, seed=5)
    norm = np.linalg.norm(inst.phi_vec)
    assert effective_gap_check(inst, 0.0) < 1e-8
    assert effective_gap_check(inst, math.pi - 1e-9) <= norm + 1e-12
    for eps in np.linspace(0, 3, 13):
        assert effective_gap_check(inst, eps) <= eps / 2 * norm + 1e-8
    with pytest.raises(ValueError):
        effective_gap_check(inst, math.pi)


def test_budget_ratio_below_one():
    inst = make_instance(32, 10, 12, 0.05, seed=6)
    rep = instance_report(inst, 0.1)
    assert rep["budget_ratio"] < 1
    assert rep["pe_budget"] == pytest.approx(phase_estimation_budget(inst, 0.1))
    assert rep["fidelity_margin"] >= 0 and rep["ratio_margin_high"] >= 0
