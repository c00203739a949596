import math

import numpy as np
import pytest
from scipy.linalg import expm

from qpdkit.circuit import build_qpd, is_unitary, rotation
from qpdkit.graphs import complete_graph, cycle_graph, gnp_graph, path_graph, spectrum
from qpdkit.walks import (
    MAX_GAP,
    approx_reflection,
    ciqw,
    phase_oracle,
    reflection_schedule,
    reflection_steps,
    standard_oracle,
)

GRAPHS = [complete_graph(8), cycle_graph(12), path_graph(10), gnp_graph(20, 0.3, 1)]


def literal_reflection(g, delta):
    """R_z(-pi) C^dagger R_z(pi) C with C multiplied out from expm of the Laplacian."""
    spec = spectrum(g)
    sched = reflection_schedule(spec, delta)
    U = expm(1j * g.laplacian() * spec.base_time)
    C = build_qpd(U, sched, method="dense")
    Z = lambda a: np.kron(rotation("z", a), np.eye(g.n))
    return Z(-math.pi) @ C.conj().T @ Z(math.pi) @ C


@pytest.mark.parametrize("g", GRAPHS, ids=["K8", "C12", "P10", "G20"])
@pytest.mark.parametrize("delta", [0.2, 0.01])
def test_reflection_one_sided(g, delta):
    spec = spectrum(g)
    R = approx_reflection(spec, delta)
    assert is_unitary(R, 1e-10)
    n = g.n
    u = np.concatenate([spec.uniform, np.zeros(n)])
    assert np.linalg.norm(R @ u - u) < 1e-10
    for j in range(1, n):
        v = np.concatenate([spec.eigenvectors[:, j], np.zeros(n)])
        assert np.linalg.norm(R @ v + v) <= delta


@pytest.mark.parametrize("g", GRAPHS[:3], ids=["K8", "C12", "P10"])
def test_reflection_matches_literal_gates(g):
    R = approx_reflection(spectrum(g), 0.05)
    np.testing.assert_allclose(R, literal_reflection(g, 0.05), atol=1e-10)


def test_reflection_depth_rule():
    spec = spectrum(cycle_graph(12))
    s = reflection_schedule(spec, 0.05)
    lam = math.pi * spec.gap / spec.top
    assert s.gap == pytest.approx(lam)
    assert s.L % 2 == 1 and s.L >= math.log(4 / 0.05) / (lam / 2)
    # complete graphs have gap exactly pi; the schedule stays just below it
    assert reflection_schedule(spectrum(complete_graph(5)), 0.1).gap == MAX_GAP


def test_reflection_domain():
    with pytest.raises(ValueError):
        approx_reflection(spectrum(cycle_graph(5)), 1.0)


def test_ciqw_reproduces_reflection_and_counts_time():
    spec = spectrum(gnp_graph(14, 0.35, 2))
    signals, times = reflection_steps(spec, 0.05)
    W = ciqw(spec, signals, times)
    np.testing.assert_allclose(W.unitary, approx_reflection(spec, 0.05), atol=1e-10)
    L = reflection_schedule(spec, 0.05).L
    assert W.controlled_walks == 2 * L
    assert W.evolution_time == pytest.approx(2 * L * spec.base_time)


def test_ciqw_identity_and_control_off():
    g = cycle_graph(6)
    spec = spectrum(g)
    I2 = np.eye(2)
    W = ciqw(spec, [I2, I2], [0.8]).unitary
    np.testing.assert_allclose(W[:6, :6], np.eye(6), atol=1e-12)
    np.testing.assert_allclose(W[6:, 6:], expm(1j * g.laplacian() * 0.8), atol=1e-12)


def test_ciqw_two_qubit_control():
    g = path_graph(4)
    spec = spectrum(g)
    X = np.kron(np.eye(2), np.array([[0, 1], [1, 0]]))
    W = ciqw(spec, [np.eye(4), X], [0.5]).unitary
    d = g.n
    # control value 3 applies the walk three times before the X on the low qubit
    np.testing.assert_allclose(W[2 * d:3 * d, 3 * d:4 * d], expm(1j * g.laplacian() * 1.5), atol=1e-12)


def test_ciqw_errors():
    spec = spectrum(cycle_graph(4))
    with pytest.raises(ValueError):
        ciqw(spec, [np.eye(2)], [0.1])
    with pytest.raises(ValueError):
        ciqw(spec, [np.eye(3), np.eye(3)], [0.1])
    with pytest.raises(ValueError):
        ciqw(spec, [np.eye(2), np.eye(4)], [0.1])


def test_phase_oracle():
    np.testing.assert_array_equal(phase_oracle(4, []), np.eye(4))
    np.testing.assert_array_equal(phase_oracle(4, range(4)), -np.eye(4))
    np.testing.assert_array_equal(phase_oracle(4, [0]), np.diag([-1.0, 1, 1, 1]))
    O = phase_oracle(6, [1, 4])
    np.testing.assert_array_equal(O @ O, np.eye(6))
    with pytest.raises(ValueError):
        phase_oracle(3, [3])


def test_standard_oracle_kickback_gives_phase_oracle():
    n, marked = 5, [2, 3]
    O = standard_oracle(n, marked)
    minus = np.array([1.0, -1.0]) / math.sqrt(2)
    for v in range(n):
        e = np.zeros(n)
        e[v] = 1
        out = O @ np.kron(minus, e)
        sign = -1 if v in marked else 1
        np.testing.assert_allclose(out, sign * np.kron(minus, e))
