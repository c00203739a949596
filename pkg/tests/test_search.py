import math

import numpy as np
import pytest

from qpdkit.circuit import is_unitary
from qpdkit.graphs import complete_graph, cycle_graph, gnp_graph, path_graph, spectrum
from qpdkit.search import (
    GAMMA_MAX,
    SearchConfig,
    SearchEngine,
    WindowError,
    admissible_depth,
    beta,
    in_window,
    success_lower_bound,
    recursive_amplifier,
    search,
)
from qpdkit.walks import approx_reflection


def dense_amplifier(cfg, t):
    """Depth-t amplifier as a dense matrix on ancilla t (x) ... (x) ancilla 1 (x) vertices, from Kronecker products.

    Independent of the tensor-slicing engine: each conditioned reflection is
    |0..0><0..0| (x) R + (I - |0..0><0..0|) (x) I, then the sign flip.
    """
    n = cfg.graph.n
    spec = spectrum(cfg.graph)
    O = np.diag([-1.0 if v in cfg.marked else 1.0 for v in range(n)])

    def A(i):
        d = n * 2 ** i
        if i == 0:
            return np.eye(n)
        prev = np.kron(np.eye(2), A(i - 1))  # newest ancilla is a spectator on top
        R = approx_reflection(spec, beta(i, cfg.gamma))  # on newest ancilla (x) vertices
        low = 2 ** (i - 1)
        # spread the reflection over (newest, vertices) with the older ancillas in between
        Rfull = np.zeros((d, d), dtype=complex)
        proj = np.zeros((low, low))
        proj[0, 0] = 1.0
        for a in range(2):
            for b in range(2):
                blk = R[a * n:(a + 1) * n, b * n:(b + 1) * n]
                Rfull[a * low * n:(a + 1) * low * n, b * low * n:(b + 1) * low * n] = np.kron(proj, blk)
        keep = np.kron(np.eye(2), np.kron(np.eye(low) - proj, np.eye(n)))
        cond = Rfull + keep
        flip = np.kron(np.eye(2), np.kron(2 * proj - np.eye(low), np.eye(n)))
        Ofull = np.kron(np.eye(d // n), O)
        return prev @ flip @ cond @ prev.conj().T @ Ofull @ prev

    return A(t)


def engine_layout_to_dense(psi, n, t):
    """Engine tensor [v, k1, ..., kt] -> dense index order ancilla t, ..., ancilla 1, vertex."""
    return np.transpose(psi, list(range(t, 0, -1)) + [0]).reshape(-1)


def cfg_for(g, marked, gamma=0.1, eps=None):
    eps = len(marked) / g.n if eps is None else eps
    return SearchConfig(g, frozenset(marked), eps, gamma)


def test_beta_and_window_helpers():
    assert beta(1, 0.1) == pytest.approx(9 * 0.1 / (2 * math.pi ** 3))
    assert beta(3, 0.1) == pytest.approx(beta(1, 0.1) / 9)
    assert admissible_depth(0.25) == 0
    assert admissible_depth(1 / 16) == 1
    assert admissible_depth(1 / 400) == 3
    for p in (1.0, 0.3, 0.05, 1e-3, 1e-5):
        assert in_window(admissible_depth(p), p)
    with pytest.raises(ValueError):
        admissible_depth(0.0)
    assert success_lower_bound(0.1) == pytest.approx(0.0128, abs=5e-5)


def test_config_validation():
    g = cycle_graph(8)
    with pytest.raises(ValueError):
        SearchConfig(g, frozenset(), 0.1, 0.1)
    with pytest.raises(ValueError):
        SearchConfig(g, frozenset({9}), 0.1, 0.1)
    with pytest.raises(ValueError):
        SearchConfig(g, frozenset({1}), 0.5, 0.1)
    with pytest.raises(ValueError):
        SearchConfig(g, frozenset({1}), 0.1, GAMMA_MAX)
    assert GAMMA_MAX == pytest.approx(0.8 * (0.5 - math.pi / 12))


def test_amplifier_matches_dense_oracle():
    cfg = cfg_for(cycle_graph(6), {2}, gamma=0.15)
    eng = SearchEngine(cfg)
    for t in (1, 2):
        A = dense_amplifier(cfg, t)
        assert is_unitary(A, 1e-9)
        psi = eng.amplify(t, eng.initial_state(t))
        ref = A @ engine_layout_to_dense(eng.initial_state(t), 6, t)
        np.testing.assert_allclose(engine_layout_to_dense(psi, 6, t), ref, atol=1e-10)


@pytest.mark.parametrize("t", [1, 2, 3, 4])
def test_amplifier_unitary_each_depth(t):
    cfg = cfg_for(path_graph(5), {0})
    A = SearchEngine(cfg).amplifier_matrix(t)
    assert is_unitary(A, 1e-9)


def test_amplifier_dagger_inverts():
    cfg = cfg_for(gnp_graph(10, 0.4, 2), {3, 7})
    eng = SearchEngine(cfg)
    rng = np.random.default_rng(0)
    psi = rng.standard_normal((10, 2, 2, 2)) + 1j * rng.standard_normal((10, 2, 2, 2))
    back = eng.amplify(3, eng.amplify(3, psi), dagger=True)
    np.testing.assert_allclose(back, psi, atol=1e-10)


def test_t_zero_is_uniform_state():
    cfg = cfg_for(complete_graph(16), range(4))
    res = recursive_amplifier(cfg, 0)
    assert res.success_amplitude == pytest.approx(0.5)
    np.testing.assert_allclose(np.abs(res.state.amplitudes), 0.25)


def test_k16_four_marked_bound():
    cfg = cfg_for(complete_graph(16), range(4), gamma=0.1)
    res = recursive_amplifier(cfg)
    assert res.success_amplitude >= 0.45


def test_amplifier_window_error():
    cfg = cfg_for(cycle_graph(16), {0})
    with pytest.raises(WindowError):
        recursive_amplifier(cfg, 3)


def test_amplifier_diagnostics_and_costs():
    cfg = cfg_for(complete_graph(64), {5}, gamma=0.1)
    res = recursive_amplifier(cfg)
    assert res.t == 2
    for lev in res.levels:
        assert lev.e <= lev.e_tilde + 1e-12
        assert lev.e_tilde <= lev.e_tilde_cap + 1e-12
    for lev in res.levels[:-1]:
        assert lev.angle <= math.pi / 4
    eng = SearchEngine(cfg)
    q, tm = eng.level_cost(2)
    assert (res.oracle_queries, q) == (4, 4)
    assert res.evolution_time == pytest.approx(tm)
    L1, L2 = eng.level(1)[0].L, eng.level(2)[0].L
    assert tm == pytest.approx((3 * 2 * L1 + 2 * L2) * eng.spec.base_time)


def test_search_t_max_zero_branch():
    cfg = cfg_for(complete_graph(8), {0, 1}, eps=0.25)
    tr = search(cfg)
    assert tr.t_max == 0 and tr.queries == 0
    assert tr.success_probability == pytest.approx(0.25)


def test_search_first_loop_matches_amplifier():
    cfg = cfg_for(cycle_graph(16), {0})
    tr = search(cfg)
    res = recursive_amplifier(cfg, 1)
    assert tr.loops[0].success_probability_this_loop == pytest.approx(res.success_amplitude ** 2)
    assert tr.loops[0].deviation == 0.0


def test_search_counters_and_probability_tree():
    cfg = cfg_for(cycle_graph(64), {0}, eps=1 / 64)
    tr = search(cfg)
    eng = SearchEngine(cfg)
    assert [r.oracle_queries for r in tr.loops] == [2, 5]
    assert tr.queries == 7
    assert tr.evolution_time == pytest.approx(sum(eng.level_cost(i)[1] for i in (1, 2)))
    reach = 1.0
    for r in tr.loops:
        assert r.reach_probability == pytest.approx(reach)
        reach *= 1 - r.success_probability_this_loop
    assert tr.success_probability == pytest.approx(1 - reach)
    assert tr.bound_ok


def test_search_exact_loose_epsilon():
    # epsilon well below p_M: later loops run past the admissible depth
    cfg = cfg_for(complete_graph(32), {0, 1}, eps=1 / 1000)
    tr = search(cfg)
    assert tr.t_max == 3 and tr.t_known == 1
    assert tr.success_probability > success_lower_bound(cfg.gamma)
    assert tr.deviation_t <= tr.deviation_bound


def test_search_sampling_matches_exact():
    cfg = cfg_for(complete_graph(8), {0, 1}, eps=0.125)
    exact = search(cfg)
    eng = SearchEngine(cfg)
    runs = 10000
    hits = np.zeros(len(exact.loops))
    for k in range(runs):
        tr = search(cfg, mode="sample", rng=np.random.default_rng([7, k]), engine=eng)
        if isinstance(tr.outcome, int):
            assert tr.outcome in cfg.marked
            hits[tr.loops[-1].i - 1] += 1
    for rec, h in zip(exact.loops, hits):
        p = rec.reach_probability * rec.success_probability_this_loop
        sigma = math.sqrt(p * (1 - p) / runs)
        assert abs(h / runs - p) <= 3 * sigma


def test_search_sample_is_seeded():
    cfg = SearchConfig(cycle_graph(32), frozenset({4}), 1 / 32, 0.1, seed=5)
    a, b = search(cfg, mode="sample"), search(cfg, mode="sample")
    assert a.to_dict() == b.to_dict()
    with pytest.raises(ValueError):
        search(cfg, mode="bogus")


def test_trace_serializes():
    import json

    tr = search(cfg_for(cycle_graph(16), {0}))
    d = json.loads(json.dumps(tr.to_dict()))
    assert d["config"]["marked"] == [0]
    assert len(d["loops"]) == tr.t_max


def test_shared_engine_across_epsilons_and_mismatch():
    g = cycle_graph(16)
    base = SearchConfig(g, frozenset({0}), 1 / 16, 0.1)
    eng = SearchEngine(base)
    for eps in (1 / 16, 1 / 48):
        cfg = SearchConfig(g, frozenset({0}), eps, 0.1)
        assert search(cfg, engine=eng).to_dict() == search(cfg).to_dict()
    with pytest.raises(ValueError):
        search(SearchConfig(g, frozenset({1}), 1 / 16, 0.1), engine=eng)
