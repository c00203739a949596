"""Recursive amplitude amplification with approximate reflections and the CIQW search process.

The joint state is stored as a tensor of shape ``(n, 2, ..., 2)``: axis 0
is the vertex register, axis i the one-qubit ancilla owned by recursion
level i. Level i's approximate reflection acts on that ancilla and the
vertices.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable

import numpy as np

from .circuit import StateVector
from .graphs import Graph, GraphSpectrum, spectrum
from .walks import reflection_blocks

__all__ = [
    "GAMMA_MAX",
    "SearchConfig",
    "SearchEngine",
    "AmplifierResult",
    "LevelDiagnostics",
    "LoopRecord",
    "SearchTrace",
    "WindowError",
    "beta",
    "admissible_depth",
    "in_window",
    "success_lower_bound",
    "recursive_amplifier",
    "search",
]

GAMMA_MAX = 0.8 * (0.5 - math.pi / 12)
_WINDOW_TOL = 1e-12


class WindowError(ValueError):
    """Recursion depth outside 3^t arcsin(sqrt(p)) in [pi/6, pi/2]."""


def beta(i: int, gamma: float) -> float:
    """Reflection error budget 9 gamma / (2 pi^3 i^2) at recursion level i."""
    return 9.0 * gamma / (2.0 * math.pi ** 3 * i * i)


def admissible_depth(p: float) -> int:
    """Smallest t >= 0 with 3^t arcsin(sqrt(p)) >= pi/6; it then also lies below pi/2."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"probability must lie in (0, 1], got {p}")
    phi0 = math.asin(math.sqrt(p))
    t = 0
    while 3 ** t * phi0 < math.pi / 6 - _WINDOW_TOL:
        t += 1
    return t


def in_window(t: int, p: float) -> bool:
    a = 3 ** t * math.asin(math.sqrt(p))
    return math.pi / 6 - _WINDOW_TOL <= a <= math.pi / 2 + _WINDOW_TOL


def success_lower_bound(gamma: float) -> float:
    """Guaranteed success probability (1/2 - pi/12 - 5 gamma/4)^2 of the search process."""
    return (0.5 - math.pi / 12 - 1.25 * gamma) ** 2


@dataclass(frozen=True)
class SearchConfig:
    graph: Graph
    marked: frozenset
    epsilon: float
    gamma: float
    seed: int = 0

    def __post_init__(self):
        marked = frozenset(int(v) for v in self.marked)
        object.__setattr__(self, "marked", marked)
        if not marked:
            raise ValueError("marked set must be nonempty")
        if any(not 0 <= v < self.graph.n for v in marked):
            raise ValueError("marked vertex out of range")
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.epsilon > self.p_marked + 1e-12:
            raise ValueError(f"epsilon {self.epsilon} exceeds marked fraction {self.p_marked}")
        if not 0.0 < self.gamma < GAMMA_MAX:
            raise ValueError(f"gamma must lie in (0, {GAMMA_MAX:.4f}), got {self.gamma}")

    @property
    def p_marked(self) -> float:
        return len(self.marked) / self.graph.n

    @property
    def t_max(self) -> int:
        return admissible_depth(self.epsilon)

    def echo(self) -> dict:
        return {
            "n": self.graph.n,
            "edges": len(self.graph.edges),
            "marked": sorted(self.marked),
            "epsilon": self.epsilon,
            "gamma": self.gamma,
            "seed": self.seed,
        }


@dataclass
class _Cost:
    oracle_queries: int = 0
    reflections: int = 0
    evolution_time: float = 0.0


def _real_matmul(M: np.ndarray, X: np.ndarray) -> np.ndarray:
    """M @ X for real M and complex X without promoting M to complex."""
    return M @ X.real + 1j * (M @ X.imag)


class SearchEngine:
    """Caches the spectrum and per-level reflections for one configuration."""

    def __init__(self, cfg: SearchConfig, spec: GraphSpectrum | None = None):
        self.cfg = cfg
        self.spec = spec if spec is not None else spectrum(cfg.graph)
        self.n = cfg.graph.n
        self.mask = np.zeros(self.n, dtype=bool)
        self.mask[sorted(cfg.marked)] = True
        self._levels: dict[int, tuple] = {}
        self.cost = _Cost()

    # --- building blocks -------------------------------------------------

    def level(self, i: int):
        """(schedule, blocks, blocks^dagger) of the level-i reflection."""
        if i not in self._levels:
            sched, B = reflection_blocks(self.spec, beta(i, self.cfg.gamma))
            self._levels[i] = (sched, B, np.conj(np.swapaxes(B, -1, -2)))
        return self._levels[i]

    def reflection_time(self, i: int) -> float:
        """Evolution time 2 L t0 of one level-i reflection."""
        return 2 * self.level(i)[0].L * self.spec.base_time

    def initial_state(self, ancillas: int) -> np.ndarray:
        psi = np.zeros((self.n,) + (2,) * ancillas, dtype=complex)
        psi[(slice(None),) + (0,) * ancillas] = self.spec.uniform
        return psi

    def oracle(self, psi: np.ndarray) -> np.ndarray:
        """Reflection about the unmarked subspace, counted as one query."""
        self.cost.oracle_queries += 1
        out = psi.copy()
        out[self.mask] *= -1.0
        return out

    def marked_weight(self, psi: np.ndarray) -> float:
        """Probability that the vertex register is marked."""
        return float(np.sum(np.abs(psi[self.mask]) ** 2))

    def step4(self, i: int, psi: np.ndarray, dagger: bool = False) -> np.ndarray:
        """Level-i reflection where ancillas 1..i-1 are all 0, then a sign flip everywhere else."""
        _, B, Bh = self.level(i)
        V = self.spec.eigenvectors
        self.cost.reflections += 1
        self.cost.evolution_time += self.reflection_time(i)
        idx = (slice(None),) + (0,) * (i - 1)
        sub = psi[idx]  # axes: vertex, ancilla i, ancilla i+1, ...
        rest = sub.shape[2:]
        flat = sub.reshape(self.n, -1)
        hat = _real_matmul(V.T, flat).reshape(self.n, 2, -1)
        hat = np.matmul(Bh if dagger else B, hat)
        new = _real_matmul(V, hat.reshape(self.n, -1)).reshape((self.n, 2) + rest)
        out = -psi
        out[idx] = new
        return out

    def amplify(self, i: int, psi: np.ndarray, dagger: bool = False) -> np.ndarray:
        """Apply the level-i amplifier (or its inverse); ancillas above i are spectators."""
        if i == 0:
            return psi
        if not dagger:
            psi = self.amplify(i - 1, psi)
            psi = self.oracle(psi)
            psi = self.amplify(i - 1, psi, dagger=True)
            psi = self.step4(i, psi)
            return self.amplify(i - 1, psi)
        psi = self.amplify(i - 1, psi, dagger=True)
        psi = self.step4(i, psi, dagger=True)
        psi = self.amplify(i - 1, psi)
        psi = self.oracle(psi)
        return self.amplify(i - 1, psi, dagger=True)

    def amplifier_matrix(self, i: int) -> np.ndarray:
        """Dense level-i amplifier on vertices (x) ancillas 1..i (vertex most significant), built column by column."""
        dim = self.n * 2 ** i
        cols = []
        for k in range(dim):
            e = np.zeros(dim, dtype=complex)
            e[k] = 1.0
            cols.append(self.amplify(i, e.reshape((self.n,) + (2,) * i)).reshape(-1))
        return np.column_stack(cols)

    def level_cost(self, i: int) -> tuple[int, float]:
        """Oracle calls and evolution time of one level-i amplifier: three level i-1 calls, one reflection, one query."""
        q, t = 0, 0.0
        for k in range(1, i + 1):
            q = 3 * q + 1
            t = 3 * t + self.reflection_time(k)
        return q, t


@dataclass
class LevelDiagnostics:
    i: int
    ideal_angle: float  # bar(varphi)_i = 3^i arcsin(sqrt(p_M))
    success_amplitude: float  # sin(varphi_i)
    e: float
    e_tilde: float
    e_tilde_cap: float  # gamma bar(varphi)_i / pi
    angle: float  # varphi_i


@dataclass
class AmplifierResult:
    state: StateVector
    t: int
    success_amplitude: float
    levels: list[LevelDiagnostics]
    oracle_queries: int
    evolution_time: float

    @property
    def e_t(self) -> float:
        return self.levels[-1].e


def _engine_for(cfg: SearchConfig, engine: SearchEngine | None) -> SearchEngine:
    # engines do not depend on epsilon, so one may serve several configurations
    if engine is None:
        return SearchEngine(cfg)
    c = engine.cfg
    if c.graph != cfg.graph or c.marked != cfg.marked or c.gamma != cfg.gamma:
        raise ValueError("engine does not match this configuration")
    return engine


def recursive_amplifier(cfg: SearchConfig, t: int | None = None, engine: SearchEngine | None = None) -> AmplifierResult:
    """Depth-t amplifier applied to the uniform state, with per-level deviation diagnostics.

    ``t`` defaults to the admissible depth of the true marked fraction.
    Reported costs cover this one application.
    """
    p = cfg.p_marked
    if t is None:
        t = admissible_depth(p)
    if t < 0 or not in_window(t, p):
        raise WindowError(f"3^{t} arcsin(sqrt({p:.6g})) is outside [pi/6, pi/2]")
    eng = _engine_for(cfg, engine)
    phi0 = math.asin(math.sqrt(p))
    levels = []
    e_tilde = 0.0
    final = None
    for i in range(t + 1):
        if i > 0:
            e_tilde = 4 * beta(i, cfg.gamma) * 3 ** (i - 1) * phi0 + 3 * e_tilde
        before = asdict(eng.cost)
        psi = eng.amplify(i, eng.initial_state(t))
        amp = math.sqrt(eng.marked_weight(psi))
        ideal = 3 ** i * phi0
        levels.append(LevelDiagnostics(
            i=i, ideal_angle=ideal, success_amplitude=amp,
            e=abs(amp - math.sin(ideal)), e_tilde=e_tilde,
            e_tilde_cap=cfg.gamma * ideal / math.pi, angle=math.asin(min(amp, 1.0)),
        ))
        if i == t:
            final = (psi, eng.cost.oracle_queries - before["oracle_queries"],
                     eng.cost.evolution_time - before["evolution_time"])
    psi, q, tm = final
    state = StateVector((eng.n,) + (2,) * t, psi.reshape(-1))
    return AmplifierResult(state, t, levels[-1].success_amplitude, levels, q, tm)


@dataclass
class LoopRecord:
    i: int
    reach_probability: float
    success_probability_this_loop: float  # conditioned on reaching the loop
    cumulative_success: float
    oracle_queries: int
    evolution_time_seconds: float
    deviation: float  # delta_i = || psi_i - phi_i ||
    outcome: str = "pending"


@dataclass
class SearchTrace:
    config: dict
    mode: str
    t_max: int
    t_known: int
    loops: list[LoopRecord]
    outcome: object  # found vertex, "exhausted", or None in exact mode
    queries: int
    evolution_time: float
    expected_queries: float
    expected_evolution_time: float
    success_probability: float
    success_bound: float
    deviation_t: float | None
    deviation_bound: float

    def to_dict(self) -> dict:
        out = asdict(self)
        out["loops"] = [asdict(r) for r in self.loops]
        return out

    @property
    def bound_ok(self) -> bool:
        ok = self.success_probability > self.success_bound
        if self.deviation_t is not None:
            ok = ok and self.deviation_t <= self.deviation_bound
        return ok


def search(
    cfg: SearchConfig,
    mode: str = "exact",
    rng: np.random.Generator | None = None,
    engine: SearchEngine | None = None,
) -> SearchTrace:
    """Run the search process with exact branch accounting or sampled measurements.

    Each loop i applies the level-i amplifier to the joint state, checks for a marked vertex and,
    on failure, keeps the renormalized unmarked branch. ``exact`` follows
    the single failure branch to the end and records the success
    probability of every loop; ``sample`` draws outcomes from ``rng``
    (seeded from ``cfg.seed`` when omitted) and stops at the first success.
    """
    if mode not in ("exact", "sample"):
        raise ValueError(f"unknown mode {mode!r}")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    eng = _engine_for(cfg, engine)
    T = cfg.t_max
    t_known = admissible_depth(cfg.p_marked)
    if not in_window(T, cfg.epsilon):
        raise WindowError(f"no admissible t_max for epsilon={cfg.epsilon}")
    psi = eng.initial_state(T)
    loops: list[LoopRecord] = []
    outcome = None
    deviation_t = None
    worst_q, worst_t = 0, 0.0

    def draw_vertex(state):
        w = np.sum(np.abs(state.reshape(eng.n, -1)) ** 2, axis=1)
        return int(rng.choice(eng.n, p=w / w.sum()))

    if T == 0:
        p = eng.marked_weight(psi)
        loops.append(LoopRecord(0, 1.0, p, p, 0, 0.0, 0.0))
        if mode == "sample":
            v = draw_vertex(psi)
            outcome = v if v in cfg.marked else "exhausted"
            loops[0].outcome = "success" if v in cfg.marked else "failure"
    else:
        reach, cumulative = 1.0, 0.0
        exp_q, exp_t = 0.0, 0.0
        for i in range(1, T + 1):
            q, tm = eng.level_cost(i)
            q += 1  # the marked-vertex measurement
            psi = eng.amplify(i, psi)
            ideal = eng.amplify(i, eng.initial_state(T))
            dev = float(np.linalg.norm(psi - ideal))
            if i == t_known:
                deviation_t = dev
            p = eng.marked_weight(psi)
            cumulative += reach * p
            exp_q += reach * q
            exp_t += reach * tm
            worst_q += q
            worst_t += tm
            rec = LoopRecord(i, reach, p, cumulative, q, tm, dev)
            loops.append(rec)
            if mode == "sample":
                if rng.random() < p:
                    good = psi.copy()
                    good[~eng.mask] = 0.0
                    outcome = draw_vertex(good)
                    rec.outcome = "success"
                    break
                rec.outcome = "failure"
            reach *= 1.0 - p
            if p >= 1.0 - 1e-15:
                break
            psi[eng.mask] = 0.0
            psi /= math.sqrt(1.0 - p)
        if mode == "sample" and outcome is None:
            outcome = "exhausted"
    if T == 0:
        exp_q, exp_t = 0.0, 0.0
    if mode == "sample":
        used = loops  # loops actually executed
        worst_q = sum(r.oracle_queries for r in used)
        worst_t = sum(r.evolution_time_seconds for r in used)
    return SearchTrace(
        config=cfg.echo(),
        mode=mode,
        t_max=T,
        t_known=t_known,
        loops=loops,
        outcome=outcome,
        queries=worst_q,
        evolution_time=worst_t,
        expected_queries=exp_q,
        expected_evolution_time=exp_t,
        success_probability=loops[-1].cumulative_success,
        success_bound=success_lower_bound(cfg.gamma),
        deviation_t=deviation_t,
        deviation_bound=math.pi / 12 + 0.75 * cfg.gamma,
    )


def marked_from(values: Iterable[int]) -> frozenset:
    return frozenset(int(v) for v in values)
