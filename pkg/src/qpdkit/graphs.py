"""Simple undirected graphs with their Laplacian spectra and classical hitting times."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

__all__ = [
    "Graph",
    "GraphSpectrum",
    "GraphFormatError",
    "cycle_graph",
    "complete_graph",
    "path_graph",
    "gnp_graph",
    "graph_from_spec",
    "parse_graph",
    "read_graph",
    "format_graph",
    "spectrum",
    "ctqw",
    "transition_matrix",
    "hitting_time",
    "cycle_hitting_time",
    "cycle_hitting_time_uniform",
    "monte_carlo_hitting_time",
    "cycle_gap",
]


class GraphFormatError(ValueError):
    """Malformed graph text, reported with its 1-based line number."""


@dataclass(frozen=True)
class Graph:
    """Simple connected undirected graph on vertices 0..n-1."""

    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graph needs at least one vertex")
        norm = set()
        for e in self.edges:
            u, v = e
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={self.n}")
            norm.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(norm))
        if not self.is_connected():
            raise ValueError("graph is not connected")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        edges = [tuple(int(x) for x in e) for e in edges]
        seen = set()
        for u, v in edges:
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
        return cls(n, frozenset(edges))

    def neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in sorted(self.edges):
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def is_connected(self) -> bool:
        adj = self.neighbors()
        seen = {0}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return len(seen) == self.n

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        for u, v in self.edges:
            A[u, v] = A[v, u] = 1.0
        return A

    def degrees(self) -> np.ndarray:
        return self.adjacency().sum(axis=1)

    def laplacian(self) -> np.ndarray:
        A = self.adjacency()
        return np.diag(A.sum(axis=1)) - A


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    return Graph(n, frozenset((i, (i + 1) % n) for i in range(n)))


def complete_graph(n: int) -> Graph:
    if n < 2:
        raise ValueError("complete graph needs n >= 2")
    return Graph(n, frozenset((i, j) for i in range(n) for j in range(i + 1, n)))


def path_graph(n: int) -> Graph:
    if n < 2:
        raise ValueError("path needs n >= 2")
    return Graph(n, frozenset((i, i + 1) for i in range(n - 1)))


def gnp_graph(n: int, p: float, seed: int, max_tries: int = 1000) -> Graph:
    """Erdos-Renyi G(n, p) sample conditioned on connectivity (rejection sampling)."""
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    for _ in range(max_tries):
        keep = rng.random(iu.size) < p
        try:
            return Graph(n, frozenset(zip(iu[keep].tolist(), ju[keep].tolist())))
        except ValueError:
            continue
    raise ValueError(f"no connected G({n}, {p}) sample in {max_tries} draws")


def graph_from_spec(spec: str) -> Graph:
    """Built-in generators ``cycle:n``, ``complete:n``, ``path:n``, ``gnp:n:p:seed``, else a file path."""
    parts = spec.split(":")
    kind = parts[0]
    try:
        if kind == "cycle" and len(parts) == 2:
            return cycle_graph(int(parts[1]))
        if kind == "complete" and len(parts) == 2:
            return complete_graph(int(parts[1]))
        if kind == "path" and len(parts) == 2:
            return path_graph(int(parts[1]))
        if kind == "gnp" and len(parts) == 4:
            return gnp_graph(int(parts[1]), float(parts[2]), int(parts[3]))
    except ValueError as exc:
        raise GraphFormatError(f"bad generator spec {spec!r}: {exc}") from exc
    if kind in ("cycle", "complete", "path", "gnp"):
        raise GraphFormatError(f"bad generator spec {spec!r}")
    return read_graph(spec)


def parse_graph(text: str) -> Graph:
    """Parse ``n m`` followed by m lines ``u v`` with 0 <= u < v < n."""
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise GraphFormatError("line 1: empty graph file")
    lineno, head = lines[0]
    try:
        n, m = (int(x) for x in head.split())
    except ValueError:
        raise GraphFormatError(f"line {lineno}: expected 'n m', got {head!r}") from None
    if n < 1 or m < 0:
        raise GraphFormatError(f"line {lineno}: invalid header {head!r}")
    body = lines[1:]
    if len(body) != m:
        raise GraphFormatError(f"line {lineno}: header declares {m} edges, found {len(body)}")
    seen = set()
    for lineno, ln in body:
        try:
            u, v = (int(x) for x in ln.split())
        except ValueError:
            raise GraphFormatError(f"line {lineno}: expected 'u v', got {ln!r}") from None
        if u == v:
            raise GraphFormatError(f"line {lineno}: self-loop at vertex {u}")
        if not (0 <= u < v < n):
            raise GraphFormatError(f"line {lineno}: edge ({u}, {v}) violates 0 <= u < v < {n}")
        if (u, v) in seen:
            raise GraphFormatError(f"line {lineno}: duplicate edge ({u}, {v})")
        seen.add((u, v))
    try:
        return Graph(n, frozenset(seen))
    except ValueError as exc:
        raise GraphFormatError(str(exc)) from exc


def read_graph(path) -> Graph:
    p = Path(path)
    if not p.is_file():
        raise GraphFormatError(f"no such graph file: {path}")
    return parse_graph(p.read_text())


def format_graph(g: Graph) -> str:
    edges = sorted(g.edges)
    return "\n".join([f"{g.n} {len(edges)}"] + [f"{u} {v}" for u, v in edges]) + "\n"


@dataclass(frozen=True)
class GraphSpectrum:
    """Laplacian L = D - A with its ascending eigenvalues and orthonormal eigenvectors (columns)."""

    graph: Graph
    laplacian: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def gap(self) -> float:
        """Second-smallest Laplacian eigenvalue lambda_2."""
        return float(self.eigenvalues[1])

    @property
    def top(self) -> float:
        """Largest Laplacian eigenvalue lambda_N."""
        return float(self.eigenvalues[-1])

    @property
    def uniform(self) -> np.ndarray:
        """|pi>, the uniform superposition over vertices."""
        return np.full(self.n, 1.0 / math.sqrt(self.n))

    @property
    def base_time(self) -> float:
        """t0 = pi / lambda_N, which maps the top eigenvalue to eigenphase pi."""
        return math.pi / self.top

    @property
    def phase_gap(self) -> float:
        """Eigenphase gap pi lambda_2 / lambda_N of e^{i L t0}."""
        return math.pi * self.gap / self.top


def spectrum(g: Graph) -> GraphSpectrum:
    """Full symmetric eigendecomposition of the Laplacian (LAPACK ``eigh``).

    The zero mode is replaced by the exact uniform vector and the rest
    re-orthogonalized against it, so |pi> is bit-exact in downstream use.
    """
    if g.n < 2:
        raise ValueError("spectrum needs at least two vertices")
    Lap = g.laplacian()
    vals, vecs = np.linalg.eigh(Lap)
    vals[0] = 0.0
    u = np.full(g.n, 1.0 / math.sqrt(g.n))
    rest = vecs[:, 1:] - np.outer(u, u @ vecs[:, 1:])
    rest, _ = np.linalg.qr(rest)
    vecs = np.column_stack([u, rest])
    # QR keeps the span; rotate back so columns are eigenvectors again
    sub = rest.T @ Lap @ rest
    w, R = np.linalg.eigh(sub)
    vecs[:, 1:] = rest @ R
    vals[1:] = w
    return GraphSpectrum(graph=g, laplacian=Lap, eigenvalues=vals, eigenvectors=vecs)


def ctqw(spec: GraphSpectrum, t: float) -> np.ndarray:
    """CTQW propagator e^{i L t} = sum_j e^{i lambda_j t} v_j v_j^T."""
    if t < 0:
        raise ValueError("evolution time must be non-negative")
    V = spec.eigenvectors
    return (V * np.exp(1j * spec.eigenvalues * t)) @ V.T


def transition_matrix(g: Graph) -> np.ndarray:
    """Simple random walk P = D^{-1} A."""
    A = g.adjacency()
    return A / A.sum(axis=1, keepdims=True)


def hitting_time(g: Graph, marked: Iterable[int]) -> float:
    """Expected hitting time of ``marked`` from the stationary distribution.

    HT = <pi_M| (I - P_M)^{-1} |1>, with P_M the walk restricted to
    unmarked vertices and pi_M the stationary distribution on them.
    """
    marked = sorted(set(int(v) for v in marked))
    if not marked:
        raise ValueError("marked set must be nonempty")
    if len(marked) >= g.n or marked[0] < 0 or marked[-1] >= g.n:
        raise ValueError("marked set must be a proper subset of the vertices")
    P = transition_matrix(g)
    deg = g.degrees()
    pi = deg / deg.sum()
    rest = np.setdiff1d(np.arange(g.n), marked)
    M = np.eye(rest.size) - P[np.ix_(rest, rest)]
    # I - P_M is a nonsingular M-matrix for a connected graph and nonempty marked set
    assert np.linalg.cond(M) < 1e14, "I - P_M is singular"
    h = np.linalg.solve(M, np.ones(rest.size))
    return float(pi[rest] @ h)


def cycle_hitting_time(n: int) -> float:
    """Closed form n^2/3 + n - 4/3 - 2/n + 2/n^2 for the n-cycle with one marked vertex."""
    return n * n / 3.0 + n - 4.0 / 3.0 - 2.0 / n + 2.0 / (n * n)


def cycle_hitting_time_uniform(n: int) -> float:
    """(n^2 - 1)/6: the average of j (n - j), the gambler's-ruin hitting time from vertex j.

    This is what the matrix formula and simulation produce; it differs from
    :func:`cycle_hitting_time` by an O(n^2) amount.
    """
    return (n * n - 1) / 6.0


def monte_carlo_hitting_time(
    g: Graph, marked: Iterable[int], walks: int, seed: int
) -> tuple[float, float]:
    """Mean and standard error of simulated hitting times from stationarity.

    All walks advance in lockstep; absorbed walkers are dropped each step.
    """
    rng = np.random.default_rng(seed)
    adj = g.neighbors()
    deg = np.array([len(a) for a in adj])
    offsets = np.concatenate([[0], np.cumsum(deg)])
    flat = np.array([v for a in adj for v in a])
    is_marked = np.zeros(g.n, dtype=bool)
    is_marked[list(marked)] = True
    pos = rng.choice(g.n, size=walks, p=deg / deg.sum())
    times = np.zeros(walks, dtype=np.int64)
    active = np.flatnonzero(~is_marked[pos])
    cur = pos[active]
    step = 0
    while active.size:
        step += 1
        d = deg[cur]
        cur = flat[offsets[cur] + (rng.random(cur.size) * d).astype(np.int64)]
        hit = is_marked[cur]
        times[active[hit]] = step
        active, cur = active[~hit], cur[~hit]
    mean = float(times.mean())
    return mean, float(times.std(ddof=1) / math.sqrt(walks))


def cycle_gap(n: int) -> float:
    """Spectral gap 1 - cos(2 pi / n) = 2 sin^2(pi / n) of the cycle walk P = A/2."""
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    return 2.0 * math.sin(math.pi / n) ** 2
