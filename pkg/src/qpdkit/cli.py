"""Command-line experiment runner.

Subcommands emit CSV (with a ``#``-prefixed JSON config line) or a JSON
object ``{config, rows, summary}``. Exit codes: 0 success, 1 usage or
input error, 2 bound violation.

Examples::

    qpdkit qpd-sweep --lambda 0.3927 --delta 0.1 --format json
    qpdkit search --graph cycle:16 --marked 0 --gamma 0.1
    qpdkit search --graph complete:8 --marked 0,1 --epsilon 0.125 --mode sample --runs 10000
    qpdkit filter-bench --dim 32 --p 0.1 --eps 0.2 --trials 100
    qpdkit ht --n-min 3 --n-max 64 --walks 1000000
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .chebyshev import make_schedule
from .circuit import ancilla_response, closed_form_response, max_leak
from .graphs import (
    GraphFormatError,
    cycle_graph,
    cycle_hitting_time,
    cycle_hitting_time_uniform,
    graph_from_spec,
    hitting_time,
    monte_carlo_hitting_time,
)
from .phase_filter import effective_gap_check, instance_report, make_instance
from .search import SearchConfig, SearchEngine, WindowError, search

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    raw = os.environ.get("QPDKIT_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"QPDKIT_SEED must be an integer, got {raw!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated integer list, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated number list, got {text!r}") from None


def _pool_map(fn, items, jobs: int) -> list:
    """Ordered map over a process pool; results follow input order."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def _chunks(n: int, k: int) -> list[range]:
    k = max(1, min(k, n))
    edges = np.linspace(0, n, k + 1).round().astype(int)
    return [range(a, b) for a, b in zip(edges[:-1], edges[1:])]


# --- qpd-sweep --------------------------------------------------------


def cmd_qpd_sweep(args) -> tuple[list[dict], dict, bool]:
    sched = make_schedule(args.lam, args.delta, tightened=args.tightened)
    phi = np.asarray(args.phi) if args.phi is not None else np.linspace(-math.pi, math.pi, args.points)
    sim = np.abs(ancilla_response(phi, sched))
    closed = closed_form_response(phi, sched)
    diff = np.abs(sim - closed)
    rows = [
        {"phi": float(a), "simulated": float(b), "closed_form": float(c), "abs_diff": float(d)}
        for a, b, c, d in zip(phi, sim, closed, diff)
    ]
    outside = np.abs(phi) >= args.lam
    summary = {
        "L": sched.L,
        "angle_gap": sched.angle_gap,
        "max_leak": max_leak(sched),
        "max_abs_diff": float(diff.max()),
        "max_outside_gap": float(sim[outside].max()) if outside.any() else None,
    }
    zero = np.flatnonzero(phi == 0.0)
    if zero.size:
        summary["value_at_zero"] = float(sim[zero[0]])
    ok = summary["max_abs_diff"] < args.tol
    if summary["max_outside_gap"] is not None:
        ok = ok and summary["max_outside_gap"] <= args.delta + args.tol
    summary["bound_ok"] = bool(ok)
    return rows, summary, ok


# --- search -----------------------------------------------------------


def _search_config(args) -> SearchConfig:
    g = graph_from_spec(args.graph)
    eps = args.epsilon if args.epsilon is not None else len(set(args.marked)) / g.n
    return SearchConfig(g, frozenset(args.marked), eps, args.gamma, args.seed)


def _sample_chunk(job) -> list[dict]:
    graph_spec, marked, eps, gamma, seed, indices = job
    cfg = SearchConfig(graph_from_spec(graph_spec), frozenset(marked), eps, gamma, seed)
    eng = SearchEngine(cfg)
    out = []
    for k in indices:
        tr = search(cfg, mode="sample", rng=np.random.default_rng([seed, k]), engine=eng)
        found = tr.outcome if isinstance(tr.outcome, int) else None
        out.append({
            "run": k,
            "outcome": "exhausted" if found is None else "success",
            "vertex": found,
            "loops": len(tr.loops),
            "success_loop": tr.loops[-1].i if found is not None else None,
            "oracle_queries": tr.queries,
            "evolution_time_seconds": tr.evolution_time,
        })
    return out


def cmd_search(args) -> tuple[list[dict], dict, bool]:
    if args.runs < 1:
        raise UsageError("--runs must be positive")
    cfg = _search_config(args)
    if args.mode == "exact":
        tr = search(cfg, mode="exact")
        rows = [dict(vars(r)) for r in tr.loops]
        summary = tr.to_dict()
        del summary["loops"], summary["config"]
        summary["bound_ok"] = tr.bound_ok
        return rows, summary, tr.bound_ok
    if args.runs == 1:
        tr = search(cfg, mode="sample")
        rows = [dict(vars(r)) for r in tr.loops]
        summary = {"outcome": tr.outcome, "queries": tr.queries, "evolution_time": tr.evolution_time,
                   "t_max": tr.t_max}
        return rows, summary, True
    jobs = [(args.graph, sorted(cfg.marked), cfg.epsilon, cfg.gamma, cfg.seed, r)
            for r in _chunks(args.runs, args.jobs)]
    rows = [row for part in _pool_map(_sample_chunk, jobs, args.jobs) for row in part]
    exact = search(cfg, mode="exact")
    per_loop = []
    for rec in exact.loops:
        expect = rec.reach_probability * rec.success_probability_this_loop
        hits = sum(1 for r in rows if r["success_loop"] == rec.i)
        sigma = math.sqrt(expect * (1 - expect) / args.runs)
        z = (hits / args.runs - expect) / sigma if sigma > 0 else 0.0
        per_loop.append({"i": rec.i, "exact": expect, "empirical": hits / args.runs, "z": z})
    summary = {
        "runs": args.runs,
        "success_rate": sum(1 for r in rows if r["outcome"] == "success") / args.runs,
        "exact_success_probability": exact.success_probability,
        "per_loop": per_loop,
        "max_abs_z": max(abs(p["z"]) for p in per_loop),
    }
    return rows, summary, True


# --- filter-bench -----------------------------------------------------


def _filter_trial(job) -> dict:
    k, dim, p, eps, p_bar, D, dim_a, dim_b, seed = job
    rng = np.random.default_rng([seed, k])
    da = dim_a or int(rng.integers(1, dim))
    db = dim_b or int(rng.integers(1 if p == 1 else 2, dim))
    inst_seed = int(rng.integers(2 ** 63))
    inst = make_instance(dim, da, db, p, inst_seed)
    row = {"trial": k}
    row.update(instance_report(inst, eps, p_bar, D))
    norm = float(np.linalg.norm(inst.phi_vec))
    grid = np.linspace(0.0, math.pi * (1 - 1e-9), 50)
    margins = [0.5 * e * norm + 1e-8 - effective_gap_check(inst, e) for e in grid]
    row["gap_margin_min"] = float(min(margins))
    row["violation"] = bool(
        row["ratio_margin_low"] < 0 or row["ratio_margin_high"] < 0 or row["fidelity_margin"] < 0
        or row["overlap_error"] > 1e-9 or row["gap_margin_min"] < 0
    )
    return row


def cmd_filter_bench(args) -> tuple[list[dict], dict, bool]:
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    jobs = [(k, args.dim, args.p, args.eps, args.p_bar, args.D, args.dim_a, args.dim_b, args.seed)
            for k in range(args.trials)]
    rows = _pool_map(_filter_trial, jobs, args.jobs)
    ratios = [r["budget_ratio"] for r in rows if r["budget_ratio"] is not None]
    violations = sum(r["violation"] for r in rows)
    summary = {
        "trials": args.trials,
        "violations": violations,
        "max_L": max(r["L"] for r in rows),
        "max_budget_ratio": max(ratios) if ratios else None,
        "min_fidelity_margin": min(r["fidelity_margin"] for r in rows),
    }
    return rows, summary, violations == 0


# --- ht ---------------------------------------------------------------


def _ht_row(job) -> dict:
    n, walks, seed, tol = job
    g = cycle_graph(n)
    matrix = hitting_time(g, [0])
    closed = cycle_hitting_time(n)
    row = {"n": n, "matrix": matrix, "closed_form": closed, "abs_diff": abs(matrix - closed),
           "uniform_formula": cycle_hitting_time_uniform(n), "mc_mean": None, "mc_stderr": None,
           "mc_z": None, "mc_z_matrix": None}
    if walks:
        mean, se = monte_carlo_hitting_time(g, [0], walks, [seed, n])
        row.update(mc_mean=mean, mc_stderr=se, mc_z=(mean - closed) / se, mc_z_matrix=(mean - matrix) / se)
    row["ok"] = bool(row["abs_diff"] < tol and (row["mc_z"] is None or abs(row["mc_z"]) <= 3))
    return row


def cmd_ht(args) -> tuple[list[dict], dict, bool]:
    if not 3 <= args.n_min <= args.n_max:
        raise UsageError("need 3 <= --n-min <= --n-max")
    mc = set(args.mc_n)
    jobs = [(n, args.walks if n in mc else 0, args.seed, args.tol) for n in range(args.n_min, args.n_max + 1)]
    rows = _pool_map(_ht_row, jobs, args.jobs)
    ok = all(r["ok"] for r in rows)
    summary = {"max_abs_diff": max(r["abs_diff"] for r in rows),
               "mc_rows": sum(r["mc_z"] is not None for r in rows), "bound_ok": ok}
    return rows, summary, ok


# --- output -----------------------------------------------------------


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def render(config: dict, rows: list[dict], summary: dict, fmt: str) -> str:
    config, rows, summary = _jsonable(config), _jsonable(rows), _jsonable(summary)
    if fmt == "json":
        return json.dumps({"config": config, "rows": rows, "summary": summary}, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write("# " + json.dumps(config, sort_keys=True) + "\n")
    if rows:
        fields = list(rows[0].keys())
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r.get(k) is None else repr(r[k]) if isinstance(r[k], float) else r[k])
                        for k in fields})
    buf.write("# summary " + json.dumps(summary, sort_keys=True) + "\n")
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default: $QPDKIT_SEED or 0)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    p = _Parser(prog="qpdkit", description="Quantum phase discrimination experiments")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("qpd-sweep", parents=[common], help="ancilla response curve")
    q.add_argument("--lambda", dest="lam", type=float, default=math.pi / 8)
    q.add_argument("--delta", type=float, default=0.1)
    q.add_argument("--points", type=int, default=2001)
    q.add_argument("--phi", type=_float_list, default=None, help="explicit phase list, overrides --points")
    q.add_argument("--tightened", action="store_true", help="use the tightened gap in the angles")
    q.add_argument("--tol", type=float, default=1e-9)
    q.set_defaults(func=cmd_qpd_sweep)

    s = sub.add_parser("search", parents=[common], help="spatial search by recursive amplification")
    s.add_argument("--graph", required=True, help="graph file or cycle:n, complete:n, path:n, gnp:n:p:seed")
    s.add_argument("--marked", type=_int_list, required=True)
    s.add_argument("--epsilon", type=float, default=None, help="lower bound on marked fraction (default: exact)")
    s.add_argument("--gamma", type=float, default=0.1)
    s.add_argument("--mode", choices=("exact", "sample"), default="exact")
    s.add_argument("--runs", type=int, default=1, help="seeded runs in sample mode")
    s.set_defaults(func=cmd_search)

    f = sub.add_parser("filter-bench", parents=[common], help="QPD eigenspace projection bench")
    f.add_argument("--dim", type=int, default=32)
    f.add_argument("--dim-a", type=int, default=None)
    f.add_argument("--dim-b", type=int, default=None)
    f.add_argument("--p", type=float, default=0.1)
    f.add_argument("--eps", "--epsilon", dest="eps", type=float, default=0.2)
    f.add_argument("--trials", type=int, default=100)
    f.add_argument("--p-bar", type=float, default=None, help="lower bound on p (default: exact)")
    f.add_argument("--D", type=float, default=None, help="upper bound on ||phi||/sqrt(p) (default: exact)")
    f.add_argument("--tol", type=float, default=1e-9)
    f.set_defaults(func=cmd_filter_bench)

    h = sub.add_parser("ht", parents=[common], help="cycle hitting times")
    h.add_argument("--n-min", type=int, default=3)
    h.add_argument("--n-max", type=int, default=64)
    h.add_argument("--walks", type=int, default=100000, help="Monte-Carlo walks per sampled n (0 disables)")
    h.add_argument("--mc-n", type=_int_list, default=[6, 12, 24], help="sizes to sample")
    h.add_argument("--tol", type=float, default=1e-6)
    h.set_defaults(func=cmd_ht)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.seed is None:
            args.seed = _default_seed()
        if args.jobs < 1:
            raise UsageError("--jobs must be positive")
        rows, summary, ok = args.func(args)
    except (UsageError, GraphFormatError, WindowError, ValueError, OSError) as exc:
        print(f"qpdkit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
    text = render(config, rows, summary, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not ok:
        print(f"qpdkit {args.command}: bound violation", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
