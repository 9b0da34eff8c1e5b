"""Command line entry points.

Subcommands: graph, solve, path, monitor, bound. Errors print a
machine-readable JSON object on stderr; exit codes are 0 (ok), 2
(configuration or input problem), 3 (numeric failure). Output files are
written atomically and serialised canonically, so repeated runs with the
same seed and configuration produce identical bytes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import bounds as bounds_mod
from .admm import SolverConfig, solve_dual
from .clusterpath import sweep
from .errors import ParameterError, SCOError
from .evolution import Snapshot, delta_metric, run_session
from .graph import Dataset, build_knn_graph, validate_graph
from .incidence import EdgeIncidence
from .io import (graph_to_dict, iter_snapshot_files, load_graph_json,
                 matrix_to_lists, read_matrix_csv, read_snapshot_jsonl,
                 write_json_atomic, write_jsonl_atomic, write_path_csv,
                 write_trace_csv)
from .problems import make_problem


class _Parser(argparse.ArgumentParser):
    # argparse exits with usage text by default; route through our error path
    def error(self, message):
        raise ParameterError(message)


def _require_file(path: str) -> str:
    if not os.path.exists(path):
        raise ParameterError(f"file not found: {path}")
    return path


def _add_solver_flags(sub):
    sub.add_argument("--alpha", type=float, default=1.0, help="coupling strength")
    sub.add_argument("--beta", type=float, default=5.0, help="dual-image regulariser weight")
    sub.add_argument("--gamma", type=float, default=5.0, help="l2 shrinkage (ridge only)")
    sub.add_argument("--rho", type=float, default=1.0, help="penalty parameter")
    sub.add_argument("--p", default="2", choices=["1", "2", "inf"],
                     help="regulariser row norm (constraint geometry is its dual)")
    sub.add_argument("--s", default="1", choices=["1", "2", "inf"],
                     help="dual-image regulariser norm")
    sub.add_argument("--outer-max-iters", type=int, default=500)
    sub.add_argument("--inner-max-iters", type=int, default=200)
    sub.add_argument("--eps-abs", type=float, default=1e-6)
    sub.add_argument("--eps-rel", type=float, default=1e-4)
    sub.add_argument("--inner-tol", type=float, default=1e-8)
    sub.add_argument("--parallel", action="store_true",
                     help="feature-separated dual update (needs --p 1)")
    sub.add_argument("--seed", type=int, default=0, help="seed for all randomness")


def _add_data_flags(sub):
    sub.add_argument("--input", required=True, help="dataset CSV, one row per instance")
    sub.add_argument("--targets", action="store_true",
                     help="treat the final CSV column as the regression target")
    sub.add_argument("--k", type=int, default=10, help="neighbours per vertex")
    sub.add_argument("--weight-cap", type=float, default=1e6)
    sub.add_argument("--graph", default=None, help="load a graph JSON instead of building one")


def build_parser() -> _Parser:
    parser = _Parser(prog="sco", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    g = subs.add_parser("graph", help="build the k-nearest-neighbour variable graph")
    _add_data_flags(g)
    g.add_argument("--out", required=True)

    s = subs.add_parser("solve", help="solve one dataset and write the solution")
    _add_data_flags(s)
    _add_solver_flags(s)
    s.add_argument("--task", default="cc", choices=["cc", "ridge"])
    s.add_argument("--out", required=True)
    s.add_argument("--trace-out", default=None, help="also write the residual trace CSV")

    p = subs.add_parser("path", help="sweep the coupling strength and emit the cluster path")
    _add_data_flags(p)
    _add_solver_flags(p)
    p.add_argument("--alphas", required=True,
                   help="comma-separated increasing strengths, e.g. 0,0.5,1")
    p.add_argument("--fuse-tol", type=float, default=None,
                   help="fusion tolerance (default: 1e-3 of the widest feature range)")
    p.add_argument("--no-warm-start", action="store_true")
    p.add_argument("--out", required=True, help="per-vertex CSV output")
    p.add_argument("--summary-out", default=None, help="JSON summary (default: <out>.summary.json)")

    m = subs.add_parser("monitor", help="process an evolving snapshot stream")
    _add_data_flags(m)
    _add_solver_flags(m)
    m.add_argument("--task", default="cc", choices=["cc", "ridge"])
    m.add_argument("--c", type=float, default=10.0, help="refresh threshold")
    m.add_argument("--stream", default=None,
                   help="directory of CSV snapshots (lexicographic) or a JSONL file")
    m.add_argument("--synthetic", type=int, default=0,
                   help="generate this many perturbed snapshots instead of reading a stream")
    m.add_argument("--sigma", type=float, default=0.1,
                   help="noise scale for synthetic snapshots")
    m.add_argument("--rebuild-graph", action="store_true",
                   help="rebuild the graph when a snapshot is accepted")
    m.add_argument("--no-bounds", action="store_true",
                   help="skip the per-decision accuracy-bound reports")
    m.add_argument("--out", required=True, help="decisions JSONL output")
    m.add_argument("--bounds-out", default=None,
                   help="bound reports JSONL (default: <out>.bounds.jsonl)")

    b = subs.add_parser("bound", help="evaluate the accuracy bounds for one perturbation")
    _add_data_flags(b)
    _add_solver_flags(b)
    b.add_argument("--task", default="cc", choices=["cc", "ridge"])
    b.add_argument("--c", type=float, default=10.0)
    b.add_argument("--delta", default=None, help="perturbation CSV of the same shape")
    b.add_argument("--sigma", type=float, default=0.1,
                   help="scale for a synthetic Gaussian perturbation when --delta is absent")
    b.add_argument("--out", required=True)
    return parser


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        alpha=args.alpha, beta=args.beta, rho=args.rho, p=args.p, s=args.s,
        outer_max_iters=args.outer_max_iters, inner_max_iters=args.inner_max_iters,
        eps_abs=args.eps_abs, eps_rel=args.eps_rel, inner_tol=args.inner_tol,
        parallel=args.parallel,
    )


def _config_echo(args, extra=None) -> dict:
    skip = {"command", "out", "trace_out", "summary_out", "bounds_out"}
    echo = {key: value for key, value in sorted(vars(args).items()) if key not in skip}
    if extra:
        echo.update(extra)
    return echo


def _load_dataset(args) -> Dataset:
    values, targets = read_matrix_csv(_require_file(args.input), with_targets=args.targets)
    return Dataset(values, targets)


def _load_or_build_graph(args, data: Dataset):
    if args.graph is not None:
        graph = load_graph_json(_require_file(args.graph))
        problems = validate_graph(graph)
        if problems:
            raise ParameterError("invalid graph: " + "; ".join(problems))
        if graph.vertex_count != data.row_count:
            raise ParameterError(
                f"graph has {graph.vertex_count} vertices but data has {data.row_count} rows")
        return graph
    return build_knn_graph(data, args.k, args.weight_cap)


def cmd_graph(args) -> int:
    data = _load_dataset(args)
    graph = _load_or_build_graph(args, data)
    payload = graph_to_dict(graph)
    payload["config"] = _config_echo(args)
    write_json_atomic(args.out, payload)
    return 0


def cmd_solve(args) -> int:
    data = _load_dataset(args)
    config = _solver_config(args)
    problem = make_problem(args.task, data, gamma=args.gamma)
    graph = _load_or_build_graph(args, data)
    Q = EdgeIncidence(graph, config.alpha)
    rng = np.random.default_rng(args.seed)
    result = solve_dual(problem, Q, config, rng=rng)
    payload = {
        "X": matrix_to_lists(result.x_star),
        "lambda": matrix_to_lists(result.state.lam),
        "dual_objective": float(result.dual_objective),
        "primal_objective": float(result.primal_objective),
        "iters": int(result.iterations),
        "converged": bool(result.converged),
        "stop_reason": result.stop_reason,
        "config": _config_echo(args),
    }
    write_json_atomic(args.out, payload)
    if args.trace_out:
        write_trace_csv(args.trace_out, result.trace)
    return 0


def cmd_path(args) -> int:
    data = _load_dataset(args)
    config = _solver_config(args)
    graph = _load_or_build_graph(args, data)
    try:
        alphas = [float(a) for a in args.alphas.split(",") if a.strip() != ""]
    except ValueError:
        raise ParameterError(f"cannot parse --alphas {args.alphas!r}") from None
    rng = np.random.default_rng(args.seed)
    path = sweep(data, graph, alphas, config, warm_start=not args.no_warm_start,
                 eps_fuse=args.fuse_tol, rng=rng)
    write_path_csv(args.out, path)
    summary = {
        "alphas": [float(a) for a in path.alphas],
        "cluster_counts": [int(c) for c in path.cluster_counts],
        "fuse_tolerance": float(path.fuse_tolerance),
        "converged": [bool(c) for c in path.converged],
        "failure_index": path.failure_index,
        "failure_message": path.failure_message,
        "config": _config_echo(args),
    }
    write_json_atomic(args.summary_out or args.out + ".summary.json", summary)
    return 0 if path.failure_index is None else 3


def _synthetic_stream(data: Dataset, count: int, sigma: float, rng) -> list[Snapshot]:
    out = []
    for idx in range(count):
        delta = sigma * rng.standard_normal(data.values.shape)
        out.append(Snapshot(index=idx, values=data.values + delta, targets=data.targets))
    return out


def _read_stream(args, data: Dataset) -> list[Snapshot]:
    if args.synthetic > 0:
        rng = np.random.default_rng(args.seed)
        return _synthetic_stream(data, args.synthetic, args.sigma, rng)
    if args.stream is None:
        raise ParameterError("monitor needs --stream or --synthetic N")
    _require_file(args.stream)
    snapshots = []
    if os.path.isdir(args.stream):
        for idx, path in enumerate(iter_snapshot_files(args.stream)):
            values, targets = read_matrix_csv(path, with_targets=args.targets)
            snapshots.append(Snapshot(index=idx, values=values, targets=targets))
    else:
        for idx, (values, targets) in enumerate(
                read_snapshot_jsonl(args.stream, with_targets=args.targets)):
            snapshots.append(Snapshot(index=idx, values=values, targets=targets))
    if not snapshots:
        raise ParameterError(f"no snapshots found in {args.stream}")
    for snap in snapshots:
        if snap.values.shape != data.values.shape:
            raise ParameterError(
                f"snapshot {snap.index} shape {snap.values.shape} != initial {data.values.shape}")
    return snapshots


def _decision_bounds(decision, session, snapshot, args, config, rng):
    """Bound reports for one decision. Keeps on changed data need one extra
    solve on the snapshot to obtain the true perturbed model."""
    if decision.action == "resolve":
        base_problem = session.previous_problem
        x_star = session.previous_x_star
        x_tilde = session.x_star
        lam_tilde = session.dual.lam
        new_values = session.problem.values
    else:
        base_problem = session.problem
        x_star = session.x_star
        new_values = snapshot.values
        if np.array_equal(new_values, base_problem.values):
            x_tilde = x_star
            lam_tilde = session.dual.lam
        else:
            shadow = base_problem.with_values(snapshot.values, snapshot.targets)
            result = solve_dual(shadow, session.Q, config, warm_start=session.dual, rng=rng)
            x_tilde = result.x_star
            lam_tilde = result.state.lam
    values = base_problem.values
    delta = new_values - values
    reports = []
    if args.task == "cc":
        reports.append(bounds_mod.clustering_model_check(
            values, delta, config.beta, args.c, x_star, x_tilde))
        reports.append(bounds_mod.clustering_dual_image_check(
            session.Q, lam_tilde, values + delta, config.beta, config.s))
    else:
        y = base_problem.dataset.targets
        reports.append(bounds_mod.regression_model_check(
            values, delta, y, args.gamma, config.beta, args.c, x_star, x_tilde, rng=rng))
        reports.append(bounds_mod.regression_dual_image_check(
            session.Q, lam_tilde, values, delta, y, args.gamma, config.beta, config.s))
    return [r.as_dict() for r in reports]


def cmd_monitor(args) -> int:
    data = _load_dataset(args)
    if args.task == "ridge" and data.targets is None:
        raise ParameterError("ridge monitoring needs --targets")
    config = _solver_config(args)
    graph = _load_or_build_graph(args, data)
    problem = make_problem(args.task, data, gamma=args.gamma)
    stream = _read_stream(args, data)
    rng = np.random.default_rng(args.seed)

    bound_records = []
    records = []

    def on_decision(decision, session, snapshot):
        records.append({
            "idx": decision.index,
            "delta_metric": decision.delta_metric,
            "threshold": decision.threshold,
            "action": decision.action,
            "solve_iters": decision.solve_iters,
            "wall_ms": decision.wall_ms,
        })
        if not args.no_bounds:
            for report in _decision_bounds(decision, session, snapshot, args, config, rng):
                report["idx"] = decision.index
                bound_records.append(report)

    run_session(problem, graph, stream, config, args.c,
                rebuild_graph=args.rebuild_graph, knn_k=args.k,
                weight_cap=args.weight_cap, rng=rng, on_decision=on_decision)

    write_jsonl_atomic(args.out, [{"config": _config_echo(args)}] + records)
    if not args.no_bounds:
        write_jsonl_atomic(args.bounds_out or args.out + ".bounds.jsonl", bound_records)
    return 0


def cmd_bound(args) -> int:
    data = _load_dataset(args)
    if args.task == "ridge" and data.targets is None:
        raise ParameterError("ridge bounds need --targets")
    config = _solver_config(args)
    graph = _load_or_build_graph(args, data)
    Q = EdgeIncidence(graph, config.alpha)
    problem = make_problem(args.task, data, gamma=args.gamma)
    rng = np.random.default_rng(args.seed)

    if args.delta is not None:
        delta, _ = read_matrix_csv(_require_file(args.delta))
        if delta.shape != data.values.shape:
            raise ParameterError(
                f"delta shape {delta.shape} != data shape {data.values.shape}")
    else:
        delta = args.sigma * rng.standard_normal(data.values.shape)

    base = solve_dual(problem, Q, config, rng=rng)
    evolved_problem = problem.with_values(data.values + delta)
    evolved = solve_dual(evolved_problem, Q, config, warm_start=base.state, rng=rng)
    metric = delta_metric(problem, Q, base.state.lam, data.values + delta)

    reports = []
    if args.task == "cc":
        reports.append(bounds_mod.clustering_model_check(
            data.values, delta, config.beta, args.c, base.x_star, evolved.x_star))
        reports.append(bounds_mod.clustering_dual_image_check(
            Q, evolved.state.lam, data.values + delta, config.beta, config.s))
    else:
        reports.append(bounds_mod.regression_model_check(
            data.values, delta, data.targets, args.gamma, config.beta, args.c,
            base.x_star, evolved.x_star, rng=rng))
        reports.append(bounds_mod.regression_dual_image_check(
            Q, evolved.state.lam, data.values, delta, data.targets, args.gamma,
            config.beta, config.s))
    payload = {
        "reports": [r.as_dict() for r in reports],
        "delta_metric": float(metric),
        "config": _config_echo(args),
    }
    write_json_atomic(args.out, payload)
    return 0


_COMMANDS = {
    "graph": cmd_graph,
    "solve": cmd_solve,
    "path": cmd_path,
    "monitor": cmd_monitor,
    "bound": cmd_bound,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except SCOError as exc:
        sys.stderr.write(json.dumps({"error": str(exc), "kind": type(exc).__name__}) + "\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
