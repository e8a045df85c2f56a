"""Command-line interface.

Exit codes: 0 success, 1 usage or input error, 2 the planner failed to reach
feasibility. All commands are deterministic given --seed. With --plot,
report-producing commands render figures next to the delimited outputs.
"""

from __future__ import annotations

import argparse
import json
import sys as _sys
from pathlib import Path

import numpy as np

from . import bench, io, pipeline, plots, scenario
from .basis import build_basis
from .constraints import assemble
from .errors import SchemaError, UsageError, ValidationError
from .metrics import compute_metrics
from .solver import SolverConfig


def _family_from_args(args) -> scenario.ScenarioFamily:
    kind = {"circle": "circle_antipodal", "random_box": "random_box"}.get(
        args.family, args.family
    )
    return scenario.ScenarioFamily(
        kind=kind,
        robot_radius=args.radius,
        n_obstacles=getattr(args, "obstacles", 0),
    )


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        rho=args.rho,
        max_iters=args.max_iters,
        primal_tol=args.primal_tol,
    )


def _add_solver_args(p):
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--max-iters", type=int, default=15000)
    p.add_argument("--primal-tol", type=float, default=1e-3)


def cmd_gen_scenario(args) -> int:
    scn = scenario.generate(
        _family_from_args(args), n=args.n, n_d=args.nd, seed=args.seed
    )
    scenario.save(scn, args.output)
    print(args.output)
    return 0


def _load_batch(args, scn, basis):
    src = args.candidates
    if src.startswith("naive:"):
        count = int(src.split(":", 1)[1])
        return pipeline.sample_naive_prior(scn, basis, count, seed=args.seed)
    return pipeline.load_candidates(src, scn)


def cmd_solve(args) -> int:
    scn = scenario.load(args.scenario)
    basis = build_basis(scn.horizon)
    sys_ = assemble(scn, basis)
    cfg = _solver_config(args)
    batch = _load_batch(args, scn, basis)
    warm = io.load_warmstarts(args.warmstarts, scn) if args.warmstarts else None
    result = pipeline.plan(
        scn, batch, top_k=min(args.top_k, len(batch)), cfg=cfg, sys=sys_,
        basis=basis, warmstarts=warm,
    )
    out = Path(args.output_prefix)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.save_candidates(
        f"{out}_selected.json", [result.coeffs], scn.n, scn.n_d, scn.horizon.n_basis
    )
    io.write_trajectory_csv(f"{out}_trajectory.csv", result.coeffs, basis)
    if args.trace:
        io.write_trace_csv(f"{out}_trace.csv", result.best_refined.trace)
    met = compute_metrics(result.coeffs, basis, scn)
    met.success = result.status == "success"
    met.iterations = result.best_refined.iterations
    with open(f"{out}_metrics.json", "w") as fh:
        json.dump(met.to_dict() | {"status": result.status}, fh, indent=1, sort_keys=True)
        fh.write("\n")
    if args.plot:
        plots.plot_trajectories(scn, result.coeffs, basis, f"{out}_trajectories.png")
        plots.plot_residual_trace(result.best_refined.trace, f"{out}_residuals.png")
    print(f"status={result.status} primal={result.best_refined.primal:.3e}")
    return 0 if result.status == "success" else 2


def cmd_batch_solve(args) -> int:
    scn = scenario.load(args.scenario)
    basis = build_basis(scn.horizon)
    sys_ = assemble(scn, basis)
    cfg = _solver_config(args)
    batch = _load_batch(args, scn, basis)
    result = pipeline.plan(
        scn, batch, top_k=len(batch), cfg=cfg, sys=sys_, basis=basis
    )
    refined = [r.coeffs(sys_) for r in result.refined]
    io.save_candidates(args.output, refined, scn.n, scn.n_d, scn.horizon.n_basis)
    rows = [
        {"index": int(result.order[i]), "primal": result.refined[i].primal,
         "status": result.refined[i].status}
        for i in range(len(result.refined))
    ]
    with open(Path(args.output).with_suffix(".residuals.json"), "w") as fh:
        json.dump(rows, fh, indent=1)
    print(f"refined {len(refined)} candidates")
    return 0 if result.status == "success" else 2


def cmd_benchmark(args) -> int:
    thresholds = tuple(float(t) for t in args.thresholds.split(","))
    report = bench.run_benchmark(
        _family_from_args(args),
        n_list=[int(n) for n in args.n.split(",")],
        num_instances=args.instances,
        cfg=_solver_config(args),
        candidate_source=args.candidates,
        n_d=args.nd,
        top_k=args.top_k,
        seed=args.seed,
        thresholds=thresholds,
    )
    out = Path(args.output_prefix)
    out.parent.mkdir(parents=True, exist_ok=True)
    report.save_json(f"{out}_report.json")
    report.save_csv(f"{out}_report.csv")
    if args.plot:
        plots.plot_benchmark_summary(report, f"{out}_summary.png")
    print(json.dumps(report.aggregates, indent=1, sort_keys=True))
    return 0


def cmd_gen_dataset(args) -> int:
    cfg = _solver_config(args)
    stored = bench.gen_dataset(
        _family_from_args(args), n=args.n, count=args.count,
        out_path=args.output, cfg=cfg, n_d=args.nd, seed=args.seed,
    )
    print(f"stored {stored}/{args.count} converged pairs in {args.output}")
    return 0


def cmd_metrics(args) -> int:
    scn = scenario.load(args.scenario)
    basis = build_basis(scn.horizon)
    cands = io.load_candidates(args.candidates_file, scn)
    docs = [compute_metrics(c, basis, scn).to_dict() for c in cands]
    text = json.dumps(docs, indent=1, sort_keys=True)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarmplan", description="Centralized multi-robot trajectory planner"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-scenario", help="generate and save a scenario")
    p.add_argument("--family", required=True, choices=["random_box", "circle"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--nd", type=int, default=2, choices=[2, 3])
    p.add_argument("--radius", type=float, default=0.1)
    p.add_argument("--obstacles", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen_scenario)

    p = sub.add_parser("solve", help="plan trajectories for one scenario")
    p.add_argument("scenario")
    p.add_argument("--candidates", default="naive:64", help="file path or naive:COUNT")
    p.add_argument("--warmstarts", default=None)
    p.add_argument("--top-k", type=int, default=pipeline.DEFAULT_TOP_K)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", action="store_true")
    p.add_argument("--plot", action="store_true")
    p.add_argument("-o", "--output-prefix", required=True)
    _add_solver_args(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("batch-solve", help="refine every candidate in a batch")
    p.add_argument("scenario")
    p.add_argument("--candidates", default="naive:8")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    _add_solver_args(p)
    p.set_defaults(func=cmd_batch_solve)

    p = sub.add_parser("benchmark", help="run the benchmark harness")
    p.add_argument("--family", required=True, choices=["random_box", "circle"])
    p.add_argument("--n", default="8", help="comma-separated robot counts")
    p.add_argument("--nd", type=int, default=2, choices=[2, 3])
    p.add_argument("--radius", type=float, default=0.1)
    p.add_argument("--obstacles", type=int, default=0)
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--candidates", default="naive:32")
    p.add_argument("--top-k", type=int, default=3)
    p.add_argument("--thresholds", default="0.01,0.001")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--plot", action="store_true")
    p.add_argument("-o", "--output-prefix", required=True)
    _add_solver_args(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("gen-dataset", help="generate a training dataset")
    p.add_argument("--family", required=True, choices=["random_box", "circle"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--nd", type=int, default=2, choices=[2, 3])
    p.add_argument("--radius", type=float, default=0.1)
    p.add_argument("--obstacles", type=int, default=0)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    _add_solver_args(p)
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("metrics", help="compute metrics for stored candidates")
    p.add_argument("scenario")
    p.add_argument("candidates_file")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_metrics)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (SchemaError, ValidationError, UsageError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
