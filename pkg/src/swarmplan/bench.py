"""Benchmark harness and dataset generation.

Runs the full planning pipeline on families of random scenarios, records
iterations-to-threshold statistics and trajectory quality, and can dump
(scenario, converged coefficients) pairs for training.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import io, pipeline
from .basis import build_basis
from .constraints import assemble
from .metrics import compute_metrics
from .scenario import ScenarioFamily, generate
from .solver import ObjectiveMode, SolverConfig, cold_start, solve

DEFAULT_THRESHOLDS = (0.01, 0.001)


@dataclass
class BenchmarkReport:
    rows: list[dict]
    aggregates: dict
    config: dict
    timings: dict

    def to_dict(self, include_timings: bool = True) -> dict:
        doc = {"config": self.config, "aggregates": self.aggregates, "rows": self.rows}
        if include_timings:
            doc["timings"] = self.timings
        return doc

    def save_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    def save_csv(self, path) -> None:
        if not self.rows:
            return
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(self.rows[0]))
            writer.writeheader()
            writer.writerows(self.rows)


def _aggregate(rows: list[dict], thresholds) -> dict:
    agg: dict = {"instances": len(rows)}
    if not rows:
        return agg
    agg["success_rate"] = float(np.mean([r["success"] for r in rows]))
    for metric in ("smoothness", "arc_length", "min_pairwise_clearance"):
        vals = [r[metric] for r in rows if r[metric] is not None]
        agg[f"mean_{metric}"] = float(np.mean(vals)) if vals else None
    for th in thresholds:
        key = f"iters_to_{th:g}"
        vals = [r[key] for r in rows if r[key] is not None]
        agg[key] = {
            "mean": float(np.mean(vals)) if vals else None,
            "max": int(np.max(vals)) if vals else None,
            "min": int(np.min(vals)) if vals else None,
            "reached": len(vals),
        }
    return agg


def run_benchmark(
    family: ScenarioFamily,
    n_list,
    num_instances: int,
    cfg: SolverConfig | None = None,
    candidate_source: str = "naive:32",
    n_d: int = 2,
    top_k: int = 3,
    seed: int = 0,
    thresholds=DEFAULT_THRESHOLDS,
) -> BenchmarkReport:
    """Per-instance pipeline runs; failures are recorded, never abort the sweep."""
    cfg = cfg or SolverConfig()
    rows = []
    t_start = time.perf_counter()
    for n in n_list:
        for inst in range(num_instances):
            inst_seed = seed + 1000 * n + inst
            row = {"n": n, "n_d": n_d, "instance": inst, "seed": inst_seed}
            try:
                scn = generate(family, n=n, n_d=n_d, seed=inst_seed)
                basis = build_basis(scn.horizon)
                sys = assemble(scn, basis, d_max=cfg.d_max)
                if candidate_source.startswith("naive:"):
                    count = int(candidate_source.split(":", 1)[1])
                    batch = pipeline.sample_naive_prior(scn, basis, count, seed=inst_seed)
                else:
                    batch = pipeline.load_candidates(candidate_source, scn)
                result = pipeline.plan(
                    scn, batch, top_k=min(top_k, len(batch)), cfg=cfg, sys=sys, basis=basis
                )
                met = compute_metrics(result.coeffs, basis, scn)
                best = result.best_refined
                row.update(
                    success=result.status == "success",
                    status=result.status,
                    primal=best.primal,
                    smoothness=met.smoothness,
                    arc_length=met.arc_length,
                    min_pairwise_clearance=met.min_pairwise_clearance,
                )
                for th in thresholds:
                    row[f"iters_to_{th:g}"] = best.iterations_to(th)
            except Exception as exc:  # noqa: BLE001 - sweep must survive bad instances
                row.update(
                    success=False, status=f"error: {exc}", primal=None,
                    smoothness=None, arc_length=None, min_pairwise_clearance=None,
                )
                for th in thresholds:
                    row[f"iters_to_{th:g}"] = None
            rows.append(row)
    wall = time.perf_counter() - t_start
    config = {
        "family": family.kind,
        "n_list": list(n_list),
        "n_d": n_d,
        "num_instances": num_instances,
        "candidate_source": candidate_source,
        "top_k": top_k,
        "seed": seed,
        "thresholds": list(thresholds),
        "solver": {
            "rho": cfg.rho, "max_iters": cfg.max_iters,
            "primal_tol": cfg.primal_tol, "fp_tol": cfg.fp_tol,
        },
    }
    return BenchmarkReport(
        rows=rows,
        aggregates=_aggregate(rows, thresholds),
        config=config,
        timings={"wall_time_s": wall},
    )


def gen_dataset(
    family: ScenarioFamily,
    n: int,
    count: int,
    out_path,
    cfg: SolverConfig | None = None,
    n_d: int = 2,
    seed: int = 0,
) -> int:
    """Solve `count` instances in smoothness mode and store the converged
    (scenario, coefficients) pairs; instances that miss primal_tol are skipped.
    Returns the number of stored pairs."""
    cfg = cfg or SolverConfig()
    stored = 0
    with open(out_path, "w") as fh:
        for inst in range(count):
            scn = generate(family, n=n, n_d=n_d, seed=seed + inst)
            basis = build_basis(scn.horizon)
            sys = assemble(scn, basis, d_max=cfg.d_max)
            res = solve(cold_start(scn, sys), sys, ObjectiveMode.smoothness(), cfg)
            if res.primal < cfg.primal_tol:
                io.append_dataset_record(fh, scn, res.coeffs(sys))
                stored += 1
    return stored
