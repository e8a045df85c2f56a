"""Trajectory quality metrics.

Smoothness is the mean acceleration norm over robots and grid steps (the same
scale as the reported m/s^2 tables), distinct from the quadratic objective the
solver minimizes. Arc length and clearance are computed on a densified grid;
clearance soundness is therefore conservative only up to that resolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisConfig, BasisMatrices, build_basis, evaluate
from .scenario import Scenario


@dataclass
class TrajectoryMetrics:
    smoothness: float              # mean ||p_ddot|| over robots and steps, m/s^2
    arc_length: float              # mean per-robot path length, m
    min_pairwise_clearance: float  # m, +inf for a single robot
    avg_pairwise_distance: float
    min_obstacle_clearance: float  # scaled units; >= 1 is collision free
    success: bool | None = None
    iterations: int | None = None

    def to_dict(self) -> dict:
        return {
            "smoothness": self.smoothness,
            "arc_length": self.arc_length,
            "min_pairwise_clearance": self.min_pairwise_clearance,
            "avg_pairwise_distance": self.avg_pairwise_distance,
            "min_obstacle_clearance": self.min_obstacle_clearance,
            "success": self.success,
            "iterations": self.iterations,
        }


def dense_basis(basis: BasisMatrices, factor: int = 10) -> BasisMatrices:
    cfg = basis.config
    return build_basis(
        BasisConfig(cfg.n_basis, factor * (cfg.num_steps - 1) + 1, cfg.duration)
    )


def compute_metrics(
    coeffs: np.ndarray,
    basis: BasisMatrices,
    scn: Scenario,
    dense_factor: int = 10,
) -> TrajectoryMetrics:
    acc = evaluate(coeffs, basis, 2)  # (n, K+1, n_d)
    smoothness = float(np.linalg.norm(acc, axis=2).mean())

    dense = dense_basis(basis, dense_factor)
    pos = evaluate(coeffs, dense, 0)  # (n, K_dense+1, n_d)
    seg = np.diff(pos, axis=1)
    arc = float(np.linalg.norm(seg, axis=2).sum(axis=1).mean())

    n = scn.n
    if n >= 2:
        dist = np.linalg.norm(pos[:, None] - pos[None, :], axis=3)  # (n, n, K)
        iu = np.triu_indices(n, k=1)
        pairwise = dist[iu[0], iu[1]]
        min_clear = float(pairwise.min())
        avg_dist = float(pairwise.mean())
    else:
        min_clear = float("inf")
        avg_dist = float("inf")

    if scn.obstacles:
        obs_pos = scn.obstacle_positions(dense.grid)  # (n_obs, K, n_d)
        radii = np.stack([o.radii for o in scn.obstacles])[:, : scn.n_d]
        scaled = (pos[:, None] - obs_pos[None, :]) / radii[None, :, None]
        min_obs = float(np.linalg.norm(scaled, axis=3).min())
    else:
        min_obs = float("inf")

    return TrajectoryMetrics(
        smoothness=smoothness,
        arc_length=arc,
        min_pairwise_clearance=min_clear,
        avg_pairwise_distance=avg_dist,
        min_obstacle_clearance=min_obs,
    )
