"""Toy training family, dataset generation, and tensor packing.

The training family is a 2-robot position swap: random starts in the unit
box with the goals being the starts exchanged, so the straight-line
trajectories always collide and every converged solution has to commit to an
avoidance side. Datasets are produced by the planner's solver in smoothness
mode and stored in the shared JSON-lines schema.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from . import bridge
from .errors import TrainerError


def make_swap_scenario(seed: int, n: int = 2, radius: float = 0.1, horizon=None):
    """Deterministic swap instance of the toy family: random starts, goals in
    reversed robot order so every straight-line path crosses the others."""
    from swarmplan.scenario import Scenario, ScenarioFamily, generate

    base = generate(
        ScenarioFamily(kind="random_box", robot_radius=radius),
        n=n, n_d=2, seed=seed, horizon=horizon,
    )
    scn = Scenario(
        n=n, n_d=2, radii=base.radii,
        starts=base.starts, goals=base.starts[::-1].copy(),
        obstacles=[], p_min=base.p_min, p_max=base.p_max,
        horizon=base.horizon, seed=seed,
    )
    scn.validate()
    return scn


def gen_swap_dataset(
    count: int, out_path, seed: int = 0, n: int = 2, radius: float = 0.1, horizon=None
) -> int:
    """Solve `count` swap instances and store the converged pairs; returns the
    number stored (non-converged instances are skipped)."""
    from swarmplan import io as plan_io
    from swarmplan.basis import build_basis
    from swarmplan.constraints import assemble
    from swarmplan.solver import ObjectiveMode, SolverConfig, cold_start, solve

    cfg = SolverConfig()
    stored = 0
    basis = None
    with open(out_path, "w") as fh:
        for inst in range(count):
            scn = make_swap_scenario(seed + inst, n=n, radius=radius, horizon=horizon)
            if basis is None or basis.config != scn.horizon:
                basis = build_basis(scn.horizon)
            sys = assemble(scn, basis, d_max=cfg.d_max)
            res = solve(cold_start(scn, sys), sys, ObjectiveMode.smoothness(), cfg)
            if res.primal < cfg.primal_tol:
                plan_io.append_dataset_record(fh, scn, res.coeffs(sys))
                stored += 1
    return stored


def conditions_of(doc) -> tuple[np.ndarray, np.ndarray]:
    """Per-robot (start, goal) rows and per-obstacle (position, velocity) rows.

    Accepts a bridge ScenarioDoc or a planner Scenario."""
    starts = np.asarray(doc.starts, dtype=float)
    goals = np.asarray(doc.goals, dtype=float)
    n_d = starts.shape[1]
    sg = np.concatenate([starts, goals], axis=1)  # (n, 2*n_d)
    rows = []
    for o in doc.obstacles:
        center = o["center"] if isinstance(o, dict) else o.center
        vel = o["velocity"] if isinstance(o, dict) else o.velocity
        rows.append(np.concatenate([np.asarray(center)[:n_d], np.asarray(vel)[:n_d]]))
    obs = np.array(rows) if rows else np.zeros((0, 2 * n_d))
    return sg, obs


@dataclass
class TrainingSet:
    """Stacked toy dataset: every record must share (n, n_d, n_xi, n_obs)."""
    coeffs: torch.Tensor    # (N, n, n_d, n_xi)
    sg: torch.Tensor        # (N, n, 2*n_d)
    obs: torch.Tensor       # (N, n_obs, 2*n_d)
    docs: list

    def __len__(self) -> int:
        return self.coeffs.shape[0]


def load_training_set(path) -> TrainingSet:
    coeffs, sgs, obss, docs = [], [], [], []
    for doc, c in bridge.load_dataset(path):
        sg, obs = conditions_of(doc)
        coeffs.append(c)
        sgs.append(sg)
        obss.append(obs)
        docs.append(doc)
    if not coeffs:
        raise TrainerError(f"dataset {path} is empty")
    shapes = {c.shape for c in coeffs}
    if len(shapes) != 1 or len({o.shape for o in obss}) != 1:
        raise TrainerError("dataset records have inconsistent dimensions")
    t = lambda a: torch.as_tensor(np.stack(a), dtype=torch.float64)
    return TrainingSet(coeffs=t(coeffs), sg=t(sgs), obs=t(obss), docs=docs)


@dataclass
class Standardizer:
    """Per-coefficient standardization, pooled over samples and robots."""
    mean: torch.Tensor  # (n_d, n_xi)
    std: torch.Tensor   # (n_d, n_xi)

    @classmethod
    def fit(cls, coeffs: torch.Tensor) -> "Standardizer":
        flat = coeffs.reshape(-1, coeffs.shape[2], coeffs.shape[3])
        std = flat.std(dim=0)
        return cls(mean=flat.mean(dim=0), std=torch.clamp(std, min=1e-8))

    def apply(self, coeffs: torch.Tensor) -> torch.Tensor:
        return (coeffs - self.mean) / self.std

    def invert(self, coeffs: torch.Tensor) -> torch.Tensor:
        return coeffs * self.std + self.mean

    def state_dict(self) -> dict:
        return {"mean": self.mean, "std": self.std}

    @classmethod
    def from_state_dict(cls, d: dict) -> "Standardizer":
        return cls(mean=d["mean"], std=d["std"])
