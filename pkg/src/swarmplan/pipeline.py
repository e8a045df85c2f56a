"""Three-stage planner: sample candidates, rank by constraint residual,
refine the best with the safety filter, select the smoothest feasible one."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import io
from .basis import BasisMatrices, straight_line_coeffs
from .constraints import ConstraintSystem, assemble
from .errors import UsageError
from .metrics import compute_metrics
from .scenario import Scenario
from .solver import (
    KktCache,
    ObjectiveMode,
    SolverConfig,
    SolverResult,
    SolverState,
    batch_primal_residual,
    solve_batch,
    stack_xi,
)

DEFAULT_COUNT = 256
DEFAULT_TOP_K = 10
NOISE_FRACTION = 0.25  # of the workspace extent


@dataclass
class CandidateBatch:
    candidates: list[np.ndarray]     # each (n, n_d, n_basis)
    source: str                      # "naive_prior" | "flow_file"
    pre_residual: np.ndarray | None = None
    post_residual: np.ndarray | None = None
    smoothness: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.candidates)


@dataclass
class PlanResult:
    coeffs: np.ndarray
    index: int                       # index into the input batch
    status: str                      # "success" | "infeasible_best_effort"
    batch: CandidateBatch
    order: np.ndarray                # candidate indices sorted by pre-residual
    refined: list[SolverResult]      # results for order[:top_k]
    smoothness: float

    @property
    def best_refined(self) -> SolverResult:
        return self.refined[int(np.flatnonzero(self.order == self.index)[0])]


def sample_naive_prior(
    scn: Scenario,
    basis: BasisMatrices,
    count: int,
    seed: int = 0,
    noise_scale: float | None = None,
) -> CandidateBatch:
    """Straight-line coefficient sets with zero-boundary perturbations.

    The first candidate is noise free; interior coefficients of the rest get
    Gaussian noise so endpoints (and hence the boundary conditions) are exact.
    """
    if count < 1:
        raise UsageError("count must be >= 1")
    if noise_scale is None:
        noise_scale = NOISE_FRACTION * float((scn.p_max - scn.p_min).max())
    rng = np.random.default_rng(seed)
    base = straight_line_coeffs(scn.starts, scn.goals, basis.config.n_basis)
    cands = [base.copy()]
    for _ in range(count - 1):
        noise = np.zeros_like(base)
        noise[:, :, 1:-1] = noise_scale * rng.standard_normal(base[:, :, 1:-1].shape)
        cands.append(base + noise)
    return CandidateBatch(candidates=cands, source="naive_prior")


def load_candidates(path, scn: Scenario) -> CandidateBatch:
    return CandidateBatch(candidates=io.load_candidates(path, scn), source="flow_file")


def plan(
    scn: Scenario,
    batch: CandidateBatch,
    top_k: int = DEFAULT_TOP_K,
    cfg: SolverConfig | None = None,
    sys: ConstraintSystem | None = None,
    basis: BasisMatrices | None = None,
    warmstarts: list[tuple[np.ndarray, np.ndarray]] | None = None,
) -> PlanResult:
    """Rank all candidates by primal residual, refine the top_k in projection
    mode, and return the smoothest refined candidate that reached primal_tol
    (or the lowest-residual one, flagged infeasible_best_effort). Ties break
    toward the lower candidate index."""
    if len(batch) == 0:
        raise UsageError("candidate batch is empty")
    if top_k > len(batch):
        raise UsageError(f"top_k ({top_k}) exceeds batch size ({len(batch)})")
    cfg = cfg or SolverConfig()
    if basis is None:
        from .basis import build_basis

        basis = build_basis(scn.horizon)
    sys = sys or assemble(scn, basis, d_max=cfg.d_max)

    xi_all = stack_xi(batch.candidates)
    batch.pre_residual = batch_primal_residual(xi_all, sys)
    order = np.argsort(batch.pre_residual, kind="stable")

    top = order[:top_k]
    targets = xi_all[..., top]
    mode = ObjectiveMode.projection(targets)
    if warmstarts is not None:
        xi0 = stack_xi([warmstarts[i][0] for i in top])
        lam0 = stack_xi([warmstarts[i][1] for i in top])
    else:
        xi0, lam0 = targets.copy(), np.zeros_like(targets)
    cache = KktCache(sys, mode, cfg)
    refined = solve_batch(SolverState(xi=xi0, lam=lam0), sys, mode, cfg, cache)

    post = np.full(len(batch), np.nan)
    smooth = np.full(len(batch), np.nan)
    for pos, idx in enumerate(top):
        res = refined[pos]
        post[idx] = res.primal
        smooth[idx] = compute_metrics(res.coeffs(sys), basis, scn, dense_factor=1).smoothness
    batch.post_residual = post
    batch.smoothness = smooth

    feasible = [i for i in top if post[i] < cfg.primal_tol]
    if feasible:
        best = min(feasible, key=lambda i: (smooth[i], i))
        status = "success"
    else:
        best = min(top, key=lambda i: (post[i], i))
        status = "infeasible_best_effort"
    best_pos = int(np.flatnonzero(top == best)[0])
    return PlanResult(
        coeffs=refined[best_pos].coeffs(sys),
        index=int(best),
        status=status,
        batch=batch,
        order=order,
        refined=refined,
        smoothness=float(smooth[best]),
    )
