"""Augmented-Lagrangian alternating-minimization solver for the safety filter.

One iteration applies, in order: the closed-form angle updates (arctan2), the
closed-form normalized-distance update with clamping, the slack update, the
multiplier update, and an equality-constrained QP for the coefficients solved
through a pre-factorized KKT system. The whole iteration is an explicit map on
(xi, lambda); batches share one factorization and execute the QP step as a
single stacked solve.

The KKT left-hand side includes rho*(F^T F + G^T G) and the right-hand side
the matching rho*G^T(h - s) term, so that the coefficient step is the exact
minimizer of the augmented Lagrangian subject to A xi = b.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .basis import straight_line_coeffs, unflatten_coeffs
from .constraints import ConstraintSystem, SphericalVars, compute_e, extract_spherical
from .errors import SetupError, ShapeError, UsageError
from .scenario import Scenario


@dataclass(frozen=True)
class SolverConfig:
    rho: float = 1.0
    max_iters: int = 15000
    primal_tol: float = 1e-3
    fp_tol: float = 1e-8
    d_max: float = 1e6

    def __post_init__(self):
        if not self.rho > 0:
            raise SetupError(f"rho must be positive, got {self.rho}")
        if not (self.primal_tol > 0 and self.fp_tol > 0):
            raise SetupError("tolerances must be positive")


@dataclass(frozen=True)
class ObjectiveMode:
    """Quadratic objective: projection onto the feasible set or min acceleration.

    In projection mode the quadratic term is the identity and the linear term
    the (per-member) target coefficients; in smoothness mode the quadratic term
    is the acceleration Gram matrix and the linear term zero.
    """
    kind: str                       # "projection" | "smoothness"
    target: np.ndarray | None = None  # (n_d, nvar_ax) or (n_d, nvar_ax, B)

    @classmethod
    def projection(cls, target: np.ndarray) -> "ObjectiveMode":
        return cls(kind="projection", target=np.asarray(target, dtype=float))

    @classmethod
    def smoothness(cls) -> "ObjectiveMode":
        return cls(kind="smoothness")


class KktCache:
    """Factorization of the per-axis KKT matrix; reusable across iterations
    and across batch members sharing one constraint system."""

    def __init__(self, sys: ConstraintSystem, mode: ObjectiveMode, cfg: SolverConfig):
        d = sys.dims
        if mode.kind == "projection":
            Q = np.eye(d.nvar_ax)
        elif mode.kind == "smoothness":
            Wdd = sys.basis.Wdd
            Q = np.kron(np.eye(d.n), Wdd.T @ Wdd)
        else:
            raise UsageError(f"unknown objective kind {mode.kind!r}")
        H = Q + cfg.rho * (sys.F.T @ sys.F + sys.G.T @ sys.G)
        M = np.zeros((d.nvar_ax + d.a_rows,) * 2)
        M[: d.nvar_ax, : d.nvar_ax] = H
        M[: d.nvar_ax, d.nvar_ax :] = sys.A.T
        M[d.nvar_ax :, : d.nvar_ax] = sys.A
        if np.linalg.cond(M) > 1e14:
            raise SetupError("KKT matrix is singular or near-singular")
        self.lu = scipy.linalg.lu_factor(M)
        self.size = M.shape[0]
        self.nvar_ax = d.nvar_ax

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """rhs (size, m): stacked right-hand sides; returns the xi block."""
        sol = scipy.linalg.lu_solve(self.lu, rhs)
        return sol[: self.nvar_ax]


@dataclass
class SolverState:
    """Batched iterate; trailing dimension indexes batch members."""
    xi: np.ndarray                  # (n_d, nvar_ax, B)
    lam: np.ndarray                 # (n_d, nvar_ax, B)
    s: np.ndarray | None = None     # (n_d, g_rows, B)
    vars: SphericalVars | None = None
    iteration: int = 0

    @property
    def batch_size(self) -> int:
        return self.xi.shape[-1]


@dataclass
class SolverResult:
    xi: np.ndarray                  # (n_d, nvar_ax)
    lam: np.ndarray
    status: str                     # converged_primal | converged_fp | max_iters
    iterations: int
    primal: float
    trace: np.ndarray               # (iterations+1, 2): primal, fixed-point
    eq_violation_max: float
    wall_time: float = 0.0

    @property
    def success(self) -> bool:
        return self.status == "converged_primal"

    def coeffs(self, sys: ConstraintSystem) -> np.ndarray:
        d = sys.dims
        return unflatten_coeffs(self.xi.reshape(-1), d.n, d.n_d, d.n_basis)

    def iterations_to(self, threshold: float) -> int | None:
        below = np.flatnonzero(self.trace[:, 0] < threshold)
        return int(below[0]) if below.size else None


def xi_from_coeffs(coeffs: np.ndarray) -> np.ndarray:
    """(n, n_d, n_basis) -> per-axis layout (n_d, nvar_ax, 1)."""
    coeffs = np.asarray(coeffs, dtype=float)
    n, n_d, n_xi = coeffs.shape
    return coeffs.transpose(1, 0, 2).reshape(n_d, n * n_xi, 1)


def stack_xi(coeff_list) -> np.ndarray:
    """List of (n, n_d, n_basis) arrays -> batched (n_d, nvar_ax, B)."""
    return np.concatenate([xi_from_coeffs(c) for c in coeff_list], axis=-1)


def cold_start(scn: Scenario, sys: ConstraintSystem) -> SolverState:
    """Straight-line coefficients, zero multipliers."""
    coeffs = straight_line_coeffs(scn.starts, scn.goals, sys.dims.n_basis)
    xi = xi_from_coeffs(coeffs)
    return SolverState(xi=xi, lam=np.zeros_like(xi))


def state_from_xi(xi: np.ndarray, lam: np.ndarray | None = None) -> SolverState:
    if xi.ndim == 2:
        xi = xi[:, :, None]
    lam = np.zeros_like(xi) if lam is None else (lam[:, :, None] if lam.ndim == 2 else lam)
    return SolverState(xi=xi.astype(float), lam=lam.astype(float))


def _analyze(xi: np.ndarray, sys: ConstraintSystem):
    """Spherical vars, targets, residual vectors and slack of the current xi."""
    from .constraints import positions_from_xi

    pos = positions_from_xi(xi, sys)
    vars = extract_spherical(pos, sys)
    e = compute_e(vars, sys)
    r1 = np.einsum("rv,avb->arb", sys.F, xi) - e
    viol = np.einsum("rv,avb->arb", sys.G, xi) - sys.h[:, :, None]
    s = np.maximum(0.0, -viol)
    r2 = viol + s  # equals max(0, G xi - h)
    return vars, e, r1, r2, s


def _norms(r: np.ndarray) -> np.ndarray:
    """Per-member 2-norm of (n_d, rows, B)."""
    return np.sqrt(np.einsum("arb,arb->b", r, r))


def primal_residual(state: SolverState, sys: ConstraintSystem) -> float | np.ndarray:
    """||F xi - e||_2 + ||max(0, G xi - h)||_2; zero implies the separation,
    obstacle and workspace constraints all hold at the grid points."""
    _, _, r1, r2, _ = _analyze(state.xi, sys)
    out = _norms(r1) + _norms(r2)
    return float(out[0]) if out.size == 1 else out


def batch_primal_residual(xi: np.ndarray, sys: ConstraintSystem) -> np.ndarray:
    _, _, r1, r2, _ = _analyze(xi, sys)
    return _norms(r1) + _norms(r2)


def fixed_point_residual(prev: SolverState, nxt: SolverState) -> float | np.ndarray:
    """Squared norm of the (xi, lambda) change under one application of the map."""
    dxi = nxt.xi - prev.xi
    dlam = nxt.lam - prev.lam
    out = np.einsum("avb,avb->b", dxi, dxi) + np.einsum("avb,avb->b", dlam, dlam)
    return float(out[0]) if out.size == 1 else out


def _target(mode: ObjectiveMode, B: int) -> np.ndarray | float:
    if mode.kind != "projection":
        return 0.0
    t = mode.target
    if t.ndim == 2:
        t = t[:, :, None]
    if t.shape[-1] == 1 and B > 1:
        t = np.broadcast_to(t, t.shape[:2] + (B,))
    if t.shape[-1] != B:
        raise ShapeError(f"projection target batch {t.shape[-1]} != state batch {B}")
    return t


def _step(
    xi: np.ndarray,
    lam: np.ndarray,
    sys: ConstraintSystem,
    mode: ObjectiveMode,
    cfg: SolverConfig,
    cache: KktCache,
    target: np.ndarray | float,
):
    """One application of the fixed-point map. Returns the new (xi, lambda),
    the primal residual of the *input* xi, and the analysis intermediates."""
    d = sys.dims
    B = xi.shape[-1]
    rho = cfg.rho
    vars, e, r1, r2, s = _analyze(xi, sys)
    lam_new = (
        lam
        - rho * np.einsum("rv,arb->avb", sys.F, r1)
        - rho * np.einsum("rv,arb->avb", sys.G, r2)
    )
    eta = (
        rho * np.einsum("rv,arb->avb", sys.F, e)
        + rho * np.einsum("rv,arb->avb", sys.G, sys.h[:, :, None] - s)
        + lam_new
        + target
    )
    rhs = np.empty((cache.size, d.n_d, B))
    rhs[: d.nvar_ax] = eta.transpose(1, 0, 2)
    rhs[d.nvar_ax :] = sys.b.T[:, :, None]
    xi_new = cache.solve(rhs.reshape(cache.size, -1)).reshape(d.nvar_ax, d.n_d, B)
    xi_new = xi_new.transpose(1, 0, 2)
    primal = _norms(r1) + _norms(r2)
    return xi_new, lam_new, primal, vars, s


def fixed_point_step(
    state: SolverState,
    sys: ConstraintSystem,
    mode: ObjectiveMode,
    cfg: SolverConfig,
    cache: KktCache | None = None,
) -> SolverState:
    cache = cache or KktCache(sys, mode, cfg)
    target = _target(mode, state.batch_size)
    xi_new, lam_new, _, vars, s = _step(state.xi, state.lam, sys, mode, cfg, cache, target)
    return SolverState(xi=xi_new, lam=lam_new, s=s, vars=vars, iteration=state.iteration + 1)


def lagrangian(
    xi: np.ndarray,
    lam: np.ndarray,
    vars: SphericalVars,
    s: np.ndarray,
    sys: ConstraintSystem,
    mode: ObjectiveMode,
    cfg: SolverConfig,
) -> np.ndarray:
    """Value of the augmented Lagrangian at an explicit point, per member."""
    e = compute_e(vars, sys)
    r1 = np.einsum("rv,avb->arb", sys.F, xi) - e
    rg = np.einsum("rv,avb->arb", sys.G, xi) - sys.h[:, :, None] + s
    if mode.kind == "projection":
        diff = xi - _target(mode, xi.shape[-1])
        obj = 0.5 * np.einsum("avb,avb->b", diff, diff)
    else:
        d = sys.dims
        coef = xi.reshape(d.n_d, d.n, d.n_basis, -1)
        acc = np.einsum("kc,ancb->ankb", sys.basis.Wdd, coef)
        obj = 0.5 * np.einsum("ankb,ankb->b", acc, acc)
    pen = 0.5 * cfg.rho * (
        np.einsum("arb,arb->b", r1, r1) + np.einsum("arb,arb->b", rg, rg)
    )
    return obj + pen - np.einsum("avb,avb->b", lam, xi)


def solve_batch(
    init: SolverState,
    sys: ConstraintSystem,
    mode: ObjectiveMode,
    cfg: SolverConfig | None = None,
    cache: KktCache | None = None,
) -> list[SolverResult]:
    """Run the fixed-point iteration for every batch member until its own
    convergence. All members share the constraint system and factorization;
    the coefficient steps of the active members execute as one stacked solve.
    """
    cfg = cfg or SolverConfig()
    cache = cache or KktCache(sys, mode, cfg)
    t0 = time.perf_counter()
    B = init.batch_size
    full_target = _target(mode, B)
    xi = init.xi.astype(float).copy()
    lam = init.lam.astype(float).copy()
    traces: list[list[tuple[float, float]]] = [[] for _ in range(B)]
    status = np.array(["max_iters"] * B, dtype=object)
    eq_max = np.zeros(B)
    last_fp = np.full(B, np.inf)
    active = np.arange(B)

    for it in range(cfg.max_iters + 1):
        xi_a = xi[..., active]
        lam_a = lam[..., active]
        tgt = full_target[..., active] if isinstance(full_target, np.ndarray) else 0.0
        xi_new, lam_new, primal, _, _ = _step(xi_a, lam_a, sys, mode, cfg, cache, tgt)
        for pos, b in enumerate(active):
            traces[b].append((float(primal[pos]), float(last_fp[b])))
        # never stop before the first coefficient step: the input state may
        # have a tiny primal residual yet violate the boundary equalities
        conv_p = (primal < cfg.primal_tol) & (it >= 1)
        conv_f = last_fp[active] < cfg.fp_tol
        done = conv_p | conv_f
        status[active[conv_f & ~conv_p]] = "converged_fp"
        status[active[conv_p]] = "converged_primal"
        keep = ~done
        if it == cfg.max_iters or not keep.any():
            break
        active = active[keep]
        xi_new, lam_new = xi_new[..., keep], lam_new[..., keep]
        dxi = xi_new - xi[..., active]
        dlam = lam_new - lam[..., active]
        last_fp[active] = (
            np.einsum("avb,avb->b", dxi, dxi) + np.einsum("avb,avb->b", dlam, dlam)
        )
        xi[..., active] = xi_new
        lam[..., active] = lam_new
        eq_res = np.einsum("rv,avb->arb", sys.A, xi_new) - sys.b[:, :, None]
        eq_max[active] = np.maximum(eq_max[active], np.abs(eq_res).max(axis=(0, 1)))

    wall = time.perf_counter() - t0
    results = []
    for b in range(B):
        tr = np.array(traces[b])
        results.append(
            SolverResult(
                xi=xi[..., b],
                lam=lam[..., b],
                status=str(status[b]),
                iterations=len(tr) - 1,
                primal=float(tr[-1, 0]),
                trace=tr,
                eq_violation_max=float(eq_max[b]),
                wall_time=wall,
            )
        )
    return results


def solve(
    init: SolverState,
    sys: ConstraintSystem,
    mode: ObjectiveMode,
    cfg: SolverConfig | None = None,
    cache: KktCache | None = None,
) -> SolverResult:
    if init.batch_size != 1:
        raise UsageError("solve expects a single-member state; use solve_batch")
    return solve_batch(init, sys, mode, cfg, cache)[0]
