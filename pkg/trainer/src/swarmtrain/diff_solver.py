"""Differentiable re-implementation of the planner's fixed-point iteration.

The planner package runs the iteration in numpy; training the warm-start
network requires gradients through a small number of unrolled iterations, so
the step is re-implemented here with torch in float64, formula for formula:
the closed-form angle updates (arctan2, including the coincident-point rule),
the clamped normalized-distance update, the slack and multiplier updates, and
the equality-constrained coefficient step through the same KKT system.
Conformance with the planner step is enforced by the golden-file test suite
(agreement within 1e-6 per step).

Clamps follow the subgradient convention: zero gradient on the clamped
branch, which is what torch.clamp provides.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .errors import TrainerError

_PI_HALF = 0.5 * torch.pi


@dataclass
class TorchSystem:
    """Constraint system tensors shared by every unrolled step.

    All tensors are float64. `b` may carry a trailing batch dimension so one
    system serves a batch of scenarios that differ only in their boundary
    conditions (same robot count, workspace and horizon).
    """
    F: torch.Tensor            # (f_rows, nvar_ax)
    G: torch.Tensor            # (g_rows, nvar_ax)
    A: torch.Tensor            # (a_rows, nvar_ax)
    b: torch.Tensor            # (n_d, a_rows) or (n_d, a_rows, B)
    h: torch.Tensor            # (n_d, g_rows)
    W: torch.Tensor            # (K+1, n_basis)
    M: torch.Tensor            # KKT matrix, (nvar_ax + a_rows,)^2
    pair_ii: torch.Tensor      # (n_pairs,) long
    pair_jj: torch.Tensor
    pair_axes: torch.Tensor    # (3,)
    obs_axes: torch.Tensor     # (n_obs, 3)
    obs_pos: torch.Tensor      # (n_d, n_obs, K+1)
    n: int
    n_d: int
    n_basis: int
    num_steps: int
    nvar_ax: int
    a_rows: int
    rows_pairs: int
    rows_obs: int
    n_pairs: int
    n_obs: int
    d_max: float
    rho: float

    @classmethod
    def from_planner(cls, sys, mode: str = "projection", rho: float = 1.0) -> "TorchSystem":
        """Build from a planner ConstraintSystem; `mode` picks the quadratic
        term of the coefficient step ("projection" or "smoothness")."""
        d = sys.dims
        t = lambda a: torch.as_tensor(np.asarray(a), dtype=torch.float64)
        if mode == "projection":
            Q = np.eye(d.nvar_ax)
        elif mode == "smoothness":
            Wdd = sys.basis.Wdd
            Q = np.kron(np.eye(d.n), Wdd.T @ Wdd)
        else:
            raise TrainerError(f"unknown objective mode {mode!r}")
        H = Q + rho * (sys.F.T @ sys.F + sys.G.T @ sys.G)
        M = np.zeros((d.nvar_ax + d.a_rows,) * 2)
        M[: d.nvar_ax, : d.nvar_ax] = H
        M[: d.nvar_ax, d.nvar_ax :] = sys.A.T
        M[d.nvar_ax :, : d.nvar_ax] = sys.A
        ii = [p[0] for p in sys.pair_index]
        jj = [p[1] for p in sys.pair_index]
        return cls(
            F=t(sys.F), G=t(sys.G), A=t(sys.A), b=t(sys.b), h=t(sys.h),
            W=t(sys.basis.W), M=t(M),
            pair_ii=torch.as_tensor(ii, dtype=torch.long),
            pair_jj=torch.as_tensor(jj, dtype=torch.long),
            pair_axes=t(sys.pair_axes), obs_axes=t(sys.obs_axes), obs_pos=t(sys.obs_pos),
            n=d.n, n_d=d.n_d, n_basis=d.n_basis, num_steps=d.num_steps,
            nvar_ax=d.nvar_ax, a_rows=d.a_rows,
            rows_pairs=d.rows_pairs, rows_obs=d.rows_obs,
            n_pairs=d.n_pairs, n_obs=d.n_obs,
            d_max=sys.d_max, rho=rho,
        )

    def with_b(self, b: torch.Tensor) -> "TorchSystem":
        """Same system with batched boundary conditions (n_d, a_rows, B)."""
        import dataclasses

        return dataclasses.replace(self, b=b.to(torch.float64))


def xi_from_coeffs(coeffs: torch.Tensor) -> torch.Tensor:
    """(B, n, n_d, n_xi) -> per-axis layout (n_d, n*n_xi, B)."""
    B, n, n_d, c = coeffs.shape
    return coeffs.permute(2, 1, 3, 0).reshape(n_d, n * c, B)


def coeffs_from_xi(xi: torch.Tensor, n: int, n_basis: int) -> torch.Tensor:
    """(n_d, n*n_xi, B) -> (B, n, n_d, n_xi)."""
    n_d = xi.shape[0]
    B = xi.shape[-1]
    return xi.reshape(n_d, n, n_basis, B).permute(3, 1, 0, 2)


def _spherical_of_deltas(delta, axes, n_d: int, d_max: float):
    ax_a = axes[..., 0]
    alpha = torch.atan2(delta[1], delta[0])
    if n_d == 3:
        ax_b = axes[..., 2]
        planar = torch.hypot(delta[0] / ax_a, delta[1] / ax_a)
        uz = delta[2] / ax_b
        beta = torch.where(
            (planar == 0.0) & (uz == 0.0),
            torch.full_like(alpha, _PI_HALF),
            torch.atan2(planar, uz),
        )
        sb, cb = torch.sin(beta), torch.cos(beta)
        num = (
            delta[0] * ax_a * torch.cos(alpha) * sb
            + delta[1] * ax_a * torch.sin(alpha) * sb
            + delta[2] * ax_b * cb
        )
        den = ax_a**2 * sb**2 + ax_b**2 * cb**2
    else:
        beta = torch.full_like(alpha, _PI_HALF)
        num = delta[0] * ax_a * torch.cos(alpha) + delta[1] * ax_a * torch.sin(alpha)
        den = (ax_a**2).expand_as(alpha)
    d = torch.clamp(num / den, 1.0, d_max)
    return alpha, beta, d


def _compute_e(ts: TorchSystem, xi: torch.Tensor) -> torch.Tensor:
    """Collision-free reconstruction targets of the current positions."""
    B = xi.shape[-1]
    coef = xi.reshape(ts.n_d, ts.n, ts.n_basis, B)
    pos = torch.einsum("kc,ancb->ankb", ts.W, coef)  # (n_d, n, K+1, B)

    blocks: list[list[torch.Tensor]] = [[] for _ in range(ts.n_d)]
    if ts.n_pairs:
        delta = pos[:, ts.pair_ii] - pos[:, ts.pair_jj]
        alpha, beta, dd = _spherical_of_deltas(delta, ts.pair_axes, ts.n_d, ts.d_max)
        sa, ca = torch.sin(alpha), torch.cos(alpha)
        sb, cb = torch.sin(beta), torch.cos(beta)
        a_r = ts.pair_axes[0]
        blocks[0].append((a_r * dd * ca * sb).reshape(ts.rows_pairs, B))
        blocks[1].append((a_r * dd * sa * sb).reshape(ts.rows_pairs, B))
        if ts.n_d == 3:
            blocks[2].append((ts.pair_axes[2] * dd * cb).reshape(ts.rows_pairs, B))
    if ts.n_obs:
        delta_o = pos[:, :, None] - ts.obs_pos[:, None, :, :, None]
        alpha_o, beta_o, d_o = _spherical_of_deltas(
            delta_o, ts.obs_axes[:, None, None], ts.n_d, ts.d_max
        )
        sao, cao = torch.sin(alpha_o), torch.cos(alpha_o)
        sbo, cbo = torch.sin(beta_o), torch.cos(beta_o)
        a_o = ts.obs_axes[None, :, 0, None, None]
        obs_xyz = ts.obs_pos[:, None, :, :, None]
        blocks[0].append((obs_xyz[0] + a_o * d_o * cao * sbo).reshape(ts.rows_obs, B))
        blocks[1].append((obs_xyz[1] + a_o * d_o * sao * sbo).reshape(ts.rows_obs, B))
        if ts.n_d == 3:
            b_o = ts.obs_axes[None, :, 2, None, None]
            blocks[2].append((obs_xyz[2] + b_o * d_o * cbo).reshape(ts.rows_obs, B))
    return torch.stack([torch.cat(bl, dim=0) for bl in blocks])  # (n_d, f_rows, B)


def fixed_point_step(
    ts: TorchSystem,
    xi: torch.Tensor,
    lam: torch.Tensor,
    target: torch.Tensor | float = 0.0,
):
    """One application of the fixed-point map on (xi, lam), both
    (n_d, nvar_ax, B). `target` is the projection target in the same layout
    (zero in smoothness mode). Returns (xi_new, lam_new)."""
    B = xi.shape[-1]
    rho = ts.rho
    e = _compute_e(ts, xi)
    r1 = torch.einsum("rv,avb->arb", ts.F, xi) - e
    viol = torch.einsum("rv,avb->arb", ts.G, xi) - ts.h[:, :, None]
    s = torch.relu(-viol)
    r2 = viol + s
    lam_new = (
        lam
        - rho * torch.einsum("rv,arb->avb", ts.F, r1)
        - rho * torch.einsum("rv,arb->avb", ts.G, r2)
    )
    eta = (
        rho * torch.einsum("rv,arb->avb", ts.F, e)
        + rho * torch.einsum("rv,arb->avb", ts.G, ts.h[:, :, None] - s)
        + lam_new
        + target
    )
    b = ts.b if ts.b.ndim == 3 else ts.b[:, :, None].expand(ts.n_d, ts.a_rows, B)
    rhs = torch.cat([eta, b], dim=1)                       # (n_d, size, B)
    rhs = rhs.permute(1, 0, 2).reshape(ts.M.shape[0], -1)  # (size, n_d*B)
    sol = torch.linalg.solve(ts.M, rhs)
    xi_new = sol[: ts.nvar_ax].reshape(ts.nvar_ax, ts.n_d, B).permute(1, 0, 2)
    return xi_new, lam_new


def primal_residual(ts: TorchSystem, xi: torch.Tensor) -> torch.Tensor:
    """Per-member scalar primal residual, matching the planner's definition."""
    e = _compute_e(ts, xi)
    r1 = torch.einsum("rv,avb->arb", ts.F, xi) - e
    r2 = torch.relu(torch.einsum("rv,avb->arb", ts.G, xi) - ts.h[:, :, None])
    return torch.sqrt(torch.einsum("arb,arb->b", r1, r1)) + torch.sqrt(
        torch.einsum("arb,arb->b", r2, r2)
    )


def unroll(
    ts: TorchSystem,
    xi0: torch.Tensor,
    lam0: torch.Tensor,
    target: torch.Tensor | float,
    L: int,
):
    """L applications of the map; returns the list of L+1 (xi, lam) states."""
    states = [(xi0, lam0)]
    for _ in range(L):
        states.append(fixed_point_step(ts, states[-1][0], states[-1][1], target))
    return states


def unroll_loss(
    ts: TorchSystem,
    xi0: torch.Tensor,
    lam0: torch.Tensor,
    target: torch.Tensor,
    xi_ref: torch.Tensor,
    L: int,
) -> torch.Tensor:
    """Mean over the batch of: the fixed-point residual summed over the L
    unrolled iterations plus the squared distance of the final coefficients
    from the reference sample."""
    states = unroll(ts, xi0, lam0, target, L)
    per_member = torch.zeros(xi0.shape[-1], dtype=xi0.dtype, device=xi0.device)
    for (xp, lp), (xn, ln) in zip(states[:-1], states[1:]):
        dxi = xn - xp
        dlam = ln - lp
        per_member = per_member + torch.einsum("avb,avb->b", dxi, dxi)
        per_member = per_member + torch.einsum("avb,avb->b", dlam, dlam)
    diff = states[-1][0] - xi_ref
    per_member = per_member + torch.einsum("avb,avb->b", diff, diff)
    return per_member.mean()
