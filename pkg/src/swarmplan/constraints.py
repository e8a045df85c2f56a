"""Compact-form constraint system: boundary equalities, workspace box,
and the structured selection matrix for inter-robot / obstacle separation.

The separation inequalities are rewritten as equalities F xi = e(alpha, beta, d)
where (alpha, beta) are spherical angles of each relative position and d is the
line-of-sight distance normalized by the contact distance; d >= 1 is exactly
collision freedom. All matrices are per-axis: the same F, G, A apply to each
workspace axis, while e, h, b differ by axis.

Row layout per axis: first all robot pairs (lexicographic (i,j), i<j; step-minor),
then (robot, obstacle) pairs (robot-major, obstacle-second, step-minor).
Batched arrays carry the batch as the trailing dimension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisMatrices
from .errors import ShapeError
from .scenario import Scenario

# constraint-side inflation of contact distances; keeps continuous-time
# trajectories clear of contact despite sampling the constraints on a grid
DEFAULT_MARGIN = 1.1


@dataclass(frozen=True)
class SystemDims:
    n: int
    n_d: int
    n_basis: int
    num_steps: int
    n_obs: int
    n_pairs: int
    rows_pairs: int
    rows_obs: int
    nvar_ax: int   # n * n_basis, per-axis decision variables
    a_rows: int
    g_rows: int

    @property
    def f_rows(self) -> int:
        return self.rows_pairs + self.rows_obs

    @property
    def nvar(self) -> int:
        return self.n_d * self.nvar_ax


@dataclass(frozen=True)
class ConstraintSystem:
    A: np.ndarray          # (a_rows, nvar_ax), shared across axes
    b: np.ndarray          # (n_d, a_rows)
    G: np.ndarray          # (g_rows, nvar_ax)
    h: np.ndarray          # (n_d, g_rows)
    F: np.ndarray          # (f_rows, nvar_ax)
    pair_index: list[tuple[int, int]]
    obs_index: list[tuple[int, int]]
    pair_axes: np.ndarray  # effective (a, a, b) used in the reformulation
    obs_axes: np.ndarray   # (n_obs, 3) effective obstacle axes
    obs_pos: np.ndarray    # (n_d, n_obs, K+1) obstacle positions per step
    dims: SystemDims
    basis: BasisMatrices
    d_max: float = 1e6


@dataclass
class SphericalVars:
    """Spherical reformulation variables, trailing batch dimension.

    alpha/beta/d: (n_pairs, K+1, B); alpha_o/beta_o/d_o: (n, n_obs, K+1, B).
    In 2D all beta are pi/2 and the z components are absent from e.
    """
    alpha: np.ndarray
    beta: np.ndarray
    d: np.ndarray
    alpha_o: np.ndarray
    beta_o: np.ndarray
    d_o: np.ndarray


def pair_difference_matrix(n: int) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Rows select p_i - p_j for all pairs i < j, lexicographic order."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    D = np.zeros((len(pairs), n))
    for r, (i, j) in enumerate(pairs):
        D[r, i] = 1.0
        D[r, j] = -1.0
    return D, pairs


def assemble(
    scn: Scenario,
    basis: BasisMatrices,
    margin: float = DEFAULT_MARGIN,
    rest_to_rest: bool = True,
    d_max: float = 1e6,
) -> ConstraintSystem:
    """Build A, b, G, h, F and the bookkeeping for one scenario."""
    if basis.config != scn.horizon:
        raise ShapeError("basis does not match the scenario horizon")
    n, n_d, n_xi = scn.n, scn.n_d, basis.config.n_basis
    K1 = basis.config.num_steps
    W, Wd, Wdd = basis.W, basis.Wd, basis.Wdd
    n_obs = len(scn.obstacles)

    # boundary equality rows per robot (positions; optionally rest-to-rest)
    end_rows = [W[0], W[-1]]
    if rest_to_rest:
        end_rows += [Wd[0], Wd[-1], Wdd[0], Wdd[-1]]
    E = np.stack(end_rows)
    A = np.kron(np.eye(n), E)
    b = np.zeros((n_d, A.shape[0]))
    for ax in range(n_d):
        for i in range(n):
            b[ax, i * len(end_rows)] = scn.starts[i, ax]
            b[ax, i * len(end_rows) + 1] = scn.goals[i, ax]

    # workspace box: W xi <= p_max, -W xi <= -p_min, stacked per robot
    pos_map = np.kron(np.eye(n), W)
    G = np.vstack([pos_map, -pos_map])
    h = np.zeros((n_d, G.shape[0]))
    for ax in range(n_d):
        h[ax, : n * K1] = scn.p_max[ax]
        h[ax, n * K1 :] = -scn.p_min[ax]

    # selection matrix: pair rows then obstacle rows
    D, pairs = pair_difference_matrix(n)
    F_r = np.kron(D, W) if pairs else np.zeros((0, n * n_xi))
    if n_obs:
        F_o = np.kron(np.eye(n), np.kron(np.ones((n_obs, 1)), W))
    else:
        F_o = np.zeros((0, n * n_xi))
    F = np.vstack([F_r, F_o])

    obs_index = [(i, m) for i in range(n) for m in range(n_obs)]
    obs_axes = (
        margin * np.stack([o.radii for o in scn.obstacles])
        if n_obs
        else np.zeros((0, 3))
    )
    obs_pos = scn.obstacle_positions(basis.grid).transpose(2, 0, 1)  # (n_d, n_obs, K+1)

    dims = SystemDims(
        n=n, n_d=n_d, n_basis=n_xi, num_steps=K1, n_obs=n_obs,
        n_pairs=len(pairs), rows_pairs=len(pairs) * K1, rows_obs=n * n_obs * K1,
        nvar_ax=n * n_xi, a_rows=A.shape[0], g_rows=G.shape[0],
    )
    return ConstraintSystem(
        A=A, b=b, G=G, h=h, F=F, pair_index=pairs, obs_index=obs_index,
        pair_axes=margin * scn.contact_axes, obs_axes=obs_axes, obs_pos=obs_pos,
        dims=dims, basis=basis, d_max=d_max,
    )


def positions_from_xi(xi: np.ndarray, sys: ConstraintSystem) -> np.ndarray:
    """xi (n_d, nvar_ax, B) -> positions (n_d, n, K+1, B)."""
    d = sys.dims
    coef = xi.reshape(d.n_d, d.n, d.n_basis, -1)
    return np.einsum("kc,ancb->ankb", sys.basis.W, coef)


def _spherical_of_deltas(delta: np.ndarray, axes: np.ndarray, n_d: int, d_max: float):
    """delta: (n_d, ..., B); axes: broadcastable (a, a, b) scale. Returns alpha,
    beta, d where d solves the separable one-dimensional penalty minimization
    (clamped to [1, d_max]) and coincident points fall back to alpha=0,
    beta=pi/2, d=1."""
    ax_a = axes[..., 0]
    alpha = np.arctan2(delta[1], delta[0])
    if n_d == 3:
        ax_b = axes[..., 2]
        planar = np.hypot(delta[0] / ax_a, delta[1] / ax_a)
        uz = delta[2] / ax_b
        beta = np.where(
            (planar == 0.0) & (uz == 0.0), 0.5 * np.pi, np.arctan2(planar, uz)
        )
        sb, cb = np.sin(beta), np.cos(beta)
        num = (
            delta[0] * ax_a * np.cos(alpha) * sb
            + delta[1] * ax_a * np.sin(alpha) * sb
            + delta[2] * ax_b * cb
        )
        den = ax_a**2 * sb**2 + ax_b**2 * cb**2
    else:
        beta = np.full_like(alpha, 0.5 * np.pi)
        num = delta[0] * ax_a * np.cos(alpha) + delta[1] * ax_a * np.sin(alpha)
        den = np.broadcast_to(ax_a**2, alpha.shape)
    d = np.clip(num / den, 1.0, d_max)
    return alpha, beta, d


def extract_spherical(positions: np.ndarray, sys: ConstraintSystem) -> SphericalVars:
    """Spherical variables of the relative positions; positions (n_d, n, K+1, B)."""
    d = sys.dims
    B = positions.shape[-1]
    if d.n_pairs:
        ii = np.array([p[0] for p in sys.pair_index])
        jj = np.array([p[1] for p in sys.pair_index])
        delta = positions[:, ii] - positions[:, jj]  # (n_d, n_pairs, K+1, B)
        alpha, beta, dd = _spherical_of_deltas(delta, sys.pair_axes, d.n_d, sys.d_max)
    else:
        alpha = beta = dd = np.zeros((0, d.num_steps, B))
    if d.n_obs:
        delta_o = positions[:, :, None] - sys.obs_pos[:, None, :, :, None]
        alpha_o, beta_o, d_o = _spherical_of_deltas(
            delta_o, sys.obs_axes[:, None, None], d.n_d, sys.d_max
        )
    else:
        alpha_o = beta_o = d_o = np.zeros((d.n, 0, d.num_steps, B))
    return SphericalVars(alpha, beta, dd, alpha_o, beta_o, d_o)


def compute_e(vars: SphericalVars, sys: ConstraintSystem) -> np.ndarray:
    """Collision-free reconstruction targets, (n_d, f_rows, B)."""
    d = sys.dims
    B = vars.alpha.shape[-1]
    sa, ca = np.sin(vars.alpha), np.cos(vars.alpha)
    sb, cb = np.sin(vars.beta), np.cos(vars.beta)
    a_r = sys.pair_axes[0]
    pair_x = (a_r * vars.d * ca * sb).reshape(d.rows_pairs, B)
    pair_y = (a_r * vars.d * sa * sb).reshape(d.rows_pairs, B)
    blocks = [pair_x, pair_y]
    if d.n_d == 3:
        blocks.append((sys.pair_axes[2] * vars.d * cb).reshape(d.rows_pairs, B))

    if d.n_obs:
        sao, cao = np.sin(vars.alpha_o), np.cos(vars.alpha_o)
        sbo, cbo = np.sin(vars.beta_o), np.cos(vars.beta_o)
        a_o = sys.obs_axes[None, :, 0, None, None]
        obs_xyz = sys.obs_pos[:, None, :, :, None]  # broadcast over robots
        obs_x = (obs_xyz[0] + a_o * vars.d_o * cao * sbo).reshape(d.rows_obs, B)
        obs_y = (obs_xyz[1] + a_o * vars.d_o * sao * sbo).reshape(d.rows_obs, B)
        obs_blocks = [obs_x, obs_y]
        if d.n_d == 3:
            b_o = sys.obs_axes[None, :, 2, None, None]
            obs_blocks.append((obs_xyz[2] + b_o * vars.d_o * cbo).reshape(d.rows_obs, B))
    else:
        obs_blocks = [np.zeros((0, B))] * d.n_d

    e = np.empty((d.n_d, d.f_rows, B))
    for ax in range(d.n_d):
        e[ax, : d.rows_pairs] = blocks[ax]
        e[ax, d.rows_pairs :] = obs_blocks[ax]
    return e
