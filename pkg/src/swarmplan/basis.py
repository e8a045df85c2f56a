"""Bernstein trajectory basis: construction, evaluation and time scaling.

Trajectories are degree (n_basis - 1) Bernstein polynomials on [0, T],
sampled on a uniform grid of K + 1 points. Coefficient arrays have shape
(n_robots, n_dims, n_basis); the flattened layout is axis-major
(all x blocks robot by robot, then y, then z).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import comb

from .errors import ConfigError, ShapeError


@dataclass(frozen=True)
class BasisConfig:
    n_basis: int = 11
    num_steps: int = 50  # K + 1 samples
    duration: float = 5.0

    def __post_init__(self):
        if self.n_basis < 4:
            raise ConfigError(f"n_basis must be >= 4, got {self.n_basis}")
        if self.num_steps < self.n_basis:
            raise ConfigError(
                f"num_steps ({self.num_steps}) must be >= n_basis ({self.n_basis})"
            )
        if not self.duration > 0:
            raise ConfigError(f"duration must be > 0, got {self.duration}")


@dataclass(frozen=True)
class BasisMatrices:
    W: np.ndarray    # (K+1, n_basis) position basis
    Wd: np.ndarray   # (K+1, n_basis) first derivative, units 1/s
    Wdd: np.ndarray  # (K+1, n_basis) second derivative, units 1/s^2
    grid: np.ndarray # (K+1,) sample times in [0, T]
    config: BasisConfig


def bernstein_matrix(degree: int, tau: np.ndarray) -> np.ndarray:
    """Bernstein basis of a given degree evaluated at normalized times tau."""
    tau = np.asarray(tau, dtype=float)[:, None]
    j = np.arange(degree + 1)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        mat = comb(degree, j) * tau**j * (1.0 - tau) ** (degree - j)
    # 0**0 at the endpoints
    return np.nan_to_num(mat, nan=1.0)


def _embed(mat: np.ndarray, offset: int, total: int) -> np.ndarray:
    """Place a lower-degree Bernstein matrix into degree-(total-1) index space."""
    out = np.zeros((mat.shape[0], total))
    out[:, offset : offset + mat.shape[1]] = mat
    return out


def build_basis(cfg: BasisConfig) -> BasisMatrices:
    """Build W, Wd, Wdd on the uniform grid over [0, duration]."""
    m = cfg.n_basis - 1
    grid = np.linspace(0.0, cfg.duration, cfg.num_steps)
    tau = grid / cfg.duration
    W = bernstein_matrix(m, tau)

    Bm1 = bernstein_matrix(m - 1, tau)
    dtau = m * (_embed(Bm1, 1, m + 1) - _embed(Bm1, 0, m + 1))
    Wd = dtau / cfg.duration

    Bm2 = bernstein_matrix(m - 2, tau)
    ddtau = m * (m - 1) * (
        _embed(Bm2, 2, m + 1) - 2.0 * _embed(Bm2, 1, m + 1) + _embed(Bm2, 0, m + 1)
    )
    Wdd = ddtau / cfg.duration**2
    return BasisMatrices(W=W, Wd=Wd, Wdd=Wdd, grid=grid, config=cfg)


def evaluate(coeffs: np.ndarray, basis: BasisMatrices, derivative: int = 0) -> np.ndarray:
    """Evaluate positions (0), velocities (1) or accelerations (2).

    coeffs: (n_robots, n_dims, n_basis). Returns (n_robots, K+1, n_dims).
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim != 3 or coeffs.shape[2] != basis.config.n_basis:
        raise ShapeError(
            f"coeffs shape {coeffs.shape} incompatible with n_basis={basis.config.n_basis}"
        )
    mat = (basis.W, basis.Wd, basis.Wdd)[derivative]
    return np.einsum("kc,ndc->nkd", mat, coeffs)


def flatten_coeffs(coeffs: np.ndarray) -> np.ndarray:
    """(n, n_d, n_basis) -> flat vector, axis-major then robot then coefficient."""
    coeffs = np.asarray(coeffs, dtype=float)
    return coeffs.transpose(1, 0, 2).reshape(-1)


def unflatten_coeffs(flat: np.ndarray, n: int, n_d: int, n_basis: int) -> np.ndarray:
    flat = np.asarray(flat, dtype=float)
    if flat.size != n * n_d * n_basis:
        raise ShapeError(
            f"flat coefficient length {flat.size} != {n}*{n_d}*{n_basis}"
        )
    return flat.reshape(n_d, n, n_basis).transpose(1, 0, 2)


def straight_line_coeffs(starts: np.ndarray, goals: np.ndarray, n_basis: int) -> np.ndarray:
    """Control points interpolating start->goal; Bernstein linear precision makes
    the resulting path the straight segment."""
    starts = np.asarray(starts, dtype=float)
    goals = np.asarray(goals, dtype=float)
    frac = np.linspace(0.0, 1.0, n_basis)
    return starts[:, :, None] + (goals - starts)[:, :, None] * frac[None, None, :]


def time_scale_for_limits(
    coeffs: np.ndarray,
    basis: BasisMatrices,
    v_max: float,
    a_max: float,
    dense_factor: int = 10,
) -> tuple[float, BasisMatrices]:
    """Uniformly dilate time so velocity/acceleration limits hold.

    Speeds scale as 1/gamma and accelerations as 1/gamma^2 under t -> gamma*t,
    so gamma = max(1, vhat/v_max, sqrt(ahat/a_max)). Returns (gamma, rebuilt
    basis with duration gamma*T). The path geometry is unchanged.
    """
    if not (v_max > 0 and a_max > 0):
        raise ConfigError("v_max and a_max must be positive")
    cfg = basis.config
    dense = build_basis(
        BasisConfig(cfg.n_basis, dense_factor * (cfg.num_steps - 1) + 1, cfg.duration)
    )
    vhat = np.linalg.norm(evaluate(coeffs, dense, 1), axis=2).max()
    ahat = np.linalg.norm(evaluate(coeffs, dense, 2), axis=2).max()
    gamma = max(1.0, vhat / v_max, float(np.sqrt(ahat / a_max)))
    scaled = build_basis(BasisConfig(cfg.n_basis, cfg.num_steps, gamma * cfg.duration))
    return gamma, scaled
