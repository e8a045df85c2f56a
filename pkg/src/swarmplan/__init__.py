"""Centralized multi-robot trajectory planning with a projection safety filter."""

from .basis import (
    BasisConfig,
    BasisMatrices,
    build_basis,
    evaluate,
    flatten_coeffs,
    straight_line_coeffs,
    time_scale_for_limits,
    unflatten_coeffs,
)
from .constraints import ConstraintSystem, SphericalVars, assemble, compute_e, extract_spherical
from .metrics import TrajectoryMetrics, compute_metrics
from .pipeline import CandidateBatch, PlanResult, plan, sample_naive_prior
from .scenario import Obstacle, Scenario, ScenarioFamily, generate
from .solver import (
    KktCache,
    ObjectiveMode,
    SolverConfig,
    SolverResult,
    SolverState,
    cold_start,
    fixed_point_residual,
    fixed_point_step,
    primal_residual,
    solve,
    solve_batch,
)

__version__ = "0.1.0"
