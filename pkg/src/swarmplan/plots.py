"""Matplotlib figure rendering for solve and benchmark reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .basis import BasisMatrices, evaluate
from .metrics import dense_basis
from .scenario import Scenario


def plot_trajectories(scn: Scenario, coeffs: np.ndarray, basis: BasisMatrices, path) -> None:
    """Top-down view of all robot paths with starts, goals and obstacles."""
    dense = dense_basis(basis, 5)
    pos = evaluate(coeffs, dense, 0)
    fig, ax = plt.subplots(figsize=(6, 6))
    colors = plt.cm.tab20(np.linspace(0, 1, scn.n))
    for i in range(scn.n):
        ax.plot(pos[i, :, 0], pos[i, :, 1], color=colors[i], lw=1.2)
        ax.plot(*scn.starts[i, :2], "o", color=colors[i], ms=5)
        ax.plot(*scn.goals[i, :2], "x", color=colors[i], ms=7)
    for obs in scn.obstacles:
        ax.add_patch(
            plt.Circle(obs.center[:2], obs.radii[0], color="0.6", alpha=0.5)
        )
    ax.add_patch(
        plt.Rectangle(
            scn.p_min[:2],
            *(scn.p_max[:2] - scn.p_min[:2]),
            fill=False, ls="--", color="0.4",
        )
    )
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(f"{scn.n} robots" + (" (xy projection)" if scn.n_d == 3 else ""))
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_residual_trace(trace: np.ndarray, path) -> None:
    """Primal and fixed-point residual decay over iterations."""
    fig, ax = plt.subplots(figsize=(6, 4))
    iters = np.arange(len(trace))
    ax.semilogy(iters, np.maximum(trace[:, 0], 1e-16), label="primal")
    finite = np.isfinite(trace[:, 1])
    ax.semilogy(iters[finite], np.maximum(trace[finite, 1], 1e-16), label="fixed point")
    ax.set_xlabel("iteration")
    ax.set_ylabel("residual")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_benchmark_summary(report, path) -> None:
    """Per-instance iterations-to-threshold scatter grouped by robot count."""
    rows = [r for r in report.rows if r.get("primal") is not None]
    thresholds = report.config["thresholds"]
    fig, ax = plt.subplots(figsize=(6, 4))
    for th in thresholds:
        key = f"iters_to_{th:g}"
        pts = [(r["n"], r[key]) for r in rows if r.get(key) is not None]
        if pts:
            ns, its = zip(*pts)
            ax.scatter(ns, its, s=14, alpha=0.6, label=f"primal < {th:g}")
    ax.set_xlabel("robots")
    ax.set_ylabel("iterations to threshold")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
