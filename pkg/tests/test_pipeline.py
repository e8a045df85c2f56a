import numpy as np
import pytest

from swarmplan import io
from swarmplan.basis import evaluate, straight_line_coeffs
from swarmplan.constraints import assemble
from swarmplan.errors import SchemaError, UsageError
from swarmplan.pipeline import (
    CandidateBatch,
    load_candidates,
    plan,
    sample_naive_prior,
)
from swarmplan.scenario import ScenarioFamily, generate
from swarmplan.solver import SolverConfig

from conftest import make_swap_scenario


def test_zero_noise_gives_identical_straight_lines(default_basis):
    scn = make_swap_scenario(seed=0)
    batch = sample_naive_prior(scn, default_basis, count=5, noise_scale=0.0)
    base = straight_line_coeffs(scn.starts, scn.goals, default_basis.config.n_basis)
    for cand in batch.candidates:
        assert np.array_equal(cand, base)


def test_candidate_endpoints_untouched(default_basis):
    scn = make_swap_scenario(seed=1)
    batch = sample_naive_prior(scn, default_basis, count=16, seed=3)
    for cand in batch.candidates:
        pos = evaluate(cand, default_basis, 0)
        assert np.abs(pos[:, 0] - scn.starts).max() < 1e-12
        assert np.abs(pos[:, -1] - scn.goals).max() < 1e-12


def test_sampling_deterministic(default_basis):
    scn = make_swap_scenario(seed=2)
    a = sample_naive_prior(scn, default_basis, count=8, seed=5)
    b = sample_naive_prior(scn, default_basis, count=8, seed=5)
    for x, y in zip(a.candidates, b.candidates):
        assert np.array_equal(x, y)


def test_sampling_rejects_empty_count(default_basis):
    scn = make_swap_scenario(seed=2)
    with pytest.raises(UsageError):
        sample_naive_prior(scn, default_basis, count=0)


def test_candidate_file_round_trip(tmp_path, default_basis):
    scn = make_swap_scenario(seed=3)
    batch = sample_naive_prior(scn, default_basis, count=10, seed=1)
    path = tmp_path / "cands.json"
    io.save_candidates(path, batch.candidates, scn.n, scn.n_d, scn.horizon.n_basis)
    back = load_candidates(path, scn)
    assert len(back) == 10
    assert back.source == "flow_file"
    for x, y in zip(batch.candidates, back.candidates):
        assert np.array_equal(x, y)


def test_candidate_dim_mismatch_names_expected_and_actual(tmp_path, default_basis):
    scn = make_swap_scenario(seed=3)
    batch = sample_naive_prior(scn, default_basis, count=2)
    path = tmp_path / "cands.json"
    io.save_candidates(path, batch.candidates, scn.n, scn.n_d, scn.horizon.n_basis)
    other = generate(ScenarioFamily(kind="random_box"), n=3, n_d=2, seed=0)
    with pytest.raises(SchemaError, match="expected 3, got 2"):
        load_candidates(path, other)


def test_plan_rejects_empty_batch():
    scn = make_swap_scenario(seed=0)
    with pytest.raises(UsageError):
        plan(scn, CandidateBatch(candidates=[], source="naive_prior"))


def test_plan_rejects_oversized_top_k(default_basis):
    scn = make_swap_scenario(seed=0)
    batch = sample_naive_prior(scn, default_basis, count=4)
    with pytest.raises(UsageError):
        plan(scn, batch, top_k=8)


def test_plan_solves_swap(default_basis):
    scn = make_swap_scenario(seed=4)
    batch = sample_naive_prior(scn, default_basis, count=32, seed=0)
    result = plan(scn, batch, top_k=4, cfg=SolverConfig(max_iters=5000))
    assert result.status == "success"
    assert result.batch.pre_residual is not None
    refined = ~np.isnan(result.batch.post_residual)
    assert refined.sum() == 4
    pos = evaluate(result.coeffs, default_basis, 0)
    assert np.abs(pos[:, 0] - scn.starts).max() < 1e-8
    assert np.abs(pos[:, -1] - scn.goals).max() < 1e-8


def test_exactly_feasible_candidate_dominates(default_basis):
    # candidate 2 solves the instance; the others are wildly infeasible
    scn = make_swap_scenario(seed=5)
    sys = assemble(scn, default_basis)
    good = plan(
        scn, sample_naive_prior(scn, default_basis, count=16, seed=1), top_k=4
    ).coeffs
    rng = np.random.default_rng(9)
    wild = []
    for _ in range(2):
        c = straight_line_coeffs(scn.starts, scn.goals, sys.dims.n_basis)
        c[:, :, 1:-1] += 5.0 * rng.standard_normal(c[:, :, 1:-1].shape)
        wild.append(c)
    batch = CandidateBatch(candidates=[wild[0], wild[1], good], source="naive_prior")
    result = plan(scn, batch, top_k=3)
    assert result.index == 2
    assert result.status == "success"


def test_selection_prefers_lower_smoothness(default_basis):
    scn = make_swap_scenario(seed=6)
    batch = sample_naive_prior(scn, default_basis, count=24, seed=2)
    result = plan(scn, batch, top_k=6)
    smooth = result.batch.smoothness
    post = result.batch.post_residual
    cfg = SolverConfig()
    feasible = [
        i for i in np.flatnonzero(~np.isnan(post)) if post[i] < cfg.primal_tol
    ]
    assert result.index == min(feasible, key=lambda i: (smooth[i], i))
    assert result.smoothness == smooth[result.index]


def test_plan_invariant_under_batch_permutation(default_basis):
    scn = make_swap_scenario(seed=7)
    batch = sample_naive_prior(scn, default_basis, count=12, seed=3)
    result = plan(scn, batch, top_k=4)
    perm = np.random.default_rng(0).permutation(12)
    shuffled = CandidateBatch(
        candidates=[batch.candidates[i] for i in perm], source="naive_prior"
    )
    result_p = plan(scn, shuffled, top_k=4)
    assert np.allclose(result.coeffs, result_p.coeffs, atol=1e-12)


def test_infeasible_best_effort_status(default_basis):
    scn = make_swap_scenario(seed=4)
    batch = sample_naive_prior(scn, default_basis, count=4, seed=0)
    assert batch.candidates  # interacting swap: three iterations cannot suffice
    result = plan(scn, batch, top_k=2, cfg=SolverConfig(max_iters=3))
    assert result.status == "infeasible_best_effort"
    assert np.isfinite(result.batch.post_residual[result.index])


def test_warmstart_entry_point(default_basis):
    # warm-starting from the previous solution converges almost immediately
    scn = make_swap_scenario(seed=9)
    batch = sample_naive_prior(scn, default_basis, count=4, seed=0)
    first = plan(scn, batch, top_k=4)
    warm = [(first.coeffs, np.zeros_like(first.coeffs)) for _ in range(4)]
    second = plan(scn, batch, top_k=4, warmstarts=warm)
    assert second.status == "success"
    cold_iters = max(r.iterations for r in first.refined)
    warm_iters = max(r.iterations for r in second.refined)
    assert warm_iters <= cold_iters
