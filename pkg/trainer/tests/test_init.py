"""Tests for the warm-start network: identity initialization, training
plumbing, export schema, and the iteration-count probe."""

import numpy as np
import pytest
import torch

from swarmplan import io as plan_io
from swarmplan.basis import build_basis, straight_line_coeffs
from swarmplan.constraints import assemble
from swarmplan.solver import ObjectiveMode, SolverConfig, cold_start, solve
from swarmtrain.data import make_swap_scenario
from swarmtrain.errors import TrainerError
from swarmtrain.init_net import (
    InitModelConfig,
    InitNet,
    InitTrainConfig,
    export_warmstarts,
    iterations_to_threshold,
    load_init,
    predict,
    train_init,
)


def _solved_swap(seed=1, n=2, radius=0.1):
    scn = make_swap_scenario(seed, n=n, radius=radius)
    sys = assemble(scn, build_basis(scn.horizon))
    res = solve(cold_start(scn, sys), sys, ObjectiveMode.smoothness(), SolverConfig())
    assert res.success
    return scn, res.coeffs(sys)


def test_fresh_net_is_identity_with_cold_multipliers():
    torch.manual_seed(0)
    net = InitNet(InitModelConfig(n=3, n_d=2, n_xi=11, dim=32, depth=2))
    xi = torch.randn(4, 3, 2, 11)
    sg = torch.randn(4, 3, 4)
    xi0, lam0 = net(xi, sg)
    assert torch.equal(xi0, xi)
    assert torch.equal(lam0, torch.zeros_like(lam0))


def test_net_rejects_dimension_mismatch():
    net = InitNet(InitModelConfig(n=2, n_d=2, n_xi=11))
    with pytest.raises(TrainerError, match="shape"):
        net(torch.zeros(1, 3, 2, 11), torch.zeros(1, 3, 4))


def test_predict_matches_forward():
    torch.manual_seed(1)
    net = InitNet(InitModelConfig(n=2, n_d=2, n_xi=11, dim=32))
    for lin in (net.xi_head, net.lam_head):
        torch.nn.init.normal_(lin.weight, std=0.1)
    scn = make_swap_scenario(5)
    coeffs = np.random.default_rng(0).standard_normal((2, 2, 11))
    xi0, lam0 = predict(net, coeffs, scn)
    assert xi0.shape == (2, 2, 11) and lam0.shape == (2, 2, 11)
    assert not np.allclose(xi0, coeffs)  # heads were given signal above


def test_iterations_to_threshold_solution_vs_straight_line():
    scn, solution = _solved_swap()
    at_solution = iterations_to_threshold(scn, solution, solution)
    straight = straight_line_coeffs(scn.starts, scn.goals, scn.horizon.n_basis)
    at_straight = iterations_to_threshold(scn, solution, straight)
    assert at_solution == 0  # a feasible iterate needs no iterations
    assert at_straight > 0   # the colliding straight line does


def test_iterations_to_threshold_caps_at_max():
    scn, solution = _solved_swap()
    straight = straight_line_coeffs(scn.starts, scn.goals, scn.horizon.n_basis)
    assert iterations_to_threshold(scn, solution, straight, max_iters=1) == 1


def test_train_init_end_to_end_and_reload(tiny_ckpt, tmp_path):
    flow_path, _ = tiny_ckpt
    out = tmp_path / "init.pt"
    cfg = InitTrainConfig(
        flow_checkpoint=str(flow_path), out=str(out),
        n_scenarios=6, n_robots=2, robot_radius=0.1,
        steps=8, batch_size=4, unroll_depth=2, dim=32, heads=4,
    )
    result = train_init(cfg)
    assert len(result["losses"]) == 8
    assert np.isfinite(result["losses"]).all()
    net, ckpt = load_init(out)
    assert ckpt["model_config"]["n"] == 2
    scn = make_swap_scenario(77)
    coeffs = np.random.default_rng(1).standard_normal((2, 2, 11))
    xi0, lam0 = predict(net, coeffs, scn)
    assert np.isfinite(xi0).all() and np.isfinite(lam0).all()


def test_load_init_rejects_wrong_kind(tmp_path):
    path = tmp_path / "bad.pt"
    torch.save({"kind": "flow"}, path)
    with pytest.raises(TrainerError, match="init"):
        load_init(path)


def test_export_warmstarts_round_trip(tmp_path):
    torch.manual_seed(2)
    net = InitNet(InitModelConfig(n=2, n_d=2, n_xi=11, dim=32))
    scns = [make_swap_scenario(s) for s in (1, 2, 3)]
    rng = np.random.default_rng(3)
    cands = [rng.standard_normal((2, 2, 11)) for _ in scns]
    path = tmp_path / "warm.json"
    export_warmstarts(net, scns, cands, path)
    loaded = plan_io.load_warmstarts(path, scns[0])
    assert len(loaded) == 3
    for scn, c, (xi0, lam0) in zip(scns, cands, loaded):
        xi_ref, lam_ref = predict(net, c, scn)
        np.testing.assert_allclose(xi0, xi_ref, atol=1e-12)
        np.testing.assert_allclose(lam0, lam_ref, atol=1e-12)


def test_export_warmstarts_empty(tmp_path):
    net = InitNet(InitModelConfig(n=2, n_d=2, n_xi=11, dim=32))
    path = tmp_path / "empty.json"
    export_warmstarts(net, [], [], path)
    assert plan_io.load_warmstarts(path, make_swap_scenario(0)) == []
