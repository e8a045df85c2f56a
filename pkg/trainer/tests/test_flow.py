"""Tests for the candidate sampler: loss oracles, symmetry properties,
training/checkpoint round trips, and file output."""

import numpy as np
import pytest
import torch

from swarmplan import io as plan_io
from swarmtrain import flow_model
from swarmtrain.data import Standardizer, gen_swap_dataset, load_training_set, make_swap_scenario
from swarmtrain.errors import TrainerError
from swarmtrain.flow_model import (
    FlowModelConfig,
    FlowNet,
    FlowTrainConfig,
    cfm_loss,
    load_flow,
    sample,
    sample_to_file,
    train,
)


def _batch(seed=0, B=16, n=2, n_d=2, n_xi=11):
    gen = torch.Generator().manual_seed(seed)
    xi1 = torch.randn(B, n, n_d, n_xi, generator=gen)
    xi0 = torch.randn(B, n, n_d, n_xi, generator=gen)
    sg = torch.randn(B, n, 2 * n_d, generator=gen)
    t = torch.rand(B, generator=gen)
    return xi1, xi0, sg, t


def test_cfm_loss_zero_field_oracle():
    # a freshly constructed net has a zero-initialized head, so its field is
    # identically zero and the loss must equal the mean squared displacement
    torch.manual_seed(0)
    net = FlowNet(FlowModelConfig(n=2, n_d=2, n_xi=11, dim=32, depth=1))
    xi1, xi0, sg, t = _batch()
    loss = cfm_loss(net, xi1, sg, None, t, xi0)
    torch.testing.assert_close(loss, ((xi1 - xi0) ** 2).mean())


def test_cfm_loss_perfect_field_is_zero():
    class Oracle(torch.nn.Module):
        def __init__(self, disp):
            super().__init__()
            self.disp = disp

        def forward(self, xt, t, sg, obs=None):
            return self.disp

    xi1, xi0, sg, t = _batch(seed=1)
    loss = cfm_loss(Oracle(xi1 - xi0), xi1, sg, None, t, xi0)
    assert float(loss) == 0.0


def test_field_is_permutation_equivariant():
    torch.manual_seed(3)
    net = FlowNet(FlowModelConfig(n=4, n_d=2, n_xi=11, dim=32, depth=2))
    # give the zero-initialized output layers signal so the test is not vacuous
    for lin in (net.head, *[blk.mod for blk in net.blocks]):
        torch.nn.init.normal_(lin.weight, std=0.2)
    xi1, xi0, sg, t = _batch(seed=4, B=3, n=4)
    perm = torch.tensor([2, 0, 3, 1])
    with torch.no_grad():
        v = net(xi1, t, sg)
        v_perm = net(xi1[:, perm], t, sg[:, perm])
    torch.testing.assert_close(v_perm, v[:, perm], atol=1e-5, rtol=1e-4)


def test_condition_encoder_pool_is_exactly_permutation_invariant():
    torch.manual_seed(5)
    enc = flow_model.PointSetEncoder(4, 16)
    pts = torch.randn(2, 6, 4)
    perm = torch.randperm(6)
    _, pooled = enc(pts)
    _, pooled_perm = enc(pts[:, perm])
    assert torch.equal(pooled, pooled_perm)


def test_training_reduces_loss_and_checkpoints(tiny_ckpt):
    out, result = tiny_ckpt
    losses = result["losses"]
    assert len(losses) == 40
    assert np.mean(losses[-10:]) < np.mean(losses[:10])
    net, std, ckpt = load_flow(out)
    assert ckpt["model_config"]["n"] == 2
    # standardizer round trip
    x = torch.randn(5, 2, 2, 11, dtype=torch.float64)
    torch.testing.assert_close(std.invert(std.apply(x)), x)


def test_resume_extends_loss_history(tiny_dataset, tiny_ckpt, tmp_path):
    out, _ = tiny_ckpt
    cfg = FlowTrainConfig(
        dataset=str(tiny_dataset), out=str(tmp_path / "flow2.pt"),
        steps=10, batch_size=8, dim=32, depth=1,
    )
    result = train(cfg, resume=str(out))
    assert len(result["losses"]) == 50


def test_single_ode_step_is_one_euler_update(tiny_ckpt):
    from swarmtrain.data import conditions_of

    _, result = tiny_ckpt
    net, std = result["net"], result["std"]
    scn = make_swap_scenario(100)
    got = sample(net, std, scn, count=3, num_ode_steps=1, seed=9)

    sg_np, _ = conditions_of(scn)
    sg = torch.as_tensor(sg_np, dtype=torch.float32)[None].expand(3, -1, -1)
    obs = torch.zeros(3, 0, 4)
    gen = torch.Generator().manual_seed(9)
    xi = torch.randn((3, 2, 2, 11), generator=gen)
    with torch.no_grad():
        expect = xi + net(xi, torch.zeros(3), sg, obs)
    np.testing.assert_allclose(got, std.invert(expect.double()).numpy(), atol=1e-6)


def test_sample_rejects_dimension_mismatch(tiny_ckpt):
    _, result = tiny_ckpt
    scn = make_swap_scenario(0, n=3)
    with pytest.raises(TrainerError, match="dims"):
        sample(result["net"], result["std"], scn, count=1)


def test_sample_to_file_is_readable_by_planner(tiny_ckpt, tmp_path):
    _, result = tiny_ckpt
    scn = make_swap_scenario(42)
    path = tmp_path / "cands.json"
    coeffs = sample_to_file(result["net"], result["std"], scn, 5, path, seed=3)
    loaded = plan_io.load_candidates(path, scn)
    assert len(loaded) == 5
    for a, b in zip(loaded, coeffs):
        np.testing.assert_allclose(a, b)


def test_load_training_set_rejects_empty_and_inconsistent(tmp_path, tiny_dataset):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    with pytest.raises(TrainerError, match="empty"):
        load_training_set(empty)

    mixed = tmp_path / "mixed.jsonl"
    text = tiny_dataset.read_text().splitlines()
    other = tmp_path / "other.jsonl"
    gen_swap_dataset(4, other, seed=50, n=3)
    mixed.write_text(text[0] + "\n" + other.read_text())
    with pytest.raises(TrainerError, match="inconsistent"):
        load_training_set(mixed)


def test_load_flow_rejects_wrong_kind(tmp_path):
    path = tmp_path / "bad.pt"
    torch.save({"kind": "init"}, path)
    with pytest.raises(TrainerError, match="flow"):
        load_flow(path)
