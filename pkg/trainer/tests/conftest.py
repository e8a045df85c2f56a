import pytest

from swarmtrain.data import gen_swap_dataset
from swarmtrain.flow_model import FlowTrainConfig, train


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """Small 2-robot swap dataset shared across module tests."""
    path = tmp_path_factory.mktemp("data") / "tiny.jsonl"
    stored = gen_swap_dataset(12, path, seed=0)
    assert stored >= 8
    return path


@pytest.fixture(scope="session")
def tiny_ckpt(tiny_dataset, tmp_path_factory):
    """Briefly trained flow checkpoint; enough structure for plumbing tests."""
    out = tmp_path_factory.mktemp("ckpt") / "flow.pt"
    cfg = FlowTrainConfig(
        dataset=str(tiny_dataset), out=str(out), steps=40, batch_size=8, dim=32, depth=1
    )
    result = train(cfg)
    return out, result
