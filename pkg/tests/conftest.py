import numpy as np
import pytest

from swarmplan.basis import BasisConfig, build_basis
from swarmplan.constraints import assemble
from swarmplan.scenario import Scenario, ScenarioFamily, generate


@pytest.fixture(scope="session")
def default_basis():
    return build_basis(BasisConfig())


@pytest.fixture(scope="session")
def small_basis():
    return build_basis(BasisConfig(n_basis=6, num_steps=12, duration=5.0))


def make_swap_scenario(seed=0, horizon=None, radius=0.1):
    """Two robots exchanging random positions; generic (non-collinear) swap."""
    horizon = horizon or BasisConfig()
    rng = np.random.default_rng(seed)
    while True:
        starts = rng.uniform(-0.85, 0.85, size=(2, 2))
        if np.linalg.norm(starts[0] - starts[1]) > 4.0 * radius:
            break
    scn = Scenario(
        n=2, n_d=2, radii=[radius] * 3,
        starts=starts, goals=starts[::-1].copy(),
        obstacles=[], p_min=[-1.0, -1.0], p_max=[1.0, 1.0],
        horizon=horizon, seed=seed,
    )
    scn.validate()
    return scn


@pytest.fixture
def swap_scenario():
    return make_swap_scenario(seed=0)


@pytest.fixture
def swap_system(swap_scenario, default_basis):
    return assemble(swap_scenario, default_basis)


@pytest.fixture(scope="session")
def box_family():
    return ScenarioFamily(kind="random_box")


@pytest.fixture(scope="session")
def eight_robot_scenario(box_family):
    return generate(box_family, n=8, n_d=2, seed=42)
