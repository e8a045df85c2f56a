import json

import numpy as np
import pytest

from swarmplan.errors import GenerationError, SchemaError, ValidationError
from swarmplan.scenario import (
    Obstacle,
    Scenario,
    ScenarioFamily,
    from_dict,
    generate,
    load,
    save,
    to_dict,
)


def test_circle_antipodal_goals_negate_starts():
    scn = generate(ScenarioFamily(kind="circle_antipodal"), n=4, n_d=2, seed=0)
    assert np.allclose(scn.goals, -scn.starts)
    assert np.abs(np.linalg.norm(scn.starts, axis=1) - 1.0).max() < 1e-12


def test_random_box_separation(eight_robot_scenario):
    scn = eight_robot_scenario
    for arr in (scn.starts, scn.goals):
        d = np.linalg.norm(arr[:, None] - arr[None, :], axis=2)
        d[np.diag_indices(scn.n)] = np.inf
        assert d.min() >= 0.2


def test_generation_deterministic(box_family):
    a = generate(box_family, n=5, n_d=2, seed=11)
    b = generate(box_family, n=5, n_d=2, seed=11)
    assert np.array_equal(a.starts, b.starts)
    assert np.array_equal(a.goals, b.goals)
    assert to_dict(a) == to_dict(b)


def test_generated_scenarios_validate(box_family):
    for seed in range(5):
        generate(box_family, n=6, n_d=2, seed=seed).validate()
    generate(box_family, n=4, n_d=3, seed=0).validate()
    generate(
        ScenarioFamily(kind="random_box", n_obstacles=2), n=3, n_d=2, seed=1
    ).validate()


def test_infeasible_density_raises():
    with pytest.raises(GenerationError):
        generate(ScenarioFamily(kind="random_box", robot_radius=0.4), n=8, n_d=2, seed=0)


def test_overcrowded_circle_raises():
    with pytest.raises(GenerationError):
        generate(
            ScenarioFamily(kind="circle_antipodal", circle_radius=0.2), n=16, n_d=2, seed=0
        )


def test_unknown_family_raises():
    with pytest.raises(GenerationError):
        generate(ScenarioFamily(kind="hexagon"), n=2, n_d=2, seed=0)


def test_save_load_round_trip(tmp_path, box_family):
    scn = generate(
        ScenarioFamily(kind="random_box", n_obstacles=1), n=3, n_d=2, seed=7
    )
    path = tmp_path / "scn.json"
    save(scn, path)
    back = load(path)
    assert back.n == scn.n and back.n_d == scn.n_d
    assert np.array_equal(back.starts, scn.starts)
    assert np.array_equal(back.goals, scn.goals)
    assert back.horizon == scn.horizon
    assert len(back.obstacles) == 1
    assert np.array_equal(back.obstacles[0].center, scn.obstacles[0].center)


def test_missing_field_names_the_field(tmp_path, box_family):
    scn = generate(box_family, n=2, n_d=2, seed=0)
    doc = to_dict(scn)
    del doc["starts"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(SchemaError, match="starts"):
        load(path)


def test_malformed_json_reports_location(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(SchemaError, match="line"):
        load(path)


def test_start_outside_workspace_rejected(box_family):
    scn = generate(box_family, n=2, n_d=2, seed=0)
    doc = to_dict(scn)
    doc["starts"][0][0] = 5.0
    with pytest.raises(ValidationError, match="workspace"):
        from_dict(doc)


def test_overlapping_starts_rejected():
    scn = Scenario(
        n=2, n_d=2, radii=[0.1] * 3,
        starts=[[0.0, 0.0], [0.05, 0.0]], goals=[[0.5, 0.5], [-0.5, -0.5]],
        obstacles=[], p_min=[-1, -1], p_max=[1, 1],
    )
    with pytest.raises(ValidationError, match="separation"):
        scn.validate()


def test_start_inside_obstacle_rejected():
    scn = Scenario(
        n=1, n_d=2, radii=[0.1] * 3,
        starts=[[0.0, 0.0]], goals=[[0.5, 0.5]],
        obstacles=[Obstacle(center=[0.05, 0.0], radii=[0.3, 0.3, 0.3])],
        p_min=[-1, -1], p_max=[1, 1],
    )
    with pytest.raises(ValidationError, match="obstacle"):
        scn.validate()


def test_moving_obstacle_positions():
    obs = Obstacle(center=[1.0, 0.0], radii=[0.2] * 3, velocity=[0.5, -1.0])
    scn = Scenario(
        n=1, n_d=2, radii=[0.1] * 3, starts=[[0.0, 0.9]], goals=[[0.0, -0.9]],
        obstacles=[obs], p_min=[-2, -2], p_max=[2, 2],
    )
    grid = np.array([0.0, 1.0, 2.0])
    pos = scn.obstacle_positions(grid)
    assert pos.shape == (1, 3, 2)
    assert np.allclose(pos[0, 2], [2.0, -2.0])


def test_unsupported_version_rejected(box_family):
    doc = to_dict(generate(box_family, n=2, n_d=2, seed=0))
    doc["version"] = 99
    with pytest.raises(SchemaError, match="version"):
        from_dict(doc)
