"""Scenario data model, random generators and JSON I/O.

A scenario bundles robot geometry, start/goal boundary states, obstacles,
the workspace box and the horizon (basis) parameters. Robots share a single
spheroid with semi-axes stored in `radii`; the inter-robot contact distances
are twice those semi-axes. Obstacle radii are stored already inflated by the
robot size.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisConfig
from .errors import GenerationError, SchemaError, ValidationError

SCENARIO_VERSION = 1

# extra clearance factor applied when placing starts/goals; must exceed the
# solver's constraint inflation (1.1) or pinned endpoints can violate the
# inflated separation constraint and make the instance infeasible
PLACEMENT_MARGIN = 1.15
_MAX_TRIES = 5000


@dataclass
class Obstacle:
    center: np.ndarray          # (n_d,)
    radii: np.ndarray           # (a_o, a_o, b_o), inflated by robot size
    velocity: np.ndarray | None = None  # (n_d,), zero for static

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.radii = np.asarray(self.radii, dtype=float)
        if self.velocity is None:
            self.velocity = np.zeros_like(self.center)
        else:
            self.velocity = np.asarray(self.velocity, dtype=float)

    def position_at(self, t: float | np.ndarray) -> np.ndarray:
        return self.center + np.multiply.outer(np.asarray(t, dtype=float), self.velocity)


@dataclass
class Scenario:
    n: int
    n_d: int
    radii: np.ndarray           # robot spheroid semi-axes (a/2, a/2, b/2)
    starts: np.ndarray          # (n, n_d)
    goals: np.ndarray           # (n, n_d)
    obstacles: list[Obstacle]
    p_min: np.ndarray           # (n_d,)
    p_max: np.ndarray           # (n_d,)
    horizon: BasisConfig = field(default_factory=BasisConfig)
    seed: int = 0

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.starts = np.asarray(self.starts, dtype=float)
        self.goals = np.asarray(self.goals, dtype=float)
        self.p_min = np.asarray(self.p_min, dtype=float)
        self.p_max = np.asarray(self.p_max, dtype=float)

    @property
    def contact_distance(self) -> float:
        """Center distance at which two robots touch in the x-y plane."""
        return 2.0 * float(self.radii[0])

    @property
    def contact_axes(self) -> np.ndarray:
        """Diagonal of M_r: full spheroid dimensions (a, a, b)."""
        return 2.0 * self.radii

    def validate(self) -> None:
        if self.n_d not in (2, 3):
            raise ValidationError(f"n_d must be 2 or 3, got {self.n_d}")
        for name, arr in (("starts", self.starts), ("goals", self.goals)):
            if arr.shape != (self.n, self.n_d):
                raise ValidationError(f"{name} must have shape ({self.n}, {self.n_d})")
            if not np.isfinite(arr).all():
                raise ValidationError(f"{name} contains non-finite values")
            if ((arr < self.p_min) | (arr > self.p_max)).any():
                raise ValidationError(f"{name} outside workspace box")
        a = self.contact_distance
        for name, arr in (("starts", self.starts), ("goals", self.goals)):
            if self.n >= 2:
                d = np.linalg.norm(arr[:, None] - arr[None, :], axis=2)
                d[np.diag_indices(self.n)] = np.inf
                if d.min() < a:
                    raise ValidationError(f"{name} pairwise separation below contact distance")
            for obs in self.obstacles:
                scaled = (arr - obs.center) / obs.radii[: self.n_d]
                if (np.linalg.norm(scaled, axis=1) < 1.0).any():
                    raise ValidationError(f"{name} inside an inflated obstacle")

    def obstacle_positions(self, grid: np.ndarray) -> np.ndarray:
        """Positions of all obstacles at the grid times, shape (n_obs, K+1, n_d)."""
        if not self.obstacles:
            return np.zeros((0, len(grid), self.n_d))
        return np.stack([o.center + np.outer(grid, o.velocity) for o in self.obstacles])


@dataclass(frozen=True)
class ScenarioFamily:
    kind: str                       # "random_box" | "circle_antipodal"
    robot_radius: float = 0.1
    box: tuple[float, float] = (-1.0, 1.0)   # per-axis extent for random_box
    circle_radius: float = 1.0
    n_obstacles: int = 0
    obstacle_radius: float = 0.15   # pre-inflation; robot radius is added


def _place_points(rng, count, n_d, lo, hi, min_sep, obstacles, what):
    pts = []
    for _ in range(count):
        for _attempt in range(_MAX_TRIES):
            p = rng.uniform(lo, hi, size=n_d)
            if any(np.linalg.norm(p - q) < min_sep for q in pts):
                continue
            if any(
                np.linalg.norm((p - o.center) / (PLACEMENT_MARGIN * o.radii[:n_d])) < 1.0
                for o in obstacles
            ):
                continue
            pts.append(p)
            break
        else:
            raise GenerationError(
                f"could not place {what} point {len(pts)} with separation {min_sep}"
            )
    return np.array(pts)


def generate(
    family: ScenarioFamily,
    n: int,
    n_d: int = 2,
    seed: int = 0,
    horizon: BasisConfig | None = None,
) -> Scenario:
    """Generate a scenario; deterministic for a given (family, n, n_d, seed)."""
    if n < 1:
        raise GenerationError("need at least one robot")
    horizon = horizon or BasisConfig()
    rng = np.random.default_rng(seed)
    r = family.robot_radius
    radii = np.array([r, r, r])
    min_sep = PLACEMENT_MARGIN * 2.0 * r

    if family.kind == "random_box":
        lo, hi = family.box
        margin = r
        obstacles = []
        for _ in range(family.n_obstacles):
            size = family.obstacle_radius + r
            c = rng.uniform(lo + size, hi - size, size=n_d)
            obstacles.append(Obstacle(center=c, radii=np.full(3, size)))
        starts = _place_points(rng, n, n_d, lo + margin, hi - margin, min_sep, obstacles, "start")
        goals = _place_points(rng, n, n_d, lo + margin, hi - margin, min_sep, obstacles, "goal")
        p_min = np.full(n_d, lo)
        p_max = np.full(n_d, hi)
    elif family.kind == "circle_antipodal":
        R = family.circle_radius
        if n >= 2 and 2.0 * R * np.sin(np.pi / n) < min_sep:
            raise GenerationError(
                f"{n} robots on a circle of radius {R} violate the separation constraint"
            )
        ang = 2.0 * np.pi * np.arange(n) / n
        starts = np.zeros((n, n_d))
        starts[:, 0] = R * np.cos(ang)
        starts[:, 1] = R * np.sin(ang)
        goals = -starts
        obstacles = []
        extent = 1.25 * R + 2.0 * r
        p_min = np.full(n_d, -extent)
        p_max = np.full(n_d, extent)
    else:
        raise GenerationError(f"unknown scenario family {family.kind!r}")

    scn = Scenario(
        n=n, n_d=n_d, radii=radii, starts=starts, goals=goals,
        obstacles=obstacles, p_min=p_min, p_max=p_max, horizon=horizon, seed=seed,
    )
    scn.validate()
    return scn


def to_dict(scn: Scenario) -> dict:
    return {
        "version": SCENARIO_VERSION,
        "n": scn.n,
        "n_d": scn.n_d,
        "radii": scn.radii.tolist(),
        "starts": scn.starts.tolist(),
        "goals": scn.goals.tolist(),
        "obstacles": [
            {
                "center": o.center.tolist(),
                "radii": o.radii.tolist(),
                "velocity": o.velocity.tolist(),
            }
            for o in scn.obstacles
        ],
        "workspace": {"p_min": scn.p_min.tolist(), "p_max": scn.p_max.tolist()},
        "horizon": {
            "n_xi": scn.horizon.n_basis,
            "K": scn.horizon.num_steps - 1,
            "T": scn.horizon.duration,
        },
        "seed": scn.seed,
    }


def from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise SchemaError("scenario document must be a JSON object")
    version = doc.get("version")
    if version != SCENARIO_VERSION:
        raise SchemaError(f"unsupported scenario version {version!r}")
    for key in ("n", "n_d", "radii", "starts", "goals", "workspace", "horizon"):
        if key not in doc:
            raise SchemaError(f"scenario file missing required field {key!r}")
    hor = doc["horizon"]
    for key in ("n_xi", "K", "T"):
        if key not in hor:
            raise SchemaError(f"scenario horizon missing field {key!r}")
    scn = Scenario(
        n=int(doc["n"]),
        n_d=int(doc["n_d"]),
        radii=doc["radii"],
        starts=doc["starts"],
        goals=doc["goals"],
        obstacles=[
            Obstacle(center=o["center"], radii=o["radii"], velocity=o.get("velocity"))
            for o in doc.get("obstacles", [])
        ],
        p_min=doc["workspace"]["p_min"],
        p_max=doc["workspace"]["p_max"],
        horizon=BasisConfig(int(hor["n_xi"]), int(hor["K"]) + 1, float(hor["T"])),
        seed=int(doc.get("seed", 0)),
    )
    scn.validate()
    return scn


def save(scn: Scenario, path) -> None:
    with open(path, "w") as fh:
        json.dump(to_dict(scn), fh, indent=1)
        fh.write("\n")


def load(path) -> Scenario:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: malformed JSON at line {exc.lineno}: {exc.msg}") from exc
    return from_dict(doc)
