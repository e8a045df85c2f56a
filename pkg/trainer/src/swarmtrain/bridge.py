"""Standalone loaders/writers for the file schemas shared with the planner
package: scenario JSON v1, dataset JSON-lines v1, candidate JSON v1 and
warm-start JSON v1.

Validation is intentionally re-implemented here rather than delegated, so the
two packages can be checked against each other file-for-file: every document
one side accepts the other must accept, and rejections happen on the same
fields. Coefficient vectors use the planner's flat layout (axis-major, then
robot, then coefficient index).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

SCENARIO_VERSION = 1
CANDIDATE_VERSION = 1
DATASET_VERSION = 1
WARMSTART_VERSION = 1


class BridgeError(Exception):
    """A schema or dimension problem in a shared file."""


@dataclass
class ScenarioDoc:
    """Validated scenario contents; mirrors the planner's scenario fields."""
    n: int
    n_d: int
    radii: np.ndarray              # (3,)
    starts: np.ndarray             # (n, n_d)
    goals: np.ndarray              # (n, n_d)
    obstacles: list[dict]          # center/radii/velocity arrays
    p_min: np.ndarray
    p_max: np.ndarray
    n_xi: int
    num_steps: int                 # K + 1
    duration: float
    seed: int = 0
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def coeff_size(self) -> int:
        return self.n * self.n_d * self.n_xi


def _as_obj(path):
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise BridgeError(
                f"{path}: malformed JSON at line {exc.lineno}: {exc.msg}"
            ) from exc


def scenario_from_dict(doc: dict) -> ScenarioDoc:
    if not isinstance(doc, dict):
        raise BridgeError("scenario document must be a JSON object")
    if doc.get("version") != SCENARIO_VERSION:
        raise BridgeError(f"unsupported scenario version {doc.get('version')!r}")
    for key in ("n", "n_d", "radii", "starts", "goals", "workspace", "horizon"):
        if key not in doc:
            raise BridgeError(f"scenario file missing required field {key!r}")
    hor = doc["horizon"]
    for key in ("n_xi", "K", "T"):
        if key not in hor:
            raise BridgeError(f"scenario horizon missing field {key!r}")
    n, n_d = int(doc["n"]), int(doc["n_d"])
    starts = np.asarray(doc["starts"], dtype=float)
    goals = np.asarray(doc["goals"], dtype=float)
    if starts.shape != (n, n_d) or goals.shape != (n, n_d):
        raise BridgeError(
            f"starts/goals shapes {starts.shape}/{goals.shape} do not match n={n}, n_d={n_d}"
        )
    obstacles = [
        {
            "center": np.asarray(o["center"], dtype=float),
            "radii": np.asarray(o["radii"], dtype=float),
            "velocity": np.asarray(o.get("velocity", np.zeros(3)), dtype=float),
        }
        for o in doc.get("obstacles", [])
    ]
    return ScenarioDoc(
        n=n,
        n_d=n_d,
        radii=np.asarray(doc["radii"], dtype=float),
        starts=starts,
        goals=goals,
        obstacles=obstacles,
        p_min=np.asarray(doc["workspace"]["p_min"], dtype=float),
        p_max=np.asarray(doc["workspace"]["p_max"], dtype=float),
        n_xi=int(hor["n_xi"]),
        num_steps=int(hor["K"]) + 1,
        duration=float(hor["T"]),
        seed=int(doc.get("seed", 0)),
        raw=doc,
    )


def load_scenario(path) -> ScenarioDoc:
    return scenario_from_dict(_as_obj(path))


def unflatten(flat: np.ndarray, n: int, n_d: int, n_xi: int) -> np.ndarray:
    flat = np.asarray(flat, dtype=float)
    if flat.size != n * n_d * n_xi:
        raise BridgeError(f"flat coefficient length {flat.size} != {n}*{n_d}*{n_xi}")
    return flat.reshape(n_d, n, n_xi).transpose(1, 0, 2)


def flatten(coeffs: np.ndarray) -> np.ndarray:
    return np.asarray(coeffs, dtype=float).transpose(1, 0, 2).reshape(-1)


def load_dataset(path):
    """Yield (ScenarioDoc, coeffs (n, n_d, n_xi)) pairs from JSON lines."""
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BridgeError(f"{path}:{lineno}: malformed JSON: {exc.msg}") from exc
            if rec.get("version") != DATASET_VERSION:
                raise BridgeError(f"{path}:{lineno}: unsupported dataset version")
            doc = scenario_from_dict(rec["scenario"])
            yield doc, unflatten(rec["coefficients"], doc.n, doc.n_d, doc.n_xi)


def write_candidates(path, coeff_list, n: int, n_d: int, n_xi: int) -> None:
    doc = {
        "version": CANDIDATE_VERSION,
        "n": n,
        "n_d": n_d,
        "n_xi": n_xi,
        "samples": [flatten(c).tolist() for c in coeff_list],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_candidates(path, n: int, n_d: int, n_xi: int) -> list[np.ndarray]:
    doc = _as_obj(path)
    for key in ("version", "n", "n_d", "n_xi", "samples"):
        if key not in doc:
            raise BridgeError(f"candidate file missing field {key!r}")
    if doc["version"] != CANDIDATE_VERSION:
        raise BridgeError(f"unsupported candidate version {doc['version']!r}")
    for name, expect in (("n", n), ("n_d", n_d), ("n_xi", n_xi)):
        if doc[name] != expect:
            raise BridgeError(f"candidate {name} mismatch: expected {expect}, got {doc[name]}")
    out = []
    for idx, flat in enumerate(doc["samples"]):
        arr = np.asarray(flat, dtype=float)
        if arr.size != n * n_d * n_xi:
            raise BridgeError(f"sample {idx} has length {arr.size}")
        if not np.isfinite(arr).all():
            raise BridgeError(f"sample {idx} contains non-finite values")
        out.append(unflatten(arr, n, n_d, n_xi))
    return out


def write_warmstarts(path, entries) -> None:
    """entries: iterable of (xi0, lambda0) coefficient arrays (n, n_d, n_xi)."""
    doc = {
        "version": WARMSTART_VERSION,
        "entries": [
            {"xi0": flatten(xi0).tolist(), "lambda0": flatten(lam0).tolist()}
            for xi0, lam0 in entries
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_warmstarts(path, n: int, n_d: int, n_xi: int):
    doc = _as_obj(path)
    if doc.get("version") != WARMSTART_VERSION:
        raise BridgeError(f"unsupported warm-start version {doc.get('version')!r}")
    if "entries" not in doc:
        raise BridgeError("warm-start file missing field 'entries'")
    size = n * n_d * n_xi
    out = []
    for idx, entry in enumerate(doc["entries"]):
        for key in ("xi0", "lambda0"):
            if key not in entry:
                raise BridgeError(f"warm-start entry {idx} missing field {key!r}")
            if len(entry[key]) != size:
                raise BridgeError(f"warm-start entry {idx} field {key!r} has wrong length")
        out.append(
            (
                unflatten(np.asarray(entry["xi0"], float), n, n_d, n_xi),
                unflatten(np.asarray(entry["lambda0"], float), n, n_d, n_xi),
            )
        )
    return out


def to_planner_scenario(doc: ScenarioDoc):
    """Convert a validated document into the planner package's scenario type."""
    from swarmplan.scenario import from_dict

    return from_dict(doc.raw)
