"""Versioned file schemas shared with external tools: candidate samples,
training datasets, warm starts, and the delimited trajectory/trace outputs."""

from __future__ import annotations

import csv
import json

import numpy as np

from .basis import BasisMatrices, evaluate, unflatten_coeffs
from .errors import SchemaError
from .scenario import Scenario, to_dict as scenario_to_dict, from_dict as scenario_from_dict

CANDIDATE_VERSION = 1
DATASET_VERSION = 1
WARMSTART_VERSION = 1


def save_candidates(path, coeff_list, n: int, n_d: int, n_basis: int) -> None:
    samples = [np.asarray(c).transpose(1, 0, 2).reshape(-1).tolist() for c in coeff_list]
    doc = {
        "version": CANDIDATE_VERSION,
        "n": n,
        "n_d": n_d,
        "n_xi": n_basis,
        "samples": samples,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_candidates(path, scn: Scenario) -> list[np.ndarray]:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: malformed JSON at line {exc.lineno}: {exc.msg}") from exc
    for key in ("version", "n", "n_d", "n_xi", "samples"):
        if key not in doc:
            raise SchemaError(f"candidate file missing field {key!r}")
    if doc["version"] != CANDIDATE_VERSION:
        raise SchemaError(f"unsupported candidate version {doc['version']!r}")
    n_xi = scn.horizon.n_basis
    for name, expect, actual in (
        ("n", scn.n, doc["n"]),
        ("n_d", scn.n_d, doc["n_d"]),
        ("n_xi", n_xi, doc["n_xi"]),
    ):
        if actual != expect:
            raise SchemaError(f"candidate {name} mismatch: expected {expect}, got {actual}")
    out = []
    for idx, flat in enumerate(doc["samples"]):
        arr = np.asarray(flat, dtype=float)
        if arr.size != scn.n * scn.n_d * n_xi:
            raise SchemaError(f"sample {idx} has length {arr.size}")
        if not np.isfinite(arr).all():
            raise SchemaError(f"sample {idx} contains non-finite values")
        out.append(unflatten_coeffs(arr, scn.n, scn.n_d, n_xi))
    return out


def append_dataset_record(fh, scn: Scenario, coeffs: np.ndarray) -> None:
    rec = {
        "version": DATASET_VERSION,
        "scenario": scenario_to_dict(scn),
        "coefficients": np.asarray(coeffs).transpose(1, 0, 2).reshape(-1).tolist(),
    }
    fh.write(json.dumps(rec) + "\n")


def read_dataset(path):
    """Yield (scenario, coeffs) pairs from a JSON-lines dataset file."""
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{lineno}: malformed JSON: {exc.msg}") from exc
            if rec.get("version") != DATASET_VERSION:
                raise SchemaError(f"{path}:{lineno}: unsupported dataset version")
            scn = scenario_from_dict(rec["scenario"])
            coeffs = unflatten_coeffs(
                np.asarray(rec["coefficients"], dtype=float),
                scn.n, scn.n_d, scn.horizon.n_basis,
            )
            yield scn, coeffs


def load_warmstarts(path, scn: Scenario) -> list[tuple[np.ndarray, np.ndarray]]:
    """Warm-start entries (xi0 coeffs, lambda0 coeffs), aligned with a candidate file."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("version") != WARMSTART_VERSION:
        raise SchemaError(f"unsupported warm-start version {doc.get('version')!r}")
    if "entries" not in doc:
        raise SchemaError("warm-start file missing field 'entries'")
    size = scn.n * scn.n_d * scn.horizon.n_basis
    out = []
    for idx, entry in enumerate(doc["entries"]):
        for key in ("xi0", "lambda0"):
            if key not in entry:
                raise SchemaError(f"warm-start entry {idx} missing field {key!r}")
            if len(entry[key]) != size:
                raise SchemaError(f"warm-start entry {idx} field {key!r} has wrong length")
        xi0 = unflatten_coeffs(np.asarray(entry["xi0"], float), scn.n, scn.n_d, scn.horizon.n_basis)
        lam0 = unflatten_coeffs(
            np.asarray(entry["lambda0"], float), scn.n, scn.n_d, scn.horizon.n_basis
        )
        out.append((xi0, lam0))
    return out


def write_trajectory_csv(path, coeffs: np.ndarray, basis: BasisMatrices) -> None:
    pos = evaluate(coeffs, basis, 0)  # (n, K+1, n_d)
    n, K1, n_d = pos.shape
    header = ["k", "robot", "x", "y"] + (["z"] if n_d == 3 else [])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(K1):
            for i in range(n):
                writer.writerow([k, i] + [repr(v) for v in pos[i, k]])


def write_trace_csv(path, trace: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "primal", "fixed_point"])
        for it, (primal, fp) in enumerate(trace):
            writer.writerow([it, repr(float(primal)), repr(float(fp))])
