"""Field dumps and result serialization.

A field dump is two files: ``<stem>.bin`` with little-endian float64 values
in row-major order, and ``<stem>.json`` with
``{"dim", "half_length", "points_per_axis", "label"}``.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .grid import Field, GridSpec

SCHEMA_VERSION = 1

SWEEP_COLUMNS = (
    "schema_version", "eps", "grid_n", "x_eps", "V_at_xeps", "V_gap",
    "rescaled_energy", "c_V0", "energy_gap", "barycenter", "distinct_count",
    "expected_count", "converged", "positive", "riesz_certificate",
    "original_certificate", "boundary_ok", "riesz_sup", "sup_outside",
    "grad_norm_rel", "nehari_residual_rel", "seed_energy_gap", "seed_barycenter_error",
    "iterations", "wall_time_s",
)


class FieldFormatError(ValueError):
    pass


def _stem(path) -> Path:
    p = Path(path)
    return p.with_suffix("") if p.suffix in (".bin", ".json") else p


def write_field(field: Field, path, label: str = "") -> Path:
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    g = field.grid
    stem.with_suffix(".bin").write_bytes(np.ascontiguousarray(field.values, dtype="<f8").tobytes())
    meta = {"dim": g.dim, "half_length": g.half_length, "points_per_axis": g.points_per_axis,
            "label": label}
    stem.with_suffix(".json").write_text(json.dumps(meta, indent=2) + "\n")
    return stem


def read_field(path) -> Field:
    stem = _stem(path)
    try:
        meta = json.loads(stem.with_suffix(".json").read_text())
        grid = GridSpec(int(meta["dim"]), float(meta["half_length"]), int(meta["points_per_axis"]))
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FieldFormatError(f"malformed sidecar for {stem}: {exc}") from exc
    raw = stem.with_suffix(".bin").read_bytes()
    if len(raw) != 8 * grid.size:
        raise FieldFormatError(
            f"{stem}.bin holds {len(raw)} bytes, sidecar implies {8 * grid.size}")
    return Field(grid, np.frombuffer(raw, dtype="<f8").reshape(grid.shape).astype(float))


def _num(x):
    x = float(x)
    if not math.isfinite(x):
        return None
    return x


def result_to_dict(res, label: str = "") -> dict:
    """JSON-safe summary of a SolveResult (the field itself is dumped separately)."""
    e = res.energy
    return {
        "schema_version": SCHEMA_VERSION,
        "label": label,
        "seed_point": None if res.seed_point is None else [float(c) for c in res.seed_point],
        "converged": bool(res.converged),
        "iterations": int(res.iterations),
        "energy": {"quad": e.quad, "interaction": e.interaction, "total": e.total,
                   "rescaled_total": e.rescaled_total},
        "grad_norm_rel": _num(res.grad_norm_rel),
        "nehari_residual_rel": _num(res.nehari_residual_rel),
        "argmax": {"point": [float(c) for c in res.argmax[0]], "value": float(res.argmax[1])},
        "v_at_argmax": float(res.v_at_argmax),
        "linf": float(res.linf),
        "riesz_sup": float(res.riesz_sup),
        "riesz_certificate": bool(res.riesz_certificate),
        "sup_outside": _num(res.sup_outside),
        "original_certificate": bool(res.original_certificate),
        "positive": bool(res.positive),
        "barycenter": [float(c) for c in res.barycenter],
        "boundary_mass_rel": float(res.boundary_mass_rel),
        "boundary_ok": bool(res.boundary_ok),
    }


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n")


def _csv_cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple, np.ndarray)):
        return ";".join(repr(float(c)) for c in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def append_sweep_record(record: dict, csv_path, jsonl_path) -> None:
    """Append one row to the sweep CSV (header on first write) and the JSON-lines log."""
    csv_path, jsonl_path = Path(csv_path), Path(jsonl_path)
    new = not csv_path.exists()
    with csv_path.open("a", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if new:
            writer.writerow(SWEEP_COLUMNS)
        writer.writerow([_csv_cell(record[c]) for c in SWEEP_COLUMNS])
    with jsonl_path.open("a") as fh:
        fh.write(json.dumps(_jsonable(record)) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj
