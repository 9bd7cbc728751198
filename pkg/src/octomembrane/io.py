"""JSON snapshots of field configurations and deterministic report output.

Snapshot layout (``"schema": 1``)::

    {"schema": 1, "kind": "snapshot", "topology": "sphere" | "torus",
     "n1": int, "n2": int, "d": int, "time": float,
     "winding": null | {"a": [d floats], "b": [d floats]},
     "values": {"real": [...], "imag": null | [...]},      # row-major (d, n1, n2)
     "velocity": null | {"real": [...], "imag": ...}}
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .surface import FieldConfiguration, SurfaceGrid

SCHEMA = 1
REPORT_DIGITS = 10


class SnapshotError(ValueError):
    pass


def _pack(arr) -> dict:
    a = np.asarray(arr)
    real = np.real(a).ravel().tolist()
    imag = np.imag(a).ravel().tolist() if np.iscomplexobj(a) and np.any(np.imag(a)) else None
    return {"real": real, "imag": imag}


def _unpack(blob, shape) -> np.ndarray:
    try:
        real = np.asarray(blob["real"], dtype=float)
        out = real if blob.get("imag") is None else real + 1j * np.asarray(blob["imag"], dtype=float)
        return out.reshape(shape)
    except (KeyError, TypeError, ValueError) as exc:
        raise SnapshotError(f"malformed array block: {exc}") from exc


def snapshot_dict(cfg: FieldConfiguration, t: float = 0.0, velocity=None) -> dict:
    g = cfg.grid
    winding = None
    if cfg.winding is not None:
        winding = {"a": [float(x) for x in cfg.winding[0]], "b": [float(x) for x in cfg.winding[1]]}
    return {
        "schema": SCHEMA,
        "kind": "snapshot",
        "topology": g.topology,
        "n1": g.n1,
        "n2": g.n2,
        "d": cfg.d,
        "time": float(t),
        "winding": winding,
        "values": _pack(cfg.values),
        "velocity": None if velocity is None else _pack(velocity),
    }


def snapshot_from_dict(data: dict) -> tuple[FieldConfiguration, float, np.ndarray | None]:
    try:
        if data.get("schema") != SCHEMA or data.get("kind") != "snapshot":
            raise SnapshotError(f"not a schema-{SCHEMA} snapshot")
        grid = SurfaceGrid(data["topology"], int(data["n1"]), int(data["n2"]))
        shape = (int(data["d"]), grid.n1, grid.n2)
        winding = data.get("winding")
        if winding is not None:
            winding = (np.asarray(winding["a"], float), np.asarray(winding["b"], float))
        cfg = FieldConfiguration(grid, _unpack(data["values"], shape), winding)
        vel = data.get("velocity")
        return cfg, float(data.get("time", 0.0)), None if vel is None else _unpack(vel, shape)
    except SnapshotError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SnapshotError(f"malformed snapshot: {exc}") from exc


def write_snapshot(path, cfg: FieldConfiguration, t: float = 0.0, velocity=None) -> None:
    Path(path).write_text(json.dumps(snapshot_dict(cfg, t, velocity)))


def read_snapshot(path):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"cannot read snapshot {path}: {exc}") from exc
    return snapshot_from_dict(data)


def quantize(obj, digits: int = REPORT_DIGITS):
    """Round every float to ``digits`` significant digits; numpy scalars become
    plain Python values and non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): quantize(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [quantize(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return quantize(obj.tolist(), digits)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [quantize(obj.real, digits), quantize(obj.imag, digits)]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.{digits - 1}e}")
    return obj


def dumps_report(report: dict) -> str:
    return json.dumps(quantize(report), indent=2, sort_keys=True) + "\n"
