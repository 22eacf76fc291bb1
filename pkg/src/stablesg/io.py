"""JSON configuration files and certificate reports.

A point is written as a list of ``[re, im]`` pairs. Floats go through
``repr``, which round-trips every double exactly, and keys are sorted, so
equal inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .errors import StableSGError
from .geometry import PointConfig, Subspace, as_config
from .lcc import DecodingFamily, RecoveryTuple

FORMAT_VERSION = 1


class FormatError(StableSGError, ValueError):
    """A file does not follow the expected schema."""


def encode_vector(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=np.complex128)]


def decode_vector(rows) -> np.ndarray:
    try:
        arr = np.array(rows, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"malformed point: {exc}") from None
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise FormatError(f"a point must be a list of [re, im] pairs, got shape {arr.shape}")
    return arr[:, 0] + 1j * arr[:, 1]


def jsonable(obj):
    """Plain JSON types for numpy scalars/arrays, complex numbers and dataclasses."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, Subspace):
        return {"ambient_dim": obj.ambient_dim, "basis": [encode_vector(b) for b in obj.basis]}
    if isinstance(obj, DecodingFamily):
        return family_to_json(obj)
    if dataclasses.is_dataclass(obj):
        return jsonable(dataclasses.asdict(obj))
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=1) + "\n"


def family_to_json(f: DecodingFamily) -> dict:
    return {"n": f.n, "q": f.q, "B": float(f.B), "eps": float(f.eps),
            "tuples": [[{"target": t.target, "support": list(t.support),
                         "coefficients": encode_vector(t.coefficients),
                         "residual": float(t.residual)} for t in ts] for ts in f.tuples]}


def family_from_json(d: dict) -> DecodingFamily:
    try:
        tuples = tuple(
            tuple(RecoveryTuple(int(t["target"]), tuple(t["support"]),
                                tuple(decode_vector(t["coefficients"])) if t["support"] else (),
                                float(t["residual"])) for t in ts)
            for ts in d["tuples"])
        return DecodingFamily(int(d["n"]), int(d["q"]), float(d["B"]), float(d["eps"]), tuples)
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed decoding family: {exc!r}") from None


def config_to_json(V, metadata: dict | None = None) -> dict:
    P = as_config(V).points
    return {"format_version": FORMAT_VERSION, "dim": int(P.shape[1]),
            "points": [encode_vector(p) for p in P], "metadata": jsonable(metadata or {})}


def config_from_json(d: dict) -> tuple[PointConfig, dict]:
    if not isinstance(d, dict):
        raise FormatError("configuration must be a JSON object")
    if d.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {d.get('format_version')!r}")
    try:
        dim, pts = int(d["dim"]), d["points"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"missing field: {exc!r}") from None
    rows = [decode_vector(p) for p in pts]
    if any(r.shape[0] != dim for r in rows):
        raise FormatError(f"every point must have dim={dim} coordinates")
    if not rows:
        raise FormatError("configuration has no points")
    return PointConfig(np.array(rows)), dict(d.get("metadata", {}))


def write_config(path, V, metadata: dict | None = None) -> None:
    Path(path).write_text(dumps(config_to_json(V, metadata)))


def read_config(path) -> tuple[PointConfig, dict]:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
    return config_from_json(data)


def digest(V) -> str:
    """SHA-256 of the canonical JSON encoding of the points."""
    P = as_config(V).points
    blob = json.dumps([encode_vector(p) for p in P], separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def make_report(kind: str, V, *, parameters: dict, hypotheses: dict, design: dict | None,
                table: list, flags: dict, measured: dict, timings: dict,
                extra: dict | None = None) -> dict:
    rep = {
        "format_version": FORMAT_VERSION,
        "report": kind,
        "input_digest": digest(V),
        "parameters": parameters,
        "hypotheses": hypotheses,
        "design": design,
        "table": table,
        "flags": flags,
        "measured": measured,
        "passed": bool(all(flags.values()) and all(hypotheses.values())),
        "timings": timings,
    }
    if extra:
        rep.update(extra)
    return jsonable(rep)


def write_report(path, report: dict) -> None:
    Path(path).write_text(dumps(report))


def read_report(path) -> dict:
    try:
        rep = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
    if rep.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {rep.get('format_version')!r}")
    return rep


def write_table_csv(path, table: list) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["name", "measured", "bound", "holds"])
        w.writeheader()
        for row in table:
            w.writerow({k: (repr(v) if isinstance(v, float) and math.isfinite(v) else v)
                        for k, v in row.items()})
