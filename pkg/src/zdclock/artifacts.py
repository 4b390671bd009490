"""Versioned CSV/JSON artifacts and run manifests.

CSV files start with one schema line ``# zdclock-csv <name> <version>``
followed by a header row.  Floats are written with ``repr`` so payloads
round-trip exactly and hash identically across runs.
"""
from __future__ import annotations

import hashlib
import io
import json
import math
from pathlib import Path

SCHEMA_PREFIX = "# zdclock-csv"

SCHEMAS = {
    "exact_thermo": (1, ("T", "logZ", "E", "C_v")),
    "mc_series": (1, ("sample_index", "E", "C")),
    "fidelity_curve": (1, ("beta", "chi_F", "chi_F_err", "cv_route", "cv_err", "valid")),
    "correlation": (1, ("T", "r", "C", "C_err")),
}

MANIFEST_SUFFIX = ".manifest.json"


class SchemaError(ValueError):
    pass


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    v = float(v)
    if math.isnan(v):
        return "nan"
    return repr(v)


def csv_bytes(schema: str, rows) -> bytes:
    """Serialize ``rows`` (dicts or sequences in column order) under ``schema``."""
    version, cols = SCHEMAS[schema]
    buf = io.StringIO(newline="")
    buf.write(f"{SCHEMA_PREFIX} {schema} {version}\n")
    buf.write(",".join(cols) + "\n")
    for row in rows:
        vals = [row[c] for c in cols] if isinstance(row, dict) else list(row)
        if len(vals) != len(cols):
            raise SchemaError(f"{schema}: expected {len(cols)} columns, got {len(vals)}")
        buf.write(",".join(_fmt(v) for v in vals) + "\n")
    return buf.getvalue().encode("utf-8")


def write_csv(path, schema: str, rows) -> Path:
    path = Path(path)
    path.write_bytes(csv_bytes(schema, rows))
    return path


def read_csv(path) -> tuple[str, list[dict]]:
    """Read a versioned CSV; unknown schemas or versions raise :class:`SchemaError`."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith(SCHEMA_PREFIX):
        raise SchemaError(f"{path}: missing schema line")
    parts = lines[0][len(SCHEMA_PREFIX):].split()
    if len(parts) != 2:
        raise SchemaError(f"{path}: malformed schema line {lines[0]!r}")
    name, version = parts[0], parts[1]
    if name not in SCHEMAS:
        raise SchemaError(f"{path}: unknown schema {name!r}")
    known, cols = SCHEMAS[name]
    if version != str(known):
        raise SchemaError(f"{path}: unsupported {name} schema version {version} (reader knows {known})")
    header = tuple(lines[1].split(","))
    if header != cols:
        raise SchemaError(f"{path}: header {header} does not match {name} v{known}")
    rows = []
    for line in lines[2:]:
        rows.append({c: float(v) for c, v in zip(cols, line.split(","))})
    return name, rows


def json_bytes(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=2, allow_nan=True, default=_json_default)
            + "\n").encode("utf-8")


def _json_default(o):
    if hasattr(o, "tolist"):
        return o.tolist()
    if hasattr(o, "item"):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_bytes(json_bytes(obj))
    return path


def payload_hash(paths) -> str:
    """SHA-256 over the payload files, in name order, each prefixed by its name."""
    h = hashlib.sha256()
    for p in sorted((Path(p) for p in paths), key=lambda p: p.name):
        h.update(p.name.encode() + b"\0")
        h.update(p.read_bytes())
        h.update(b"\0")
    return h.hexdigest()


def manifest_path(out_dir, command: str) -> Path:
    return Path(out_dir) / f"{command}{MANIFEST_SUFFIX}"


def read_manifest(path) -> dict:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    for key in ("command", "config", "outputs", "output_hash"):
        if key not in data:
            raise SchemaError(f"{path}: manifest lacks {key!r}")
    return data
