"""Artifact writers: CSV and JSON with an embedded provenance header."""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

from . import __version__


def _plain(obj):
    """Make numpy scalars/arrays and non-finite floats JSON-safe."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, complex):
        return {"re": _plain(obj.real), "im": _plain(obj.imag)}
    return obj


def config_hash(config: dict) -> str:
    blob = json.dumps(_plain(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def provenance(subcommand: str, config: dict, tolerances: dict) -> dict:
    return {
        "tool": "trojancavity",
        "version": __version__,
        "subcommand": subcommand,
        "config": _plain(config),
        "config_hash": config_hash({"subcommand": subcommand, **config, **tolerances}),
        "tolerances": _plain(tolerances),
    }


def _timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def render_json(payload: dict, prov: dict) -> str:
    doc = {"provenance": {**prov, "generated": _timestamp()}, **_plain(payload)}
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def render_csv(header, rows, prov: dict) -> str:
    buf = io.StringIO()
    buf.write("# provenance: " + json.dumps(prov, sort_keys=True) + "\n")
    buf.write(f"# generated: {_timestamp()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_text(text: str, out: str | Path | None, stdout) -> None:
    if out is None or str(out) == "-":
        stdout.write(text)
    else:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    """Read a CSV written by :func:`render_csv`, skipping comment lines."""
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]
