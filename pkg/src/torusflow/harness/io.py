"""Deterministic CSV/JSON emission and run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import platform
from importlib import metadata
from pathlib import Path

import numpy as np

OUTPUT_VERSION = 1


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))  # shortest round-trip form
    return str(v)


def write_csv(path, header, rows):
    """UTF-8, header row, '.' decimal, shortest round-trip floats."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def canonical(cfg):
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"))


def config_hash(cfg):
    return hashlib.sha256(canonical(cfg).encode("utf-8")).hexdigest()


def versions():
    out = {"python": platform.python_version()}
    for pkg in ("artifact", "numpy", "scipy", "numba", "jsonschema"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    return out


def manifest(cfg, files, assertions):
    # threads and output location do not affect results and are left out of the hash
    core = {k: v for k, v in cfg.items() if k not in ("threads", "out")}
    return {
        "output_version": OUTPUT_VERSION,
        "experiment": cfg["experiment"],
        "config_sha256": config_hash(core),
        "seed": cfg["seed"],
        "threads": cfg["threads"],
        "versions": versions(),
        "files": sorted(str(f) for f in files),
        "assertions": assertions,
        "config": cfg,
    }
