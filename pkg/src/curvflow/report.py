"""Deterministic CSV/JSON emission with every float written to 17 significant digits."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from . import __version__

TOOL = "curvflow"


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, tuple):
        return list(obj)
    return obj


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text.  Non-finite floats use the ``NaN``/``Infinity`` tokens that ``json.loads`` reads back."""
    obj = _plain(obj)
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(_plain(v), (dict, list)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def metadata(config_mapping: dict, seed: int) -> dict:
    return {"tool": TOOL, "version": __version__, "seed": seed, "config": config_mapping}


def write_json(path, payload: dict, meta: dict) -> Path:
    path = Path(path)
    path.write_text(dumps({"metadata": meta, **payload}) + "\n")
    return path


def write_csv(path, header, rows, meta: dict) -> Path:
    """CSV preceded by ``#``-prefixed metadata lines."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(f"# tool={meta['tool']} version={meta['version']} seed={meta['seed']}\n")
        cfg = ";".join(f"{k}={fmt_float(v) if isinstance(v, float) else v}" for k, v in meta["config"].items())
        fh.write(f"# config: {cfg}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path
