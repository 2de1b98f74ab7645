"""Deterministic CSV/JSON emission shared by the experiment reports and the
command-line driver.

Floats are printed with round-trip (17 significant digit) precision and no
locale dependence, so identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
from typing import Iterable

import numpy as np


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def csv_lines(header: Iterable[str], rows: Iterable[Iterable],
              comments: Iterable[str] = ()) -> list[str]:
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(format_value(x) for x in row))
    return lines


def write_csv(path, header, rows, comments=()) -> None:
    text = "\n".join(csv_lines(header, rows, comments)) + "\n"
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True,
                      allow_nan=True) + "\n"


def write_json(path, obj) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(json_text(obj))


def quantiles(values: np.ndarray, qs=(0.1, 0.25, 0.5, 0.75, 0.9)) -> dict:
    arr = np.sort(np.asarray(values, dtype=float))
    out = {}
    for q in qs:
        pos = q * (arr.size - 1)
        lo = int(np.floor(pos))
        hi = min(lo + 1, arr.size - 1)
        frac = pos - lo
        out[f"q{int(q * 100)}"] = float(arr[lo] * (1 - frac) + arr[hi] * frac)
    return out
