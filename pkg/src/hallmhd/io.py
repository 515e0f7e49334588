"""Deterministic text output: 17-significant-digit floats, NDJSON, CSV, JSON."""
from __future__ import annotations

import json
import math

import numpy as np


def fmt_float(x) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return format(x, ".17g")


def dumps(obj) -> str:
    """Compact JSON with floats written by :func:`fmt_float`; non-finite floats become null."""
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return {None: "null", True: "true", False: "false"}[None if obj is None else bool(obj)]
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ",".join(f"{dumps(str(k))}:{dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_ndjson(fh, record: dict) -> None:
    fh.write(dumps(record) + "\n")


def csv_row(values) -> str:
    return ",".join(fmt_float(v) if isinstance(v, (float, np.floating)) else str(v) for v in values) + "\n"
