"""Binary field snapshots.

Layout (all integers little-endian)::

    bytes 0..7    magic b"HMHDSNP1"
    bytes 8..15   uint64 header length H
    next H bytes  UTF-8 JSON header
    remainder     float64 little-endian arrays in header["fields"] order,
                  three components each, C order, N^3 values per component

The header carries ``format_version``, ``dim``, ``N``, ``fields``, ``t``,
``params``, ``dtype`` ("<f8") and ``order`` ("C").  Sample [i, j, k] of a
component sits at x = 2 pi (i, j, k) / N.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import spectral as sp
from .errors import ConfigError
from .io import dumps
from .solver import State

MAGIC = b"HMHDSNP1"
FORMAT_VERSION = 1
FIELDS = ("u", "b")


def encode(state: State, params: Optional[dict] = None) -> bytes:
    grid = state.grid
    header = {
        "format_version": FORMAT_VERSION,
        "dim": grid.dim,
        "N": grid.n,
        "fields": list(FIELDS),
        "t": float(state.t),
        "params": params or {},
        "dtype": "<f8",
        "order": "C",
    }
    head = dumps(header).encode("utf-8")
    body = b"".join(
        np.ascontiguousarray(sp.as_physical(f), dtype="<f8").tobytes() for f in (state.u, state.b)
    )
    return MAGIC + struct.pack("<Q", len(head)) + head + body


def decode(data: bytes) -> tuple:
    """(State, header) from snapshot bytes."""
    if data[:8] != MAGIC:
        raise ConfigError("not a snapshot file (bad magic)")
    (hlen,) = struct.unpack("<Q", data[8:16])
    try:
        header = json.loads(data[16:16 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"corrupt snapshot header: {exc}") from None
    if header.get("format_version") != FORMAT_VERSION or header.get("dtype") != "<f8":
        raise ConfigError("unsupported snapshot version or dtype")
    n = int(header["N"])
    grid = sp.get_grid(n)
    per_field = 3 * n**3
    arr = np.frombuffer(data, dtype="<f8", offset=16 + hlen)
    if arr.size != per_field * len(header["fields"]):
        raise ConfigError("snapshot payload size does not match header")
    fields = {}
    for i, name in enumerate(header["fields"]):
        vals = arr[i * per_field:(i + 1) * per_field].reshape((3,) + grid.shape).astype(float)
        fields[name] = sp.transform(sp.PhysicalField(grid, vals), "forward")
    return State(float(header["t"]), fields["u"], fields["b"]), header


def save(path: Union[str, Path], state: State, params: Optional[dict] = None) -> None:
    Path(path).write_bytes(encode(state, params))


def load(path: Union[str, Path]) -> tuple:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read snapshot {path}: {exc.strerror}") from None
    return decode(data)
