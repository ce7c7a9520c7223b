"""Byte-stable checkpoint container for named arrays.

JSON with sorted keys; each array is stored as shape, dtype and base64 of its
little-endian bytes, so the file depends only on the values.
"""

from __future__ import annotations

import base64
import json

import numpy as np

FORMAT_VERSION = 1


def encode_arrays(arrays: dict) -> dict:
    out = {}
    for name in sorted(arrays):
        a = np.ascontiguousarray(arrays[name])
        le = a.astype(a.dtype.newbyteorder("<"), copy=False)
        out[name] = {"shape": list(a.shape), "dtype": le.dtype.str,
                     "data": base64.b64encode(le.tobytes()).decode("ascii")}
    return out


def decode_arrays(blob: dict) -> dict:
    out = {}
    for name, rec in blob.items():
        a = np.frombuffer(base64.b64decode(rec["data"]), dtype=np.dtype(rec["dtype"]))
        out[name] = a.astype(a.dtype.newbyteorder("="), copy=True).reshape(rec["shape"])
    return out


def save_checkpoint(path: str, arrays: dict, config: dict | None = None, **extra) -> None:
    doc = {"format_version": FORMAT_VERSION, "config": config or {},
           "arrays": encode_arrays(arrays), **extra}
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_checkpoint(path: str) -> tuple[dict, dict, dict]:
    """Return (arrays, config, remaining top-level fields)."""
    with open(path) as fh:
        doc = json.load(fh)
    version = doc.pop("format_version", None)
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format version {version!r}")
    arrays = decode_arrays(doc.pop("arrays"))
    config = doc.pop("config", {})
    return arrays, config, doc
