"""Deterministic binary container for named arrays plus a JSON metadata block.

Layout: magic line, 8-byte little-endian manifest length, the manifest
(canonical JSON: sorted keys, no whitespace), then raw little-endian array
blobs in manifest order. No timestamps or platform data are written, so
identical contents produce identical bytes, and float64 values round-trip
bit-exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ValidationError

MAGIC = b"RISKSCENE-CKPT-1\n"

_DTYPES = {"<f8": np.dtype("<f8"), "<i8": np.dtype("<i8")}


def save_checkpoint(path, arrays: dict, meta: dict | None = None):
    """Write named arrays (float64 or int64) and JSON-serializable metadata."""
    path = Path(path)
    entries = []
    blobs = []
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        if arr.dtype == np.float64:
            code = "<f8"
        elif arr.dtype == np.int64:
            code = "<i8"
        else:
            raise ValidationError(f"checkpoint array {name!r} has unsupported dtype {arr.dtype}")
        blob = arr.astype(_DTYPES[code], copy=False).tobytes()
        entries.append({"name": name, "dtype": code, "shape": list(arr.shape)})
        blobs.append(blob)
    manifest = json.dumps(
        {"meta": meta or {}, "arrays": entries},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(len(manifest).to_bytes(8, "little"))
        fh.write(manifest)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path):
    """Read a container back into ({name: array}, meta)."""
    path = Path(path)
    data = path.read_bytes()
    if not data.startswith(MAGIC):
        raise ValidationError(f"{path} is not a riskscene checkpoint")
    off = len(MAGIC)
    man_len = int.from_bytes(data[off : off + 8], "little")
    off += 8
    manifest = json.loads(data[off : off + man_len].decode("utf-8"))
    off += man_len
    arrays = {}
    for entry in manifest["arrays"]:
        dtype = _DTYPES[entry["dtype"]]
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * dtype.itemsize
        arr = np.frombuffer(data[off : off + nbytes], dtype=dtype).reshape(shape)
        arrays[entry["name"]] = arr.copy()
        off += nbytes
    if off != len(data):
        raise ValidationError(f"{path}: trailing bytes after array payload")
    return arrays, manifest["meta"]
