"""Checkpoint file format.

A checkpoint is a single JSON header line (parameter names, shapes and byte
offsets in declaration order, plus an optional ``meta`` block for model
configuration), a newline, then the raw little-endian float32 arrays
concatenated in that order.
"""

from __future__ import annotations

import json
import os

import numpy as np

from ..errors import DataError

FORMAT_NAME = "echoqc-checkpoint"
FORMAT_VERSION = 1


def save_checkpoint(path, arrays: dict[str, np.ndarray], meta: dict | None = None) -> None:
    entries = []
    offset = 0
    blobs = []
    for name, arr in arrays.items():
        data = np.ascontiguousarray(arr, dtype="<f4")
        entries.append({
            "name": name,
            "shape": list(arr.shape),
            "offset": offset,
            "nbytes": data.nbytes,
        })
        offset += data.nbytes
        blobs.append(data.tobytes())
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "meta": meta or {},
        "params": entries,
    }
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for blob in blobs:
            fh.write(blob)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise DataError(f"unreadable checkpoint header in {path}: {exc}") from exc
        if header.get("format") != FORMAT_NAME:
            raise DataError(f"{path} is not a {FORMAT_NAME} file")
        if header.get("version") != FORMAT_VERSION:
            raise DataError(
                f"checkpoint version {header.get('version')!r} unsupported "
                f"(expected {FORMAT_VERSION})")
        blob = fh.read()
    arrays: dict[str, np.ndarray] = {}
    for entry in header["params"]:
        start, n = entry["offset"], entry["nbytes"]
        if start + n > len(blob):
            raise DataError(f"checkpoint {path} truncated at parameter '{entry['name']}'")
        flat = np.frombuffer(blob[start:start + n], dtype="<f4")
        arrays[entry["name"]] = flat.reshape(entry["shape"]).copy()
    return arrays, header.get("meta", {})
