"""Self-describing binary container shared by datasets and checkpoints.

Layout: ASCII magic (carries the format version), uint32 little-endian
header length, UTF-8 JSON header (metadata plus an array manifest of
name/shape/dtype), then the raw array blobs in manifest order, little-endian
C-order. Headers are serialized with sorted keys and no timestamps, so a
rewrite of identical content is byte-identical.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

__all__ = ["write_container", "read_container", "ContainerError"]

_ALLOWED_DTYPES = {"<f4", "<f8", "<i8"}


class ContainerError(ValueError):
    pass


def _canonical_dtype(arr: np.ndarray) -> str:
    code = arr.dtype.newbyteorder("<").str
    if code not in _ALLOWED_DTYPES:
        raise ContainerError(f"unsupported array dtype {arr.dtype}")
    return code


def write_container(path, magic: bytes, meta: dict, arrays: dict) -> None:
    """Atomically write `meta` + named arrays under the given magic."""
    manifest = []
    blobs = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        code = _canonical_dtype(arr)
        if arr.dtype.str != code:
            arr = arr.astype(code)
        manifest.append({"name": name, "shape": list(arr.shape), "dtype": code})
        blobs.append(arr.tobytes(order="C"))
    header = dict(meta)
    header["arrays"] = manifest
    payload = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")

    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "wb") as f:
        f.write(magic)
        f.write(struct.pack("<I", len(payload)))
        f.write(payload)
        for blob in blobs:
            f.write(blob)
    os.replace(tmp, path)


def read_container(path, magic: bytes) -> tuple[dict, dict]:
    """Read back (meta, arrays). Raises ContainerError on a wrong magic."""
    with open(path, "rb") as f:
        got = f.read(len(magic))
        if got != magic:
            raise ContainerError(
                f"{path}: bad magic {got!r}, expected {magic!r} "
                "(wrong file type or unsupported format version)"
            )
        (hlen,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(hlen).decode("utf-8"))
        manifest = header.pop("arrays", [])
        arrays = {}
        for entry in manifest:
            shape = tuple(entry["shape"])
            dtype = np.dtype(entry["dtype"])
            count = int(np.prod(shape)) if shape else 1
            buf = f.read(count * dtype.itemsize)
            if len(buf) != count * dtype.itemsize:
                raise ContainerError(f"{path}: truncated blob for {entry['name']}")
            arrays[entry["name"]] = np.frombuffer(buf, dtype=dtype).reshape(shape).copy()
    return header, arrays
