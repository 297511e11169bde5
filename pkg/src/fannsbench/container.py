"""Versioned binary container for serialized indexes.

Layout (all integers little-endian):

    magic   4 bytes  b"FANN"
    version u32
    meta    u64 length + UTF-8 JSON (sorted keys)
    nblocks u32
    block   u16 name length + name bytes
            u8  dtype-string length + numpy dtype string (e.g. "<f4")
            u8  ndim, then ndim * u64 dims
            raw array bytes (C order)

Writes are byte-stable: identical meta and arrays produce identical files.
"""

from __future__ import annotations

import io
import json
import struct
from typing import BinaryIO

import numpy as np

MAGIC = b"FANN"
VERSION = 1


class ContainerFormatError(ValueError):
    pass


def write_container(path, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as fh:
        _write(fh, meta, arrays)


def container_bytes(meta: dict, arrays: dict[str, np.ndarray]) -> bytes:
    buf = io.BytesIO()
    _write(buf, meta, arrays)
    return buf.getvalue()


def _write(fh: BinaryIO, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    fh.write(MAGIC)
    fh.write(struct.pack("<I", VERSION))
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode()
    fh.write(struct.pack("<Q", len(meta_bytes)))
    fh.write(meta_bytes)
    fh.write(struct.pack("<I", len(arrays)))
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        name_b = name.encode()
        dtype_b = arr.dtype.str.encode()
        fh.write(struct.pack("<H", len(name_b)))
        fh.write(name_b)
        fh.write(struct.pack("<B", len(dtype_b)))
        fh.write(dtype_b)
        fh.write(struct.pack("<B", arr.ndim))
        for dim in arr.shape:
            fh.write(struct.pack("<Q", dim))
        fh.write(arr.tobytes())


def read_container(path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        return _read(fh)


def container_from_bytes(data: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    return _read(io.BytesIO(data))


def _read(fh: BinaryIO) -> tuple[dict, dict[str, np.ndarray]]:
    magic = fh.read(4)
    if magic != MAGIC:
        raise ContainerFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    (version,) = struct.unpack("<I", fh.read(4))
    if version != VERSION:
        raise ContainerFormatError(f"unsupported container version {version}")
    (meta_len,) = struct.unpack("<Q", fh.read(8))
    meta = json.loads(fh.read(meta_len).decode())
    (nblocks,) = struct.unpack("<I", fh.read(4))
    arrays: dict[str, np.ndarray] = {}
    for _ in range(nblocks):
        (name_len,) = struct.unpack("<H", fh.read(2))
        name = fh.read(name_len).decode()
        (dtype_len,) = struct.unpack("<B", fh.read(1))
        dtype = np.dtype(fh.read(dtype_len).decode())
        (ndim,) = struct.unpack("<B", fh.read(1))
        shape = tuple(struct.unpack("<Q", fh.read(8))[0] for _ in range(ndim))
        count = int(np.prod(shape)) if shape else 1
        data = fh.read(count * dtype.itemsize)
        if len(data) != count * dtype.itemsize:
            raise ContainerFormatError(f"truncated block {name!r}")
        arrays[name] = np.frombuffer(data, dtype=dtype).reshape(shape).copy()
    return meta, arrays
