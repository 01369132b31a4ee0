"""Self-describing binary checkpoint of named double-precision arrays.

Layout (all integers little-endian uint32):

    magic "EVTG" | version | repeated entries until EOF
    entry: name_len | name (utf-8) | rank | extent[rank] | float64 data (C order, LE)
"""

from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np

from ..errors import DataError
from ..ioutil import atomic_write_bytes

__all__ = ["MAGIC", "VERSION", "save_tensors", "load_tensors"]

MAGIC = b"EVTG"
VERSION = 1


def save_tensors(path, named: dict[str, np.ndarray]) -> None:
    """Write named arrays atomically in checkpoint order."""
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", VERSION))
    for name, arr in named.items():
        arr = np.ascontiguousarray(arr, dtype="<f8")
        encoded = name.encode("utf-8")
        buf.write(struct.pack("<I", len(encoded)))
        buf.write(encoded)
        buf.write(struct.pack("<I", arr.ndim))
        for extent in arr.shape:
            buf.write(struct.pack("<I", extent))
        buf.write(arr.tobytes())
    atomic_write_bytes(path, buf.getvalue())


def _read_exact(fh, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise DataError("truncated checkpoint file")
    return data


def load_tensors(path) -> dict[str, np.ndarray]:
    """Read a checkpoint back into {name: float64 array}."""
    path = Path(path)
    out: dict[str, np.ndarray] = {}
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise DataError(f"{path} is not a checkpoint (bad magic)")
        (version,) = struct.unpack("<I", _read_exact(fh, 4))
        if version != VERSION:
            raise DataError(f"unsupported checkpoint version {version}")
        while True:
            head = fh.read(4)
            if not head:
                break
            (name_len,) = struct.unpack("<I", head)
            name = _read_exact(fh, name_len).decode("utf-8")
            (rank,) = struct.unpack("<I", _read_exact(fh, 4))
            shape = struct.unpack(f"<{rank}I", _read_exact(fh, 4 * rank)) if rank else ()
            count = int(np.prod(shape, dtype=np.int64)) if rank else 1
            data = np.frombuffer(_read_exact(fh, 8 * count), dtype="<f8")
            out[name] = data.reshape(shape).astype(np.float64)
    return out
