"""Raw tensor file format used for frames, latents, and checkpoints.

Layout (little-endian throughout):
    8 bytes   magic b"ORB4DTEN"
    u32       rank
    u32 * rank  dims
    f32 * prod(dims)  data, C order, channel-last
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import InvalidArgument

MAGIC = b"ORB4DTEN"


def write_tensor(path: str | Path, data: np.ndarray) -> None:
    arr = np.ascontiguousarray(data, dtype="<f4")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", arr.ndim))
        f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        f.write(arr.tobytes())


def read_tensor(path: str | Path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != MAGIC:
            raise InvalidArgument(f"{path}: bad magic {magic!r}")
        (rank,) = struct.unpack("<I", f.read(4))
        if rank > 16:
            raise InvalidArgument(f"{path}: implausible rank {rank}")
        dims = struct.unpack(f"<{rank}I", f.read(4 * rank))
        count = int(np.prod(dims, dtype=np.int64)) if rank else 1
        raw = f.read(4 * count)
        if len(raw) != 4 * count:
            raise InvalidArgument(f"{path}: truncated payload")
        return np.frombuffer(raw, dtype="<f4").reshape(dims).copy()
