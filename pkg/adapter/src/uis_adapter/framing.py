"""Frame encoding for the UIS1 denoiser protocol.

A frame is the magic bytes ``UIS1``, three little-endian uint32 fields
(height, width, channels), then height*width*channels little-endian float32
values in planar channel-major, row-major order.  Requests and responses
use the same layout.
"""

from __future__ import annotations

import struct
from typing import BinaryIO, Optional, Tuple

import numpy as np

MAGIC = b"UIS1"
HEADER = struct.Struct("<III")

Shape = Tuple[int, int, int]


class MalformedFrame(Exception):
    """Input bytes are not a valid frame."""


def read_frame(stream: BinaryIO) -> Optional[Tuple[np.ndarray, Shape]]:
    """Read one frame; returns None on clean end-of-stream.

    Raises MalformedFrame for bad magic or a truncated frame.
    """
    head = stream.read(len(MAGIC) + HEADER.size)
    if not head:
        return None
    if len(head) < len(MAGIC) + HEADER.size:
        raise MalformedFrame(f"truncated header ({len(head)} bytes)")
    if head[: len(MAGIC)] != MAGIC:
        raise MalformedFrame(f"bad magic {head[:len(MAGIC)]!r}")
    h, w, c = HEADER.unpack_from(head, len(MAGIC))
    nbytes = 4 * h * w * c
    payload = b""
    while len(payload) < nbytes:
        chunk = stream.read(nbytes - len(payload))
        if not chunk:
            raise MalformedFrame(f"truncated payload ({len(payload)} of {nbytes} bytes)")
        payload += chunk
    return np.frombuffer(payload, dtype="<f4").copy(), (h, w, c)


def write_frame(stream: BinaryIO, values: np.ndarray, shape: Shape) -> None:
    h, w, c = shape
    arr = np.ascontiguousarray(np.asarray(values).reshape(-1), dtype="<f4")
    if arr.size != h * w * c:
        raise ValueError(f"shape {shape} implies {h * w * c} values, got {arr.size}")
    stream.write(MAGIC + HEADER.pack(h, w, c) + arr.tobytes())
    stream.flush()
