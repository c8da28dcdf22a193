"""8-bit PNG and lossless raw-frame I/O for signals.

PNG values map linearly to [0, 1] and are for inspection; the raw format is
a single protocol frame (see uis.bridge) holding float32 values, for exact
pipelines.  Intermediate iterates are never clipped; clipping to [0, 1]
happens only here, at PNG export.
"""

from __future__ import annotations

from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from .bridge import decode_frame, encode_frame
from .core import SignalVector

__all__ = ["read_image", "write_image", "read_raw", "write_raw", "read_signal", "write_signal"]

RAW_SUFFIX = ".uisr"


def read_image(path: Union[str, Path]) -> SignalVector:
    """Load a PNG (or any Pillow-readable image) as a [0, 1] signal."""
    with Image.open(path) as img:
        if img.mode not in ("L", "RGB"):
            img = img.convert("RGB" if img.mode in ("RGBA", "P", "CMYK") else "L")
        arr = np.asarray(img, dtype=np.float64) / 255.0
    if arr.ndim == 2:
        return SignalVector.from_planes(arr)
    return SignalVector.from_planes(np.moveaxis(arr, -1, 0))


def write_image(path: Union[str, Path], signal: SignalVector) -> None:
    """Write an 8-bit PNG; values are clipped to [0, 1] and quantized."""
    planes = signal.planes()
    quantized = np.round(np.clip(planes, 0.0, 1.0) * 255.0).astype(np.uint8)
    c = quantized.shape[0]
    if c == 1:
        img = Image.fromarray(quantized[0], mode="L")
    elif c == 3:
        img = Image.fromarray(np.moveaxis(quantized, 0, -1), mode="RGB")
    else:
        raise ValueError(f"cannot write {c}-channel image as PNG")
    img.save(path, format="PNG")


def write_raw(path: Union[str, Path], signal: SignalVector) -> None:
    shape = signal.shape if signal.shape is not None else (1, signal.n, 1)
    Path(path).write_bytes(encode_frame(signal.data, shape))


def read_raw(path: Union[str, Path]) -> SignalVector:
    values, shape = decode_frame(Path(path).read_bytes())
    return SignalVector(values.astype(np.float64), shape)


def read_signal(path: Union[str, Path]) -> SignalVector:
    """Dispatch on suffix: raw frames for .uisr, Pillow for everything else."""
    path = Path(path)
    if path.suffix == RAW_SUFFIX:
        return read_raw(path)
    return read_image(path)


def write_signal(path: Union[str, Path], signal: SignalVector) -> None:
    path = Path(path)
    if path.suffix == RAW_SUFFIX:
        write_raw(path, signal)
    else:
        write_image(path, signal)
