"""Signal containers, RNG streams, and the blind-denoiser contract."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Protocol, Tuple, Union, runtime_checkable

import numpy as np

__all__ = [
    "ContractViolationError",
    "NumericError",
    "NoiseLevel",
    "SignalVector",
    "RngStream",
    "Denoiser",
    "IdentityDenoiser",
    "as_vector",
    "residual",
    "effective_sigma",
]

ImageShape = Tuple[int, int, int]  # (height, width, channels)


class ContractViolationError(RuntimeError):
    """A denoiser broke its contract (wrong type or mismatched shape)."""


class NumericError(ArithmeticError):
    """A computation produced non-finite values."""


class NoiseLevel(float):
    """Noise standard deviation in intensity units (nominal range [0, 1]).

    Behaves exactly like a float; construction checks finiteness and sign.
    """

    def __new__(cls, sigma: float) -> "NoiseLevel":
        value = float(sigma)
        if not math.isfinite(value):
            raise ValueError(f"noise level must be finite, got {value!r}")
        if value < 0.0:
            raise ValueError(f"noise level must be >= 0, got {value!r}")
        return super().__new__(cls, value)

    @property
    def sigma(self) -> float:
        return float(self)


def _normalize_shape(shape) -> ImageShape:
    dims = tuple(int(v) for v in shape)
    if len(dims) == 2:
        dims = (dims[0], dims[1], 1)
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise ValueError(f"image shape must be (height, width[, channels]) of positive ints, got {shape!r}")
    return dims


@dataclass(frozen=True, eq=False)
class SignalVector:
    """Flat real vector of dimension N with optional image-shape metadata.

    Image data uses a planar channel-major layout: ``data`` is the
    concatenation of ``channels`` row-major height-by-width planes.  All
    numerics elsewhere treat signals as points of R^N; the shape is metadata
    consulted only at image import/export and protocol boundaries.
    """

    data: np.ndarray
    shape: Optional[ImageShape] = None

    def __eq__(self, other):
        if not isinstance(other, SignalVector):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.data, other.data)

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64).reshape(-1)
        if arr.size == 0:
            raise ValueError("signal must have at least one entry")
        if not np.all(np.isfinite(arr)):
            raise ValueError("signal entries must be finite")
        if self.shape is not None:
            dims = _normalize_shape(self.shape)
            h, w, c = dims
            if h * w * c != arr.size:
                raise ValueError(f"shape {dims} implies {h * w * c} entries, data has {arr.size}")
            object.__setattr__(self, "shape", dims)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return int(self.data.size)

    def with_data(self, data) -> "SignalVector":
        """New signal carrying the same shape metadata."""
        return SignalVector(data, self.shape)

    def planes(self) -> np.ndarray:
        """View as (channels, height, width); requires shape metadata."""
        if self.shape is None:
            raise ValueError("signal has no image shape metadata")
        h, w, c = self.shape
        return self.data.reshape(c, h, w)

    @classmethod
    def from_planes(cls, planes) -> "SignalVector":
        p = np.asarray(planes, dtype=np.float64)
        if p.ndim == 2:
            p = p[None, :, :]
        if p.ndim != 3:
            raise ValueError(f"expected (height, width) or (channels, height, width), got {p.shape}")
        c, h, w = p.shape
        return cls(p.reshape(-1), (h, w, c))


def as_vector(x: Union[SignalVector, np.ndarray]) -> np.ndarray:
    """Flat float64 view of a signal or array-like."""
    if isinstance(x, SignalVector):
        return x.data
    return np.asarray(x, dtype=np.float64).reshape(-1)


class RngStream:
    """Deterministic pseudo-random stream.

    The same seed followed by the same call sequence yields the same outputs,
    on every platform (PCG64 backed).
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if not (0 <= seed < 2**64):
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self._gen = np.random.Generator(np.random.PCG64(seed))

    def standard_normal(self, size: int) -> np.ndarray:
        return self._gen.standard_normal(size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def derive(self, offset: int) -> "RngStream":
        """Fresh stream with seed ``seed + offset`` (mod 2^64)."""
        return RngStream((self.seed + int(offset)) % 2**64)

    def __repr__(self):
        return f"RngStream(seed={self.seed})"


@runtime_checkable
class Denoiser(Protocol):
    """Least-squares denoiser contract.

    ``denoise`` must return a signal of identical length (and shape metadata,
    when present) with finite entries.  ``sigma_hint`` is advisory: blind
    denoisers ignore it, analytic oracles need it to evaluate their posterior
    mean.  ``concurrency_safe`` declares whether one instance may be invoked
    from multiple threads at once; a single sampling chain never does.
    """

    concurrency_safe: bool

    def denoise(self, y: SignalVector, sigma_hint: Optional[float] = None) -> SignalVector:
        ...


class IdentityDenoiser:
    """Returns its input unchanged; its residual is identically zero."""

    concurrency_safe = True

    def denoise(self, y: SignalVector, sigma_hint: Optional[float] = None) -> SignalVector:
        return y


def residual(denoiser: Denoiser, y: SignalVector, sigma_hint: Optional[float] = None) -> SignalVector:
    """Denoiser residual f(y) = xhat(y) - y.

    The residual is the ascent direction used by the sampler: for an exact
    posterior-mean denoiser at noise level sigma it equals sigma^2 times the
    gradient of log p_sigma(y).

    Raises:
        ContractViolationError: the denoiser returned a different length or
            conflicting shape metadata.
        NumericError: the denoiser returned non-finite values.
    """
    out = denoiser.denoise(y, sigma_hint)
    if isinstance(out, SignalVector):
        if out.n != y.n:
            raise ContractViolationError(f"denoiser returned length {out.n}, expected {y.n}")
        if out.shape is not None and y.shape is not None and out.shape != y.shape:
            raise ContractViolationError(f"denoiser returned shape {out.shape}, expected {y.shape}")
        xhat = out.data
    else:
        xhat = np.asarray(out, dtype=np.float64).reshape(-1)
        if xhat.size != y.n:
            raise ContractViolationError(f"denoiser returned length {xhat.size}, expected {y.n}")
        if not np.all(np.isfinite(xhat)):
            raise NumericError("denoiser output contains non-finite values")
    return y.with_data(xhat - y.data)


def effective_sigma(d: Union[SignalVector, np.ndarray]) -> NoiseLevel:
    """Residual magnitude per root-dimension, ||d|| / sqrt(N).

    Used as the running estimate of the effective noise level: the distance
    of the iterate from the signal manifold, per dimension.
    """
    v = as_vector(d)
    if v.size == 0:
        raise ValueError("effective_sigma needs at least one entry")
    return NoiseLevel(float(np.linalg.norm(v)) / math.sqrt(v.size))
