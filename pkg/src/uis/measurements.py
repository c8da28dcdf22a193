"""Orthonormal-column linear measurement operators for inverse problems.

Every operator represents a matrix M of shape (N, n) with orthonormal
columns: ``measure`` applies M^T, ``embed`` applies M (the pseudo-inverse of
M^T), and ``project`` applies M M^T, the orthogonal projector onto the
measured subspace.  Structured operators avoid dense storage where the
structure allows; all of them satisfy the same invariants (M^T M = I,
project idempotent) and can be realized densely for verification.

Operators are describable by a small JSON descriptor (type tag, parameters,
seed) so runs are reproducible from config files; see
``measurement_from_descriptor``.
"""

from __future__ import annotations

import abc
import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .core import ImageShape, RngStream, SignalVector, _normalize_shape, as_vector

__all__ = [
    "LinearMeasurement",
    "DenseMeasurement",
    "PixelSubset",
    "BlockAverage",
    "FourierLowpass",
    "InfeasibleConstraintError",
    "pixel_subset",
    "random_pixel_mask",
    "block_average",
    "fourier_lowpass",
    "random_orthonormal",
    "from_arbitrary",
    "empty_measurement",
    "measurement_from_descriptor",
]

_ORTHO_ATOL = 1e-10


class InfeasibleConstraintError(ValueError):
    """The requested values are inconsistent with a rank-deficient constraint."""


def _as_rng(rng: Union[RngStream, int]) -> RngStream:
    return rng if isinstance(rng, RngStream) else RngStream(rng)


class LinearMeasurement(abc.ABC):
    """Linear measurement with orthonormal columns.

    Methods accept either SignalVector or flat arrays; ``embed`` and
    ``project`` return the same kind they were given.
    """

    def __init__(self, signal_dim: int, rank: int, image_shape: Optional[ImageShape] = None):
        signal_dim, rank = int(signal_dim), int(rank)
        if signal_dim < 1:
            raise ValueError(f"signal_dim must be >= 1, got {signal_dim}")
        if not (0 <= rank <= signal_dim):
            raise ValueError(f"rank must be in [0, {signal_dim}], got {rank}")
        self._signal_dim = signal_dim
        self._rank = rank
        self._image_shape = _normalize_shape(image_shape) if image_shape is not None else None

    @property
    def signal_dim(self) -> int:
        return self._signal_dim

    @property
    def rank(self) -> int:
        return self._rank

    @property
    def image_shape(self) -> Optional[ImageShape]:
        return self._image_shape

    @abc.abstractmethod
    def _measure(self, x: np.ndarray) -> np.ndarray:
        ...

    @abc.abstractmethod
    def _embed(self, c: np.ndarray) -> np.ndarray:
        ...

    @abc.abstractmethod
    def descriptor(self) -> dict:
        """JSON-serializable description sufficient to rebuild the operator."""
        ...

    def measure(self, x: Union[SignalVector, np.ndarray]) -> np.ndarray:
        """Apply M^T: signal of length N -> coefficients of length n."""
        v = as_vector(x)
        if v.size != self._signal_dim:
            raise ValueError(f"expected signal of length {self._signal_dim}, got {v.size}")
        return self._measure(v)

    def embed(self, c: Union[Sequence[float], np.ndarray]) -> np.ndarray:
        """Apply M: coefficients of length n -> signal of length N."""
        cv = np.asarray(c, dtype=np.float64).reshape(-1)
        if cv.size != self._rank:
            raise ValueError(f"expected coefficients of length {self._rank}, got {cv.size}")
        return self._embed(cv)

    def embed_signal(self, c) -> SignalVector:
        return SignalVector(self.embed(c), self._image_shape)

    def project(self, y: Union[SignalVector, np.ndarray]) -> Union[SignalVector, np.ndarray]:
        """Apply M M^T, the orthogonal projector onto the measured subspace."""
        out = self._embed(self.measure(y))
        if isinstance(y, SignalVector):
            return y.with_data(out)
        return out

    def complement(self, y: np.ndarray) -> np.ndarray:
        """Apply I - M M^T."""
        v = as_vector(y)
        return v - self._embed(self._measure(v))

    def dense(self) -> np.ndarray:
        """Realize M as a dense (N, n) matrix (column j = embed(e_j))."""
        M = np.empty((self._signal_dim, self._rank))
        e = np.zeros(self._rank)
        for j in range(self._rank):
            e[j] = 1.0
            M[:, j] = self._embed(e)
            e[j] = 0.0
        return M

    def __repr__(self):
        return f"{type(self).__name__}(signal_dim={self._signal_dim}, rank={self._rank})"


class DenseMeasurement(LinearMeasurement):
    """Measurement backed by an explicit (N, n) orthonormal-column matrix."""

    def __init__(self, matrix, image_shape=None, descriptor: Optional[dict] = None):
        M = np.array(matrix, dtype=np.float64)
        if M.ndim != 2:
            raise ValueError(f"matrix must be 2-D, got ndim={M.ndim}")
        n = M.shape[1]
        if n > 0:
            gram_err = np.abs(M.T @ M - np.eye(n)).max()
            if gram_err > _ORTHO_ATOL:
                raise ValueError(f"columns are not orthonormal (max |M^T M - I| = {gram_err:.3e})")
        M.setflags(write=False)
        super().__init__(M.shape[0], n, image_shape)
        self._matrix = M
        self._descriptor = descriptor

    def _measure(self, x):
        return self._matrix.T @ x

    def _embed(self, c):
        return self._matrix @ c

    def dense(self):
        return self._matrix.copy()

    def descriptor(self):
        if self._descriptor is not None:
            return dict(self._descriptor)
        return {
            "type": "dense",
            "signal_dim": self.signal_dim,
            "matrix": self._matrix.tolist(),
            "image_shape": list(self._image_shape) if self._image_shape else None,
        }


class PixelSubset(LinearMeasurement):
    """Keeps a subset of coordinates; columns of M are identity columns."""

    def __init__(self, signal_dim: int, kept, image_shape=None, descriptor: Optional[dict] = None):
        kept = np.asarray(sorted(int(i) for i in kept), dtype=np.intp)
        if kept.size and (kept[0] < 0 or kept[-1] >= signal_dim):
            raise ValueError("kept indices out of range")
        if np.unique(kept).size != kept.size:
            raise ValueError("kept indices must be unique")
        kept.setflags(write=False)
        super().__init__(signal_dim, kept.size, image_shape)
        self._kept = kept
        self._descriptor = descriptor

    @property
    def kept(self) -> np.ndarray:
        return self._kept.copy()

    def _measure(self, x):
        return x[self._kept]

    def _embed(self, c):
        out = np.zeros(self.signal_dim)
        out[self._kept] = c
        return out

    def descriptor(self):
        if self._descriptor is not None:
            return dict(self._descriptor)
        return {
            "type": "pixel_subset",
            "signal_dim": self.signal_dim,
            "kept": self._kept.tolist(),
            "image_shape": list(self._image_shape) if self._image_shape else None,
        }


class BlockAverage(LinearMeasurement):
    """Unit-normalized block averaging over non-overlapping B-by-B blocks.

    Each column of M spreads 1/B over the B^2 pixels of one block (per
    channel), so the column norm is 1 and a measured coefficient equals B
    times the plain block mean.  Divide coefficients by B to recover the
    low-resolution image.
    """

    def __init__(self, shape, block: int):
        shape = _normalize_shape(shape)
        h, w, c = shape
        block = int(block)
        if block < 1:
            raise ValueError(f"block must be >= 1, got {block}")
        if h % block or w % block:
            raise ValueError(f"image {h}x{w} not divisible into {block}x{block} blocks")
        super().__init__(h * w * c, c * (h // block) * (w // block), shape)
        self._block = block

    @property
    def block(self) -> int:
        return self._block

    def _measure(self, x):
        h, w, c = self._image_shape
        b = self._block
        planes = x.reshape(c, h // b, b, w // b, b)
        return (planes.sum(axis=(2, 4)) / b).reshape(-1)

    def _embed(self, coeffs):
        h, w, c = self._image_shape
        b = self._block
        blocks = coeffs.reshape(c, h // b, w // b)
        out = np.repeat(np.repeat(blocks, b, axis=1), b, axis=2) / b
        return out.reshape(-1)

    def descriptor(self):
        return {"type": "block_average", "shape": list(self._image_shape), "block": self._block}


def _real_fourier_plane_basis(h: int, w: int, n_keep: int) -> np.ndarray:
    """Lowest-frequency n_keep vectors of a real orthonormal trig basis.

    Frequencies are ordered by increasing folded radial index
    (min(ky, h-ky)^2 + min(kx, w-kx)^2), ties broken lexicographically on the
    folded (vertical, horizontal) pair and then the raw pair; cosine precedes
    sine within a conjugate pair.  The DC vector is always first.
    """
    reps = []
    for ky in range(h):
        for kx in range(w):
            conj = ((-ky) % h, (-kx) % w)
            if (ky, kx) > conj:
                continue  # conjugate partner already enumerated
            fy, fx = min(ky, h - ky), min(kx, w - kx)
            reps.append((fy * fy + fx * fx, fy, fx, ky, kx, (ky, kx) == conj))
    reps.sort()

    m = np.arange(h)[:, None]
    n = np.arange(w)[None, :]
    cols = []
    for _, _, _, ky, kx, self_conj in reps:
        theta = 2.0 * math.pi * (ky * m / h + kx * n / w)
        if self_conj:
            cols.append((np.cos(theta) / math.sqrt(h * w)).reshape(-1))
        else:
            scale = math.sqrt(2.0 / (h * w))
            cols.append((scale * np.cos(theta)).reshape(-1))
            cols.append((scale * np.sin(theta)).reshape(-1))
        if len(cols) >= n_keep:
            break
    return np.column_stack(cols[:n_keep])


class FourierLowpass(LinearMeasurement):
    """Retains the lowest-frequency vectors of a real trigonometric basis.

    Applied independently per channel.  Projection with this operator is an
    ideal low-pass filter (sinc blur).  ``fraction`` is the fraction of the
    per-plane basis retained; the DC vector is always kept, so a constant
    image is reproduced exactly.
    """

    def __init__(self, shape, fraction: float):
        shape = _normalize_shape(shape)
        h, w, c = shape
        if not (0.0 < fraction <= 1.0):
            raise ValueError(f"fraction must be in (0, 1], got {fraction}")
        n_plane = min(h * w, max(1, int(round(fraction * h * w))))
        super().__init__(h * w * c, c * n_plane, shape)
        self._fraction = float(fraction)
        self._basis = _real_fourier_plane_basis(h, w, n_plane)  # (h*w, n_plane)
        self._n_plane = n_plane

    def _measure(self, x):
        h, w, c = self._image_shape
        planes = x.reshape(c, h * w)
        return (planes @ self._basis).reshape(-1)

    def _embed(self, coeffs):
        h, w, c = self._image_shape
        per_plane = coeffs.reshape(c, self._n_plane)
        return (per_plane @ self._basis.T).reshape(-1)

    def descriptor(self):
        return {"type": "fourier_lowpass", "shape": list(self._image_shape), "fraction": self._fraction}


def pixel_subset(signal_dim: int, kept, image_shape=None) -> PixelSubset:
    """Measurement keeping the given coordinate indices (inpainting-style)."""
    return PixelSubset(signal_dim, kept, image_shape)


def empty_measurement(signal_dim: int, image_shape=None) -> PixelSubset:
    """Rank-0 measurement; conditioning on it is no conditioning at all."""
    return PixelSubset(signal_dim, (), image_shape)


def random_pixel_mask(
    signal_dim: int, fraction: float, rng: Union[RngStream, int], image_shape=None
) -> PixelSubset:
    """Keeps a random fraction of coordinates, drawn without replacement.

    The descriptor records the fraction and the stream's seed; rebuild from
    a descriptor is exact when the operator was constructed from a fresh
    stream (or a bare seed), as the CLI always does.
    """
    if not (0.0 <= fraction <= 1.0):
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    rng = _as_rng(rng)
    n = int(round(fraction * signal_dim))
    kept = np.sort(rng.permutation(signal_dim)[:n])
    desc = {
        "type": "random_mask",
        "signal_dim": int(signal_dim),
        "fraction": float(fraction),
        "seed": rng.seed,
        "image_shape": list(_normalize_shape(image_shape)) if image_shape is not None else None,
    }
    return PixelSubset(signal_dim, kept, image_shape, descriptor=desc)


def block_average(shape, block: int) -> BlockAverage:
    """Unit-normalized B-by-B block averaging (spatial super-resolution)."""
    return BlockAverage(shape, block)


def fourier_lowpass(shape, fraction: float) -> FourierLowpass:
    """Low-frequency retention operator (deblurring / spectral super-resolution)."""
    return FourierLowpass(shape, fraction)


def random_orthonormal(
    signal_dim: int, rank: int, rng: Union[RngStream, int], image_shape=None
) -> DenseMeasurement:
    """Random n-dimensional orthonormal frame (compressive sensing).

    Orthonormalizes a seeded Gaussian matrix by QR, with column signs fixed
    so the result is unique.  Same seed-freshness note as random_pixel_mask.
    """
    rng = _as_rng(rng)
    if not (0 <= rank <= signal_dim):
        raise ValueError(f"rank must be in [0, {signal_dim}], got {rank}")
    g = rng.standard_normal(signal_dim * rank).reshape(signal_dim, rank) if rank else np.zeros((signal_dim, 0))
    if rank:
        q, r = np.linalg.qr(g)
        signs = np.sign(np.diag(r))
        signs[signs == 0] = 1.0
        q = q * signs
    else:
        q = g
    desc = {
        "type": "random_orthonormal",
        "signal_dim": int(signal_dim),
        "rank": int(rank),
        "seed": rng.seed,
        "image_shape": list(_normalize_shape(image_shape)) if image_shape is not None else None,
    }
    return DenseMeasurement(q, image_shape, descriptor=desc)


def from_arbitrary(
    W, xw, image_shape=None, rank_rtol: float = 1e-10
) -> Tuple[DenseMeasurement, np.ndarray]:
    """Re-parameterize an arbitrary linear constraint W^T x = xw.

    Returns an orthonormal-column measurement M and coefficients xc such that
    M^T x = xc holds exactly when W^T x = xw does.  Uses the SVD
    W = U S V^T: M is the left singular vectors with nonzero singular values
    and xc = S^+ V^T xw.  Singular values below rank_rtol times the largest
    are treated as zero; xw must then lie in the span of the remaining right
    singular vectors, otherwise the constraint is infeasible.
    """
    W = np.asarray(W, dtype=np.float64)
    if W.ndim == 1:
        W = W[:, None]
    xw = np.asarray(xw, dtype=np.float64).reshape(-1)
    if xw.size != W.shape[1]:
        raise ValueError(f"xw has length {xw.size}, expected {W.shape[1]}")
    u, s, vt = np.linalg.svd(W, full_matrices=False)
    rank = int(np.sum(s > rank_rtol * (s[0] if s.size else 0.0)))
    u_r, s_r, v_r = u[:, :rank], s[:rank], vt[:rank, :].T
    # feasibility: xw must be reachable, i.e. lie in the column span of V_r S_r
    residual_xw = xw - v_r @ (v_r.T @ xw)
    tol = 1e-8 * max(1.0, float(np.linalg.norm(xw)))
    if float(np.linalg.norm(residual_xw)) > tol:
        raise InfeasibleConstraintError(
            "requested values are outside the range of the rank-deficient constraint"
        )
    xc = (v_r.T @ xw) / s_r if rank else np.zeros(0)
    return DenseMeasurement(u_r, image_shape), xc


def measurement_from_descriptor(desc: dict) -> LinearMeasurement:
    """Rebuild an operator from its JSON descriptor."""
    kind = desc.get("type")
    shape = desc.get("image_shape") or desc.get("shape")
    if kind == "pixel_subset":
        return PixelSubset(desc["signal_dim"], desc["kept"], shape)
    if kind == "random_mask":
        return random_pixel_mask(desc["signal_dim"], desc["fraction"], RngStream(desc["seed"]), shape)
    if kind == "block_average":
        return BlockAverage(desc["shape"], desc["block"])
    if kind == "fourier_lowpass":
        return FourierLowpass(desc["shape"], desc["fraction"])
    if kind == "random_orthonormal":
        return random_orthonormal(desc["signal_dim"], desc["rank"], RngStream(desc["seed"]), shape)
    if kind == "dense":
        return DenseMeasurement(np.asarray(desc["matrix"], dtype=np.float64), shape)
    raise ValueError(f"unknown measurement type {kind!r}")
