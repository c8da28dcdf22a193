"""PSNR and SSIM image quality metrics.

Color inputs are reduced to the luma plane of a BT.601 YCbCr conversion
(coefficients 0.299, 0.587, 0.114) before either metric is computed; the
coefficients are pinned here so reported numbers are reproducible.
"""

from __future__ import annotations

import math

import numpy as np

from .core import SignalVector

__all__ = ["LUMA_COEFFS", "luma_plane", "psnr", "ssim"]

LUMA_COEFFS = (0.299, 0.587, 0.114)  # BT.601


def _metric_values(x: SignalVector) -> np.ndarray:
    """Values the metrics operate on: luma plane for 3-channel images."""
    if x.shape is not None and x.shape[2] == 3:
        r, g, b = x.planes()
        return LUMA_COEFFS[0] * r + LUMA_COEFFS[1] * g + LUMA_COEFFS[2] * b
    return x.data


def luma_plane(x: SignalVector) -> np.ndarray:
    """(height, width) luma plane; identity plane for grayscale."""
    if x.shape is None:
        raise ValueError("signal has no image shape metadata")
    if x.shape[2] == 3:
        return _metric_values(x)
    if x.shape[2] == 1:
        return x.planes()[0]
    raise ValueError(f"expected 1 or 3 channels, got {x.shape[2]}")


def _check_same(x: SignalVector, xhat: SignalVector):
    if x.n != xhat.n or (x.shape is not None and xhat.shape is not None and x.shape != xhat.shape):
        raise ValueError(f"signals differ in shape: {x.shape or x.n} vs {xhat.shape or xhat.n}")


def psnr(x: SignalVector, xhat: SignalVector, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio, 10*log10(peak^2 / MSE), in dB.

    Identical signals give +inf.  For 3-channel images the MSE is taken on
    the luma plane.
    """
    _check_same(x, xhat)
    a, b = _metric_values(x), _metric_values(xhat)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def ssim(
    x: SignalVector,
    xhat: SignalVector,
    window: int = 8,
    k1: float = 0.01,
    k2: float = 0.03,
    peak: float = 1.0,
) -> float:
    """Mean structural similarity over non-overlapping windows, in [-1, 1].

    Per window, with population moments and stabilizers c1 = (k1*peak)^2,
    c2 = (k2*peak)^2:

        (2*mx*my + c1) * (2*cov + c2)
        -----------------------------------
        (mx^2 + my^2 + c1) * (vx + vy + c2)

    The constants keep zero-variance windows well-defined (their structure
    factor is exactly 1).  Trailing rows/columns that do not fill a window
    are ignored; the image must contain at least one full window.
    """
    _check_same(x, xhat)
    if x.shape is None:
        raise ValueError("ssim requires image shape metadata")
    a, b = luma_plane(x), luma_plane(xhat)
    h, w = a.shape
    if h < window or w < window:
        raise ValueError(f"image {h}x{w} smaller than the {window}x{window} window")
    nh, nw = h // window, w // window
    a = a[: nh * window, : nw * window].reshape(nh, window, nw, window)
    b = b[: nh * window, : nw * window].reshape(nh, window, nw, window)

    mx = a.mean(axis=(1, 3))
    my = b.mean(axis=(1, 3))
    vx = (a * a).mean(axis=(1, 3)) - mx * mx
    vy = (b * b).mean(axis=(1, 3)) - my * my
    cov = (a * b).mean(axis=(1, 3)) - mx * my

    c1 = (k1 * peak) ** 2
    c2 = (k2 * peak) ** 2
    values = ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
    return float(values.mean())
