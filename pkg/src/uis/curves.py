"""Parametric planar curves with arclength tables.

A Curve wraps a map t in [0, 1] -> R^2 together with a dense discretization
used for arclength parameterization and nearest-point queries.  Curves are
describable by small JSON descriptors so demo configurations are file-driven.
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

__all__ = ["Curve", "curve_from_descriptor"]

_DEFAULT_SAMPLES = 20_001  # >= 1e4 points, as the distance queries require


class Curve:
    """Parametric curve with cached arclength table."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], samples: int = _DEFAULT_SAMPLES,
                 descriptor: Optional[dict] = None):
        if samples < 2:
            raise ValueError(f"need at least 2 samples, got {samples}")
        self._fn = fn
        self._descriptor = descriptor
        ts = np.linspace(0.0, 1.0, samples)
        pts = np.asarray(fn(ts), dtype=np.float64)
        if pts.shape != (samples, 2):
            raise ValueError(f"curve function must map (M,) -> (M, 2), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("curve evaluates to non-finite points")
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        cumulative = np.concatenate(([0.0], np.cumsum(seg)))
        if cumulative[-1] <= 0.0:
            raise ValueError("degenerate curve: zero total arclength")
        self._ts = ts
        self._points = pts
        self._cumlen = cumulative

    @property
    def length(self) -> float:
        return float(self._cumlen[-1])

    @property
    def points(self) -> np.ndarray:
        """Dense discretization, shape (samples, 2)."""
        return self._points

    @property
    def is_closed(self) -> bool:
        gap = float(np.linalg.norm(self._points[0] - self._points[-1]))
        return gap <= 1e-9 * max(1.0, self.length)

    def at(self, t) -> np.ndarray:
        """Evaluate the underlying map at parameter(s) t."""
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        return np.asarray(self._fn(t), dtype=np.float64)

    def param_at_arclength(self, s) -> np.ndarray:
        """Parameter t reaching arclength s, by interpolation of the table."""
        s = np.clip(np.asarray(s, dtype=np.float64), 0.0, self.length)
        return np.interp(s, self._cumlen, self._ts)

    def arclength_points(self, count: int) -> np.ndarray:
        """``count`` points equally spaced in arclength, on the curve itself.

        Open curves include both endpoints; closed curves wrap, avoiding a
        duplicated point.  Points are exact curve evaluations (the table is
        used only to invert arclength), so curve constraints such as constant
        radius hold to full precision.
        """
        count = int(count)
        if count < 2:
            raise ValueError(f"need at least 2 points, got {count}")
        if self.is_closed:
            s = self.length * np.arange(count) / count
        else:
            s = self.length * np.arange(count) / (count - 1)
        return self.at(self.param_at_arclength(s))

    def distance(self, point) -> float:
        """Euclidean distance from a point to the discretized curve."""
        p = np.asarray(point, dtype=np.float64).reshape(2)
        return float(np.min(np.linalg.norm(self._points - p, axis=1)))

    @property
    def pitch(self) -> float:
        """Largest gap between adjacent discretization points."""
        return float(np.max(np.linalg.norm(np.diff(self._points, axis=0), axis=1)))

    def descriptor(self) -> dict:
        if self._descriptor is None:
            raise ValueError("curve was built from a bare function; no descriptor available")
        return dict(self._descriptor)


def curve_from_descriptor(desc: dict, samples: int = _DEFAULT_SAMPLES) -> Curve:
    """Build a named curve from a JSON descriptor.

    Supported types:
      segment: {"type": "segment", "start": [x, y], "end": [x, y]}
      circle:  {"type": "circle", "center": [x, y], "radius": r}
      spiral:  {"type": "spiral", "center": [x, y], "r0": a, "r1": b, "turns": k}
      sine:    {"type": "sine", "x0": a, "x1": b, "y": c, "amplitude": A, "cycles": k}
    """
    kind = desc.get("type")
    if kind == "segment":
        a = np.asarray(desc["start"], dtype=np.float64)
        b = np.asarray(desc["end"], dtype=np.float64)
        fn = lambda t: a[None, :] + t[:, None] * (b - a)[None, :]
    elif kind == "circle":
        center = np.asarray(desc["center"], dtype=np.float64)
        r = float(desc["radius"])
        fn = lambda t: center[None, :] + r * np.stack(
            [np.cos(2 * math.pi * t), np.sin(2 * math.pi * t)], axis=1
        )
    elif kind == "spiral":
        center = np.asarray(desc["center"], dtype=np.float64)
        r0, r1 = float(desc["r0"]), float(desc["r1"])
        turns = float(desc.get("turns", 2.0))
        def fn(t, center=center, r0=r0, r1=r1, turns=turns):
            radius = r0 + (r1 - r0) * t
            angle = 2 * math.pi * turns * t
            return center[None, :] + np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1)
    elif kind == "sine":
        x0, x1 = float(desc["x0"]), float(desc["x1"])
        y = float(desc.get("y", 0.5))
        amp = float(desc.get("amplitude", 0.2))
        cycles = float(desc.get("cycles", 1.5))
        def fn(t, x0=x0, x1=x1, y=y, amp=amp, cycles=cycles):
            return np.stack([x0 + (x1 - x0) * t, y + amp * np.sin(2 * math.pi * cycles * t)], axis=1)
    else:
        raise ValueError(f"unknown curve type {kind!r}")
    return Curve(fn, samples=samples, descriptor=dict(desc))
