"""Denoiser implementations served by the adapter."""

from __future__ import annotations

import importlib.util
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .framing import Shape

Transform = Callable[[np.ndarray, Shape], np.ndarray]


@dataclass(frozen=True)
class AdapterMode:
    """Which denoiser this process serves; exactly one of the three kinds.

    identity:  echo the payload.
    wiener:    closed-form shrinkage for the prior N(mean, prior_var * I)
               at a fixed noise level sigma.
    external:  a user-supplied module exposing
               ``denoise(values: np.ndarray, shape: (h, w, c)) -> np.ndarray``;
               e.g. a wrapper that loads pretrained CNN weights.  No weights
               ship with this package.
    """

    kind: str
    mean: float = 0.0
    prior_var: float = 1.0
    sigma: float = 1.0
    model_path: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("identity", "wiener", "external"):
            raise ValueError(f"unknown mode {self.kind!r}")
        if self.kind == "wiener":
            if self.prior_var <= 0:
                raise ValueError("prior_var must be > 0")
            if self.sigma <= 0:
                raise ValueError("sigma must be > 0")
        if self.kind == "external" and not self.model_path:
            raise ValueError("external mode needs a model path")

    def transform(self) -> Transform:
        if self.kind == "identity":
            return lambda values, shape: values
        if self.kind == "wiener":
            gain = self.prior_var / (self.prior_var + self.sigma**2)
            mean = self.mean

            def wiener(values, shape):
                return mean + gain * (values.astype(np.float64) - mean)

            return wiener
        return _load_external(self.model_path)


def _load_external(path: str) -> Transform:
    """Load ``denoise`` from a python file; the model wrapper owns its weights."""
    spec = importlib.util.spec_from_file_location("uis_adapter_external", Path(path))
    if spec is None or spec.loader is None:
        raise ValueError(f"cannot load model module from {path}")
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    denoise = getattr(module, "denoise", None)
    if denoise is None:
        raise ValueError(f"{path} does not define denoise(values, shape)")
    return denoise
