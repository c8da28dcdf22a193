"""Step-size and injected-noise schedules driving coarse-to-fine convergence.

The sampler contracts the effective noise level by a factor (1 - beta*h_t)
per iteration.  The functions here supply the three ingredients: the
accelerating step-size schedule h_t, the injected noise amplitude gamma_t
that realizes the target contraction, and the contraction itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import NoiseLevel

__all__ = [
    "SamplerParams",
    "step_size",
    "injected_noise_amplitude",
    "expected_sigma_next",
]

# absorbs cancellation in (1-beta*h)^2 - (1-h)^2 when beta is near 1
_RADICAND_TOL = 1e-15


@dataclass(frozen=True)
class SamplerParams:
    """Knobs of the stochastic ascent loop.

    sigma0:    effective noise level assumed for the initial iterate
    sigmaL:    target level; iteration stops once the observed level falls
               to or below it
    h0:        fraction of the residual applied at the first step
    beta:      stochasticity control in [0, 1]; 1 disables injected noise
    max_iters: hard cap; hitting it flags the run as non-converged
    seed:      64-bit RNG seed
    init_mean: mean of the initial draw (0.5 centers signals in [0, 1])
    """

    sigma0: float = 1.0
    sigmaL: float = 0.01
    h0: float = 0.01
    beta: float = 1.0
    max_iters: int = 10_000
    seed: int = 0
    init_mean: float = 0.5

    def __post_init__(self):
        if not (math.isfinite(self.sigma0) and 0.0 < self.sigmaL < self.sigma0):
            raise ValueError(f"need 0 < sigmaL < sigma0, got sigmaL={self.sigmaL}, sigma0={self.sigma0}")
        if not (0.0 < self.h0 <= 1.0):
            raise ValueError(f"h0 must be in (0, 1], got {self.h0}")
        if not (0.0 <= self.beta <= 1.0):
            raise ValueError(f"beta must be in [0, 1], got {self.beta}")
        if int(self.max_iters) < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not math.isfinite(self.init_mean):
            raise ValueError(f"init_mean must be finite, got {self.init_mean}")


def step_size(h0: float, t: int) -> float:
    """Accelerating step-size schedule h_t = h0*t / (1 + h0*(t - 1)).

    Equals h0 at t = 1, increases strictly (for h0 < 1), and approaches 1,
    so late iterations take nearly the full denoiser correction.  A constant
    fraction of the remaining correction would decay only geometrically;
    this schedule closes the gap in finitely many effective steps.
    """
    if not (0.0 < h0 <= 1.0):
        raise ValueError(f"h0 must be in (0, 1], got {h0}")
    t = int(t)
    if t < 1:
        raise ValueError(f"iteration index must be >= 1, got {t}")
    return h0 * t / (1.0 + h0 * (t - 1))


def injected_noise_amplitude(beta: float, h_t: float, sigma_t: float) -> float:
    """Noise amplitude gamma_t = sigma_t * sqrt((1 - beta*h_t)^2 - (1 - h_t)^2).

    A step removes a (1 - h_t) fraction of the effective noise; adding fresh
    noise of this amplitude makes the net per-step contraction exactly
    (1 - beta*h_t).  beta = 1 yields zero injected noise.
    """
    if not (0.0 <= beta <= 1.0):
        raise ValueError(f"beta must be in [0, 1], got {beta}")
    if not (0.0 < h_t <= 1.0):
        raise ValueError(f"h_t must be in (0, 1], got {h_t}")
    sigma_t = float(sigma_t)
    if not (math.isfinite(sigma_t) and sigma_t >= 0.0):
        raise ValueError(f"sigma_t must be finite and >= 0, got {sigma_t}")
    radicand = (1.0 - beta * h_t) ** 2 - (1.0 - h_t) ** 2
    if radicand < 0.0:
        assert radicand > -_RADICAND_TOL, (
            f"negative radicand {radicand} for beta={beta}, h_t={h_t}"
        )
        radicand = 0.0
    return sigma_t * math.sqrt(radicand)


def expected_sigma_next(beta: float, h_t: float, sigma_prev: float) -> NoiseLevel:
    """Per-step noise contraction: sigma_next = (1 - beta*h_t) * sigma_prev."""
    if not (0.0 <= beta <= 1.0):
        raise ValueError(f"beta must be in [0, 1], got {beta}")
    if not (0.0 < h_t <= 1.0):
        raise ValueError(f"h_t must be in (0, 1], got {h_t}")
    sigma_prev = float(sigma_prev)
    if not (math.isfinite(sigma_prev) and sigma_prev >= 0.0):
        raise ValueError(f"sigma_prev must be finite and >= 0, got {sigma_prev}")
    return NoiseLevel((1.0 - beta * h_t) * sigma_prev)
