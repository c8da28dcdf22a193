"""uis: universal inverse sampler.

Draws high-probability samples from the prior implicit in a blind
least-squares Gaussian denoiser, and solves arbitrary linear inverse
problems by sampling under orthonormal linear constraints.  Analytic
mixture/atom priors provide exact oracles for verification.
"""

from .core import (
    ContractViolationError,
    Denoiser,
    IdentityDenoiser,
    NoiseLevel,
    NumericError,
    RngStream,
    SignalVector,
    effective_sigma,
    residual,
)
from .schedules import SamplerParams, expected_sigma_next, injected_noise_amplitude, step_size
from .measurements import (
    LinearMeasurement,
    block_average,
    empty_measurement,
    fourier_lowpass,
    from_arbitrary,
    measurement_from_descriptor,
    pixel_subset,
    random_orthonormal,
    random_pixel_mask,
)
from .priors import AtomPrior, GmmPrior, OracleDenoiser, WienerDenoiser, manifold_atoms, prior_from_descriptor
from .curves import Curve, curve_from_descriptor
from .sampler import IterationRecord, IterationTrace, sample_conditional, sample_prior, trace_to_csv
from .bridge import BridgeConfig, BridgeDenoiser, ProtocolError, bridge_denoise
from .metrics import psnr, ssim
from .diagnostics import ConvergenceReport, convergence_report, manifold_demo, manifold_distance

__version__ = "0.1.0"

__all__ = [
    "AtomPrior",
    "BridgeConfig",
    "BridgeDenoiser",
    "ContractViolationError",
    "ConvergenceReport",
    "Curve",
    "Denoiser",
    "GmmPrior",
    "IdentityDenoiser",
    "IterationRecord",
    "IterationTrace",
    "LinearMeasurement",
    "NoiseLevel",
    "NumericError",
    "OracleDenoiser",
    "ProtocolError",
    "RngStream",
    "SamplerParams",
    "SignalVector",
    "WienerDenoiser",
    "block_average",
    "bridge_denoise",
    "convergence_report",
    "curve_from_descriptor",
    "effective_sigma",
    "empty_measurement",
    "expected_sigma_next",
    "fourier_lowpass",
    "from_arbitrary",
    "injected_noise_amplitude",
    "manifold_atoms",
    "manifold_demo",
    "manifold_distance",
    "measurement_from_descriptor",
    "pixel_subset",
    "prior_from_descriptor",
    "psnr",
    "random_orthonormal",
    "random_pixel_mask",
    "residual",
    "sample_conditional",
    "sample_prior",
    "ssim",
    "step_size",
    "trace_to_csv",
]
