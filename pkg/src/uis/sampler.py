"""Stochastic coarse-to-fine ascent on the density implied by a denoiser.

One loop serves both unconstrained synthesis and constrained sampling.  The
per-iteration update is

    y_t = y_{t-1} + h_t d_t + gamma_t z_t,      z_t ~ N(0, I)

where, unconstrained, d_t is the denoiser residual f(y_{t-1}) -- proportional
to the gradient of the log observation density -- and, given a measurement M
with target coefficients xc, d_t splits into two orthogonal parts:

    d_t = (I - M M^T) f(y_{t-1}) + M (xc - M^T y_{t-1})

the residual with the measured subspace projected out, plus the pull back
onto the constraint set.  The effective noise level sigma_t = ||d_t||/sqrt(N)
both gates termination (sigma_t <= sigmaL) and sets the injected noise
amplitude.  A rank-0 measurement makes the two cases bitwise identical, and
``sample_prior`` is implemented exactly that way.

RNG draw order is fixed: N draws for y_0, then one N-vector per iteration
(drawn whether or not gamma_t is zero), so runs are reproducible and
conditioning on an empty measurement changes nothing.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from .core import NumericError, RngStream, SignalVector, residual
from .measurements import LinearMeasurement, empty_measurement
from .schedules import SamplerParams, expected_sigma_next, injected_noise_amplitude, step_size

__all__ = [
    "IterationRecord",
    "IterationTrace",
    "sample_prior",
    "sample_conditional",
    "trace_to_csv",
]

TRACE_COLUMNS = ("t", "h_t", "sigma_observed", "sigma_expected", "gamma_t", "constraint_rms")

Observer = Callable[[int, SignalVector], None]


@dataclass(frozen=True)
class IterationRecord:
    t: int
    h_t: float
    sigma_observed: float
    sigma_expected: float
    gamma_t: float
    constraint_rms: Optional[float] = None


@dataclass(frozen=True)
class IterationTrace:
    """Per-iteration log of a sampling chain.

    sigma_expected is the schedule prediction (1 - beta*h_t) * sigma_{t-1}
    from the previously observed level (sigma0 before the first iteration),
    the quantity the observed level is compared against in convergence
    diagnostics.  ``converged`` is False when the chain stopped at max_iters
    with the observed level still above sigmaL.
    """

    records: Tuple[IterationRecord, ...]
    final: Optional[SignalVector]
    converged: bool
    sigma0: float

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        for i, rec in enumerate(self.records):
            if rec.t != i + 1:
                raise ValueError(f"records must be contiguous in t starting at 1; index {i} has t={rec.t}")
            if not (math.isfinite(rec.sigma_observed) and rec.sigma_observed >= 0.0):
                raise ValueError(f"sigma_observed must be finite and >= 0, got {rec.sigma_observed}")

    @property
    def iterations(self) -> int:
        return len(self.records)

    def sigma_observed(self) -> np.ndarray:
        return np.array([r.sigma_observed for r in self.records])

    def constraint_rms(self) -> Optional[float]:
        """Constraint residual at the final iteration, if one was tracked."""
        return self.records[-1].constraint_rms if self.records else None


def trace_to_csv(trace: IterationTrace, target: Union[str, io.TextIOBase]) -> None:
    """Write one row per iteration with a header; empty cell for no constraint.

    Floats are written with repr (shortest round-trip), so identical traces
    produce byte-identical files.
    """
    own = isinstance(target, (str, bytes, os.PathLike))
    fh = open(target, "w", newline="") if own else target
    try:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for r in trace.records:
            writer.writerow(
                [
                    r.t,
                    repr(r.h_t),
                    repr(r.sigma_observed),
                    repr(r.sigma_expected),
                    repr(r.gamma_t),
                    "" if r.constraint_rms is None else repr(r.constraint_rms),
                ]
            )
    finally:
        if own:
            fh.close()


def _attach_trace(err: BaseException, records, last_iterate, shape, converged, sigma0):
    final = SignalVector(last_iterate, shape) if np.all(np.isfinite(last_iterate)) else None
    err.trace = IterationTrace(tuple(records), final, converged, sigma0)
    return err


def _run_chain(
    denoiser,
    m: LinearMeasurement,
    xc: np.ndarray,
    params: SamplerParams,
    rng: RngStream,
    y0: Optional[SignalVector],
    observer: Optional[Observer],
) -> Tuple[SignalVector, IterationTrace]:
    n_sig = m.signal_dim
    shape = m.image_shape
    n_meas = m.rank
    sqrt_n = math.sqrt(n_sig)
    sqrt_rank = math.sqrt(n_meas) if n_meas else 1.0

    if y0 is not None:
        if y0.n != n_sig:
            raise ValueError(f"y0 has length {y0.n}, expected {n_sig}")
        y = y0.data.copy()
    else:
        e = np.ones(n_sig)
        base = params.init_mean * (e - m.project(e)) + m.embed(xc)
        y = base + params.sigma0 * rng.standard_normal(n_sig)

    records = []
    sigma_prev = float(params.sigma0)
    converged = False
    for t in range(1, params.max_iters + 1):
        h = step_size(params.h0, t)
        try:
            f = residual(denoiser, SignalVector(y, shape), sigma_hint=sigma_prev)
        except Exception as err:
            raise _attach_trace(err, records, y, shape, False, params.sigma0)
        d = (f.data - m.project(f.data)) + m.embed(xc - m.measure(y))
        sigma_obs = float(np.linalg.norm(d)) / sqrt_n
        if not math.isfinite(sigma_obs):
            err = NumericError(f"update direction overflowed at t={t}")
            raise _attach_trace(err, records, y, shape, False, params.sigma0)
        gamma = injected_noise_amplitude(params.beta, h, sigma_obs)
        sigma_exp = float(expected_sigma_next(params.beta, h, sigma_prev))
        z = rng.standard_normal(n_sig)
        y = y + h * d + gamma * z
        if not np.all(np.isfinite(y)):
            err = NumericError(f"iterate became non-finite at t={t}")
            raise _attach_trace(err, records, y, shape, False, params.sigma0)
        c_rms = (
            float(np.linalg.norm(m.measure(y) - xc)) / sqrt_rank if n_meas else None
        )
        records.append(IterationRecord(t, h, sigma_obs, sigma_exp, gamma, c_rms))
        if observer is not None:
            observer(t, SignalVector(y, shape))
        if sigma_obs <= params.sigmaL:
            converged = True
            break
        sigma_prev = sigma_obs

    final = SignalVector(y, shape)
    return final, IterationTrace(tuple(records), final, converged, params.sigma0)


def sample_prior(
    denoiser,
    params: SamplerParams,
    rng: RngStream,
    shape: Union[int, Sequence[int]],
    y0: Optional[SignalVector] = None,
    observer: Optional[Observer] = None,
) -> Tuple[SignalVector, IterationTrace]:
    """Draw a high-probability sample from the prior implicit in a denoiser.

    Starts from y_0 ~ N(init_mean * ones, sigma0^2 I) (or the supplied y0)
    and ascends the denoiser residual until the effective noise level falls
    to sigmaL.  ``shape`` is the signal length or an (height, width[,
    channels]) image shape.  Returns the final iterate and the full trace;
    a chain that exhausts max_iters comes back with trace.converged False
    rather than raising.
    """
    if isinstance(shape, (int, np.integer)):
        m = empty_measurement(int(shape))
    else:
        m = empty_measurement(int(np.prod([int(v) for v in shape])), shape)
    return _run_chain(denoiser, m, np.zeros(0), params, rng, y0, observer)


def sample_conditional(
    denoiser,
    measurement: LinearMeasurement,
    xc: Union[Sequence[float], np.ndarray],
    params: SamplerParams,
    rng: RngStream,
    y0: Optional[SignalVector] = None,
    observer: Optional[Observer] = None,
) -> Tuple[SignalVector, IterationTrace]:
    """Sample from the implicit prior conditioned on M^T x = xc.

    Initialization places init_mean in the unmeasured subspace and the
    embedded measurements in the measured one; each update follows the
    orthogonally-split direction described in the module docstring.  The
    trace records the constraint residual ||M^T y_t - xc|| / sqrt(n) per
    iteration.  With a rank-0 measurement this is exactly ``sample_prior``
    (bitwise, under a shared RNG stream).
    """
    xc = np.asarray(xc, dtype=np.float64).reshape(-1)
    if xc.size != measurement.rank:
        raise ValueError(f"xc has length {xc.size}, expected rank {measurement.rank}")
    if not np.all(np.isfinite(xc)):
        raise ValueError("xc must be finite")
    return _run_chain(denoiser, measurement, xc, params, rng, y0, observer)
