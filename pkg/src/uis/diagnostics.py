"""Convergence reporting and the planar manifold demonstration harness."""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .core import RngStream, SignalVector
from .curves import Curve
from .priors import OracleDenoiser, manifold_atoms
from .sampler import IterationTrace, sample_prior
from .schedules import SamplerParams, step_size

__all__ = [
    "ConvergenceReport",
    "convergence_report",
    "report_to_csv",
    "report_to_json",
    "manifold_distance",
    "ManifoldRun",
    "ManifoldDemoResult",
    "manifold_demo",
]

REPORT_COLUMNS = ("beta", "iterations", "mean_observed_ratio", "mean_expected_ratio", "faster_than_expected")


@dataclass(frozen=True)
class ConvergenceReport:
    """How fast the observed noise level fell versus the schedule's target.

    Ratios are per-iteration contractions sigma_t / sigma_{t-1} (observed,
    with sigma0 as the level before the first iteration) and 1 - beta*h_t
    (expected), averaged over the run.
    """

    beta: float
    iterations: int
    mean_observed_ratio: float
    mean_expected_ratio: float
    faster_than_expected: bool

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        for name in ("mean_observed_ratio", "mean_expected_ratio"):
            v = getattr(self, name)
            if not (0.0 <= v < 1.5):
                raise ValueError(f"{name} must lie in [0, 1.5), got {v}")


def convergence_report(trace: IterationTrace, beta: float, h0: float) -> ConvergenceReport:
    """Aggregate a trace into observed-vs-expected contraction ratios."""
    if trace.iterations == 0:
        raise ValueError("trace has no iterations")
    prev = float(trace.sigma0)
    observed, expected = [], []
    for rec in trace.records:
        observed.append(rec.sigma_observed / prev)
        expected.append(1.0 - beta * step_size(h0, rec.t))
        prev = rec.sigma_observed
    mean_obs = float(np.mean(observed))
    mean_exp = float(np.mean(expected))
    return ConvergenceReport(
        beta=float(beta),
        iterations=trace.iterations,
        mean_observed_ratio=mean_obs,
        mean_expected_ratio=mean_exp,
        faster_than_expected=mean_obs <= mean_exp,
    )


def report_to_csv(reports: Sequence[ConvergenceReport], target: Union[str, io.TextIOBase]) -> None:
    own = isinstance(target, (str, bytes, os.PathLike))
    fh = open(target, "w", newline="") if own else target
    try:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for r in reports:
            writer.writerow(
                [repr(r.beta), r.iterations, repr(r.mean_observed_ratio),
                 repr(r.mean_expected_ratio), r.faster_than_expected]
            )
    finally:
        if own:
            fh.close()


def report_to_json(reports: Sequence[ConvergenceReport], target: Union[str, io.TextIOBase]) -> None:
    payload = [asdict(r) for r in reports]
    if isinstance(target, (str, bytes, os.PathLike)):
        with open(target, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    else:
        json.dump(payload, target, indent=2)


def manifold_distance(point, curve: Curve) -> float:
    """Distance from a planar point to the curve's dense discretization."""
    return curve.distance(point)


@dataclass(frozen=True)
class ManifoldRun:
    """One chain of the 2-D demo."""

    start: Tuple[float, float]
    final: Tuple[float, float]
    iterations: int
    converged: bool
    distance_to_curve: float
    path_length: float
    straight_distance: float


@dataclass(frozen=True)
class ManifoldDemoResult:
    runs: Tuple[ManifoldRun, ...]
    trajectories: Tuple[np.ndarray, ...]  # each (iterations + 1, 2)

    @property
    def max_distance(self) -> float:
        return max(r.distance_to_curve for r in self.runs)

    def curved_fraction(self) -> float:
        """Fraction of chains whose path is strictly longer than the chord."""
        curved = sum(1 for r in self.runs if r.path_length > r.straight_distance)
        return curved / len(self.runs)


def manifold_demo(
    curve: Curve,
    count: int,
    params: SamplerParams,
    noise_sigma: Optional[float] = None,
) -> ManifoldDemoResult:
    """Run one chain per atom of a curve prior and collect trajectories.

    Builds a ``count``-point discrete prior on the curve; chain i starts at
    atom i corrupted by noise of level ``noise_sigma`` (default sigma0) and
    ascends its own seeded stream (params.seed + i).  Curved trajectories
    and termination on the manifold are the two behaviors this demo is
    meant to exhibit.
    """
    prior = manifold_atoms(curve, count)
    denoiser = OracleDenoiser(prior)
    sigma_init = params.sigma0 if noise_sigma is None else float(noise_sigma)

    runs: List[ManifoldRun] = []
    trajectories: List[np.ndarray] = []
    for i in range(count):
        rng = RngStream((params.seed + i) % 2**64)
        y0 = SignalVector(prior.atoms[i] + sigma_init * rng.standard_normal(2))
        path = [y0.data.copy()]
        final, trace = sample_prior(
            denoiser, params, rng, shape=2, y0=y0,
            observer=lambda t, y: path.append(y.data.copy()),
        )
        traj = np.asarray(path)
        lengths = np.linalg.norm(np.diff(traj, axis=0), axis=1)
        runs.append(
            ManifoldRun(
                start=tuple(y0.data),
                final=tuple(final.data),
                iterations=trace.iterations,
                converged=trace.converged,
                distance_to_curve=curve.distance(final.data),
                path_length=float(lengths.sum()),
                straight_distance=float(np.linalg.norm(final.data - y0.data)),
            )
        )
        trajectories.append(traj)
    return ManifoldDemoResult(tuple(runs), tuple(trajectories))
