"""Analytic priors with closed-form noisy density, score, and posterior mean.

For a prior p(x) observed under additive Gaussian noise of level sigma, the
noisy observation density p_sigma(y) is the convolution of p with
N(0, sigma^2 I) -- a Gaussian-blurred copy of the prior.  Both families here
(Gaussian mixtures and discrete atom sets) keep that convolution in closed
form, so the log density, its gradient (the score), and the posterior mean
E[x | y] (the least-squares denoiser) are all exact.  That makes them
oracles: the posterior mean must satisfy the empirical-Bayes identity

    mmse(y, sigma) = y + sigma^2 * score(y, sigma)

(Tweedie/Miyasawa), which the test suite verifies to near machine precision.

All mixture arithmetic is done in the log domain: at sigma = 0.01 with
well-separated atoms, linear-domain responsibilities underflow.
"""

from __future__ import annotations

from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import logsumexp

from .core import RngStream, SignalVector, as_vector
from .curves import Curve, curve_from_descriptor

__all__ = [
    "GmmPrior",
    "AtomPrior",
    "OracleDenoiser",
    "WienerDenoiser",
    "manifold_atoms",
    "prior_from_descriptor",
]


def _check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not (np.isfinite(sigma) and sigma > 0.0):
        raise ValueError(f"sigma must be finite and > 0, got {sigma}")
    return sigma


class GmmPrior:
    """Gaussian mixture prior sum_k w_k N(mu_k, C_k).

    Blurring by noise level sigma shifts every covariance to C_k + sigma^2 I,
    so densities, scores, and posterior means reduce to responsibility-
    weighted single-Gaussian formulas.  Covariances may be full symmetric PSD
    matrices or scalars (isotropic c*I); full matrices are eigendecomposed
    once at construction.
    """

    def __init__(self, weights, means, covariances):
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        if w.size == 0 or np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be positive and finite")
        self.weights = w / w.sum()
        self.means = np.atleast_2d(np.asarray(means, dtype=np.float64))
        k, n = self.means.shape
        if w.size != k:
            raise ValueError(f"{w.size} weights for {k} means")
        self.dim = n

        self._iso = None  # (K,) isotropic variances, or None
        self._eigvals = None  # (K, N)
        self._eigvecs = None  # (K, N, N)
        arr = np.asarray(covariances, dtype=np.float64)
        if arr.ndim == 1 or arr.ndim == 0:
            iso = np.broadcast_to(np.atleast_1d(arr), (k,)).astype(np.float64)
            if np.any(iso < 0) or not np.all(np.isfinite(iso)):
                raise ValueError("isotropic variances must be >= 0 and finite")
            self._iso = iso.copy()
        else:
            if arr.shape != (k, n, n):
                raise ValueError(f"covariances must be ({k}, {n}, {n}) or ({k},), got {arr.shape}")
            sym_err = np.abs(arr - np.transpose(arr, (0, 2, 1))).max()
            scale = max(1.0, np.abs(arr).max())
            if sym_err > 1e-12 * scale:
                raise ValueError(f"covariances must be symmetric (max asymmetry {sym_err:.3e})")
            sym = 0.5 * (arr + np.transpose(arr, (0, 2, 1)))
            vals, vecs = np.linalg.eigh(sym)
            if np.any(vals < -1e-10 * scale):
                raise ValueError("covariances must be positive semi-definite")
            self._eigvals = np.clip(vals, 0.0, None)
            self._eigvecs = vecs

    @property
    def n_components(self) -> int:
        return self.weights.size

    def mean(self) -> np.ndarray:
        """Mixture mean sum_k w_k mu_k."""
        return self.weights @ self.means

    def _per_component(self, y: np.ndarray, sigma: float):
        """Log joint weights and whitened residuals for each component.

        Returns (logits, z, denom) with z = Q_k^T (y - mu_k) and
        denom = eigenvalues + sigma^2 (component k selects row k).
        For isotropic components Q is the identity.
        """
        s2 = sigma * sigma
        diff = y[None, :] - self.means  # (K, N)
        if self._iso is not None:
            z = diff
            denom = (self._iso + s2)[:, None]  # (K, 1), broadcast over N
            quad = np.sum(z * z, axis=1) / denom[:, 0]
            logdet = self.dim * np.log(2.0 * np.pi * denom[:, 0])
        else:
            z = np.einsum("kij,kj->ki", np.transpose(self._eigvecs, (0, 2, 1)), diff)
            denom = self._eigvals + s2  # (K, N)
            quad = np.sum(z * z / denom, axis=1)
            logdet = np.sum(np.log(2.0 * np.pi * denom), axis=1)
        logits = np.log(self.weights) - 0.5 * (quad + logdet)
        return logits, z, denom

    def _responsibilities(self, logits: np.ndarray) -> np.ndarray:
        return np.exp(logits - logsumexp(logits))

    def noisy_log_density(self, y, sigma: float) -> float:
        """log p_sigma(y), the mixture blurred by N(0, sigma^2 I)."""
        sigma = _check_sigma(sigma)
        y = as_vector(y)
        logits, _, _ = self._per_component(y, sigma)
        return float(logsumexp(logits))

    def score(self, y, sigma: float) -> np.ndarray:
        """Gradient of log p_sigma at y.

        grad log p = sum_k r_k(y) (C_k + sigma^2 I)^{-1} (mu_k - y), with r_k
        the posterior responsibilities of the blurred mixture.
        """
        sigma = _check_sigma(sigma)
        y = as_vector(y)
        logits, z, denom = self._per_component(y, sigma)
        r = self._responsibilities(logits)
        if self._iso is not None:
            per_comp = -z / denom  # (K, N)
        else:
            per_comp = -np.einsum("kij,kj->ki", self._eigvecs, z / denom)
        return r @ per_comp

    def mmse_denoise(self, y, sigma: float) -> np.ndarray:
        """Posterior mean E[x | y] under noise level sigma.

        Responsibility-weighted single-Gaussian posterior means:
        sum_k r_k (mu_k + C_k (C_k + sigma^2 I)^{-1} (y - mu_k)).
        """
        sigma = _check_sigma(sigma)
        y = as_vector(y)
        logits, z, denom = self._per_component(y, sigma)
        r = self._responsibilities(logits)
        if self._iso is not None:
            shrunk = self.means + (self._iso[:, None] / denom) * z
        else:
            lam = self._eigvals
            shrunk = self.means + np.einsum("kij,kj->ki", self._eigvecs, (lam / denom) * z)
        return r @ shrunk

    def as_denoiser(self) -> "OracleDenoiser":
        return OracleDenoiser(self)

    def descriptor(self) -> dict:
        d = {"type": "gmm", "weights": self.weights.tolist(), "means": self.means.tolist()}
        if self._iso is not None:
            d["variances"] = self._iso.tolist()
        else:
            covs = np.einsum(
                "kij,kj,klj->kil", self._eigvecs, self._eigvals, self._eigvecs
            )
            d["covariances"] = covs.tolist()
        return d


class AtomPrior:
    """Discrete prior over a finite set of points (atoms).

    The blurred density is a Gaussian mixture with isotropic covariance
    sigma^2 I at each atom; the posterior mean is the softmax-weighted atom
    average with logits log w_k - ||y - a_k||^2 / (2 sigma^2), so it always
    lies in the convex hull of the atoms.
    """

    def __init__(self, atoms, weights=None):
        a = np.atleast_2d(np.asarray(atoms, dtype=np.float64))
        if a.size == 0:
            raise ValueError("need at least one atom")
        if not np.all(np.isfinite(a)):
            raise ValueError("atoms must be finite")
        self.atoms = a
        k = a.shape[0]
        if weights is None:
            w = np.full(k, 1.0 / k)
        else:
            w = np.asarray(weights, dtype=np.float64).reshape(-1)
            if w.size != k or np.any(w <= 0) or not np.all(np.isfinite(w)):
                raise ValueError("weights must be positive, finite, one per atom")
            w = w / w.sum()
        self.weights = w
        self.dim = a.shape[1]

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[0]

    def mean(self) -> np.ndarray:
        return self.weights @ self.atoms

    def _logits(self, y: np.ndarray, sigma: float) -> np.ndarray:
        diff = y[None, :] - self.atoms
        sq = np.sum(diff * diff, axis=1)
        return np.log(self.weights) - sq / (2.0 * sigma * sigma)

    def responsibilities(self, y, sigma: float) -> np.ndarray:
        """Posterior probability of each atom given the noisy observation."""
        sigma = _check_sigma(sigma)
        logits = self._logits(as_vector(y), sigma)
        return np.exp(logits - logsumexp(logits))

    def noisy_log_density(self, y, sigma: float) -> float:
        sigma = _check_sigma(sigma)
        y = as_vector(y)
        logits = self._logits(y, sigma)
        norm = 0.5 * self.dim * np.log(2.0 * np.pi * sigma * sigma)
        return float(logsumexp(logits) - norm)

    def score(self, y, sigma: float) -> np.ndarray:
        """grad log p_sigma = sum_k r_k (a_k - y) / sigma^2."""
        sigma = _check_sigma(sigma)
        y = as_vector(y)
        r = self.responsibilities(y, sigma)
        return (r @ (self.atoms - y[None, :])) / (sigma * sigma)

    def mmse_denoise(self, y, sigma: float) -> np.ndarray:
        sigma = _check_sigma(sigma)
        y = as_vector(y)
        return self.responsibilities(y, sigma) @ self.atoms

    def as_denoiser(self) -> "OracleDenoiser":
        return OracleDenoiser(self)

    def descriptor(self) -> dict:
        return {"type": "atoms", "atoms": self.atoms.tolist(), "weights": self.weights.tolist()}


class OracleDenoiser:
    """Posterior-mean denoiser of an analytic prior.

    Consumes the sigma hint -- the closed forms need the noise level -- so it
    is the hint-taking flavor of the denoiser contract.
    """

    concurrency_safe = True

    def __init__(self, prior):
        self.prior = prior

    def denoise(self, y: SignalVector, sigma_hint: Optional[float] = None) -> SignalVector:
        if sigma_hint is None:
            raise ValueError("oracle denoiser requires a sigma hint")
        return y.with_data(self.prior.mmse_denoise(y.data, float(sigma_hint)))


class WienerDenoiser:
    """Closed-form denoiser for the prior N(mean, prior_var * I).

    xhat = mean + prior_var / (prior_var + sigma^2) * (y - mean).

    With ``sigma`` fixed at construction the denoiser is blind (ignores the
    hint), mirroring an external model calibrated for one noise level; with
    ``sigma=None`` it consumes the hint.  Implemented directly from the
    shrinkage formula, independent of GmmPrior, so the two can cross-check
    each other.
    """

    concurrency_safe = True

    def __init__(self, mean: Union[float, Sequence[float]] = 0.0, prior_var: float = 1.0,
                 sigma: Optional[float] = None):
        if prior_var <= 0 or not np.isfinite(prior_var):
            raise ValueError(f"prior_var must be finite and > 0, got {prior_var}")
        self.mean = np.asarray(mean, dtype=np.float64)
        self.prior_var = float(prior_var)
        self.sigma = None if sigma is None else _check_sigma(sigma)

    def denoise(self, y: SignalVector, sigma_hint: Optional[float] = None) -> SignalVector:
        sigma = self.sigma if self.sigma is not None else sigma_hint
        if sigma is None:
            raise ValueError("Wiener denoiser without fixed sigma requires a hint")
        gain = self.prior_var / (self.prior_var + float(sigma) ** 2)
        return y.with_data(self.mean + gain * (y.data - self.mean))


def manifold_atoms(curve: Curve, count: int, rng: Optional[RngStream] = None) -> AtomPrior:
    """Discrete uniform prior of ``count`` points on a curve.

    Placement is deterministic and stratified: points are equally spaced in
    arclength (endpoints included for open curves), evaluated on the curve
    itself.  ``rng`` is accepted for signature uniformity but unused.
    """
    del rng
    return AtomPrior(curve.arclength_points(count))


def prior_from_descriptor(desc: dict):
    """Build a prior from its JSON descriptor.

    Supported types: "gmm" (weights/means plus covariances or variances),
    "atoms", and "manifold" ({"curve": ..., "count": K}).
    """
    kind = desc.get("type")
    if kind == "gmm":
        covs = desc.get("covariances", desc.get("variances"))
        if covs is None:
            raise ValueError("gmm descriptor needs covariances or variances")
        return GmmPrior(desc["weights"], desc["means"], covs)
    if kind == "atoms":
        return AtomPrior(desc["atoms"], desc.get("weights"))
    if kind == "manifold":
        curve = curve_from_descriptor(desc["curve"])
        return manifold_atoms(curve, int(desc["count"]))
    raise ValueError(f"unknown prior type {kind!r}")
