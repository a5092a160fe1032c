"""Multivariate Gaussian primitives: density, sampling, posterior and the
Kriging conditional used for extrapolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .errors import DomainError
from .kernels import CovMatrix, chol_with_jitter

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class GaussianDist:
    mean: np.ndarray
    cov: CovMatrix

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        if self.mean.shape != (self.cov.n,):
            raise DomainError("mean dimension must equal covariance order")


def mvn_logpdf(x: np.ndarray, dist: GaussianDist) -> float:
    """Exact log density of ``x`` under ``dist`` via Cholesky."""
    x = np.asarray(x, dtype=float)
    if x.shape != dist.mean.shape:
        raise DomainError(f"dimension mismatch: {x.shape} vs {dist.mean.shape}")
    q = dist.cov.quad(x - dist.mean)
    return -0.5 * (dist.mean.size * _LOG_2PI + dist.cov.logdet() + q)


def mvn_sample(dist: GaussianDist, rng: np.random.Generator) -> np.ndarray:
    """One draw ``mean + L z`` with ``z`` standard normal."""
    z = rng.standard_normal(dist.mean.size)
    return dist.mean + dist.cov.chol() @ z


def sample_gaussian_from_precision(
    precision: np.ndarray, rhs: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Draw from N(P^-1 rhs, P^-1) given the precision matrix P.

    Uses the one-factorization trick: with P = L L', the mean solves
    P m = rhs and ``m + L'^-1 z`` has covariance P^-1.
    """
    chol, _ = chol_with_jitter(precision)
    mean = cho_solve((chol, True), rhs)
    z = rng.standard_normal(rhs.size)
    return mean + solve_triangular(chol, z, lower=True, trans="T")


def gp_posterior(
    prior_mean: np.ndarray,
    prior_cov: CovMatrix,
    y: np.ndarray,
    noise_var: float,
) -> GaussianDist:
    """Posterior of a latent GP at its own observation points.

    Mean ``mu + S (S + s2 I)^-1 (y - mu)`` and covariance
    ``S - S (S + s2 I)^-1 S``, all through Cholesky solves of the
    noise-inflated Gram matrix.
    """
    mu = np.asarray(prior_mean, dtype=float)
    y = np.asarray(y, dtype=float)
    if noise_var < 0:
        raise DomainError("noise variance must be nonnegative")
    if mu.shape != y.shape or mu.size != prior_cov.n:
        raise DomainError("gp_posterior dimension mismatch")
    s = prior_cov.values
    a = s + noise_var * np.eye(mu.size)
    chol, _ = chol_with_jitter(a)
    alpha = cho_solve((chol, True), y - mu)
    mean = mu + s @ alpha
    cov = s - s @ cho_solve((chol, True), s)
    return GaussianDist(mean, CovMatrix(0.5 * (cov + cov.T)))


def krige(
    prior_mean_t: np.ndarray,
    prior_mean_s: np.ndarray,
    cov_tt: CovMatrix,
    cov_ss: CovMatrix,
    cov_st: np.ndarray,
    y_t: np.ndarray,
    noise_var: float,
) -> GaussianDist:
    """Predictive distribution at new points ``s`` given data at ``t``.

    The best-linear-unbiased-predictor form: the mean is the prior mean at
    ``s`` plus the cross-covariance times the whitened residual; as the
    cross-covariance decays the prediction falls back to the prior.
    """
    mu_t = np.asarray(prior_mean_t, dtype=float)
    mu_s = np.asarray(prior_mean_s, dtype=float)
    k_st = np.asarray(cov_st, dtype=float)
    y_t = np.asarray(y_t, dtype=float)
    if k_st.shape != (mu_s.size, mu_t.size):
        raise DomainError(f"cov_st must be |s| x |t|, got {k_st.shape}")
    if mu_t.size != cov_tt.n or mu_s.size != cov_ss.n or y_t.shape != mu_t.shape:
        raise DomainError("krige dimension mismatch")
    a = cov_tt.values + noise_var * np.eye(mu_t.size)
    chol, _ = chol_with_jitter(a)
    mean = mu_s + k_st @ cho_solve((chol, True), y_t - mu_t)
    cov = cov_ss.values - k_st @ cho_solve((chol, True), k_st.T)
    return GaussianDist(mean, CovMatrix(0.5 * (cov + cov.T)))
