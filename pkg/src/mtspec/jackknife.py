"""Log-spectral point estimates, delete-one jackknife variances and the
chi-square moment formulas used to judge them.

With ``K`` eigenspectra ``S_k`` at one frequency:

* ``log_mean`` is ``ln(mean_k S_k)``; ``mean_log`` is ``mean_k ln S_k``.
* The jackknife works on the delete-one log means
  ``theta_l = ln(mean_{k != l} S_k)`` and returns
  ``(K-1)/K * sum_l (theta_l - mean_l theta_l)^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimators import EigenSpectra, SpectralEstimate
from .exceptions import ParameterError
from .special import digamma, trigamma

__all__ = [
    "LogSpectrumStats",
    "Chi2LogMoments",
    "log_estimates",
    "jackknife_log_stats",
    "jackknife_variance",
    "adaptive_jackknife_variance",
    "chi2_log_moments",
    "table4",
    "confidence_band",
    "gaussian_band",
    "bias_corrected_log",
]


@dataclass(frozen=True)
class LogSpectrumStats:
    """Per-frequency log-spectrum statistics.

    ``valid`` is False where some eigenspectrum is zero; the log fields are
    NaN there. ``jack_var`` is ``None`` for point-only statistics.
    """

    grid: object
    log_mean: np.ndarray
    mean_log: np.ndarray
    jack_var: np.ndarray | None
    K: int
    valid: np.ndarray


@dataclass(frozen=True)
class Chi2LogMoments:
    """Moments of log-averaged chi-square(2) variables for ``K`` tapers.

    ``bias`` is the magnitude ``|psi(K) - ln K|``; the bias itself is
    negative (``bias_signed``).
    """

    K: int
    bias: float
    bias_signed: float
    variance: float
    jack_expect: float
    jack_asymptotic: float
    meanlog_variance: float

    @property
    def ratio(self):
        """Mean-of-logs variance over the expected jackknife variance."""
        return self.meanlog_variance / self.jack_expect

    def as_row(self):
        return (self.K, self.bias, self.variance, self.jack_expect,
                self.jack_asymptotic, self.meanlog_variance, self.ratio)


def _powers(source):
    if isinstance(source, EigenSpectra):
        return source.powers, source.grid
    p = np.asarray(source, dtype=float)
    if p.ndim == 1:
        p = p[:, None]
    return p, None


def log_estimates(source):
    """Log of the mean and mean of the logs of the eigenspectra.

    ``source`` is :class:`EigenSpectra` or an array of shape ``(K,)`` or
    ``(K, M)``. Frequencies with a zero power are flagged, not fatal.
    """
    p, grid = _powers(source)
    valid = np.all(p > 0, axis=0)
    safe = np.where(valid[None, :], p, 1.0)
    log_mean = np.where(valid, np.log(safe.mean(axis=0)), np.nan)
    mean_log = np.where(valid, np.log(safe).mean(axis=0), np.nan)
    return LogSpectrumStats(grid, log_mean, mean_log, None, p.shape[0], valid)


def _delete_one_logs(p):
    K = p.shape[0]
    # summing the kept powers directly avoids cancellation in total - p
    keep = 1.0 - np.eye(K)
    others = np.tensordot(keep, p, axes=(1, 0))
    return np.log(others / (K - 1))


def _jack_from_thetas(theta):
    K = theta.shape[0]
    dev = theta - theta.mean(axis=0)
    return (K - 1) / K * np.sum(dev * dev, axis=0)


def jackknife_variance(powers):
    """Delete-one jackknife variance of the log of the mean power.

    Parameters
    ----------
    powers : array_like, shape (K,) or (K, M)
        Positive eigenspectrum values; ``K >= 3``.
    """
    p = np.asarray(powers, dtype=float)
    if p.shape[0] < 3:
        raise ParameterError(f"jackknife needs K >= 3, got {p.shape[0]}")
    if np.any(p <= 0):
        raise ParameterError("jackknife needs strictly positive powers")
    out = _jack_from_thetas(_delete_one_logs(p))
    return float(out) if out.ndim == 0 else out


def jackknife_log_stats(source):
    """:func:`log_estimates` plus the jackknife variance at each frequency."""
    stats = log_estimates(source)
    p, _ = _powers(source)
    if p.shape[0] < 3:
        raise ParameterError(f"jackknife needs K >= 3, got {p.shape[0]}")
    safe = np.where(stats.valid[None, :], p, 1.0)
    jv = np.where(stats.valid, _jack_from_thetas(_delete_one_logs(safe)),
                  np.nan)
    return LogSpectrumStats(stats.grid, stats.log_mean, stats.mean_log, jv,
                            stats.K, stats.valid)


def adaptive_jackknife_variance(es, scheme):
    """Jackknife variance of ``ln S`` with the adaptive weighting re-run on
    each delete-one set of eigenspectra (``K`` weighting passes)."""
    from .adaptive import _as_scheme, _weigh

    scheme = _as_scheme(scheme)
    K = es.K
    if K < 3:
        raise ParameterError(f"jackknife needs K >= 3, got {K}")
    sigma2 = es.sigma2 if scheme.sigma2 is None else scheme.sigma2
    thetas = []
    for ell in range(K):
        keep = np.arange(K) != ell
        _, _, S, _, _ = _weigh(es.powers[keep], es.eigenvalues[keep],
                               sigma2, scheme)
        with np.errstate(divide="ignore"):
            thetas.append(np.log(S))
    return _jack_from_thetas(np.array(thetas))


def chi2_log_moments(K):
    """Bias and variance of ``ln`` of a mean of ``K`` chi-square(2)/2
    variables, the expected jackknife variance (exact and asymptotic) and
    the variance of the mean of logs."""
    K = int(K)
    if K < 3:
        raise ParameterError(f"K={K} must be >= 3")
    b = digamma(K) - math.log(K)
    var = trigamma(K)
    jack = (K - 1) ** 2 / K * (
        2.0 / (K - 2) ** 2
        + 0.5 * (trigamma((K - 1) / 2.0) - trigamma((K - 2) / 2.0)))
    jack_asym = (K - 1) ** 2 * (K - 3) / (K * (K - 2) ** 3)
    return Chi2LogMoments(K, abs(b), b, var, jack, jack_asym,
                          math.pi ** 2 / (6.0 * K))


def table4(K_values=range(3, 21)):
    """Rows ``(K, bias, psi'(K), E jack, asymptotic, meanlog var, ratio)``."""
    return [chi2_log_moments(K).as_row() for K in K_values]


def bias_corrected_log(stats):
    """``ln`` of the mean with the chi-square log bias removed."""
    return stats.log_mean - chi2_log_moments(stats.K).bias_signed


def confidence_band(estimate, stats, n_sigma=2.0):
    """Attach a jackknife band ``exp(center +/- n_sigma * sigma_J)``.

    ``center`` is the bias-corrected log mean.
    """
    if stats.jack_var is None:
        raise ParameterError("stats carry no jackknife variance")
    if stats.grid is not None and stats.grid != estimate.grid:
        raise ParameterError("statistics and estimate are on different grids")
    if stats.log_mean.shape != np.shape(estimate.values):
        raise ParameterError("statistics and estimate differ in length")
    center = bias_corrected_log(stats)
    half = n_sigma * np.sqrt(stats.jack_var)
    return estimate.with_band(np.exp(center - half), np.exp(center + half),
                              band="jackknife", n_sigma=float(n_sigma))


def gaussian_band(stats, n_sigma=2.0):
    """Band from the Gaussian-theory variance ``psi'(K)`` of the log mean."""
    center = bias_corrected_log(stats)
    half = n_sigma * math.sqrt(trigamma(stats.K))
    return np.exp(center - half), np.exp(center + half)
