"""Spectral estimators on a one-sided frequency grid.

Conventions
-----------
* Frequencies are in cycles/sample on ``[0, 1/2]``; ``dt`` only matters when
  converting to physical units.
* The periodogram is ``(1/N) |sum x_n exp(-2 pi i f n)|^2``; tapered
  estimates divide by ``sum nu_n^2``. White noise of variance ``sigma^2``
  therefore has expected level ``sigma^2`` under every estimator.
* Transforms are zero-padded to ``grid_size`` points (default ``4 N``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import ParameterError
from .tapers import SlepianFamily, Taper, rectangular_taper

__all__ = [
    "TimeSeries",
    "FrequencyGrid",
    "SpectralEstimate",
    "EigenSpectra",
    "resolve_grid_size",
    "periodogram",
    "tapered_periodogram",
    "boxcar_smooth",
    "eigencoefficients",
    "combine",
    "uniform_multitaper",
    "hybrid_estimate",
    "welch_estimate",
    "segment_starts",
    "two_sided_mean",
]


@dataclass(frozen=True)
class TimeSeries:
    """Real samples ``x_n`` with sample interval ``dt`` (seconds)."""

    samples: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        x = np.array(self.samples, dtype=float, copy=True)
        if x.ndim != 1:
            raise ParameterError("samples must be one-dimensional")
        if x.size < 8:
            raise ParameterError(f"need at least 8 samples, got {x.size}")
        if not np.all(np.isfinite(x)):
            bad = int(np.flatnonzero(~np.isfinite(x))[0])
            raise ParameterError(f"non-finite sample at index {bad}")
        if not self.dt > 0:
            raise ParameterError(f"dt={self.dt!r} must be positive")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    @property
    def N(self):
        return self.samples.size

    @property
    def power(self):
        """Sample mean power ``(1/N) sum x_n^2``."""
        return float(np.dot(self.samples, self.samples) / self.N)


@dataclass(frozen=True)
class FrequencyGrid:
    """One-sided grid ``f_j = j / nfft``, ``j = 0 .. nfft/2``."""

    nfft: int
    dt: float = 1.0

    def __post_init__(self):
        if self.nfft < 2 or self.nfft % 2:
            raise ParameterError(f"nfft={self.nfft} must be even and >= 2")

    @property
    def size(self):
        return self.nfft // 2 + 1

    @property
    def spacing(self):
        return 1.0 / self.nfft

    @property
    def frequencies(self):
        return np.arange(self.size) / self.nfft

    @property
    def frequencies_hz(self):
        return self.frequencies / self.dt


@dataclass(frozen=True)
class SpectralEstimate:
    """A spectral density estimate on a :class:`FrequencyGrid`.

    ``method`` is a plain dict describing how the estimate was made
    (estimator, taper, bandwidth, weighting, ...). ``band`` is ``None`` or a
    ``(lo, hi)`` pair of arrays.
    """

    grid: FrequencyGrid
    values: np.ndarray
    dof: np.ndarray
    n_samples: int
    method: dict = field(default_factory=dict)
    band: tuple | None = None

    @property
    def frequencies(self):
        return self.grid.frequencies

    def with_band(self, lo, hi, **extra):
        method = dict(self.method)
        method.update(extra)
        return replace(self, band=(np.asarray(lo), np.asarray(hi)),
                       method=method)


@dataclass(frozen=True)
class EigenSpectra:
    """Per-taper transforms ``y_k(f)`` and powers ``|y_k(f)|^2``."""

    grid: FrequencyGrid
    coeffs: np.ndarray
    powers: np.ndarray
    eigenvalues: np.ndarray
    sigma2: float
    n_samples: int
    time_bandwidth: float

    @property
    def K(self):
        return self.powers.shape[0]

    @property
    def bandwidth(self):
        return self.time_bandwidth / self.n_samples


def _as_series(x):
    return x if isinstance(x, TimeSeries) else TimeSeries(np.asarray(x))


def resolve_grid_size(N, grid_size=None):
    """Transform length: ``4 N`` by default, else ``grid_size`` rounded up
    to an even number. Must be at least ``N``."""
    if grid_size is None:
        nfft = 4 * int(N)
    else:
        nfft = int(grid_size)
        if nfft < N:
            raise ParameterError(f"grid_size={nfft} must be >= N={N}")
    return nfft + (nfft % 2)


def _transform(xs, nfft):
    """One-sided DFT with the symmetric time index; works on the last axis."""
    N = xs.shape[-1]
    y = np.fft.rfft(xs, nfft, axis=-1)
    f = np.arange(nfft // 2 + 1) / nfft
    return y * np.exp(1j * np.pi * f * (N - 1))


def _tapered_power(xs, taper_values, nfft):
    y = np.fft.rfft(xs * taper_values, nfft, axis=-1)
    return (y.real ** 2 + y.imag ** 2) / np.dot(taper_values, taper_values)


def _single_taper_dof(M):
    dof = np.full(M, 2.0)
    dof[0] = dof[-1] = 1.0
    return dof


def periodogram(x, grid_size=None):
    """Raw periodogram ``(1/N)|y(f)|^2``."""
    ts = _as_series(x)
    nfft = resolve_grid_size(ts.N, grid_size)
    grid = FrequencyGrid(nfft, ts.dt)
    S = _tapered_power(ts.samples, np.ones(ts.N), nfft)
    return SpectralEstimate(grid, S, _single_taper_dof(grid.size), ts.N,
                            {"estimator": "periodogram", "taper": "rect",
                             "bandwidth": 0.0})


def tapered_periodogram(x, taper, grid_size=None):
    """Single-taper estimate ``|sum x_n nu_n e^{-2 pi i f n}|^2 / sum nu^2``."""
    ts = _as_series(x)
    if taper.N != ts.N:
        raise ParameterError(
            f"taper length {taper.N} does not match series length {ts.N}")
    nfft = resolve_grid_size(ts.N, grid_size)
    grid = FrequencyGrid(nfft, ts.dt)
    S = _tapered_power(ts.samples, taper.values, nfft)
    return SpectralEstimate(grid, S, _single_taper_dof(grid.size), ts.N,
                            {"estimator": "tapered_periodogram",
                             "taper": "custom", "bandwidth": 0.0})


def _boxcar(values, h):
    """Truncated moving average of half-width ``h`` bins on the last axis."""
    M = values.shape[-1]
    c = np.cumsum(values, axis=-1)
    c = np.concatenate([np.zeros(values.shape[:-1] + (1,)), c], axis=-1)
    idx = np.arange(M)
    lo = np.maximum(idx - h, 0)
    hi = np.minimum(idx + h, M - 1) + 1
    return (c[..., hi] - c[..., lo]) / (hi - lo), hi - lo


def halfwidth_bins(W, nfft):
    """Number of grid bins within a half-width ``W`` (cycles/sample)."""
    return int(math.floor(W * nfft + 1e-9))


def boxcar_smooth(est, halfwidth_W):
    """Unweighted moving average over ``[f - W, f + W]``.

    Windows are truncated at ``0`` and Nyquist. The degrees of freedom add
    over independent (Rayleigh-spaced) bins and are capped at
    ``4 (W + W_in) N``, ``W_in`` being the bandwidth already carried by
    ``est``.
    """
    if not 0.0 < halfwidth_W < 0.25:
        raise ParameterError(f"halfwidth_W={halfwidth_W!r} not in (0, 1/4)")
    nfft = est.grid.nfft
    h = halfwidth_bins(halfwidth_W, nfft)
    method = dict(est.method)
    w_in = float(method.get("bandwidth", 0.0))
    method["kernel_W"] = float(halfwidth_W)
    method["bandwidth"] = w_in + float(halfwidth_W)
    if h == 0:
        return replace(est, method=method)
    values, count = _boxcar(est.values, h)
    dsum, _ = _boxcar(est.dof, h)
    mean_dof = dsum
    dof = dsum * count * est.n_samples / nfft
    cap = 4.0 * (w_in + halfwidth_W) * est.n_samples
    dof = np.clip(dof, mean_dof, np.maximum(mean_dof, cap))
    return replace(est, values=values, dof=dof, method=method, band=None)


def eigencoefficients(x, family, grid_size=None):
    """Per-taper transforms ``y_k(f) = sum x_n nu^(k)_n e^{-2 pi i f n}``."""
    ts = _as_series(x)
    if not isinstance(family, SlepianFamily):
        raise ParameterError("family must be a SlepianFamily")
    if family.N != ts.N:
        raise ParameterError(
            f"family length {family.N} does not match series length {ts.N}")
    nfft = resolve_grid_size(ts.N, grid_size)
    coeffs = _transform(ts.samples[None, :] * family.tapers, nfft)
    powers = coeffs.real ** 2 + coeffs.imag ** 2
    return EigenSpectra(FrequencyGrid(nfft, ts.dt), coeffs, powers,
                        family.eigenvalues, ts.power, ts.N,
                        family.time_bandwidth)


def _dof_from_weights(c):
    s1 = c.sum(axis=-2)
    s2 = (c ** 2).sum(axis=-2)
    with np.errstate(invalid="ignore", divide="ignore"):
        dof = np.where(s2 > 0, 2.0 * s1 ** 2 / np.where(s2 > 0, s2, 1.0), 0.0)
    return dof


def _check_weights(c, K, M):
    c = np.asarray(c, dtype=float)
    if c.ndim == 1:
        c = np.repeat(c[:, None], M, axis=1)
    if c.shape != (K, M):
        raise ParameterError(f"weights shape {c.shape} != ({K}, {M})")
    if np.any(c < 0):
        raise ParameterError("weights must be nonnegative")
    total = c.sum(axis=0)
    if np.any(total <= 0) or np.any(total > 1.05 + 1e-12):
        raise ParameterError("per-frequency weight sums must lie in (0, 1.05]")
    return c


def combine(es, weights, method=None):
    """Weighted eigenspectrum combination ``S(f) = sum_k c_k(f) S_k(f)``.

    ``weights`` has shape ``(K,)`` or ``(K, M)``. Degrees of freedom follow
    the effective-sample-size rule ``2 (sum c)^2 / sum c^2``.
    """
    c = _check_weights(weights, es.K, es.grid.size)
    S = np.einsum("km,km->m", c, es.powers)
    desc = {"estimator": "multitaper", "taper": "slepian",
            "time_bandwidth": es.time_bandwidth, "K": es.K,
            "bandwidth": es.bandwidth, "weighting": "custom"}
    if method:
        desc.update(method)
    return SpectralEstimate(es.grid, S, _dof_from_weights(c), es.n_samples,
                            desc)


def uniform_multitaper(es):
    """Simple average of the ``K`` eigenspectra."""
    return combine(es, np.full(es.K, 1.0 / es.K), {"weighting": "uniform"})


def hybrid_estimate(x, family, weighting="uniform", kernel_W=0.0,
                    grid_size=None):
    """Multitaper estimate followed by a boxcar smoother of half-width
    ``kernel_W``. ``weighting`` is a kind name or a ``WeightingScheme``."""
    from .adaptive import apply_weighting

    es = eigencoefficients(x, family, grid_size)
    _, est = apply_weighting(es, weighting)
    if kernel_W > 0:
        est = boxcar_smooth(est, kernel_W)
    method = dict(est.method)
    method.update(estimator="hybrid", multitaper_W=es.bandwidth,
                  kernel_W=float(kernel_W))
    return replace(est, method=method)


def segment_starts(N, segment_len, overlap_fraction=0.0):
    """Start indices of consecutive segments of ``segment_len`` samples."""
    L = int(segment_len)
    if L < 1 or L > N:
        raise ParameterError(f"segment_len={L} must lie in [1, N={N}]")
    if not 0.0 <= overlap_fraction < 1.0:
        raise ParameterError(f"overlap_fraction={overlap_fraction!r}")
    step = max(1, int(round(L * (1.0 - overlap_fraction))))
    count = (N - L) // step + 1
    return np.arange(count) * step


def welch_estimate(x, segment_len, overlap_fraction=0.0, taper=None,
                   grid_size=None):
    """Average of tapered periodograms over consecutive segments.

    ``dof`` is ``2 * count`` (exact only without overlap). ``grid_size``
    defaults to ``4 * segment_len``.
    """
    ts = _as_series(x)
    L = int(segment_len)
    if L > ts.N:
        raise ParameterError(
            f"segment_len={L} exceeds series length {ts.N}: no full segment")
    if not 0.0 <= overlap_fraction <= 0.9:
        raise ParameterError("overlap_fraction must lie in [0, 0.9]")
    if taper is None:
        taper = rectangular_taper(L)
    if taper.N != L:
        raise ParameterError("taper length must equal segment_len")
    starts = segment_starts(ts.N, L, overlap_fraction)
    nfft = resolve_grid_size(L, grid_size)
    segs = ts.samples[starts[:, None] + np.arange(L)[None, :]]
    S = _tapered_power(segs, taper.values, nfft).mean(axis=0)
    grid = FrequencyGrid(nfft, ts.dt)
    dof = np.full(grid.size, 2.0 * starts.size)
    return SpectralEstimate(grid, S, dof, L,
                            {"estimator": "welch", "segments": int(starts.size),
                             "segment_len": L,
                             "overlap_fraction": float(overlap_fraction),
                             "bandwidth": 0.0})


def two_sided_mean(est):
    """Mean of a one-sided estimate over the full two-sided transform grid."""
    v = np.asarray(est.values if hasattr(est, "values") else est)
    return float((v[0] + v[-1] + 2.0 * v[1:-1].sum()) / (2 * (v.size - 1)))
