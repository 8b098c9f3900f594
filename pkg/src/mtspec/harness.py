"""Empirical bias / variance / relative-RMSE comparison of spectral
estimators on segments of a long record.

A comparison run works like this:

1. A long record is estimated with many tapers (sequential deselection);
   the result is the converged reference ``S_con``.
2. Every method is applied to short segments. Bias uses overlapping
   segments, variance uses consecutive nonoverlapping ones with the
   neighbor-difference estimator.
3. ``RMSE(f) = sqrt(Var + B^2) / S_con``, averaged over frequency bands,
   is minimized over each method's bandwidth grid.
"""

from __future__ import annotations

import csv
import json
import math
import os
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .adaptive import WeightingScheme, _weigh
from .estimators import (FrequencyGrid, SpectralEstimate, TimeSeries, _boxcar,
                         _tapered_power, _transform, eigencoefficients,
                         halfwidth_bins, segment_starts)
from .exceptions import ParameterError
from .synth import SpectrumModel, generate, rng_info
from .tapers import build_slepian_family, build_tukey_taper

__all__ = [
    "SegmentPlan",
    "MethodSpec",
    "ComparisonConfig",
    "MethodRecord",
    "ComparisonReport",
    "DEFAULT_BANDS_HZ",
    "plan_segments",
    "converged_reference",
    "resample_log_linear",
    "empirical_bias",
    "empirical_variance",
    "relative_rmse",
    "band_scores",
    "bands_to_normalized",
    "segment_estimates",
    "optimize_bandwidth",
    "default_methods",
    "compare_methods",
    "write_report",
]

WELCH_PAIRS = (2, 3, 4, 5)
DEFAULT_BANDS_HZ = ((200e3, 900e3), (1100e3, 1900e3), (2100e3, 2400e3))


@dataclass(frozen=True)
class SegmentPlan:
    """Consecutive segments of ``segment_len`` samples out of ``N``."""

    N: int
    segment_len: int
    overlap_fraction: float
    starts: np.ndarray

    @property
    def count(self):
        return int(self.starts.size)

    def segments(self, x):
        x = x.samples if isinstance(x, TimeSeries) else np.asarray(x)
        return x[self.starts[:, None] + np.arange(self.segment_len)[None, :]]


def plan_segments(N, segment_len, overlap=0.0):
    """Segment start indices with step ``segment_len * (1 - overlap)``."""
    if segment_len > N:
        raise ParameterError(
            f"segment_len={segment_len} exceeds record length {N}")
    if overlap not in (0.0, 0.5):
        warnings.warn(f"overlap {overlap} is outside the tested set {{0, 0.5}}",
                      stacklevel=2)
    starts = segment_starts(int(N), int(segment_len), float(overlap))
    if starts.size == 0:
        raise ParameterError("plan has no segments")
    return SegmentPlan(int(N), int(segment_len), float(overlap), starts)


def resample_log_linear(est, grid):
    """Interpolate an estimate onto ``grid`` linearly in ``log S``."""
    src = est.grid.frequencies
    dst = grid.frequencies
    if est.grid == grid:
        return est
    logv = np.log(np.maximum(est.values, np.finfo(float).tiny))
    values = np.exp(np.interp(dst, src, logv))
    dof = np.interp(dst, src, est.dof)
    return SpectralEstimate(grid, values, dof, est.n_samples,
                            dict(est.method, resampled=True))


def converged_reference(x, W, weighting="sequential_deselection", grid=None,
                        K=None):
    """Adaptive multitaper estimate of the whole record.

    Parameters
    ----------
    x : TimeSeries
    W : float
        Half-bandwidth in cycles/sample; ``NW = W * N`` and ``K`` defaults to
        ``round(2 NW)``.
    grid : FrequencyGrid, optional
        Comparison grid; the estimate is resampled onto it in ``log S``.
    """
    nw = W * x.N
    fam = build_slepian_family(x.N, nw, K)
    # the reference only needs Rayleigh resolution of the long record
    es = eigencoefficients(x, fam, grid_size=x.N)
    scheme = weighting if isinstance(weighting, WeightingScheme) else \
        WeightingScheme(weighting)
    w, _, S, _, _ = _weigh(es.powers, es.eigenvalues, es.sigma2, scheme)
    from .estimators import _dof_from_weights

    est = SpectralEstimate(es.grid, S, _dof_from_weights(w), x.N,
                           {"estimator": "reference", "time_bandwidth": nw,
                            "K": fam.K, "bandwidth": W, **scheme.describe()})
    if grid is not None:
        est = resample_log_linear(est, grid)
    return est


def _values(a):
    if isinstance(a, SpectralEstimate):
        return a.values
    if isinstance(a, (list, tuple)) and a and isinstance(a[0],
                                                         SpectralEstimate):
        grids = {e.grid for e in a}
        if len(grids) != 1:
            raise ParameterError("estimates are on different grids")
        return np.array([e.values for e in a])
    return np.asarray(a, dtype=float)


def empirical_bias(estimates, reference):
    """Mean over segments minus the reference: ``mean_i S_i(f) - S_con(f)``."""
    E = _values(estimates)
    ref = _values(reference)
    if E.shape[-1] != ref.shape[-1]:
        raise ParameterError("estimates and reference have different grids")
    return E.mean(axis=0) - ref


def empirical_variance(estimates):
    """Neighbor-difference variance of consecutive segment estimates:
    ``2 / (3 (Ns - 2)) * sum_{i=2}^{Ns-1} (S_i - (S_{i-1} + S_{i+1}) / 2)^2``.
    """
    E = _values(estimates)
    Ns = E.shape[0]
    if Ns < 3:
        raise ParameterError(f"need at least 3 segments, got {Ns}")
    d = E[1:-1] - 0.5 * (E[:-2] + E[2:])
    return 2.0 / (3.0 * (Ns - 2)) * np.sum(d * d, axis=0)


def relative_rmse(bias, variance, reference):
    return np.sqrt(variance + bias ** 2) / _values(reference)


def bands_to_normalized(bands_hz, sample_rate_hz):
    return [(lo / sample_rate_hz, hi / sample_rate_hz) for lo, hi in bands_hz]


def band_scores(rmse, grid, bands):
    """Mean of ``rmse`` over grid points in each band and over their union.

    Returns ``(per_band, combined)``.
    """
    f = grid.frequencies if isinstance(grid, FrequencyGrid) else \
        np.asarray(grid)
    rmse = np.asarray(rmse)
    union = np.zeros(f.size, dtype=bool)
    per_band = []
    for lo, hi in bands:
        m = (f >= lo - 1e-12) & (f <= hi + 1e-12)
        if not m.any():
            raise ParameterError(f"band [{lo}, {hi}] contains no grid points")
        per_band.append(float(rmse[m].mean()))
        union |= m
    return per_band, float(rmse[union].mean())


@dataclass(frozen=True)
class MethodSpec:
    """A method and the bandwidth grid it is optimized over.

    ``kind`` is one of ``smoothed_periodogram``, ``multitaper``, ``hybrid``
    or ``welch``. The meaning of a bandwidth value ``W`` (cycles/sample):

    * smoothed_periodogram, hybrid: boxcar half-width;
    * multitaper: taper half-bandwidth, ``NW = W * L``, ``K = round(2 NW)``;
    * welch: ignored (``W_grid`` should hold one value).
    """

    name: str
    kind: str
    W_grid: tuple
    taper: str = "tukey"
    alphaN: float = 33.0
    slepian_nw: float = 1.0
    weighting: str = "sequential_deselection"
    K: int | None = None
    time_bandwidth: float | None = None
    welch_segments: int = 2
    alpha_K: float = 2.0

    def __post_init__(self):
        if self.kind not in ("smoothed_periodogram", "multitaper", "hybrid",
                             "welch"):
            raise ParameterError(f"unknown method kind {self.kind!r}")
        if self.taper not in ("rect", "tukey", "slepian"):
            raise ParameterError(f"unknown taper {self.taper!r}")
        grid = tuple(float(w) for w in self.W_grid)
        if not grid or list(grid) != sorted(grid):
            raise ParameterError("W_grid must be nonempty and sorted")
        object.__setattr__(self, "W_grid", grid)

    def scheme(self):
        return WeightingScheme(self.weighting, alpha_K=self.alpha_K)


def _single_taper(method, L):
    if method.taper == "rect":
        return np.ones(L)
    if method.taper == "tukey":
        return build_tukey_taper(L, min(method.alphaN, L / 2.0)).values
    return build_slepian_family(L, method.slepian_nw, 1).tapers[0]


def _multitaper_powers(segs, fam, nfft):
    coeffs = _transform(segs[:, None, :] * fam.tapers[None, :, :], nfft)
    return coeffs.real ** 2 + coeffs.imag ** 2


def segment_estimates(method, W, segs, nfft):
    """Estimates for each row of ``segs``; returns shape ``(S, nfft//2+1)``."""
    segs = np.atleast_2d(np.asarray(segs, dtype=float))
    L = segs.shape[1]
    if method.kind == "smoothed_periodogram":
        S = _tapered_power(segs, _single_taper(method, L), nfft)
        h = halfwidth_bins(W, nfft)
        return _boxcar(S, h)[0] if h > 0 else S
    if method.kind == "welch":
        Kw = int(method.welch_segments)
        Ls = L // Kw
        if Ls < 8:
            raise ParameterError("Welch sub-segments shorter than 8 samples")
        sub = segs[:, :Kw * Ls].reshape(segs.shape[0], Kw, Ls)
        taper = method.taper
        if taper == "tukey":
            nu = build_tukey_taper(Ls, method.alphaN * Ls / L).values
        else:
            nu = _single_taper(method, Ls)
        return _tapered_power(sub, nu, nfft).mean(axis=1)
    if method.kind == "multitaper":
        nw = W * L
        fam = build_slepian_family(L, nw, method.K)
        kernel = 0.0
    else:
        nw = method.time_bandwidth if method.time_bandwidth else 2.46
        fam = build_slepian_family(L, nw, method.K or 4)
        kernel = W
    powers = _multitaper_powers(segs, fam, nfft)
    sigma2 = np.mean(segs ** 2, axis=1)
    _, _, S, _, _ = _weigh(powers, fam.eigenvalues, sigma2, method.scheme())
    h = halfwidth_bins(kernel, nfft)
    return _boxcar(S, h)[0] if h > 0 else S


@dataclass
class MethodRecord:
    """Outcome of one method in a comparison."""

    name: str
    spec: dict
    W_grid: list
    scores: list = field(default_factory=list)
    band_curve: list = field(default_factory=list)
    optimal_W: float | None = None
    at_endpoint: bool = False
    band_scores: list = field(default_factory=list)
    combined: float | None = None
    bias: np.ndarray | None = None
    variance: np.ndarray | None = None
    rmse: np.ndarray | None = None
    error: str | None = None


@dataclass
class ComparisonReport:
    grid: FrequencyGrid
    reference: SpectralEstimate
    bands: list
    bias_plan: SegmentPlan
    variance_plan: SegmentPlan
    records: list
    config: dict

    def record(self, name):
        for r in self.records:
            if r.name == name:
                return r
        raise KeyError(name)

    def score(self, name):
        return self.record(name).combined

    def ratio_curve(self, numerator, denominator):
        """Per-frequency RMSE ratio of two methods at their optima."""
        return self.record(numerator).rmse / self.record(denominator).rmse


def _evaluate(method, W, segs_all, idx_bias, idx_var, ref, nfft, bands, grid):
    E = segment_estimates(method, W, segs_all, nfft)
    bias = empirical_bias(E[idx_bias], ref)
    var = empirical_variance(E[idx_var])
    rmse = relative_rmse(bias, var, ref)
    per_band, combined = band_scores(rmse, grid, bands)
    return bias, var, rmse, per_band, combined


def optimize_bandwidth(method, data, plan, reference, W_grid=None, bands=None,
                       variance_plan=None, nfft=None):
    """Combined band score for each bandwidth in ``W_grid``; the minimizer
    (smallest W on ties) is returned with the full curve.

    Returns
    -------
    dict with keys ``W``, ``scores``, ``optimal_W``, ``index``, ``at_endpoint``
    and the bias/variance/rmse arrays at the optimum.
    """
    W_grid = tuple(method.W_grid if W_grid is None else W_grid)
    if not W_grid:
        raise ParameterError("W_grid is empty")
    if list(W_grid) != sorted(W_grid):
        raise ParameterError("W_grid must be sorted")
    variance_plan = variance_plan or plan
    grid = reference.grid
    nfft = nfft or grid.nfft
    bands = bands or [(0.0, 0.5)]
    starts = np.union1d(plan.starts, variance_plan.starts)
    segs = SegmentPlan(plan.N, plan.segment_len, 0.0, starts).segments(data)
    idx_b = np.searchsorted(starts, plan.starts)
    idx_v = np.searchsorted(starts, variance_plan.starts)
    ref = reference.values
    results = [_evaluate(method, W, segs, idx_b, idx_v, ref, nfft, bands, grid)
               for W in W_grid]
    scores = [r[4] for r in results]
    if not all(math.isfinite(s) for s in scores):
        raise ParameterError(f"non-finite score for method {method.name}")
    i = int(np.argmin(scores))
    bias, var, rmse, per_band, combined = results[i]
    return {"W": list(W_grid), "scores": scores,
            "band_curve": [r[3] for r in results], "optimal_W": W_grid[i],
            "index": i, "at_endpoint": len(W_grid) > 1 and i in (0, len(W_grid) - 1),
            "bias": bias, "variance": var, "rmse": rmse,
            "band_scores": per_band, "combined": combined}


def _khz(values, fs):
    return tuple(v * 1e3 / fs for v in values)


def default_methods(segment_len=300, sample_rate_hz=5e6):
    """The comparison set used for 300-point segments.

    Bandwidth grids are spelled in kHz at the given sample rate; multitaper
    grids step ``NW`` by 1/2 so that ``K = 2 NW`` exactly.
    """
    fs = sample_rate_hz
    L = segment_len
    kernel = _khz(range(20, 181, 10), fs)
    hybrid_kernel = _khz(range(10, 151, 10), fs)
    nw_grid = tuple(nw / L for nw in np.arange(1.5, 8.01, 0.5))
    methods = [
        MethodSpec("smoothed_periodogram_rect", "smoothed_periodogram",
                   kernel, taper="rect"),
        MethodSpec("smoothed_periodogram_tukey", "smoothed_periodogram",
                   kernel, taper="tukey", alphaN=33.0),
        MethodSpec("smoothed_periodogram_slepian", "smoothed_periodogram",
                   kernel, taper="slepian", slepian_nw=1.0),
    ]
    for kind in ("uniform", "sequential_deselection", "minimal_loss",
                 "wiener"):
        methods.append(MethodSpec(f"multitaper_{kind}", "multitaper",
                                  nw_grid, weighting=kind))
    methods.append(MethodSpec("hybrid_k4", "hybrid", hybrid_kernel, K=4,
                              time_bandwidth=2.46,
                              weighting="sequential_deselection"))
    # matched-dof pairs: Welch with k sub-segments against k Slepian tapers
    for k in WELCH_PAIRS:
        for taper in ("rect", "tukey"):
            methods.append(MethodSpec(f"welch_{taper}_k{k}", "welch", (0.0,),
                                      taper=taper, alphaN=33.0,
                                      welch_segments=k))
        kinds = ("uniform", "sequential_deselection") if k >= 3 else \
            ("uniform",)
        for kind in kinds:
            methods.append(MethodSpec(f"multitaper_{kind}_k{k}", "multitaper",
                                      (k / 2.0 / L,), weighting=kind, K=k))
    return methods


@dataclass
class ComparisonConfig:
    """Everything that determines a comparison run."""

    model: SpectrumModel = field(default_factory=lambda: SpectrumModel(
        "tftr_like"))
    n_total: int = 45000
    segment_len: int = 300
    seed: int = 1
    sample_rate_hz: float = 5e6
    reference_nw: float = 126.0
    reference_weighting: str = "sequential_deselection"
    bias_overlap: float = 0.5
    variance_overlap: float = 0.0
    grid_factor: int = 4
    bands_hz: tuple = DEFAULT_BANDS_HZ
    methods: list = field(default_factory=list)

    def __post_init__(self):
        if not self.methods:
            self.methods = default_methods(self.segment_len,
                                           self.sample_rate_hz)

    def to_dict(self):
        return {
            "model": self.model.to_dict(),
            "n_total": self.n_total,
            "segment_len": self.segment_len,
            "seed": self.seed,
            "sample_rate_hz": self.sample_rate_hz,
            "reference_nw": self.reference_nw,
            "reference_weighting": self.reference_weighting,
            "bias_overlap": self.bias_overlap,
            "variance_overlap": self.variance_overlap,
            "grid_factor": self.grid_factor,
            "bands_hz": [list(b) for b in self.bands_hz],
            "methods": [asdict(m) for m in self.methods],
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "model" in d:
            m = d["model"]
            d["model"] = SpectrumModel(m["kind"], m.get("params", {}))
        if "bands_hz" in d:
            d["bands_hz"] = tuple(tuple(b) for b in d["bands_hz"])
        if "methods" in d:
            d["methods"] = [MethodSpec(**{**m, "W_grid": tuple(m["W_grid"])})
                            for m in d["methods"]]
        return cls(**d)


def compare_methods(config, data=None):
    """Run every configured method and collect a :class:`ComparisonReport`.

    ``data`` overrides the synthetic record. A method that raises is kept
    in the report with its ``error`` set.
    """
    if data is None:
        data = generate(config.model, config.n_total, config.seed,
                        dt=1.0 / config.sample_rate_hz)
    L = config.segment_len
    nfft = config.grid_factor * L
    grid = FrequencyGrid(nfft, data.dt)
    reference = converged_reference(data, config.reference_nw / data.N,
                                    config.reference_weighting, grid)
    bands = bands_to_normalized(config.bands_hz, config.sample_rate_hz)
    bias_plan = plan_segments(data.N, L, config.bias_overlap)
    var_plan = plan_segments(data.N, L, config.variance_overlap)
    records = []
    for m in config.methods:
        rec = MethodRecord(m.name, asdict(m), list(m.W_grid))
        try:
            out = optimize_bandwidth(m, data, bias_plan, reference, bands=bands,
                                     variance_plan=var_plan, nfft=nfft)
        except (ParameterError, ArithmeticError) as exc:
            rec.error = str(exc)
        else:
            rec.scores = out["scores"]
            rec.band_curve = out["band_curve"]
            rec.optimal_W = out["optimal_W"]
            rec.at_endpoint = out["at_endpoint"]
            rec.band_scores = out["band_scores"]
            rec.combined = out["combined"]
            rec.bias, rec.variance, rec.rmse = (out["bias"], out["variance"],
                                                out["rmse"])
        records.append(rec)
    cfg = config.to_dict()
    cfg["rng"] = rng_info()
    cfg["mtspec_version"] = __version__
    return ComparisonReport(grid, reference, bands, bias_plan, var_plan,
                            records, cfg)


def _fmt(v):
    if v is None:
        return ""
    return format(float(v), ".17g")


def write_report(report, outdir, manifest=True):
    """Write per-method CSVs, a summary CSV, the reference and (unless
    ``manifest`` is False) ``manifest.json``. Returns the data file paths."""
    os.makedirs(outdir, exist_ok=True)
    f_hz = report.grid.frequencies_hz
    fs = 1.0 / report.grid.dt
    paths = []
    for rec in report.records:
        if rec.rmse is None:
            continue
        p = os.path.join(outdir, f"method_{rec.name}.csv")
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["frequency_hz", "bias", "variance", "rmse"])
            for row in zip(f_hz, rec.bias, rec.variance, rec.rmse):
                w.writerow([_fmt(v) for v in row])
        paths.append(p)
    p = os.path.join(outdir, "summary.csv")
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        nb = len(report.bands)
        w.writerow(["method", "W_hz", "combined"]
                   + [f"band{i}" for i in range(nb)]
                   + ["optimal_W_hz", "at_endpoint", "error"])
        for rec in report.records:
            opt = None if rec.optimal_W is None else rec.optimal_W * fs
            for i, W in enumerate(rec.W_grid):
                if rec.error:
                    w.writerow([rec.name, _fmt(W * fs), "", *([""] * nb),
                                "", "", rec.error])
                    continue
                w.writerow([rec.name, _fmt(W * fs), _fmt(rec.scores[i]),
                            *[_fmt(b) for b in rec.band_curve[i]], _fmt(opt),
                            int(rec.at_endpoint), ""])
    paths.append(p)
    p = os.path.join(outdir, "reference.csv")
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frequency_hz", "power"])
        for row in zip(f_hz, report.reference.values):
            w.writerow([_fmt(v) for v in row])
    paths.append(p)
    if manifest:
        payload = {"command": "compare", "config": report.config,
                   "bias_segments": report.bias_plan.count,
                   "variance_segments": report.variance_plan.count,
                   "outputs": sorted(os.path.basename(q) for q in paths)}
        with open(os.path.join(outdir, "manifest.json"), "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return paths
