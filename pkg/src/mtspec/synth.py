"""Gaussian time series with analytically known spectra.

Model kinds
-----------
``white``       flat spectrum ``sigma2``.
``ar``          ``x_t = sum_j a_j x_{t-j} + e_t``, ``Var e = sigma2``;
                spectrum ``sigma2 / |1 - sum_j a_j exp(-2 pi i f j)|^2``.
``tabulated``   log-linear interpolation of ``(freqs, values)`` on [0, 1/2].
``tftr_like``   exponentially decaying background over four decades plus a
                flat floor, a narrow peak at ``f = 0.2`` and a broad
                secondary peak at ``f = 0.11`` (cycles/sample).

All spectra are one-sided densities of a real process: the variance of the
process is ``2 * integral_0^{1/2} S(f) df``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .estimators import FrequencyGrid, SpectralEstimate, TimeSeries
from .exceptions import ParameterError

__all__ = [
    "SpectrumModel",
    "TFTR_LIKE_DEFAULTS",
    "white",
    "ar",
    "tabulated",
    "tftr_like",
    "evaluate_spectrum",
    "model_values",
    "generate",
    "rng_info",
    "make_rng",
]

TFTR_LIKE_DEFAULTS = {
    "background": 0.3,
    "decay_decades": 4.0,
    "decay_end": 0.45,
    "floor": 3e-5,
    "peak_f": 0.2,
    "peak_width": 0.005,
    "peak_height": 1.0,
    "second_f": 0.11,
    "second_width": 0.02,
    "second_height": 0.1,
}

RNG_ALGORITHM = "numpy.random.Philox"


@dataclass(frozen=True)
class SpectrumModel:
    """A spectral density model; ``params`` depend on ``kind``."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("white", "ar", "tabulated", "tftr_like"):
            raise ParameterError(f"unknown model kind {self.kind!r}")
        params = dict(self.params)
        if self.kind == "white":
            params.setdefault("sigma2", 1.0)
            if not params["sigma2"] > 0:
                raise ParameterError("sigma2 must be positive")
        elif self.kind == "ar":
            coeffs = tuple(float(a) for a in
                           np.atleast_1d(params.get("coeffs", ())))
            if not coeffs:
                raise ParameterError("AR model needs coefficients")
            params["coeffs"] = coeffs
            params.setdefault("sigma2", 1.0)
            roots = np.roots(np.r_[1.0, -np.asarray(coeffs)])
            if np.any(np.abs(roots) >= 1.0):
                raise ParameterError("AR coefficients are not stationary")
        elif self.kind == "tabulated":
            f = np.asarray(params.get("freqs", ()), dtype=float)
            v = np.asarray(params.get("values", ()), dtype=float)
            if f.size < 2 or f.shape != v.shape:
                raise ParameterError("tabulated model needs matching arrays")
            if np.any(np.diff(f) <= 0) or f[0] > 0 or f[-1] < 0.5:
                raise ParameterError("tabulated freqs must increase over "
                                     "[0, 1/2]")
            if np.any(v <= 0):
                raise ParameterError("tabulated values must be positive")
            params["freqs"], params["values"] = tuple(f), tuple(v)
        else:
            unknown = set(params) - set(TFTR_LIKE_DEFAULTS)
            if unknown:
                raise ParameterError(f"unknown tftr_like params {unknown}")
            params = {**TFTR_LIKE_DEFAULTS, **params}
            if params["floor"] <= 0:
                raise ParameterError("floor must be positive")
        object.__setattr__(self, "params", params)

    def to_dict(self):
        return {"kind": self.kind,
                "params": {k: list(v) if isinstance(v, tuple) else v
                           for k, v in self.params.items()}}


def white(sigma2=1.0):
    return SpectrumModel("white", {"sigma2": sigma2})


def ar(coeffs, sigma2=1.0):
    return SpectrumModel("ar", {"coeffs": coeffs, "sigma2": sigma2})


def tabulated(freqs, values):
    return SpectrumModel("tabulated", {"freqs": freqs, "values": values})


def tftr_like(**overrides):
    return SpectrumModel("tftr_like", overrides)


def _gauss(f, center, width):
    # symmetric about zero so the density stays even
    return (np.exp(-0.5 * ((f - center) / width) ** 2)
            + np.exp(-0.5 * ((f + center) / width) ** 2))


def model_values(model, f):
    """Evaluate the model density at frequencies ``f`` (cycles/sample)."""
    f = np.abs(np.asarray(f, dtype=float))
    p = model.params
    if model.kind == "white":
        return np.full(f.shape, float(p["sigma2"]))
    if model.kind == "ar":
        a = np.asarray(p["coeffs"])
        j = np.arange(1, a.size + 1)
        h = 1.0 - np.exp(-2j * np.pi * f[..., None] * j) @ a
        return p["sigma2"] / np.abs(h) ** 2
    if model.kind == "tabulated":
        return np.exp(np.interp(f, p["freqs"], np.log(p["values"])))
    bg = p["background"] * 10.0 ** (-p["decay_decades"] * f / p["decay_end"])
    return (bg + p["floor"]
            + p["peak_height"] * _gauss(f, p["peak_f"], p["peak_width"])
            + p["second_height"] * _gauss(f, p["second_f"], p["second_width"]))


def evaluate_spectrum(model, grid):
    """Exact model spectrum on ``grid`` (``dof`` is infinite)."""
    if not isinstance(grid, FrequencyGrid):
        grid = FrequencyGrid(int(grid))
    values = model_values(model, grid.frequencies)
    return SpectralEstimate(grid, values, np.full(grid.size, np.inf), 0,
                            {"estimator": "model", **model.to_dict()})


def make_rng(seed):
    """Counter-based generator used for every synthetic draw."""
    return np.random.Generator(np.random.Philox(int(seed)))


def rng_info():
    return {"algorithm": RNG_ALGORITHM, "numpy_version": np.__version__}


def _ar_series(model, N, rng):
    a = np.asarray(model.params["coeffs"])
    p = a.size
    burn = 10 * p + 100
    e = rng.standard_normal(N + burn) * np.sqrt(model.params["sigma2"])
    x = lfilter([1.0], np.r_[1.0, -a], e)
    return x[burn:]


def _colored_series(model, N, rng):
    # circulant embedding on twice the record length, first N samples kept
    L = 2 * N
    f = np.arange(L // 2 + 1) / L
    S = model_values(model, f)
    z = rng.standard_normal((2, f.size))
    X = np.sqrt(L * S / 2.0) * (z[0] + 1j * z[1])
    X[0] = np.sqrt(L * S[0]) * z[0, 0]
    X[-1] = np.sqrt(L * S[-1]) * z[0, -1]
    return np.fft.irfft(X, L)[:N]


def generate(model, N, seed, dt=1.0):
    """Draw a Gaussian realization of ``model`` of length ``N``.

    Deterministic in ``(model, N, seed)``.
    """
    N = int(N)
    if N < 8:
        raise ParameterError(f"N={N} must be >= 8")
    rng = make_rng(seed)
    if model.kind == "ar":
        x = _ar_series(model, N, rng)
    elif model.kind == "white":
        x = rng.standard_normal(N) * np.sqrt(model.params["sigma2"])
    else:
        x = _colored_series(model, N, rng)
    return TimeSeries(x, dt)
