"""Smoothed-periodogram, multitaper and hybrid spectral estimation with
adaptive weightings, jackknife confidence bands and an empirical RMSE
comparison harness."""

__version__ = "0.1.0"

from .exceptions import NumericError, ParameterError
from .tapers import (SlepianFamily, SpectralWindow, Taper,
                     build_slepian_family, build_tukey_taper,
                     concentration_eigenvalue, rectangular_taper,
                     spectral_window)
from .estimators import (EigenSpectra, FrequencyGrid, SpectralEstimate,
                         TimeSeries, boxcar_smooth, combine, eigencoefficients,
                         hybrid_estimate, periodogram, tapered_periodogram,
                         uniform_multitaper, welch_estimate)
from .adaptive import (WeightField, WeightingScheme, apply_weighting,
                       minimal_loss_weights, sequential_deselection,
                       wiener_weights)
from .jackknife import (chi2_log_moments, confidence_band,
                        jackknife_log_stats, jackknife_variance,
                        log_estimates)
from .synth import SpectrumModel, evaluate_spectrum, generate

__all__ = [name for name in dir() if not name.startswith("_")]
