import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from mtspec import ParameterError
from mtspec.estimators import TimeSeries, eigencoefficients, uniform_multitaper
from mtspec.jackknife import (adaptive_jackknife_variance, bias_corrected_log,
                              chi2_log_moments, confidence_band,
                              gaussian_band, jackknife_log_stats,
                              jackknife_variance, log_estimates, table4)
from mtspec.synth import make_rng
from mtspec.tapers import build_slepian_family

# K, bias, psi'(K), E jack, asymptotic, mean-of-logs variance, ratio
TABLE4 = [
    (3, 0.17582, 0.39493, 0.47342, 0.00000, 0.54831, 1.15818),
    (4, 0.13017, 0.28382, 0.32610, 0.28125, 0.41123, 1.26105),
    (5, 0.10332, 0.22132, 0.24732, 0.23703, 0.32898, 1.33019),
    (6, 0.08564, 0.18132, 0.19879, 0.19531, 0.27415, 1.37905),
    (7, 0.07312, 0.15354, 0.16605, 0.16457, 0.23499, 1.41515),
    (8, 0.06380, 0.13313, 0.14251, 0.14178, 0.20561, 1.44279),
    (9, 0.05658, 0.11751, 0.12479, 0.12439, 0.18277, 1.46459),
    (10, 0.05083, 0.10516, 0.11097, 0.11074, 0.16449, 1.48220),
    (11, 0.04614, 0.09516, 0.09991, 0.09976, 0.14953, 1.49671),
    (12, 0.04224, 0.08690, 0.09084, 0.09075, 0.13707, 1.50887),
    (13, 0.03895, 0.07995, 0.08329, 0.08322, 0.12653, 1.51919),
    (14, 0.03613, 0.07404, 0.07689, 0.07684, 0.11749, 1.52807),
    (15, 0.03370, 0.06893, 0.07140, 0.07137, 0.10966, 1.53578),
    (16, 0.03157, 0.06449, 0.06664, 0.06662, 0.10280, 1.54254),
    (17, 0.02970, 0.06058, 0.06248, 0.06246, 0.09676, 1.54852),
    (18, 0.02803, 0.05712, 0.05881, 0.05879, 0.09138, 1.55384),
    (19, 0.02654, 0.05404, 0.05554, 0.05553, 0.08657, 1.55860),
    (20, 0.02520, 0.05127, 0.05262, 0.05261, 0.08224, 1.56290),
]


@pytest.mark.parametrize("row", TABLE4, ids=lambda r: f"K{r[0]}")
def test_table4_row(row):
    got = chi2_log_moments(row[0]).as_row()
    assert got[0] == row[0]
    np.testing.assert_allclose(got[1:], row[1:], rtol=0, atol=1e-5)


def test_table4_shape_and_monotonicity():
    rows = np.array(table4())
    assert rows.shape == (18, 7)
    for col in (1, 2, 3, 5):
        assert np.all(np.diff(rows[:, col]) < 0)
    assert np.all(np.diff(rows[:, 6]) > 0)
    # the asymptotic form approaches the exact expectation
    assert abs(rows[-1, 4] / rows[-1, 3] - 1) < 0.005


def test_bias_sign():
    m = chi2_log_moments(3)
    assert m.bias_signed == pytest.approx(-0.17583, abs=1e-5)
    assert m.bias == -m.bias_signed


def test_small_k_rejected():
    with pytest.raises(ParameterError):
        chi2_log_moments(2)
    with pytest.raises(ParameterError):
        jackknife_variance([1.0, 2.0])


def test_log_estimates_arithmetic():
    s = log_estimates(np.full(4, 3.0))
    assert s.log_mean[0] == pytest.approx(math.log(3.0))
    assert s.mean_log[0] == pytest.approx(math.log(3.0))
    s = log_estimates([1.0, math.e ** 2])
    assert s.log_mean[0] == pytest.approx(math.log((1 + math.e ** 2) / 2))
    assert s.mean_log[0] == pytest.approx(1.0)


def test_zero_power_flagged():
    p = np.array([[1.0, 2.0], [0.0, 2.0], [1.0, 3.0]])
    s = jackknife_log_stats(p)
    assert list(s.valid) == [False, True]
    assert np.isnan(s.log_mean[0]) and np.isnan(s.jack_var[0])
    assert np.isfinite(s.jack_var[1])
    with pytest.raises(ParameterError):
        jackknife_variance(p)


def test_jackknife_hand_oracle():
    # delete-one means (2.5, 2.5, 1)
    assert jackknife_variance([1.0, 1.0, 4.0]) == pytest.approx(
        0.3731505356970999, rel=1e-13)
    assert jackknife_variance(np.full(6, 2.0)) == 0.0


@given(arrays(float, st.integers(3, 12), elements=st.floats(1e-6, 1e6)),
       st.floats(1e-5, 1e5))
def test_jackknife_scale_invariant(p, a):
    assert jackknife_variance(a * p) == pytest.approx(
        jackknife_variance(p), rel=1e-7, abs=1e-14)


@given(arrays(float, (5, 3), elements=st.floats(1e-3, 1e3)))
def test_jackknife_nonnegative(p):
    assert np.all(jackknife_variance(p) >= 0)


def test_monte_carlo_biases_k10():
    p = make_rng(1).exponential(size=(10, 20000))
    s = log_estimates(p)
    assert np.mean(s.mean_log) == pytest.approx(-0.5772, abs=0.01)
    assert np.mean(s.log_mean) == pytest.approx(-0.05083, abs=0.005)


def test_monte_carlo_jackknife_expectation_k8():
    p = make_rng(2).exponential(size=(8, 10000))
    mean = np.mean(jackknife_variance(p))
    assert mean == pytest.approx(0.14251, rel=0.05)


@pytest.mark.parametrize("K", [4, 8, 12, 20])
def test_jackknife_overestimates(K):
    p = make_rng(K).exponential(size=(K, 20000))
    assert np.mean(jackknife_variance(p)) >= chi2_log_moments(K).variance


def _stats_and_estimate(seed=0, N=256, K=10):
    fam = build_slepian_family(N, K / 2, K)
    es = eigencoefficients(TimeSeries(make_rng(seed).standard_normal(N)),
                           fam)
    return es, jackknife_log_stats(es), uniform_multitaper(es)


def test_band_degenerate_cases():
    es, stats, est = _stats_and_estimate()
    zero = type(stats)(stats.grid, stats.log_mean, stats.mean_log,
                       np.zeros_like(stats.jack_var), stats.K, stats.valid)
    centre = np.exp(bias_corrected_log(stats))
    lo, hi = confidence_band(est, zero).band
    np.testing.assert_allclose(lo, centre)
    np.testing.assert_allclose(hi, centre)
    lo, hi = confidence_band(est, stats, n_sigma=0).band
    np.testing.assert_allclose(lo, centre)
    assert np.all(centre > est.values)


def test_band_grid_mismatch():
    es, stats, est = _stats_and_estimate()
    _, other, _ = _stats_and_estimate(N=128)
    with pytest.raises(ParameterError):
        confidence_band(est, other)


def test_gaussian_band_width():
    _, stats, _ = _stats_and_estimate()
    lo, hi = gaussian_band(stats, 2.0)
    np.testing.assert_allclose(np.log(hi / lo),
                               4 * math.sqrt(chi2_log_moments(10).variance))


def test_adaptive_jackknife_uniform_matches_plain():
    es, stats, _ = _stats_and_estimate(K=6)
    jv = adaptive_jackknife_variance(es, "uniform")
    np.testing.assert_allclose(jv, stats.jack_var, rtol=1e-10)
    jv = adaptive_jackknife_variance(es, "sequential_deselection")
    assert np.all(jv >= 0) and jv.shape == stats.jack_var.shape
