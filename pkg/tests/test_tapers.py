import time

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import eigh

from mtspec import ParameterError
from mtspec.tapers import (Taper, build_slepian_family, build_tukey_taper,
                           concentration_eigenvalue, concentration_matrix,
                           default_taper_count, max_taper_count,
                           rectangular_taper, spectral_window)

# N = 300, W = 91 kHz at 5 MHz sampling, i.e. NW = 5.46
TABLE3 = [
    (0.99999999999996, 3.62e-14),
    (0.999999999995, 4.65e-12),
    (0.9999999997, 2.90e-10),
    (0.999999989, 1.14e-8),
    (0.9999997, 3.18e-7),
    (0.999993, 6.60e-6),
    (0.99989, 1.05e-4),
    (0.9987, 1.31e-3),
    (0.9875, 1.25e-2),
    (0.9157, 8.43e-2),
]


@pytest.fixture(scope="module")
def fam300():
    return build_slepian_family(300, 5.46, 10)


def test_table3_eigenvalues(fam300):
    lam = fam300.eigenvalues
    for k, (ref, one_minus) in enumerate(TABLE3):
        assert abs(lam[k] - ref) < 1e-4
        ratio = (1.0 - lam[k]) / one_minus
        assert 0.5 <= ratio <= 2.0, (k, 1.0 - lam[k], one_minus)


def test_table3_runtime():
    t0 = time.perf_counter()
    build_slepian_family(300, 5.46, 10)
    assert time.perf_counter() - t0 < 1.0


@pytest.mark.parametrize("N,nw", [(16, 2.0), (32, 4.0), (64, 6.0)])
def test_dense_oracle(N, nw):
    K = max_taper_count(nw)
    fam = build_slepian_family(N, nw, K)
    A = concentration_matrix(N, nw / N)
    M = fam.tapers @ A @ fam.tapers.T
    off = M - np.diag(np.diag(M))
    assert np.max(np.abs(off)) < 1e-8
    dense = eigh(A, eigvals_only=True)[::-1][:K]
    np.testing.assert_allclose(fam.eigenvalues, dense, atol=1e-8)


def test_orthonormal(fam300):
    G = fam300.tapers @ fam300.tapers.T
    np.testing.assert_allclose(G, np.eye(fam300.K), atol=1e-12)


def test_sign_changes_equal_order(fam300):
    for k, v in enumerate(fam300.tapers):
        assert np.count_nonzero(np.diff(np.sign(v)) != 0) == k


def test_sign_convention(fam300):
    for k, v in enumerate(fam300.tapers):
        if k % 2 == 0:
            assert v.sum() > 0
            np.testing.assert_allclose(v, v[::-1], atol=1e-10)
        else:
            assert v[:150].sum() > 0
            np.testing.assert_allclose(v, -v[::-1], atol=1e-10)


def test_eigenvalues_decrease(fam300):
    assert np.all(np.diff(fam300.eigenvalues) < 0)


def test_about_2nw_eigenvalues_near_one():
    fam = build_slepian_family(256, 4.0, max_taper_count(4.0))
    assert np.sum(fam.eigenvalues > 0.9) in (7, 8, 9)


def test_summed_windows_are_flat():
    # the K windows of NW=2 together tile the band [-W, W]
    fam = build_slepian_family(100, 2.0, 4)
    total = sum(np.abs(spectral_window(fam.taper(k), 4000).values) ** 2
                for k in range(4))
    f = np.fft.fftshift(np.fft.fftfreq(4000))
    level = total / 100.0
    # orthonormal tapers: the sum can never exceed N (Bessel)
    assert level.max() <= 1.0 + 1e-12
    inner = np.abs(f) <= 0.015
    assert level[inner].min() > 0.92


def test_concentration_eigenvalue_matches_family(fam300):
    lam = concentration_eigenvalue(fam300.taper(9), fam300.bandwidth)
    assert lam == pytest.approx(fam300.eigenvalues[9], abs=1e-14)


def test_concentration_of_boxcar_is_fejer_mass():
    W = 0.05
    box = rectangular_taper(64, unit_energy=True)
    lam = concentration_eigenvalue(box, W)
    f = np.linspace(-W, W, 200001)
    fejer = np.sin(64 * np.pi * f) ** 2 / np.sin(np.pi * np.where(f == 0,
                                                                  1e-30, f)) ** 2
    fejer[f == 0] = 64 ** 2
    assert lam == pytest.approx(np.trapezoid(fejer, f) / 64, rel=1e-6)


def test_default_and_max_count():
    assert default_taper_count(5.46) == 11
    assert default_taper_count(126) == 252
    assert max_taper_count(5.46) == 13


@pytest.mark.parametrize("N,nw,K", [(4, 1, 1), (64, 0, 1), (64, 32, 1),
                                    (64, 2, 8), (64, 2, 0)])
def test_slepian_rejects(N, nw, K):
    with pytest.raises(ParameterError):
        build_slepian_family(N, nw, K)


def test_tukey_taper_formula():
    nu = build_tukey_taper(300, 33).values
    j = np.arange(1, 301)
    # independent evaluation of the three branches, j = 1 .. N
    ref = np.where(j < 33, 0.5 * (1 - np.cos(np.pi * (j - 0.5) / 33)),
                   np.where(j <= 267, 1.0,
                            0.5 * (1 - np.cos(np.pi * (300 - j + 0.5) / 33))))
    np.testing.assert_allclose(nu, ref, rtol=0, atol=1e-15)
    assert nu[99] == 1.0
    assert nu[0] == pytest.approx(0.5 * (1 - np.cos(np.pi * 0.5 / 33)),
                                  abs=1e-16)
    assert np.all(np.diff(nu[:33]) > 0)
    assert np.all(np.diff(nu[267:]) < 0)


def test_tukey_zero_length_is_boxcar():
    np.testing.assert_array_equal(build_tukey_taper(50, 0).values,
                                  np.ones(50))


def test_tukey_rejects_long_taper():
    with pytest.raises(ParameterError):
        build_tukey_taper(50, 26)


def test_taper_unit_energy_check():
    with pytest.raises(ParameterError):
        Taper(np.ones(4), "unit-energy")
    t = Taper(np.ones(4)).normalized()
    assert t.energy == pytest.approx(1.0)


def test_concentration_requires_unit_energy():
    with pytest.raises(ParameterError):
        concentration_eigenvalue(rectangular_taper(16), 0.1)
    with pytest.raises(ParameterError):
        concentration_eigenvalue(rectangular_taper(16, True), 0.6)


def test_taper_values_are_read_only(fam300):
    with pytest.raises(ValueError):
        fam300.tapers[0, 0] = 1.0


def test_spectral_window_of_symmetric_taper_is_real():
    fam = build_slepian_family(64, 3.0, 2)
    win = spectral_window(fam.taper(0), 256)
    assert np.max(np.abs(win.values.imag)) < 1e-10
    assert win.frequencies[128] == 0.0
    assert win.values.real[128] == pytest.approx(fam.tapers[0].sum())


def test_large_n_uses_toeplitz_path():
    fam = build_slepian_family(3000, 4.0, 8)
    lam = concentration_eigenvalue(fam.taper(7), fam.bandwidth)
    assert lam == pytest.approx(fam.eigenvalues[7], abs=1e-12)
    assert 0.5 < fam.eigenvalues[7] < fam.eigenvalues[6] < 1.0


@given(N=st.integers(16, 160), nw=st.floats(1.0, 6.0))
def test_family_properties(N, nw):
    if nw >= N / 4:
        return
    fam = build_slepian_family(N, nw)
    lam = fam.eigenvalues
    assert np.all((lam > 0) & (lam <= 1))
    assert np.all(np.diff(lam) <= 1e-12)
    np.testing.assert_allclose(np.sum(fam.tapers ** 2, axis=1), 1.0,
                               atol=1e-12)
    # reversal parity: even tapers symmetric, odd antisymmetric
    parity = np.where(np.arange(fam.K) % 2 == 0, 1.0, -1.0)[:, None]
    np.testing.assert_allclose(fam.tapers[:, ::-1], parity * fam.tapers,
                               atol=1e-8)


@given(W=st.floats(0.01, 0.49))
def test_concentration_in_unit_interval(W):
    t = build_tukey_taper(40, 5).normalized()
    lam = concentration_eigenvalue(t, W)
    assert 0.0 < lam <= 1.0
