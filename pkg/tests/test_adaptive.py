import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from mtspec import ParameterError
from mtspec.adaptive import (WeightingScheme, apply_weighting,
                             minimal_loss_coefficients, minimal_loss_weights,
                             sequential_deselection, wiener_coefficients,
                             wiener_weights, _deselect)
from mtspec.estimators import EigenSpectra, FrequencyGrid, eigencoefficients
from mtspec.synth import generate, make_rng, tftr_like
from mtspec.tapers import build_slepian_family

TABLE3_LAMBDA = np.array([0.99999999999996, 0.999999999995, 0.9999999997,
                          0.999999989, 0.9999997, 0.999993, 0.99989, 0.9987,
                          0.9875, 0.9157])


def fake_spectra(powers, eigenvalues=None, sigma2=1.0):
    """Eigenspectra with given powers; a single column is duplicated so
    that the grid holds at least two frequencies."""
    powers = np.asarray(powers, dtype=float)
    if powers.ndim == 1:
        powers = powers[:, None]
    if powers.shape[1] == 1:
        powers = np.repeat(powers, 2, axis=1)
    K, M = powers.shape
    lam = np.ones(K) if eigenvalues is None else np.asarray(eigenvalues)
    grid = FrequencyGrid(2 * M - 2)
    return EigenSpectra(grid, np.sqrt(powers).astype(complex), powers, lam,
                        sigma2, 64, 2.0)


@pytest.fixture(scope="module")
def white_es():
    fam = build_slepian_family(256, 4.0, 8)
    x = make_rng(5).standard_normal(256)
    from mtspec.estimators import TimeSeries
    return eigencoefficients(TimeSeries(x), fam)


# ------------------------------------------------------------------ scheme

def test_scheme_aliases_and_validation():
    assert WeightingScheme("seqdesel").kind == "sequential_deselection"
    assert WeightingScheme("thomson").kind == "wiener"
    assert WeightingScheme("minloss").kind == "minimal_loss"
    for bad in (dict(kind="median"), dict(alpha_K=0.0),
                dict(max_delete_fraction=0.6), dict(sigma2=-1.0),
                dict(max_iter=0), dict(denominator="k_minus_one")):
        with pytest.raises(ParameterError):
            WeightingScheme(**bad)
    d = WeightingScheme().describe()
    assert d["alpha_K"] == 2.0 and d["weighting"] == "sequential_deselection"


# --------------------------------------------------------- deselection

def test_identical_powers_keep_everything():
    es = fake_spectra(np.full((10, 3), 2.0))
    field, est = sequential_deselection(es)
    assert field.selected.all()
    np.testing.assert_allclose(est.values, 10 / 11 * 2.0)
    np.testing.assert_allclose(field.weights, 1 / 11)


def test_outlier_is_deleted():
    p = np.r_[make_rng(3).exponential(size=9) + 0.5, 0.0]
    p[-1] = 100 * p[:-1].mean()
    field, est = sequential_deselection(fake_spectra(p))
    assert not field.selected[9, 0]
    assert field.selected[:9, 0].all()
    assert est.values[0] == pytest.approx(p[:9].sum() / 10)


def test_denominator_option():
    es = fake_spectra(np.full((5, 1), 3.0))
    _, est = apply_weighting(es, WeightingScheme(denominator="k"))
    assert est.values[0] == pytest.approx(3.0)


def test_deletion_cap():
    # a geometric ladder fails every test; at most floor(0.2 K) may go
    p = 10.0 ** np.arange(10)
    field, _ = sequential_deselection(fake_spectra(p))
    assert (~field.selected[:, 0]).sum() == 2
    assert not field.selected[8:, 0].any()


def test_two_passes_stop_the_scan():
    # taper 7 passes, 6 passes: scan stops before the outlier at 5
    p = np.array([1.0, 1.1, 0.9, 1.0, 1.05, 50.0, 1.0, 1.0])
    field, _ = sequential_deselection(fake_spectra(p))
    assert field.selected.all()


def test_pass_then_fail_continues():
    # taper 9 passes (the outlier inflates its reference), 8 fails, then
    # 7 and 6 pass
    p = np.array([1.0, 1.1, 0.9, 1.0, 1.05, 0.95, 1.0, 1.02, 50.0, 1.0])
    field, _ = sequential_deselection(fake_spectra(p))
    assert not field.selected[8, 0] and field.selected[:, 0].sum() == 9


def test_deselection_needs_three():
    with pytest.raises(ParameterError):
        sequential_deselection(fake_spectra([1.0, 2.0]))


def test_white_noise_deselection_rate():
    # Under white noise the eigenspectra are i.i.d. exponential, so the
    # chance that nothing is deleted is that of the exponential model,
    # about 0.80 at K = 8 and alpha_K = 2.
    from mtspec.estimators import _transform

    fam = build_slepian_family(512, 4.0, 8)
    x = make_rng(8).standard_normal((200, 512))
    c = _transform(x[:, None, :] * fam.tapers[None], 2048)
    p = c.real ** 2 + c.imag ** 2
    f = np.arange(1025) / 2048
    interior = (f > fam.bandwidth) & (f < 0.5 - fam.bandwidth)
    rate = _deselect(p, 2.0, 1)[..., interior].all(axis=-2).mean()
    model = _deselect(make_rng(9).exponential(size=(50000, 8, 1)), 2.0, 1)
    assert rate == pytest.approx(model.all(axis=-2).mean(), abs=0.02)
    assert 0.75 < rate < 0.85


@given(arrays(float, (8, 5), elements=st.floats(1e-3, 1e3)),
       st.floats(0.5, 3.0), st.floats(0.0, 2.0))
def test_higher_threshold_deletes_no_more(p, alpha, extra):
    lo = _deselect(p, alpha, 1)
    hi = _deselect(p, alpha + extra, 1)
    assert np.all(hi.sum(axis=0) >= lo.sum(axis=0))


# ---------------------------------------------------------- fixed points

def test_minimal_loss_flat_spectrum():
    c = minimal_loss_coefficients(TABLE3_LAMBDA, 2.0, 2.0)
    np.testing.assert_allclose(c, 1 / 11)
    c = minimal_loss_coefficients(np.ones(4), 1.0, 0.3)
    np.testing.assert_allclose(c, 1 / 5)


def test_minimal_loss_low_level_downweights_marginal_taper():
    c = minimal_loss_coefficients(TABLE3_LAMBDA, 1.0, 1e-4)
    ratio = c[0] / c[9]
    expected = (TABLE3_LAMBDA[9] + 1e4 * (1 - TABLE3_LAMBDA[9])) / \
        (TABLE3_LAMBDA[0] + 1e4 * (1 - TABLE3_LAMBDA[0]))
    assert ratio == pytest.approx(expected, rel=1e-12)
    assert ratio == pytest.approx(843.9, rel=1e-3)


def test_wiener_flat_and_low_level():
    c = wiener_coefficients(TABLE3_LAMBDA, 1.0, 1.0)
    np.testing.assert_allclose(c, 10 * TABLE3_LAMBDA / TABLE3_LAMBDA.sum())
    np.testing.assert_allclose(wiener_coefficients(np.ones(5), 1.0, 1.0), 1.0)
    cm = minimal_loss_coefficients(TABLE3_LAMBDA, 1.0, 1e-4)
    cw = wiener_coefficients(TABLE3_LAMBDA, 1.0, 1e-4)
    assert cw[0] / cw[9] > cm[0] / cm[9]


def test_fixed_points_on_white_level():
    es = fake_spectra(np.full((6, 4), 1.0), np.ones(6))
    _, est = wiener_weights(es)
    np.testing.assert_allclose(est.values, 1.0, rtol=1e-12)
    field, est = minimal_loss_weights(es)
    np.testing.assert_allclose(est.values, 6 / 7, rtol=1e-12)
    assert field.converged.all()


def test_fixed_point_matches_closed_form(white_es):
    field, est = minimal_loss_weights(white_es)
    c = minimal_loss_coefficients(white_es.eigenvalues, white_es.sigma2,
                                  est.values)
    np.testing.assert_allclose(field.weights, c, rtol=1e-4)
    field, est = wiener_weights(white_es)
    c = wiener_coefficients(white_es.eigenvalues, white_es.sigma2, est.values)
    np.testing.assert_allclose(field.weights * white_es.K, c, rtol=1e-4)


def test_convergence_on_tftr_like():
    x = generate(tftr_like(), 300, 4)
    es = eigencoefficients(x, build_slepian_family(300, 5.46, 11))
    for kind in ("minimal_loss", "wiener"):
        field, est = apply_weighting(es, kind)
        assert field.converged.mean() >= 0.99
        assert est.method["nonconverged"] == int((~field.converged).sum())
        assert field.iterations_used.max() <= 50


def test_nonconvergence_is_flagged_not_raised(white_es):
    field, est = apply_weighting(
        white_es, WeightingScheme("wiener", max_iter=1, rel_tol=1e-15))
    assert not field.converged.all()
    assert est.method["nonconverged"] > 0


def test_wrong_kind_for_wrapper(white_es):
    with pytest.raises(ParameterError):
        wiener_weights(white_es, WeightingScheme("minimal_loss"))
    with pytest.raises(ParameterError):
        apply_weighting(white_es.powers, "wiener")


# -------------------------------------------------------------- properties

@pytest.mark.parametrize("kind", ["uniform", "sequential_deselection",
                                  "minimal_loss", "wiener"])
def test_weights_nonnegative_and_bounded(white_es, kind):
    field, est = apply_weighting(white_es, kind)
    assert np.all(field.weights >= 0)
    total = field.weights.sum(axis=0)
    assert np.all(total <= 1.0 + 1e-12)
    np.testing.assert_allclose(
        est.values, np.einsum("km,km->m", field.weights, white_es.powers),
        rtol=1e-12)
    assert np.all(est.dof >= 2.0 - 1e-12)


@pytest.mark.parametrize("kind", ["uniform", "sequential_deselection",
                                  "minimal_loss", "wiener"])
@given(a=st.floats(1e-3, 1e3))
def test_scale_covariance(white_es, kind, a):
    scaled = EigenSpectra(white_es.grid, white_es.coeffs * np.sqrt(a),
                          white_es.powers * a, white_es.eigenvalues,
                          white_es.sigma2 * a, white_es.n_samples,
                          white_es.time_bandwidth)
    _, base = apply_weighting(white_es, kind)
    _, est = apply_weighting(scaled, kind)
    np.testing.assert_allclose(est.values, a * base.values, rtol=1e-5)
