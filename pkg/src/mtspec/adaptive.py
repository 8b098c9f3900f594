"""Adaptive eigenspectrum weightings.

Three schemes are provided in addition to uniform weighting:

``sequential_deselection``
    A per-frequency one-sided outlier test that drops the highest-order
    eigenspectra when they sit too far above the mean of the lower ones.
``minimal_loss``
    Weights minimizing squared bias plus Gaussian variance under the
    broad-band bias model ``E S_k = S lambda_k + sigma^2 (1 - lambda_k)``.
``wiener``
    Thomson's weights, normalized so a flat spectrum is reproduced exactly.

The array kernels (``_deselect``, ``_fixed_point``) accept powers of shape
``(..., K, M)`` so that many segments can be weighted in one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimators import EigenSpectra, SpectralEstimate, _dof_from_weights
from .exceptions import ParameterError

__all__ = [
    "WeightingScheme",
    "WeightField",
    "sequential_deselection",
    "minimal_loss_weights",
    "wiener_weights",
    "minimal_loss_coefficients",
    "wiener_coefficients",
    "apply_weighting",
    "KINDS",
]

KINDS = ("uniform", "sequential_deselection", "minimal_loss", "wiener")
_ALIASES = {"seqdesel": "sequential_deselection", "deselection":
            "sequential_deselection", "minloss": "minimal_loss",
            "thomson": "wiener"}

# Relative slack on the deselection threshold so that identical powers pass
# despite rounding in the mean.
_TEST_SLACK = 1e-12


@dataclass(frozen=True)
class WeightingScheme:
    """Parameters of an eigenspectrum weighting.

    ``sigma2`` defaults to the sample power stored on the eigenspectra.
    ``denominator`` selects ``1/(K'+1)`` (``"k_plus_one"``) or ``1/K'``
    (``"k"``) for sequential deselection.
    """

    kind: str = "sequential_deselection"
    alpha_K: float = 2.0
    max_delete_fraction: float = 0.20
    sigma2: float | None = None
    max_iter: int = 50
    rel_tol: float = 1e-6
    denominator: str = "k_plus_one"

    def __post_init__(self):
        kind = _ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise ParameterError(f"unknown weighting kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if not self.alpha_K > 0:
            raise ParameterError("alpha_K must be positive")
        if not 0.0 <= self.max_delete_fraction <= 0.5:
            raise ParameterError("max_delete_fraction must lie in [0, 0.5]")
        if self.sigma2 is not None and not self.sigma2 > 0:
            raise ParameterError("sigma2 must be positive")
        if self.max_iter < 1 or not self.rel_tol > 0:
            raise ParameterError("max_iter >= 1 and rel_tol > 0 required")
        if self.denominator not in ("k_plus_one", "k"):
            raise ParameterError(f"unknown denominator {self.denominator!r}")

    def describe(self):
        d = {"weighting": self.kind}
        if self.kind == "sequential_deselection":
            d.update(alpha_K=self.alpha_K,
                     max_delete_fraction=self.max_delete_fraction,
                     denominator=self.denominator)
        elif self.kind in ("minimal_loss", "wiener"):
            d.update(max_iter=self.max_iter, rel_tol=self.rel_tol)
        return d


@dataclass(frozen=True)
class WeightField:
    """Per-frequency weights ``c_k(f)`` such that ``S = sum_k c_k S_k``.

    ``selected`` is the deselection mask (all True for other schemes);
    ``iterations_used`` and ``converged`` describe the fixed-point loop.
    """

    grid: object
    weights: np.ndarray
    selected: np.ndarray
    iterations_used: np.ndarray
    converged: np.ndarray


def _as_scheme(scheme):
    if isinstance(scheme, WeightingScheme):
        return scheme
    if isinstance(scheme, str):
        return WeightingScheme(kind=scheme)
    raise ParameterError(f"cannot interpret weighting {scheme!r}")


def _deselect(powers, alpha, max_delete):
    """Sequential deselection mask for powers of shape ``(..., K, M)``."""
    K = powers.shape[-2]
    shape = powers.shape[:-2] + powers.shape[-1:]
    selected = np.ones(powers.shape, dtype=bool)
    active = np.ones(shape, dtype=bool)
    passes = np.zeros(shape, dtype=int)
    deleted = np.zeros(shape, dtype=int)
    for t in range(K - 1, 1, -1):
        if not active.any():
            break
        ref = powers[..., :t, :]
        mean = ref.mean(axis=-2)
        sd = ref.std(axis=-2, ddof=1)
        ok = powers[..., t, :] <= mean + alpha * sd + _TEST_SLACK * np.abs(mean)
        fail = active & ~ok
        delete = fail & (deleted < max_delete)
        selected[..., t, :] &= ~delete
        deleted += delete
        passes = np.where(active & ok, passes + 1, np.where(delete, 0, passes))
        active &= ~((ok & (passes >= 2)) | (fail & ~delete))
    return selected


def minimal_loss_coefficients(eigenvalues, sigma2, S):
    """Minimum expected error weights
    ``c_k = 1 / ((K+1) (lambda_k + (sigma^2/S)(1 - lambda_k)))``.

    Returns an array of shape ``(K,) + shape(S)``.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    K = lam.size
    r = _ratio(sigma2, S)
    lam = lam.reshape((K,) + (1,) * r.ndim)
    return 1.0 / ((K + 1) * (lam + r * (1.0 - lam)))


def wiener_coefficients(eigenvalues, sigma2, S):
    """Thomson's normalized weights ``c_k = K g_k / sum_j g_j`` with
    ``g_k = lambda_k / K / (lambda_k + (sigma^2/S)(1 - lambda_k))^2``.

    The estimate is ``(1/K) sum_k c_k S_k``. Returns shape ``(K,) + shape(S)``.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    K = lam.size
    r = _ratio(sigma2, S)
    lam = lam.reshape((K,) + (1,) * r.ndim)
    g = lam / K / (lam + r * (1.0 - lam)) ** 2
    total = g.sum(axis=0)
    return np.where(total > 0, K * g / np.where(total > 0, total, 1.0), 1.0)


def _ratio(sigma2, S):
    S = np.asarray(S, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(S > 0, sigma2 / np.where(S > 0, S, 1.0),
                     np.where(sigma2 > 0, np.inf, 0.0))
    return r


def _fixed_point(powers, eigenvalues, sigma2, kind, max_iter, rel_tol):
    """Iterate weights and estimate to a fixed point.

    Returns effective weights (shape like ``powers``), the estimate, the
    per-frequency iteration count and convergence flags.
    """
    K = powers.shape[-2]
    # sigma2 broadcasts against the frequency axis
    sigma2 = np.asarray(sigma2, dtype=float)
    if sigma2.ndim:
        sigma2 = sigma2[..., None]
    S = 0.5 * (powers[..., 0, :] + powers[..., 1, :])
    weights = np.full(powers.shape, 1.0 / K)
    iters = np.zeros(S.shape, dtype=int)
    done = np.zeros(S.shape, dtype=bool)
    for i in range(1, max_iter + 1):
        r = _ratio(sigma2, S)[..., None, :]
        lam = eigenvalues[:, None]
        if kind == "minimal_loss":
            c = 1.0 / ((K + 1) * (lam + r * (1.0 - lam)))
        else:
            g = lam / K / (lam + r * (1.0 - lam)) ** 2
            total = g.sum(axis=-2, keepdims=True)
            c = np.where(total > 0, g / np.where(total > 0, total, 1.0),
                         1.0 / K)
        S_new = np.einsum("...km,...km->...m", c, powers)
        with np.errstate(divide="ignore", invalid="ignore"):
            change = np.abs(S_new - S) / np.where(S_new > 0, S_new, 1.0)
        step = ~done
        S = np.where(step, S_new, S)
        weights = np.where(step[..., None, :], c, weights)
        iters = np.where(step, i, iters)
        done = done | (change < rel_tol)
        if done.all():
            break
    return weights, S, iters, done


def _weigh(powers, eigenvalues, sigma2, scheme):
    """Array-level dispatch; returns (weights, selected, S, iters, conv)."""
    K = powers.shape[-2]
    full = np.ones(powers.shape, dtype=bool)
    ones = np.ones(powers.shape[:-2] + powers.shape[-1:], dtype=int)
    if scheme.kind == "uniform":
        w = np.full(powers.shape, 1.0 / K)
        return w, full, powers.mean(axis=-2), ones, ones.astype(bool)
    if scheme.kind == "sequential_deselection":
        if K < 3:
            raise ParameterError("sequential deselection needs K >= 3")
        max_delete = int(np.floor(scheme.max_delete_fraction * K + 1e-9))
        sel = _deselect(powers, scheme.alpha_K, max_delete)
        kept = sel.sum(axis=-2)
        denom = kept + 1 if scheme.denominator == "k_plus_one" else kept
        w = sel / denom[..., None, :]
        S = np.einsum("...km,...km->...m", w, powers)
        return w, sel, S, ones, ones.astype(bool)
    if K < 2:
        raise ParameterError(f"{scheme.kind} weighting needs K >= 2")
    w, S, it, conv = _fixed_point(powers, np.asarray(eigenvalues, float),
                                  sigma2, scheme.kind, scheme.max_iter,
                                  scheme.rel_tol)
    return w, full, S, it, conv


def apply_weighting(es, scheme="sequential_deselection"):
    """Weight the eigenspectra of ``es`` according to ``scheme``.

    Returns
    -------
    (WeightField, SpectralEstimate)
    """
    if not isinstance(es, EigenSpectra):
        raise ParameterError("apply_weighting expects EigenSpectra")
    scheme = _as_scheme(scheme)
    sigma2 = es.sigma2 if scheme.sigma2 is None else scheme.sigma2
    w, sel, S, it, conv = _weigh(es.powers, es.eigenvalues, sigma2, scheme)
    field = WeightField(es.grid, w, sel, it, conv)
    method = {"estimator": "multitaper", "taper": "slepian",
              "time_bandwidth": es.time_bandwidth, "K": es.K,
              "bandwidth": es.bandwidth, "sigma2": float(sigma2)}
    method.update(scheme.describe())
    if scheme.kind in ("minimal_loss", "wiener"):
        method["nonconverged"] = int((~conv).sum())
    est = SpectralEstimate(es.grid, S, _dof_from_weights(w), es.n_samples,
                           method)
    return field, est


def sequential_deselection(es, scheme=None):
    """Sequential deselection weighting; see :func:`apply_weighting`."""
    scheme = scheme or WeightingScheme("sequential_deselection")
    if scheme.kind != "sequential_deselection":
        raise ParameterError("scheme kind must be sequential_deselection")
    if es.K < 3:
        raise ParameterError("sequential deselection needs K >= 3")
    return apply_weighting(es, scheme)


def minimal_loss_weights(es, scheme=None):
    """Minimum expected error weighting, iterated to a fixed point in S."""
    scheme = scheme or WeightingScheme("minimal_loss")
    if scheme.kind != "minimal_loss":
        raise ParameterError("scheme kind must be minimal_loss")
    return apply_weighting(es, scheme)


def wiener_weights(es, scheme=None):
    """Thomson's Wiener-filter weighting, iterated to a fixed point in S."""
    scheme = scheme or WeightingScheme("wiener")
    if scheme.kind != "wiener":
        raise ParameterError("scheme kind must be wiener")
    return apply_weighting(es, scheme)
