"""Digamma and trigamma for positive real arguments.

Upward recurrence moves the argument above ``_SHIFT`` where the asymptotic
(Bernoulli) series converges to full double precision.
"""

import math

import numpy as np

__all__ = ["digamma", "trigamma"]

_SHIFT = 10.0

# B_2n for n = 1..7
_BERNOULLI = (1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66,
              -691.0 / 2730, 7.0 / 6)


def _digamma_scalar(x):
    if not x > 0:
        raise ValueError(f"digamma requires x > 0, got {x!r}")
    acc = 0.0
    while x < _SHIFT:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    p = inv2
    for n, b in enumerate(_BERNOULLI, start=1):
        series += b / (2 * n) * p
        p *= inv2
    return acc + math.log(x) - 0.5 / x - series


def _trigamma_scalar(x):
    if not x > 0:
        raise ValueError(f"trigamma requires x > 0, got {x!r}")
    acc = 0.0
    while x < _SHIFT:
        acc += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = 0.0
    p = inv2 * inv
    for b in _BERNOULLI:
        series += b * p
        p *= inv2
    return acc + inv + 0.5 * inv2 + series


def digamma(x):
    """psi(x) = d/dx ln Gamma(x), x > 0."""
    if np.ndim(x) == 0:
        return _digamma_scalar(float(x))
    return np.vectorize(_digamma_scalar, otypes=[float])(x)


def trigamma(x):
    """psi'(x), x > 0."""
    if np.ndim(x) == 0:
        return _trigamma_scalar(float(x))
    return np.vectorize(_trigamma_scalar, otypes=[float])(x)
