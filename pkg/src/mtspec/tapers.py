"""Data tapers: Slepian (DPSS) families, Tukey split-cosine tapers and their
spectral windows.

All tapers are stored as length-``N`` arrays indexed ``0 .. N-1``; index ``m``
corresponds to the symmetric time index ``n = m - (N - 1) / 2`` so that the
midpoint of the record sits at time zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal, matmul_toeplitz

from .exceptions import NumericError, ParameterError

__all__ = [
    "Taper",
    "SlepianFamily",
    "SpectralWindow",
    "build_slepian_family",
    "concentration_eigenvalue",
    "build_tukey_taper",
    "rectangular_taper",
    "spectral_window",
    "default_taper_count",
    "max_taper_count",
]

UNIT_ENERGY_TOL = 1e-12

# Dense quadratic forms are exact enough for Table-3 style checks; above this
# size fall back to FFT-based Toeplitz products.
_DENSE_LIMIT = 2048


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Taper:
    """A data taper ``nu_n`` of length ``N``.

    Parameters
    ----------
    values : ndarray
        Taper weights in storage order.
    norm_kind : {"unit-energy", "raw"}
        ``"unit-energy"`` tapers satisfy ``sum(values**2) == 1``. Raw tapers
        carry no normalization; estimators divide by ``sum(values**2)``.
    """

    values: np.ndarray
    norm_kind: str = "raw"

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 1 or values.size < 2:
            raise ParameterError("a taper needs at least 2 samples")
        if self.norm_kind not in ("unit-energy", "raw"):
            raise ParameterError(f"unknown norm_kind {self.norm_kind!r}")
        if self.norm_kind == "unit-energy":
            energy = float(np.dot(values, values))
            if abs(energy - 1.0) > UNIT_ENERGY_TOL:
                raise ParameterError(
                    f"unit-energy taper has sum of squares {energy!r}")
        object.__setattr__(self, "values", values)

    @property
    def N(self):
        return self.values.size

    @property
    def energy(self):
        return float(np.dot(self.values, self.values))

    def normalized(self):
        """Return a unit-energy copy of this taper."""
        return Taper(self.values / math.sqrt(self.energy), "unit-energy")


@dataclass(frozen=True)
class SlepianFamily:
    """``K`` orthonormal Slepian tapers of length ``N``.

    Attributes
    ----------
    N : int
    time_bandwidth : float
        Dimensionless time-bandwidth product ``NW``.
    K : int
    tapers : ndarray, shape (K, N)
        Unit-energy tapers, row ``k`` is taper ``k``.
    eigenvalues : ndarray, shape (K,)
        Concentration of each taper's spectral window in ``[-W, W]``.
    """

    N: int
    time_bandwidth: float
    K: int
    tapers: np.ndarray
    eigenvalues: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "tapers", _frozen(self.tapers))
        object.__setattr__(self, "eigenvalues", _frozen(self.eigenvalues))

    @property
    def bandwidth(self):
        """Half-bandwidth ``W`` in cycles/sample."""
        return self.time_bandwidth / self.N

    def taper(self, k):
        return Taper(self.tapers[k], "unit-energy")


@dataclass(frozen=True)
class SpectralWindow:
    """Fourier transform ``V(f)`` of a taper on a grid in ``[-1/2, 1/2)``."""

    frequencies: np.ndarray
    values: np.ndarray


def default_taper_count(time_bandwidth):
    """Default number of tapers, ``round(2 NW)`` (at least one)."""
    return max(1, int(round(2.0 * time_bandwidth)))


def max_taper_count(time_bandwidth):
    """Largest taper count accepted by :func:`build_slepian_family`."""
    return int(math.ceil(2.0 * time_bandwidth)) + 2


def _concentration_column(N, W):
    m = np.arange(N, dtype=float)
    col = np.empty(N)
    col[0] = 2.0 * W
    col[1:] = np.sin(2.0 * np.pi * W * m[1:]) / (np.pi * m[1:])
    return col


def concentration_matrix(N, W):
    """Dense spectral concentration matrix ``A_mn = sin 2piW(n-m) / pi(n-m)``.

    Only intended for small ``N`` (oracles and tests).
    """
    col = _concentration_column(N, W)
    idx = np.arange(N)
    return col[np.abs(idx[:, None] - idx[None, :])]


def _quadratic_forms(vectors, W):
    """``v^T A(N, W) v`` for each column of ``vectors``."""
    N = vectors.shape[0]
    if N <= _DENSE_LIMIT:
        Av = concentration_matrix(N, W) @ vectors
    else:
        col = _concentration_column(N, W)
        Av = matmul_toeplitz(col, vectors)
        Av = Av.reshape(vectors.shape)
    return np.einsum("nk,nk->k", vectors, Av)


def concentration_eigenvalue(taper, W):
    """Fraction of a unit-energy taper's window energy inside ``[-W, W]``.

    Parameters
    ----------
    taper : Taper
        Must be unit-energy.
    W : float
        Half-bandwidth in cycles/sample, ``0 < W < 1/2`` (``W = 1/2`` allowed
        as the limiting case).

    Returns
    -------
    float
        ``nu^T A(N, W) nu``.
    """
    if taper.norm_kind != "unit-energy":
        raise ParameterError("concentration requires a unit-energy taper")
    if not 0.0 < W <= 0.5:
        raise ParameterError(f"bandwidth W={W!r} must lie in (0, 1/2]")
    lam = _quadratic_forms(taper.values[:, None], W)[0]
    return float(min(lam, 1.0))


def _fix_signs(vectors):
    N, K = vectors.shape
    half = N // 2
    for k in range(K):
        v = vectors[:, k]
        s = v.sum() if k % 2 == 0 else v[:half].sum()
        if s < 0:
            vectors[:, k] = -v
    return vectors


def build_slepian_family(N, time_bandwidth, K=None):
    """Construct the first ``K`` discrete prolate spheroidal sequences.

    The tapers are eigenvectors of the tridiagonal matrix that commutes with
    the concentration matrix; the concentrations themselves are recomputed
    from the quadratic form against ``A(N, W)``.

    Parameters
    ----------
    N : int
        Taper length, at least 8.
    time_bandwidth : float
        ``NW``, with ``0 < NW < N/2``.
    K : int, optional
        Number of tapers; defaults to ``round(2 NW)``. At most
        ``ceil(2 NW) + 2``.

    Returns
    -------
    SlepianFamily
    """
    N = int(N)
    nw = float(time_bandwidth)
    if N < 8:
        raise ParameterError(f"N={N} is too short; need N >= 8")
    if not 0.0 < nw < N / 2.0:
        raise ParameterError(f"time_bandwidth={nw!r} must lie in (0, N/2)")
    if K is None:
        K = default_taper_count(nw)
    K = int(K)
    kmax = max_taper_count(nw)
    if not 1 <= K <= min(kmax, N):
        raise ParameterError(
            f"K={K} outside [1, {min(kmax, N)}] for time_bandwidth={nw}")

    W = nw / N
    n = np.arange(N, dtype=float)
    diag = ((N - 1 - 2.0 * n) / 2.0) ** 2 * np.cos(2.0 * np.pi * W)
    off = n[1:] * (N - n[1:]) / 2.0
    try:
        _, vecs = eigh_tridiagonal(diag, off, select="i",
                                   select_range=(N - K, N - 1))
    except np.linalg.LinAlgError as exc:
        idx = getattr(exc, "args", [None])
        raise NumericError(
            f"tridiagonal eigen-solve failed for N={N}, NW={nw}: {exc}",
            index=idx[0] if idx else None) from exc
    vecs = np.ascontiguousarray(vecs[:, ::-1])
    bad = ~np.all(np.isfinite(vecs), axis=0)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise NumericError(f"eigenpair {k} did not converge", index=k)
    vecs /= np.sqrt(np.einsum("nk,nk->k", vecs, vecs))
    vecs = _fix_signs(vecs)

    lam = np.minimum(_quadratic_forms(vecs, W), 1.0)
    return SlepianFamily(N=N, time_bandwidth=nw, K=K, tapers=vecs.T,
                         eigenvalues=lam)


def build_tukey_taper(N, alphaN):
    """Tukey split-cosine taper parameterized by the taper length ``alpha*N``.

    Rise ``1/2 [1 - cos(pi (j - 1/2) / aN)]`` for ``1 <= j < aN``, flat for
    ``aN <= j <= N - aN`` and a mirrored fall, with ``j = 1 .. N``.
    Returned raw (not unit-energy).
    """
    N = int(N)
    aN = float(alphaN)
    if N < 2:
        raise ParameterError("a taper needs at least 2 samples")
    if not 0.0 <= aN <= N / 2.0:
        raise ParameterError(f"alphaN={aN!r} must lie in [0, N/2]")
    j = np.arange(1, N + 1, dtype=float)
    nu = np.ones(N)
    if aN > 0:
        rise = j < aN
        fall = j > N - aN
        nu[rise] = 0.5 * (1.0 - np.cos(np.pi * (j[rise] - 0.5) / aN))
        nu[fall] = 0.5 * (1.0 - np.cos(np.pi * (N - j[fall] + 0.5) / aN))
    return Taper(nu, "raw")


def rectangular_taper(N, unit_energy=False):
    """All-ones taper (optionally scaled to unit energy)."""
    if unit_energy:
        return Taper(np.full(int(N), 1.0 / math.sqrt(N)), "unit-energy")
    return Taper(np.ones(int(N)), "raw")


def spectral_window(taper, grid_size):
    """Evaluate ``V(f) = sum_n nu_n exp(-2 pi i f n)`` on a uniform grid.

    The grid has ``grid_size`` points spanning ``[-1/2, 1/2)`` (exactly, for
    even sizes) and uses the symmetric time index, so symmetric tapers give
    real windows.
    """
    values = taper.values if isinstance(taper, Taper) else np.asarray(taper)
    N = values.size
    G = int(grid_size)
    if G < N:
        raise ParameterError(f"grid_size={G} must be >= taper length {N}")
    freqs = np.fft.fftshift(np.fft.fftfreq(G))
    spec = np.fft.fftshift(np.fft.fft(values, G))
    V = spec * np.exp(1j * np.pi * freqs * (N - 1))
    return SpectralWindow(frequencies=freqs, values=V)
