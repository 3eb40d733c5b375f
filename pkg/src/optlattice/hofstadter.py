"""Hofstadter butterfly from the q x q magnetic Bloch (Harper) matrix at rational flux p/q."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_int


def harper_matrix(p, q, kx, ky):
    """Landau-gauge Bloch matrix; physical energies are -eps0 times its eigenvalues.

    Diagonal 2 cos(ky + 2 pi alpha m), nearest-neighbour entries 1, and the
    wrap-around entries exp(-/+ i q kx) (added onto the off-diagonal for q <= 2).
    """
    p = check_int(p, "p", minimum=0)
    q = check_int(q, "q", minimum=1)
    if math.gcd(p, q) != 1:
        raise ValueError(f"flux {p}/{q} is not in lowest terms")
    alpha = p / q
    m = np.arange(q)
    h = np.diag(2.0 * np.cos(ky + 2.0 * np.pi * alpha * m)).astype(complex)
    if q == 1:
        h[0, 0] += 2.0 * np.cos(kx)
        return h
    idx = np.arange(q - 1)
    h[idx, idx + 1] += 1.0
    h[idx + 1, idx] += 1.0
    h[0, q - 1] += np.exp(-1j * q * kx)
    h[q - 1, 0] += np.exp(1j * q * kx)
    return h


def reduced_fractions(q_max):
    """All p/q in [0, 1] with gcd(p, q) = 1 and q <= q_max, sorted by q then p."""
    q_max = check_int(q_max, "q_max", minimum=1)
    out = []
    for q in range(1, q_max + 1):
        for p in range(q + 1):
            if math.gcd(p, q) == 1:
                out.append((p, q))
    return out


def k_grid(q, resolution):
    """kx on [0, 2 pi / q) and ky on [0, 2 pi), ``resolution`` points each."""
    kx = 2.0 * np.pi / q * np.arange(resolution) / resolution
    ky = 2.0 * np.pi * np.arange(resolution) / resolution
    return kx, ky


@dataclass(frozen=True)
class FluxSpectrum:
    p: int
    q: int
    resolution: int
    energies: np.ndarray  # shape (resolution, resolution, q), in units of eps0, ascending per k

    @property
    def alpha(self):
        return self.p / self.q

    def sorted_energies(self):
        return np.sort(self.energies.ravel())


def flux_spectrum(p, q, resolution=8):
    """Energies -eig(harper_matrix) on the k grid, ascending at every k point."""
    resolution = check_int(resolution, "resolution", minimum=1)
    kx, ky = k_grid(q, resolution)
    out = np.empty((resolution, resolution, q))
    for i, a in enumerate(kx):
        for j, b in enumerate(ky):
            out[i, j] = np.sort(-np.linalg.eigvalsh(harper_matrix(p, q, a, b)))
    return FluxSpectrum(p, q, resolution, out)


BUTTERFLY_COLUMNS = ("p", "q", "alpha", "kx_index", "ky_index", "energy_over_eps0")


def butterfly(q_max=40, resolution=8):
    """Spectra for every reduced flux with q <= q_max, in (q, p) order."""
    resolution = check_int(resolution, "resolution", minimum=4)
    return [flux_spectrum(p, q, resolution) for p, q in reduced_fractions(q_max)]


def butterfly_rows(spectra):
    for s in spectra:
        for i in range(s.resolution):
            for j in range(s.resolution):
                for e in s.energies[i, j]:
                    yield s.p, s.q, s.alpha, i, j, float(e)


def spectral_gaps(spectrum, min_width=1e-9):
    """Gaps (lower, upper) between consecutive bands over the whole k grid."""
    bands = spectrum.energies.reshape(-1, spectrum.q)
    tops = bands.max(axis=0)
    bottoms = bands.min(axis=0)
    return [(float(tops[b]), float(bottoms[b + 1])) for b in range(spectrum.q - 1)
            if bottoms[b + 1] - tops[b] > min_width]


class HofstadterSpectrum(TransformerMixin, BaseEstimator):
    """Map flux fractions ``X[:, 0] = p``, ``X[:, 1] = q`` to band summaries.

    ``transform`` returns, per row, the lowest energy, the highest energy and
    the widest gap (0 when the bands touch).
    """

    def __init__(self, resolution=8):
        self.resolution = resolution

    def fit(self, X=None, y=None):
        check_int(self.resolution, "resolution", minimum=4)
        return self

    def spectra(self, X):
        X = np.asarray(X)
        if X.ndim != 2 or X.shape[1] != 2:
            raise ValueError(f"X must have shape (n_samples, 2) holding (p, q), got {X.shape}")
        return [flux_spectrum(int(p), int(q), self.resolution) for p, q in X]

    def transform(self, X):
        rows = []
        for s in self.spectra(X):
            gaps = spectral_gaps(s)
            widest = max((hi - lo for lo, hi in gaps), default=0.0)
            rows.append((float(s.energies.min()), float(s.energies.max()), widest))
        return np.array(rows).reshape(-1, 3)
