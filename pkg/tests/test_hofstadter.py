import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from optlattice import HofstadterSpectrum, butterfly, harper_matrix
from optlattice.hofstadter import flux_spectrum, reduced_fractions, spectral_gaps


@settings(max_examples=50)
@given(st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_half_flux_closed_form(kx, ky):
    # q = 2: E = +/- 2 sqrt(cos^2 kx + cos^2 ky)
    w = np.linalg.eigvalsh(harper_matrix(1, 2, kx, ky))
    r = 2 * math.sqrt(math.cos(kx) ** 2 + math.cos(ky) ** 2)
    np.testing.assert_allclose(w, [-r, r], atol=1e-12)


@settings(max_examples=50)
@given(st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_zero_flux_is_tight_binding(kx, ky):
    assert harper_matrix(0, 1, kx, ky)[0, 0].real == pytest.approx(2 * math.cos(kx) + 2 * math.cos(ky))


def test_matrix_is_hermitian_and_rejects_unreduced_flux():
    h = harper_matrix(3, 7, 0.3, 1.1)
    np.testing.assert_allclose(h, h.conj().T)
    with pytest.raises(ValueError, match="lowest terms"):
        harper_matrix(2, 4, 0.0, 0.0)


def test_reduced_fractions():
    assert reduced_fractions(3) == [(0, 1), (1, 1), (1, 2), (1, 3), (2, 3)]


def test_symmetries_and_band_edges():
    spectra = {(s.p, s.q): s for s in butterfly(12, 8)}
    for (p, q), s in spectra.items():
        e = s.sorted_energies()
        np.testing.assert_allclose(e, -e[::-1], atol=1e-10)
        np.testing.assert_allclose(e, spectra[(q - p, q)].sorted_energies(), atol=1e-10)
    zero = spectra[(0, 1)].energies
    assert zero.min() == pytest.approx(-4.0, abs=1e-12)
    assert zero.max() == pytest.approx(4.0, abs=1e-12)


def test_third_flux_gaps():
    s = flux_spectrum(1, 3, 16)
    gaps = spectral_gaps(s)
    # bands at alpha = 1/3: [-1-sqrt3, -2], [1-sqrt3, sqrt3-1], [2, 1+sqrt3]
    r3 = math.sqrt(3)
    np.testing.assert_allclose(gaps, [(-2.0, 1 - r3), (r3 - 1, 2.0)], atol=1e-12)
    assert s.energies.min() == pytest.approx(-1 - r3, abs=1e-12)


def test_total_bandwidth_bounded():
    for s in butterfly(10, 8):
        assert np.abs(s.energies).max() <= 4.0 + 1e-12


def test_estimator():
    est = HofstadterSpectrum(resolution=8)
    assert clone(est).get_params() == {"resolution": 8}
    out = est.fit().transform([[0, 1], [1, 3]])
    np.testing.assert_allclose(out[0], [-4.0, 4.0, 0.0], atol=1e-12)
    assert out[1, 2] > 0
    with pytest.raises(ValueError):
        est.transform([[1, 2, 3]])
