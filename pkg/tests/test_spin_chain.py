import math

import numpy as np
import pytest
import scipy.linalg as la
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from optlattice import CapacityError, IsingParams, adiabatic_sweep, interferometer_phase, trotter_evolve
from optlattice.numerics import evolve
from optlattice.spin_chain import (
    SIGMA_X,
    SIGMA_Z,
    IsingHamiltonian,
    Term,
    build_ising,
    ground_state,
    ising_terms,
    neel_pair_state,
    parity_apply,
    parity_sector_hamiltonian,
    raised_cosine_ramp,
    raman_rotation,
    terms_to_sparse,
    uniform_pair_state,
)


def basis_state(n, index=0):
    psi = np.zeros(2**n, dtype=complex)
    psi[index] = 1.0
    return psi


@pytest.mark.parametrize("B, W", [(0.7, -1.0), (1.3, 0.4), (0.0, 2.0)])
def test_two_spin_spectrum(B, W):
    h = build_ising(IsingParams(2, W, B)).toarray()
    r = math.sqrt(4 * B * B + W * W)
    np.testing.assert_allclose(np.linalg.eigvalsh(h), sorted([W, -W, r, -r]), atol=1e-12)


def test_matrix_free_operator_matches_sparse():
    rng = np.random.default_rng(2)
    op = IsingHamiltonian(7, -0.8, 1.1, "periodic")
    psi = rng.standard_normal(2**7) + 1j * rng.standard_normal(2**7)
    np.testing.assert_allclose(op @ psi, op.to_sparse() @ psi, atol=1e-12)
    assert isinstance(build_ising(IsingParams(15, -1.0, 1.0)), IsingHamiltonian)
    assert sp.issparse(build_ising(IsingParams(14, -1.0, 1.0)))


def test_term_sum_equals_hamiltonian():
    for boundary in ("open", "periodic"):
        h = build_ising(IsingParams(5, 0.6, -0.9, boundary))
        diff = terms_to_sparse(ising_terms(5, -0.9, 0.6, boundary), 5) - h
        assert abs(diff).max() <= 1e-14


@pytest.mark.parametrize("n", [4, 6, 8])
def test_ferromagnetic_degeneracy(n):
    values, _ = ground_state(IsingParams(n, -1.0, 0.0), k=2)
    np.testing.assert_allclose(values, [-(n - 1), -(n - 1)], atol=1e-12)


def test_parity_symmetry():
    n = 6
    h = build_ising(IsingParams(n, -1.0, 0.8))
    rng = np.random.default_rng(0)
    psi = rng.standard_normal(2**n)
    np.testing.assert_allclose(h @ parity_apply(psi, n), parity_apply(h @ psi, n), atol=1e-12)
    sectors = np.concatenate([
        np.linalg.eigvalsh(parity_sector_hamiltonian(h, n, s).toarray()) for s in (1, -1)
    ])
    np.testing.assert_allclose(np.sort(sectors), np.linalg.eigvalsh(h.toarray()), atol=1e-10)


def test_capacity_cap():
    with pytest.raises(CapacityError):
        IsingParams(21, -1.0)
    IsingParams(21, -1.0, max_qubits=21)


def test_ramp_endpoints():
    ramp = raised_cosine_ramp(5.0, 10.0)
    assert ramp(0.0) == 5.0
    assert ramp(10.0) == pytest.approx(0.0, abs=1e-15)
    assert ramp(5.0) == pytest.approx(2.5)


def sector_levels(n, W, B, parity):
    h = parity_sector_hamiltonian(build_ising(IsingParams(n, W), B), n, parity).toarray()
    w = np.linalg.eigvalsh(h)
    return w[0], w[1] - w[0]


def test_small_sweep_invariants():
    n, W, B0, T = 6, -1.0, 5.0, 100.0
    result = adiabatic_sweep(IsingParams(n, W), B0, T, samples=41)
    assert result.report.fidelity >= 0.99
    assert result.report.pair == "uniform"
    assert max(row[4] for row in result.rows) <= 1e-8
    for t, b, energy, _, _ in result.rows:
        e0, gap = sector_levels(n, W, b, result.parity)
        assert e0 - 1e-8 <= energy <= e0 + gap / 2


def test_antiferromagnet_targets_neel_pair():
    result = adiabatic_sweep(IsingParams(4, 1.0), 5.0, 100.0, samples=5)
    assert result.report.pair == "neel"
    assert result.report.fidelity >= 0.99


def test_quench_from_nearly_product_state_matches_overlap_count():
    # with B0 >> |W| the initial state approaches the all -x product state
    n = 6
    result = adiabatic_sweep(IsingParams(n, -1.0), 1000.0, 0.0)
    assert result.report.fidelity == pytest.approx(2.0 ** (1 - n), rel=0.01)


@pytest.mark.parametrize("n", [2, 3, 6, 10])
def test_interferometer_gain(n):
    psi = uniform_pair_state(n, 1.0, np.exp(0.3j))
    for theta in (1e-3, 0.01, 0.05):
        assert interferometer_phase(psi, theta) / theta == pytest.approx(n, abs=1e-10)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_neel_pair_is_insensitive(n):
    assert interferometer_phase(neel_pair_state(n), 0.2) == pytest.approx(0.0, abs=1e-12)


def test_interferometer_rejects_non_ghz_states():
    with pytest.raises(ValueError, match="fidelity"):
        interferometer_phase(np.full(8, 1 / math.sqrt(8)), 0.1)


def test_raman_rotation_cases():
    psi = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2)
    out = raman_rotation(psi, 0, 0.0, 0.7, 2.0)
    np.testing.assert_allclose(out, psi * np.array([1.0, np.exp(-1.4j)]), atol=1e-12)
    a = basis_state(1)
    half = raman_rotation(raman_rotation(a, 0, 1.0, 0.0, math.pi / 2), 0, 1.0, 0.0, math.pi / 2)
    np.testing.assert_allclose(half, raman_rotation(a, 0, 1.0, 0.0, math.pi), atol=1e-12)
    assert abs(half[1]) == pytest.approx(1.0)
    with pytest.raises(IndexError):
        raman_rotation(a, 1, 1.0, 0.0, 1.0)


def test_single_term_trotter_is_exact():
    n = 3
    h = np.array([[0.0, 0.3], [0.3, 0.5]], dtype=complex)
    psi = basis_state(n, 5)
    out = trotter_evolve(psi, [Term(h, (1,))], 0.1, 10)
    np.testing.assert_allclose(out, raman_rotation(psi, 1, 0.6, 0.5, 1.0), atol=1e-10)


def test_commuting_terms_are_exact():
    n = 4
    terms = [Term(0.7 * SIGMA_Z, (0,)), Term(np.kron(SIGMA_Z, SIGMA_Z), (1, 2)), Term(-0.3 * SIGMA_Z, (3,))]
    psi = np.full(2**n, 0.25, dtype=complex)
    exact = la.expm(-1j * 1.5 * terms_to_sparse(terms, n).toarray()) @ psi
    np.testing.assert_allclose(trotter_evolve(psi, terms, 0.5, 3), exact, atol=1e-10)


def test_malformed_terms():
    psi = basis_state(3)
    with pytest.raises(ValueError):
        trotter_evolve(psi, [Term(SIGMA_X, (3,))], 0.1, 1)
    with pytest.raises(ValueError):
        trotter_evolve(psi, [Term(np.eye(4), (1, 1))], 0.1, 1)
    with pytest.raises(ValueError):
        trotter_evolve(psi, [Term(np.eye(8), (0, 1, 2))], 0.1, 1)
    with pytest.raises(ValueError):
        trotter_evolve(psi, [Term(np.array([[0, 1], [0, 0]]), (0,))], 0.1, 1)


def trotter_errors(dts, n=6, horizon=1.0):
    terms = ising_terms(n, 1.0, 1.0)
    psi = basis_state(n)
    exact = evolve(psi, terms_to_sparse(terms, n), 0.0, horizon, tol=1e-12)
    return [np.linalg.norm(trotter_evolve(psi, terms, dt, round(horizon / dt)) - exact) for dt in dts]


def test_trotter_first_order_halving():
    e = trotter_errors([0.1, 0.05, 0.025])
    for a, b in zip(e, e[1:]):
        assert 1.6 <= a / b <= 2.4


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**5 - 1), st.floats(0.1, 2.0))
def test_trotter_preserves_norm(index, dt):
    out = trotter_evolve(basis_state(5, index), ising_terms(5, 0.8, -1.2), dt, 3)
    assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-12)


def test_field_ground_state_has_definite_parity():
    _, vecs = ground_state(IsingParams(6, -1.0), 5.0)
    psi = vecs[:, 0]
    assert abs(np.vdot(psi, parity_apply(psi, 6))) == pytest.approx(1.0, abs=1e-10)
