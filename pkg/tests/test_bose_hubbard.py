import math
from functools import reduce

import numpy as np
import pytest
from sklearn.base import clone

from optlattice import BHModel, BoseHubbardED, build_basis, crossover_scan, ground_observables
from optlattice.bose_hubbard import (
    build_hamiltonian,
    correlation_matrix,
    interaction_energy,
    quasimomentum_distribution,
    structure_peak,
)
from optlattice.numerics import eigensolve


def tensor_oracle(M, N, J, U, edges):
    """Ground state from the full tensor-product space with local cutoff N, projected onto total N."""
    d = N + 1
    a = np.diag(np.sqrt(np.arange(1, d)), 1)
    eye = np.eye(d)

    def site_op(op, l):
        return reduce(np.kron, [op if j == l else eye for j in range(M)])

    ann = [site_op(a, l) for l in range(M)]
    num = [x.T @ x for x in ann]
    h = sum(0.5 * U * n @ (n - np.eye(d**M)) for n in num)
    for l, m in edges:
        h = h - J * (ann[l].T @ ann[m] + ann[m].T @ ann[l])
    total = np.rint(np.diag(sum(num))).astype(int)
    keep = np.flatnonzero(total == N)
    w, v = np.linalg.eigh(h[np.ix_(keep, keep)])
    full = np.zeros(d**M)
    full[keep] = v[:, 0]
    rho = np.array([[full @ ann[l].T @ ann[m] @ full for m in range(M)] for l in range(M)])
    return w, rho


@pytest.mark.parametrize("U", [0.0, 3.0, 20.0])
def test_against_tensor_product_oracle(U):
    M = N = 4
    model = BHModel(M, J=1.0, U=U)
    basis = build_basis(M, N)
    obs = ground_observables(model, basis)
    w, rho = tensor_oracle(M, N, 1.0, U, model.edges)
    assert obs.energy == pytest.approx(w[0], abs=1e-10)
    assert obs.gap == pytest.approx(w[1] - w[0], abs=1e-9)
    np.testing.assert_allclose(obs.correlation.real, rho, atol=1e-9)


def test_two_site_spectra():
    basis = build_basis(2, 2)
    h = build_hamiltonian(BHModel(2, J=1.0, U=0.0), basis).toarray()
    # 3x3 closed form: off-diagonals -sqrt(2) J
    np.testing.assert_allclose(np.linalg.eigvalsh(h), [-2, 0, 2], atol=1e-12)
    h = build_hamiltonian(BHModel(2, J=0.0, U=1.0), basis).toarray()
    np.testing.assert_allclose(np.linalg.eigvalsh(h), [0, 1, 1], atol=1e-12)
    assert h[basis.rank((1, 1)), basis.rank((1, 1))] == 0


def test_mu_is_a_uniform_shift():
    basis = build_basis(4, 3)
    e0 = ground_observables(BHModel(4, J=1.0, U=2.0), basis).energy
    e1 = ground_observables(BHModel(4, J=1.0, U=2.0, mu=0.7), basis).energy
    assert e1 == pytest.approx(e0 - 0.7 * 3, abs=1e-10)


def test_superfluid_ring_is_fully_coherent():
    obs = ground_observables(BHModel(6, J=1.0, U=0.0), build_basis(6, 6))
    np.testing.assert_allclose(np.abs(obs.correlation), 1.0, atol=1e-9)
    # Poissonian single-mode value with the fixed total N: N/M (1 - 1/M)
    np.testing.assert_allclose(obs.fluctuations, 6 / 6 * (1 - 1 / 6), atol=1e-9)
    assert obs.gap == pytest.approx(2 * (1 - math.cos(2 * math.pi / 6)), abs=1e-10)


def test_superfluid_interaction_energy_total():
    basis = build_basis(6, 6)
    obs = ground_observables(BHModel(6, J=1.0, U=0.0), basis)
    U, N, M = 1.0, 6, 6
    assert interaction_energy(basis, obs.state, U) == pytest.approx(U * N * (N - 1) / (2 * M), abs=1e-8)


def test_mott_limit_exact():
    obs = ground_observables(BHModel(6, J=0.0, U=1.0), build_basis(6, 6))
    off = obs.correlation - np.diag(np.diag(obs.correlation))
    assert np.abs(off).max() == 0.0
    assert np.abs(obs.fluctuations).max() == 0.0
    assert obs.gap == pytest.approx(1.0, abs=1e-10)
    assert obs.energy == pytest.approx(0.0, abs=1e-12)


def test_correlation_matrix_invariants():
    basis = build_basis(5, 4)
    obs = ground_observables(BHModel(5, J=1.0, U=4.0, boundary="open"), basis)
    rho = obs.correlation
    np.testing.assert_allclose(rho, rho.conj().T, atol=1e-12)
    assert np.trace(rho).real == pytest.approx(4.0, abs=1e-10)
    assert np.linalg.eigvalsh(rho).min() >= -1e-9


def test_spectrum_invariant_under_ring_rotation():
    basis = build_basis(5, 3)
    h1 = build_hamiltonian(BHModel(5, J=1.0, U=2.0), basis).toarray()
    rotated = tuple(((l + 2) % 5, (m + 2) % 5) for l, m in BHModel(5).edges)
    h2 = build_hamiltonian(BHModel(5, J=1.0, U=2.0, edges=rotated), basis).toarray()
    np.testing.assert_allclose(np.linalg.eigvalsh(h1), np.linalg.eigvalsh(h2), atol=1e-10)


def test_eigenstates_conserve_number():
    basis = build_basis(4, 4)
    _, vecs = eigensolve(build_hamiltonian(BHModel(4, J=1.0, U=5.0), basis), k=4)
    for v in vecs.T:
        assert np.trace(correlation_matrix(basis, v)).real == pytest.approx(4.0, abs=1e-10)


def test_quasimomentum_limits_and_sum_rule():
    M, N = 6, 6
    k, s = quasimomentum_distribution(np.full((M, M), N / M))
    assert s[np.argmin(np.abs(k))] == pytest.approx(N)
    reciprocal = np.isclose(np.mod(k * M / (2 * np.pi), 1.0), 0.0) & ~np.isclose(k, 0.0)
    np.testing.assert_allclose(s[reciprocal], 0.0, atol=1e-12)
    assert s.sum() * M / len(k) == pytest.approx(N, abs=1e-6)
    _, flat = quasimomentum_distribution(np.eye(M))
    np.testing.assert_allclose(flat, 1.0, atol=1e-12)
    with pytest.raises(ValueError):
        quasimomentum_distribution(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_crossover_scan_limits_and_threads():
    basis = build_basis(4, 4)
    model = BHModel(4, J=1.0)
    rows = crossover_scan(model, [0.0, 5.0, 1e6], basis)
    assert rows[0][3] == pytest.approx(1.0, abs=1e-9)
    assert rows[-1][4] <= 1e-6
    assert rows == crossover_scan(model, [0.0, 5.0, 1e6], basis, threads=3)
    with pytest.raises(ValueError):
        crossover_scan(BHModel(4, J=0.0), [1.0], basis)


def test_invalid_geometry():
    with pytest.raises(ValueError):
        BHModel(3, edges=[(0, 3)])
    with pytest.raises(ValueError):
        BHModel(3, edges=[(1, 1)])
    with pytest.raises(ValueError):
        BHModel(3, boundary="twisted")


def test_estimator_api():
    ed = BoseHubbardED(n_sites=4, n_particles=4, U=2.0)
    assert clone(ed).get_params() == ed.get_params()
    ed.fit()
    assert ed.correlation_.shape == (4, 4)
    out = ed.transform([[0.0], [20.0]])
    assert out.shape == (2, 4)
    assert out[0, 2] == pytest.approx(1.0, abs=1e-9)
    assert structure_peak(ed.correlation_) > 0
