"""Exact diagonalization of the Bose-Hubbard model in a fixed-N Fock basis."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_finite, check_hermitian, check_int, check_positive
from .fock import DEFAULT_DIM_CAP, FockBasis
from .numerics import eigensolve

DEGENERACY_TOL = 1e-10


def ring_edges(n_sites):
    if n_sites == 1:
        return ()
    return tuple(sorted({tuple(sorted((l, (l + 1) % n_sites))) for l in range(n_sites)}))


def chain_edges(n_sites):
    return tuple((l, l + 1) for l in range(n_sites - 1))


@dataclass(frozen=True)
class BHModel:
    """Bose-Hubbard parameters on an arbitrary bond graph.

    ``edges`` holds undirected nearest-neighbour bonds; each bond contributes
    -J (a_l^dag a_m + a_m^dag a_l).
    """

    n_sites: int
    J: float = 1.0
    U: float = 0.0
    mu: float = 0.0
    edges: tuple = None
    boundary: str = "periodic"
    dimensionality: int = 1

    def __post_init__(self):
        check_int(self.n_sites, "n_sites", minimum=1)
        check_positive(self.J, "J", strict=False)
        check_finite(self.U, "U")
        check_finite(self.mu, "mu")
        check_int(self.dimensionality, "dimensionality", minimum=1)
        if self.boundary not in ("open", "periodic"):
            raise ValueError(f"boundary must be 'open' or 'periodic', got {self.boundary!r}")
        if self.edges is None:
            edges = ring_edges(self.n_sites) if self.boundary == "periodic" else chain_edges(self.n_sites)
        else:
            edges = set()
            for l, m in self.edges:
                if l == m:
                    raise ValueError(f"self-loop at site {l}")
                if not (0 <= l < self.n_sites and 0 <= m < self.n_sites):
                    raise ValueError(f"edge ({l}, {m}) references a site outside 0..{self.n_sites - 1}")
                edges.add((min(l, m), max(l, m)))
            edges = tuple(sorted(edges))
        object.__setattr__(self, "edges", edges)

    @property
    def coordination(self):
        """z = 2d nearest neighbours of a hypercubic lattice."""
        return 2 * self.dimensionality


def hop_operator(basis, l, m):
    """Sparse matrix of a_l^dagger a_m in ``basis``."""
    occ = basis.occupations
    src = np.flatnonzero(occ[:, m] > 0)
    if src.size == 0:
        return sp.csr_matrix((basis.dim, basis.dim))
    new = occ[src].copy()
    amp = np.sqrt((new[:, l] + 1.0) * new[:, m])
    new[:, m] -= 1
    new[:, l] += 1
    dst = np.fromiter((basis.rank(row) for row in map(tuple, new.tolist())), dtype=np.int64, count=src.size)
    return sp.csr_matrix((amp, (dst, src)), shape=(basis.dim, basis.dim))


def _check_sizes(model, basis):
    if model.n_sites != basis.n_sites:
        raise ValueError(f"model has {model.n_sites} sites but basis has {basis.n_sites}")


def interaction_diagonal(basis, U):
    n = basis.occupations
    return 0.5 * U * (n * (n - 1)).sum(axis=1)


def build_hamiltonian(model, basis):
    """Sparse Bose-Hubbard Hamiltonian: hopping, on-site U/2 n(n-1) and -mu n."""
    _check_sizes(model, basis)
    n = basis.occupations
    diag = interaction_diagonal(basis, model.U) - model.mu * n.sum(axis=1)
    h = sp.diags(diag.astype(float), format="csr")
    if model.J != 0.0:
        for l, m in model.edges:
            hop = hop_operator(basis, l, m)
            h = h - model.J * (hop + hop.T)
    return h.tocsr()


@dataclass(frozen=True)
class GroundObservables:
    energy: float
    correlation: np.ndarray
    fluctuations: np.ndarray
    gap: float
    degenerate: bool
    state: np.ndarray = field(repr=False)


def correlation_matrix(basis, vector):
    """rho_{l,m} = <a_l^dagger a_m> for a state in ``basis``."""
    M = basis.n_sites
    prob = np.abs(vector) ** 2
    rho = np.zeros((M, M), dtype=complex)
    rho[np.diag_indices(M)] = basis.occupations.T @ prob
    for l in range(M):
        for m in range(l + 1, M):
            val = np.vdot(vector, hop_operator(basis, l, m) @ vector)
            rho[l, m] = val
            rho[m, l] = np.conj(val)
    return rho


def number_fluctuations(basis, vector):
    """(Delta n_l)^2 = <n_l^2> - <n_l>^2 for every site."""
    prob = np.abs(vector) ** 2
    n = basis.occupations.astype(float)
    mean = n.T @ prob
    return (n**2).T @ prob - mean**2


def interaction_energy(basis, vector, U):
    """Expectation of U/2 sum_l n_l (n_l - 1)."""
    return float(interaction_diagonal(basis, U) @ (np.abs(vector) ** 2))


def ground_observables(model, basis):
    """Ground-state energy, rho, site fluctuations and the gap E1 - E0.

    With a degenerate ground level the first returned eigenvector is used and
    ``degenerate`` is set.
    """
    h = build_hamiltonian(model, basis)
    k = min(2, basis.dim)
    values, vectors = eigensolve(h, k)
    gap = float(values[1] - values[0]) if k == 2 else float("inf")
    v = vectors[:, 0]
    return GroundObservables(
        energy=float(values[0]),
        correlation=correlation_matrix(basis, v),
        fluctuations=number_fluctuations(basis, v),
        gap=gap,
        degenerate=gap < DEGENERACY_TOL,
        state=v,
    )


def quasimomentum_distribution(rho, k=None, points_per_site=4):
    """Lattice part of the time-of-flight pattern, S(k) = (1/M) sum_lm e^{ik(l-m)} rho_lm.

    Returns ``(k, S)``. The default grid has ``points_per_site * M`` points on
    [-pi, pi); on any uniform grid of at least M points, sum(S) * M / len(k) = N.
    """
    rho = check_hermitian(np.asarray(rho, dtype=complex), tol=1e-9)
    M = rho.shape[0]
    if k is None:
        K = points_per_site * M
        k = -np.pi + 2.0 * np.pi * np.arange(K) / K
    k = np.asarray(k, dtype=float)
    sites = np.arange(M)
    phase = np.exp(1j * np.outer(k, sites))  # e^{ikl}
    s = np.einsum("kl,lm,km->k", phase, rho, phase.conj()) / M
    return k, s.real


def structure_peak(rho):
    """S(k=0) = (1/M) sum_lm rho_lm."""
    rho = np.asarray(rho)
    return float(rho.sum().real / rho.shape[0])


SCAN_COLUMNS = ("U_over_J", "E0", "gap", "S0_over_N", "dn2_site0", "degenerate_flag")


def _scan_row(model, basis, ratio):
    obs = ground_observables(replace(model, U=ratio * model.J), basis)
    s0 = structure_peak(obs.correlation) / basis.n_particles if basis.n_particles else 0.0
    return (float(ratio), obs.energy, obs.gap, s0, float(obs.fluctuations[0]), int(obs.degenerate))


def crossover_scan(model, ratios, basis, threads=1):
    """One row per U/J value (J taken from ``model``), ordered as ``ratios``."""
    if model.J <= 0:
        raise ValueError("crossover_scan needs J > 0 to define U/J")
    ratios = [check_finite(float(r), "U/J") for r in ratios]
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda r: _scan_row(model, basis, r), ratios))
    return [_scan_row(model, basis, r) for r in ratios]


class BoseHubbardED(TransformerMixin, BaseEstimator):
    """Ground-state solver with an estimator interface.

    ``fit`` diagonalizes the model at the configured ``U``; ``transform`` maps a
    column of U/J values onto rows of (E0, gap, S(0)/N, dn2_site0).

    Examples
    --------
    >>> ed = BoseHubbardED(n_sites=4, n_particles=4, U=0.0).fit()
    >>> round(float(ed.correlation_[0, 2].real), 12)
    1.0
    """

    def __init__(self, n_sites=4, n_particles=4, J=1.0, U=0.0, mu=0.0, boundary="periodic",
                 dim_cap=DEFAULT_DIM_CAP, threads=1):
        self.n_sites = n_sites
        self.n_particles = n_particles
        self.J = J
        self.U = U
        self.mu = mu
        self.boundary = boundary
        self.dim_cap = dim_cap
        self.threads = threads

    def _model(self):
        return BHModel(self.n_sites, J=self.J, U=self.U, mu=self.mu, boundary=self.boundary)

    def fit(self, X=None, y=None):
        self.basis_ = FockBasis(self.n_sites, self.n_particles, dim_cap=self.dim_cap)
        obs = ground_observables(self._model(), self.basis_)
        self.energy_ = obs.energy
        self.correlation_ = obs.correlation
        self.fluctuations_ = obs.fluctuations
        self.gap_ = obs.gap
        self.degenerate_ = obs.degenerate
        self.ground_state_ = obs.state
        return self

    def transform(self, X):
        check_is_fitted(self, "basis_")
        ratios = np.asarray(X, dtype=float).reshape(-1)
        rows = crossover_scan(self._model(), ratios, self.basis_, threads=self.threads)
        return np.array([row[1:5] for row in rows], dtype=float).reshape(len(rows), 4)
