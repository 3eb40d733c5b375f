"""Mean-field Mott lobes: analytic decoupling boundary and self-consistent Gutzwiller solutions.

All energies are in units of U; inputs are mu/U and zJ/U.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from sklearn.base import BaseEstimator, ClassifierMixin

from ._validation import ConvergenceError, check_finite, check_int, check_positive

logger = logging.getLogger(__name__)

PSI_TOL = 1e-6
FIXED_POINT_TOL = 1e-10
DAMPING = 0.5
MAX_ITER = 10_000
N_RESTARTS = 3
CUTOFF_TAIL_TOL = 1e-8
WARM_BATCH = 32  # below this LAPACK call overhead is cheaper than the sweep


def lobe_boundary(n, mu_over_U):
    """zJ/U at which the Mott lobe of filling ``n`` ends, or None outside (n-1, n)."""
    n = check_int(n, "n", minimum=1)
    x = check_finite(mu_over_U, "mu_over_U")
    if not (n - 1) < x < n:
        return None
    inverse = (n + 1) / (n - x) + n / (x - (n - 1))
    return 1.0 / inverse


def lobe_tip(n):
    """(mu/U, zJ/U) at the tip of lobe ``n``, from maximizing :func:`lobe_boundary`."""
    n = check_int(n, "n", minimum=1)
    root = math.sqrt(n * (n + 1))
    return root - 1.0, (2 * n + 1) - 2.0 * root


def default_cutoff(mu_over_U):
    return max(int(math.ceil(max(mu_over_U, 0.0))) + 4, 4)


def _tridiagonal(mu, zj, psi, n_max):
    """Diagonal (B, n_max+1) and off-diagonal (B, n_max) of the single-site mean-field matrix."""
    n = np.arange(n_max + 1, dtype=float)
    diag = 0.5 * n * (n - 1) - mu[:, None] * n
    off = -(zj * psi)[:, None] * np.sqrt(n[1:])
    return diag, off


def _hamiltonians(mu, zj, psi, n_max):
    diag, off = _tridiagonal(mu, zj, psi, n_max)
    idx = np.arange(n_max + 1)
    h = np.zeros((mu.shape[0], n_max + 1, n_max + 1))
    h[:, idx, idx] = diag
    h[:, idx[:-1], idx[1:]] = off
    h[:, idx[1:], idx[:-1]] = off
    return h


def _expect_a(f):
    k = np.sqrt(np.arange(1, f.shape[1]))
    return np.abs(np.einsum("bk,bk->b", f[:, :-1] * k, f[:, 1:]))


def _ground(mu, zj, psi, n_max):
    w, v = np.linalg.eigh(_hamiltonians(mu, zj, psi, n_max))
    f = v[:, :, 0]
    return w[:, 0], f, _expect_a(f)


def _tri_matvec(diag, off, f):
    out = diag * f
    out[:, :-1] += off * f[:, 1:]
    out[:, 1:] += off * f[:, :-1]
    return out


def _tri_solve(diag, off, rhs):
    # Thomas algorithm, vectorized over the batch; no pivoting
    n = diag.shape[1]
    c = np.empty_like(off)
    d = np.empty_like(rhs)
    denom = diag[:, 0]
    c[:, 0] = off[:, 0] / denom
    d[:, 0] = rhs[:, 0] / denom
    for i in range(1, n):
        denom = diag[:, i] - off[:, i - 1] * c[:, i - 1]
        if i < n - 1:
            c[:, i] = off[:, i] / denom
        d[:, i] = (rhs[:, i] - off[:, i - 1] * d[:, i - 1]) / denom
    x = np.empty_like(rhs)
    x[:, -1] = d[:, -1]
    for i in range(n - 2, -1, -1):
        x[:, i] = d[:, i] - c[:, i] * x[:, i + 1]
    return x


def _count_below(diag, off, x):
    """Sturm count: number of eigenvalues below ``x`` for each tridiagonal matrix."""
    tiny = 1e-300
    q = diag[:, 0] - x
    count = (q < 0).astype(int)
    for i in range(1, diag.shape[1]):
        q = np.where(q == 0, tiny, q)
        q = diag[:, i] - x - off[:, i - 1] ** 2 / q
        count += q < 0
    return count


def _ground_warm(mu, zj, psi, n_max, f_prev, sweeps=2):
    """Ground pair by Rayleigh-quotient iteration from ``f_prev``, LAPACK where that fails.

    A result is accepted only if its residual is at roundoff level and the
    Sturm count certifies no eigenvalue lies below it.
    """
    diag, off = _tridiagonal(mu, zj, psi, n_max)
    f = f_prev.copy()
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(sweeps):
            lam = np.einsum("bk,bk->b", f, _tri_matvec(diag, off, f))
            y = _tri_solve(diag - lam[:, None], off, f)
            f = y / np.linalg.norm(y, axis=1)[:, None]
        hf = _tri_matvec(diag, off, f)
        lam = np.einsum("bk,bk->b", f, hf)
        resid = np.linalg.norm(hf - lam[:, None] * f, axis=1)
        scale = np.abs(diag).max(axis=1) + 2.0 * np.abs(off).max(axis=1, initial=0.0)
        ok = np.isfinite(resid) & (resid <= 1e-13 * np.maximum(scale, 1.0))
        ok &= _count_below(diag, off, lam - 1e-11 * np.maximum(scale, 1.0)) == 0
    bad = np.flatnonzero(~ok)
    if bad.size:
        lam_b, f_b, _ = _ground(mu[bad], zj[bad], psi[bad], n_max)
        lam[bad] = lam_b
        f[bad] = f_b
    return lam, f, _expect_a(f)


def _iterate(mu, zj, psi0, n_max, max_iter=None):
    """Damped fixed-point iteration psi <- (1-d) psi + d <a>, vectorized over points.

    Points still moving after ``max_iter`` sweeps (critical slowing down next to
    the lobe boundary) get a bracketed scalar root solve instead.
    """
    max_iter = MAX_ITER if max_iter is None else max_iter
    psi = psi0.astype(float).copy()
    residual = np.full(psi.shape, np.inf)
    iterations = np.zeros(psi.shape, dtype=int)
    active = np.arange(psi.size)
    _, f, _ = _ground(mu, zj, psi, n_max)
    for it in range(1, max_iter + 1):
        if active.size > WARM_BATCH:
            _, f, a = _ground_warm(mu[active], zj[active], psi[active], n_max, f)
        else:
            _, f, a = _ground(mu[active], zj[active], psi[active], n_max)
        res = np.abs(a - psi[active])
        residual[active] = res
        iterations[active] = it
        done = res < FIXED_POINT_TOL
        psi[active[done]] = a[done]
        keep = ~done
        psi[active[keep]] = (1.0 - DAMPING) * psi[active[keep]] + DAMPING * a[keep]
        active = active[keep]
        f = f[keep]
        if active.size == 0:
            break
    for i in active:
        root, res = _polish(mu[i], zj[i], psi[i], n_max)
        if res < FIXED_POINT_TOL:
            psi[i], residual[i] = root, res
    return psi, residual, iterations


def _polish(mu, zj, psi, n_max):
    """Bracketed root of <a>(psi) - psi for points where damping stalls near a continuous transition."""
    args = (np.array([mu]), np.array([zj]))

    def g(x):
        return float(_ground(*args, np.array([x]), n_max)[2][0]) - x

    hi = math.sqrt(n_max) + 1.0
    lo = psi
    while lo > 1e-9 and g(lo) <= 0:
        lo *= 0.25
    if lo <= 1e-9 or g(hi) >= 0:
        # no positive root below psi: the trivial fixed point
        return 0.0, 0.0
    root = brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return root, abs(g(root))


def mean_field_energy(mu, zj, psi, n_max):
    """Energy per site of the decoupled state: e0(h(psi)) + zJ psi^2."""
    e0, _, _ = _ground(mu, zj, psi, n_max)
    return e0 + zj * psi**2


def _solve(mu, zj, n_max, seed):
    """Lowest-energy fixed point among the trivial psi = 0 solution and random restarts.

    All restarts of all points run as one batch.
    """
    mu = np.asarray(mu, dtype=float)
    zj = np.asarray(zj, dtype=float)
    size = mu.size
    rng = np.random.default_rng(seed)
    starts = rng.uniform(0.05, math.sqrt(n_max), size=(N_RESTARTS, size))
    psi, res, iters = _iterate(np.tile(mu, N_RESTARTS), np.tile(zj, N_RESTARTS), starts.ravel(), n_max)
    psi = psi.reshape(N_RESTARTS, size)
    res = res.reshape(N_RESTARTS, size)
    iters = iters.reshape(N_RESTARTS, size)
    energy = mean_field_energy(np.tile(mu, N_RESTARTS), np.tile(zj, N_RESTARTS), psi.ravel(), n_max)
    energy = energy.reshape(N_RESTARTS, size)

    best_psi = np.zeros(size)
    best_energy = mean_field_energy(mu, zj, best_psi, n_max)
    best_res = np.zeros(size)
    best_iter = np.zeros(size, dtype=int)
    for r in range(N_RESTARTS):
        better = energy[r] < best_energy - 1e-14
        best_psi = np.where(better, psi[r], best_psi)
        best_energy = np.where(better, energy[r], best_energy)
        best_res = np.where(better, res[r], best_res)
        best_iter = np.where(better, iters[r], best_iter)
    return best_psi, best_energy, best_res, best_iter


@dataclass(frozen=True)
class GutzwillerState:
    amplitudes: np.ndarray
    psi: float
    n_max: int
    energy: float
    residual: float
    iterations: int

    @property
    def mean_occupation(self):
        n = np.arange(self.n_max + 1)
        return float(n @ np.abs(self.amplitudes) ** 2)

    @property
    def cutoff_tail(self):
        return float(abs(self.amplitudes[-1]) ** 2)


def gutzwiller_ground(mu_over_U, zJ_over_U, n_max=None, seed=0, psi_tol=PSI_TOL):
    """Self-consistent single-site Gutzwiller ground state.

    With ``n_max=None`` the cutoff starts at ceil(mu/U) + 4 and grows until the
    top Fock amplitude carries less than 1e-8 of the weight.
    """
    mu = check_finite(mu_over_U, "mu_over_U")
    zj = check_positive(zJ_over_U, "zJ_over_U", strict=False)
    auto = n_max is None
    n_max = default_cutoff(mu) if auto else check_int(n_max, "n_max", minimum=1)
    while True:
        psi, energy, res, iters = _solve(np.array([mu]), np.array([zj]), n_max, seed)
        if res[0] >= FIXED_POINT_TOL:
            raise ConvergenceError(
                f"Gutzwiller iteration did not converge in {MAX_ITER} steps at mu/U={mu}, zJ/U={zj} "
                f"(last residual {res[0]:.3e})",
                residual=float(res[0]),
            )
        _, f, _ = _ground(np.array([mu]), np.array([zj]), psi, n_max)
        amplitudes = f[0] * np.sign(f[0][np.argmax(np.abs(f[0]))])
        state = GutzwillerState(amplitudes, float(psi[0]), n_max, float(energy[0]), float(res[0]), int(iters[0]))
        if state.cutoff_tail <= CUTOFF_TAIL_TOL or not auto:
            return state
        n_max += 2


def phase_label(psi, mean_occupation, psi_tol=PSI_TOL):
    return "SF" if psi >= psi_tol else f"MI({int(round(mean_occupation))})"


@dataclass(frozen=True)
class PhaseDiagram:
    mu_over_U: np.ndarray
    zJ_over_U: np.ndarray
    abs_psi: np.ndarray  # shape (len(mu), len(zJ))
    labels: np.ndarray
    seed: int
    n_max: int
    unconverged: int

    def rows(self):
        for i, mu in enumerate(self.mu_over_U):
            for j, zj in enumerate(self.zJ_over_U):
                yield float(mu), float(zj), float(self.abs_psi[i, j]), str(self.labels[i, j])

    def boundary(self):
        """Grid estimate of the MI/SF boundary per mu: midpoint between the last MI and first SF cell.

        Entries are NaN where the column never turns SF, 0 where it is SF at zJ = 0.
        """
        sf = self.abs_psi >= PSI_TOL
        out = np.full(self.mu_over_U.shape, np.nan)
        zj = self.zJ_over_U
        for i in range(len(self.mu_over_U)):
            hits = np.flatnonzero(sf[i])
            if hits.size == 0:
                continue
            j = hits[0]
            out[i] = 0.0 if j == 0 else 0.5 * (zj[j - 1] + zj[j])
        return out

    def lobe_tip(self, n=1):
        """Largest boundary value among mu columns strictly inside lobe ``n``."""
        inside = (self.mu_over_U > n - 1) & (self.mu_over_U < n)
        b = self.boundary()[inside]
        b = b[np.isfinite(b)]
        if b.size == 0:
            return None
        i = int(np.argmax(b))
        return float(self.mu_over_U[inside][np.isfinite(self.boundary()[inside])][i]), float(b[i])


def phase_diagram(n_mu=200, n_j=200, mu_max=2.0, j_max=0.3, n_max=None, seed=0, psi_tol=PSI_TOL):
    """Gutzwiller phase labels on a regular (mu/U, zJ/U) grid including both endpoints."""
    n_mu = check_int(n_mu, "n_mu", minimum=1)
    n_j = check_int(n_j, "n_j", minimum=2)
    mu_max = check_positive(mu_max, "mu_max")
    j_max = check_positive(j_max, "j_max")
    if n_max is None:
        n_max = default_cutoff(mu_max) + int(math.ceil(4 * j_max))
    mus = np.linspace(0.0, mu_max, n_mu)
    zjs = np.linspace(0.0, j_max, n_j)
    mu_grid, zj_grid = np.meshgrid(mus, zjs, indexing="ij")
    psi, _, res, _ = _solve(mu_grid.ravel(), zj_grid.ravel(), n_max, seed)
    unconverged = int(np.count_nonzero(res >= FIXED_POINT_TOL))
    if unconverged:
        logger.warning("%d grid points hit the %d-iteration cap", unconverged, MAX_ITER)
    _, f, _ = _ground(mu_grid.ravel(), zj_grid.ravel(), psi, n_max)
    occupation = (np.abs(f) ** 2) @ np.arange(n_max + 1)
    tail = np.abs(f[:, -1]) ** 2
    if np.any(tail > CUTOFF_TAIL_TOL):
        logger.warning("cutoff n_max=%d carries up to %.2e of the weight", n_max, tail.max())
    labels = np.array([phase_label(p, n, psi_tol) for p, n in zip(psi, occupation)], dtype=object)
    return PhaseDiagram(
        mu_over_U=mus,
        zJ_over_U=zjs,
        abs_psi=psi.reshape(n_mu, n_j),
        labels=labels.reshape(n_mu, n_j),
        seed=seed,
        n_max=n_max,
        unconverged=unconverged,
    )


class GutzwillerMeanField(ClassifierMixin, BaseEstimator):
    """Phase classifier over samples ``X[:, 0] = mu/U``, ``X[:, 1] = zJ/U``.

    Nothing is learned; ``fit`` only validates the hyperparameters so the
    object drops into pipelines and grid searches.
    """

    def __init__(self, n_max=8, seed=0, psi_tol=PSI_TOL):
        self.n_max = n_max
        self.seed = seed
        self.psi_tol = psi_tol

    def fit(self, X=None, y=None):
        check_int(self.n_max, "n_max", minimum=1)
        check_positive(self.psi_tol, "psi_tol")
        self.classes_ = np.array(["SF"] + [f"MI({n})" for n in range(self.n_max + 1)], dtype=object)
        return self

    def _check_X(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != 2:
            raise ValueError(f"X must have shape (n_samples, 2), got {X.shape}")
        if not np.all(np.isfinite(X)) or np.any(X[:, 1] < 0):
            raise ValueError("X must be finite with zJ/U >= 0")
        return X

    def order_parameter(self, X):
        X = self._check_X(X)
        psi, _, _, _ = _solve(X[:, 0], X[:, 1], self.n_max, self.seed)
        return psi

    def predict(self, X):
        X = self._check_X(X)
        psi = self.order_parameter(X)
        _, f, _ = _ground(X[:, 0], X[:, 1], psi, self.n_max)
        occupation = (np.abs(f) ** 2) @ np.arange(self.n_max + 1)
        return np.array([phase_label(p, n, self.psi_tol) for p, n in zip(psi, occupation)], dtype=object)
