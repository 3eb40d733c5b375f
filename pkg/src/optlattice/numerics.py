"""Numerical kernels: Hermitian eigensolver, Schrödinger propagation, adaptive quadrature.

Conventions: hbar = 1, so a generator ``H`` with energies in some unit evolves a
state over times measured in the inverse of that unit.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import IntegrationWarning, quad, solve_ivp

from ._validation import ConvergenceError, check_hermitian, check_positive, check_state

DENSE_MAX_DIM = 512
RESIDUAL_RTOL = 1e-9


def operator_norm_bound(h):
    """Cheap upper bound on the spectral norm (max absolute column sum)."""
    if sp.issparse(h):
        return float(spla.norm(h, 1))
    return float(np.linalg.norm(np.asarray(h), 1))


def eigensolve(h, k=1, check=True):
    """Lowest ``k`` eigenpairs of a Hermitian matrix.

    Dense inputs and sparse inputs of dimension <= 512 go through LAPACK; larger
    sparse inputs use implicitly restarted Lanczos (ARPACK). Within a degenerate
    eigenspace any orthonormal basis may be returned.

    Returns
    -------
    values : ndarray, shape (k,)
        Ascending eigenvalues.
    vectors : ndarray, shape (dim, k)
        Orthonormal eigenvectors as columns.
    """
    if check:
        h = check_hermitian(h)
    dim = h.shape[0]
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or not 1 <= k <= dim:
        raise ValueError(f"k must be an integer in [1, {dim}], got {k!r}")

    if not sp.issparse(h) or dim <= DENSE_MAX_DIM or k >= dim - 1:
        dense = h.toarray() if sp.issparse(h) else np.asarray(h)
        values, vectors = la.eigh(dense, subset_by_index=[0, k - 1], driver="evr")
    else:
        rng = np.random.default_rng(0)
        v0 = rng.standard_normal(dim)
        if np.iscomplexobj(h.data):
            v0 = v0 + 1j * rng.standard_normal(dim)
        ncv = min(dim, max(2 * k + 1, 24))
        values, vectors = spla.eigsh(h, k=k, which="SA", tol=0, v0=v0, ncv=ncv, maxiter=dim * 20)
        order = np.argsort(values)
        values, vectors = values[order], vectors[:, order]
        # ARPACK can return a non-orthonormal basis inside near-degenerate clusters
        vectors, _ = np.linalg.qr(vectors)
        rayleigh = vectors.conj().T @ (h @ vectors)
        rayleigh = 0.5 * (rayleigh + rayleigh.conj().T)
        values, rot = np.linalg.eigh(rayleigh)
        vectors = vectors @ rot

    scale = max(operator_norm_bound(h), np.finfo(float).tiny)
    residuals = np.linalg.norm(h @ vectors - vectors * values, axis=0)
    worst = float(residuals.max())
    if worst > RESIDUAL_RTOL * scale:
        raise ConvergenceError(
            f"eigenpair residual {worst:.3e} exceeds {RESIDUAL_RTOL:.0e} * |H| = {RESIDUAL_RTOL * scale:.3e}",
            residual=worst,
        )
    return np.asarray(values, dtype=float), vectors


def _as_generator(generator):
    if callable(generator):
        return generator
    matrix = generator
    return lambda t: matrix


def _segments(t0, t1, breakpoints):
    inner = sorted(float(b) for b in breakpoints if t0 < b < t1)
    edges = [t0, *inner, t1]
    return [(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def evolve_path(psi0, generator, t0, t1, tol=1e-10, breakpoints=(), t_eval=None):
    """Integrate ``i dpsi/dt = H(t) psi`` from ``t0`` to ``t1``.

    ``generator`` is either a fixed matrix or a callable ``t -> H(t)`` whose
    result supports ``@`` with a vector. ``breakpoints`` mark discontinuities of
    ``H(t)`` (the integrator restarts there). The state is never renormalized,
    so norm drift reports integration error.

    Returns ``(times, states)`` where ``states[i]`` is the state at ``times[i]``;
    the final entry is always ``t1``.
    """
    psi0 = check_state(psi0)
    tol = check_positive(tol, "tol")
    t0, t1 = float(t0), float(t1)
    if not (np.isfinite(t0) and np.isfinite(t1)) or t1 < t0:
        raise ValueError(f"need finite t0 <= t1, got [{t0}, {t1}]")
    gen = _as_generator(generator)

    def rhs(t, y):
        with np.errstate(invalid="ignore", over="ignore"):
            dy = -1j * (gen(t) @ y)
        if not np.all(np.isfinite(dy)):
            raise ValueError(f"generator produced non-finite values at t={t!r}")
        return dy

    requested = np.array([] if t_eval is None else np.asarray(t_eval, dtype=float))
    if requested.size and (requested.min() < t0 or requested.max() > t1):
        raise ValueError("t_eval must lie inside [t0, t1]")

    times, states = [], []
    psi = psi0.copy()
    for a, b in _segments(t0, t1, breakpoints):
        last = b == t1
        mask = (requested >= a) & ((requested <= b) if last else (requested < b))
        inside = np.sort(requested[mask])
        sol = solve_ivp(
            rhs, (a, b), psi, method="DOP853", rtol=tol, atol=tol,
            t_eval=np.unique(np.append(inside, b)),
        )
        if sol.status != 0:
            raise ConvergenceError(f"ODE integration failed on [{a}, {b}]: {sol.message}")
        for j, t in enumerate(sol.t):
            if t < b or last:
                times.append(float(t))
                states.append(sol.y[:, j])
        psi = sol.y[:, -1]
    if not times or times[-1] != t1:
        times.append(t1)
        states.append(psi)
    return np.asarray(times), np.asarray(states)


def evolve(psi0, generator, t0, t1, tol=1e-10, breakpoints=()):
    """Final state of :func:`evolve_path` at ``t1``."""
    _, states = evolve_path(psi0, generator, t0, t1, tol=tol, breakpoints=breakpoints)
    return states[-1]


def quadrature(f, a, b, tol=1e-10, points=None):
    """Adaptive Gauss-Kronrod integral of a real function with absolute tolerance ``tol``."""
    tol = check_positive(tol, "tol")
    a, b = float(a), float(b)
    if not (np.isfinite(a) and np.isfinite(b)) or b < a:
        raise ValueError(f"need finite a <= b, got [{a}, {b}]")
    if a == b:
        return 0.0

    def checked(x):
        y = f(x)
        if not np.isfinite(y):
            raise ValueError(f"integrand is not finite at x={x!r}")
        return y

    inner = None
    if points is not None:
        inner = [p for p in points if a < p < b] or None
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            value, err = quad(checked, a, b, epsabs=tol * 0.1, epsrel=0.0, limit=1000, points=inner)
        except IntegrationWarning as exc:
            raise ConvergenceError(f"quadrature did not reach tol={tol:.1e}: {exc}") from exc
    if err > tol:
        raise ConvergenceError(f"quadrature error estimate {err:.2e} exceeds tol={tol:.1e}", residual=err)
    return float(value)
