"""Input validation helpers shared by the estimators and functional API."""

from __future__ import annotations

import math
from numbers import Integral, Real

import numpy as np
import scipy.sparse as sp

HERMITIAN_TOL = 1e-12


class CapacityError(ValueError):
    """A requested Hilbert space exceeds the configured dimension cap."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before meeting its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


def check_positive(value, name, strict=True):
    if not isinstance(value, Real) or not math.isfinite(value):
        raise ValueError(f"{name} must be a finite real number, got {value!r}")
    if strict and value <= 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")
    if not strict and value < 0:
        raise ValueError(f"{name} must be >= 0, got {value!r}")
    return float(value)


def check_finite(value, name):
    if not isinstance(value, Real) or not math.isfinite(value):
        raise ValueError(f"{name} must be a finite real number, got {value!r}")
    return float(value)


def check_int(value, name, minimum=None, maximum=None):
    if isinstance(value, bool) or not isinstance(value, Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ValueError(f"{name} must be <= {maximum}, got {value}")
    return value


def hermiticity_defect(h):
    """Largest entrywise deviation |h_ij - conj(h_ji)|."""
    if sp.issparse(h):
        diff = (h - h.conj().T).tocoo()
        return float(np.abs(diff.data).max()) if diff.nnz else 0.0
    h = np.asarray(h)
    return float(np.abs(h - h.conj().T).max()) if h.size else 0.0


def check_hermitian(h, tol=HERMITIAN_TOL):
    """Validate a square Hermitian matrix (dense or scipy.sparse); returns it unchanged."""
    if not sp.issparse(h):
        h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {h.shape}")
    data = h.data if sp.issparse(h) else h
    if not np.all(np.isfinite(data)):
        raise ValueError("matrix contains non-finite entries")
    defect = hermiticity_defect(h)
    if defect > tol:
        raise ValueError(f"matrix is not Hermitian: max |H - H^dagger| = {defect:.3e} > {tol:.0e}")
    return h


def check_state(psi, dim=None, normalized=True, tol=1e-9):
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or psi.size == 0:
        raise ValueError(f"state must be a non-empty 1D amplitude vector, got shape {psi.shape}")
    if dim is not None and psi.size != dim:
        raise ValueError(f"state has dimension {psi.size}, expected {dim}")
    if not np.all(np.isfinite(psi)):
        raise ValueError("state contains non-finite amplitudes")
    if normalized:
        norm2 = float(np.vdot(psi, psi).real)
        if abs(norm2 - 1.0) > tol:
            raise ValueError(f"state is not normalized: |psi|^2 = {norm2:.12g}")
    return psi
