"""State-vector simulation of 1D spin chains: transverse Ising sweeps, GHZ diagnostics, Trotter products.

Basis convention: qubit 0 is the most significant bit of the amplitude index;
bit value 0 is spin up along z (internal state |a>), 1 is spin down (|b>).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from ._validation import CapacityError, check_finite, check_hermitian, check_int, check_positive, check_state
from .numerics import eigensolve, evolve_path

DEFAULT_MAX_QUBITS = 20
MATRIX_FREE_ABOVE = 14

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def _check_qubits(n, cap=DEFAULT_MAX_QUBITS):
    n = check_int(n, "n", minimum=1)
    if n > cap:
        raise CapacityError(f"{n} qubits exceed the state-vector cap of {cap} (dimension {2**n})")
    return n


def _bits(n):
    idx = np.arange(2**n)
    return (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1


def _bonds(n, boundary):
    bonds = [(j, j + 1) for j in range(n - 1)]
    if boundary == "periodic" and n > 2:
        bonds.append((n - 1, 0))
    return bonds


@dataclass(frozen=True)
class IsingParams:
    """Chain of ``n`` spins with H = B sum_j sigma_x^j + W sum_j sigma_z^j sigma_z^{j+1}."""

    n: int
    W: float
    B: float = 0.0
    boundary: str = "open"
    max_qubits: int = DEFAULT_MAX_QUBITS

    def __post_init__(self):
        check_int(self.n, "n", minimum=2)
        _check_qubits(self.n, self.max_qubits)
        check_finite(self.W, "W")
        check_finite(self.B, "B")
        if self.boundary not in ("open", "periodic"):
            raise ValueError(f"boundary must be 'open' or 'periodic', got {self.boundary!r}")


class IsingHamiltonian:
    """Matrix-free transverse Ising operator; ``H @ psi`` works for any N up to the cap."""

    def __init__(self, n, W, B, boundary="open", zz=None):
        self.n = n
        self.W = W
        self.B = B
        self.boundary = boundary
        self.shape = (2**n, 2**n)
        if zz is None:
            spins = 1 - 2 * _bits(n)
            zz = np.zeros(2**n)
            for a, b in _bonds(n, boundary):
                zz += spins[:, a] * spins[:, b]
        self.zz = zz
        self._idx = np.arange(2**n)

    def with_field(self, B):
        return IsingHamiltonian(self.n, self.W, B, self.boundary, zz=self.zz)

    def __matmul__(self, psi):
        out = (self.W * self.zz) * psi
        if self.B:
            flip = np.zeros_like(psi)
            for j in range(self.n):
                flip += psi[self._idx ^ (1 << (self.n - 1 - j))]
            out = out + self.B * flip
        return out

    def to_sparse(self):
        n = self.n
        dim = 2**n
        rows, cols, vals = [np.arange(dim)], [np.arange(dim)], [self.W * self.zz]
        if self.B:
            for j in range(n):
                rows.append(self._idx)
                cols.append(self._idx ^ (1 << (n - 1 - j)))
                vals.append(np.full(dim, float(self.B)))
        h = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim))
        return h.tocsr()


def build_ising(p, B_value=None):
    """Transverse Ising Hamiltonian at field ``B_value`` (defaults to ``p.B``).

    Returns a sparse matrix for N <= 14 and the matrix-free operator above that.
    """
    B = p.B if B_value is None else check_finite(B_value, "B_value")
    op = IsingHamiltonian(p.n, p.W, B, p.boundary)
    return op.to_sparse() if p.n <= MATRIX_FREE_ABOVE else op


def parity_apply(psi, n):
    """prod_j sigma_x^j psi (flips every spin)."""
    return psi[np.arange(2**n) ^ (2**n - 1)]


def parity_sector_hamiltonian(h, n, sign):
    """Restriction of a parity-symmetric sparse ``h`` to the sector prod sigma_x = ``sign``."""
    dim = 2**n
    half = np.arange(dim // 2)  # top bit 0
    partner = half ^ (dim - 1)
    rows = np.concatenate([half, partner])
    cols = np.concatenate([half, half])
    vals = np.concatenate([np.ones(half.size), sign * np.ones(half.size)]) / math.sqrt(2.0)
    v = sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim // 2))
    return (v.T @ h @ v).tocsr()


def ground_state(p, B_value=None, k=1):
    h = build_ising(p, B_value)
    if not sp.issparse(h):
        h = h.to_sparse()
    return eigensolve(h, k)


# --- GHZ diagnostics ------------------------------------------------------


def pair_indices(n, pair):
    """Basis indices (alpha, beta) of the uniform pair (up...up, down...down) or the Neel pair."""
    full = 2**n - 1
    if pair == "uniform":
        return 0, full
    if pair == "neel":
        up_first = sum(1 << (n - 1 - j) for j in range(1, n, 2))  # up, down, up, down, ...
        return up_first, up_first ^ full
    raise ValueError(f"pair must be 'uniform' or 'neel', got {pair!r}")


@dataclass(frozen=True)
class GHZReport:
    alpha2: float
    beta2: float
    relative_phase: float
    pair: str

    @property
    def fidelity(self):
        return self.alpha2 + self.beta2


def ghz_report(state, n, pair):
    ia, ib = pair_indices(n, pair)
    a, b = state[ia], state[ib]
    phase = float(np.angle(b / a)) if abs(a) > 0 and abs(b) > 0 else 0.0
    return GHZReport(float(abs(a) ** 2), float(abs(b) ** 2), phase, pair)


def raised_cosine_ramp(B0, T):
    """B(t) = B0 (1 + cos(pi t / T)) / 2 on [0, T]."""
    if T <= 0:
        return lambda t: 0.0
    return lambda t: B0 * 0.5 * (1.0 + math.cos(math.pi * min(max(t, 0.0), T) / T))


SWEEP_COLUMNS = ("t", "B_t", "energy", "subspace_fidelity", "parity_leak")


@dataclass
class SweepResult:
    state: np.ndarray
    report: GHZReport
    rows: list = field(default_factory=list)
    parity: int = 1


def adiabatic_sweep(p, B0, T, tol=1e-10, samples=201, ramp=None):
    """Start in the ground state at field ``B0`` and ramp the field to zero over ``T``.

    The final state is projected on the Neel pair for W > 0 and on the uniform
    pair for W < 0. ``rows`` samples (t, B_t, energy, subspace_fidelity,
    parity_leak) along the ramp; ``parity_leak`` is the weight outside the
    initial state's prod sigma_x sector.
    """
    B0 = check_positive(B0, "B0")
    T = check_positive(T, "T", strict=False)
    pair = "neel" if p.W > 0 else "uniform"
    ramp = ramp or raised_cosine_ramp(B0, T)
    _, vecs = ground_state(p, B0)
    psi0 = vecs[:, 0]
    parity = 1 if np.vdot(psi0, parity_apply(psi0, p.n)).real >= 0 else -1
    op = IsingHamiltonian(p.n, p.W, 0.0, p.boundary)

    if T == 0:
        times, states = np.array([0.0]), psi0[None, :]
    else:
        times, states = evolve_path(psi0, lambda t: op.with_field(ramp(t)), 0.0, T, tol=tol,
                                    t_eval=np.linspace(0.0, T, max(samples, 2)))
    rows = []
    for t, psi in zip(times, states):
        h = op.with_field(ramp(t))
        energy = float(np.vdot(psi, h @ psi).real)
        leak = 0.25 * float(np.linalg.norm(psi - parity * parity_apply(psi, p.n)) ** 2)
        rows.append((float(t), float(ramp(t)), energy, ghz_report(psi, p.n, pair).fidelity, leak))
    final = states[-1]
    return SweepResult(final, ghz_report(final, p.n, pair), rows, parity)


def interferometer_phase(state, theta, pair="auto", min_fidelity=0.99):
    """Change of arg(beta/alpha) after the rotation exp(-i theta sigma_z / 2) on every spin.

    The uniform pair gains N * theta; the Neel pair of an even chain gains nothing.
    """
    state = check_state(state)
    n = int(round(math.log2(state.size)))
    if 2**n != state.size:
        raise ValueError("state length is not a power of two")
    if pair == "auto":
        pair = max(("uniform", "neel"), key=lambda q: ghz_report(state, n, q).fidelity)
    before = ghz_report(state, n, pair)
    if before.fidelity < min_fidelity or before.alpha2 == 0 or before.beta2 == 0:
        raise ValueError(
            f"state has {pair}-pair fidelity {before.fidelity:.4f} < {min_fidelity}; relative phase is ill-defined"
        )
    ia, ib = pair_indices(n, pair)
    sz_total = n - 2 * _popcount(np.array([ia, ib]))
    rotated = state[[ia, ib]] * np.exp(-0.5j * theta * sz_total)
    diff = np.angle(rotated[1] / rotated[0]) - np.angle(state[ib] / state[ia])
    return math.remainder(float(diff), 2.0 * math.pi)


def _popcount(x):
    x = np.asarray(x, dtype=np.int64)
    count = np.zeros_like(x)
    while np.any(x):
        count += x & 1
        x = x >> 1
    return count


def uniform_pair_state(n, alpha=1.0, beta=1.0):
    psi = np.zeros(2**n, dtype=complex)
    ia, ib = pair_indices(n, "uniform")
    psi[ia], psi[ib] = alpha, beta
    return psi / np.linalg.norm(psi)


def neel_pair_state(n, alpha=1.0, beta=1.0):
    psi = np.zeros(2**n, dtype=complex)
    ia, ib = pair_indices(n, "neel")
    psi[ia], psi[ib] = alpha, beta
    return psi / np.linalg.norm(psi)


# --- gates and Trotter products -------------------------------------------


def apply_gate(state, gate, qubits):
    """Apply a 2^k x 2^k unitary to the listed qubits of an n-qubit state."""
    n = int(round(math.log2(state.size)))
    k = len(qubits)
    psi = state.reshape([2] * n)
    g = np.asarray(gate).reshape([2] * (2 * k))
    out = np.tensordot(g, psi, axes=(list(range(k, 2 * k)), list(qubits)))
    out = np.moveaxis(out, list(range(k)), list(qubits))
    return out.reshape(-1)


def raman_hamiltonian(omega_r, delta):
    """H_R = (Omega_R |a><b| + h.c.)/2 + delta |b><b| in the (|a>, |b>) basis."""
    return np.array([[0.0, 0.5 * omega_r], [0.5 * np.conj(omega_r), delta]], dtype=complex)


def raman_rotation(state, qubit, omega_r, delta, t):
    """Evolve qubit ``qubit`` under the Raman Hamiltonian for time ``t``."""
    state = check_state(state)
    n = int(round(math.log2(state.size)))
    if isinstance(qubit, bool) or not isinstance(qubit, (int, np.integer)) or not 0 <= qubit < n:
        raise IndexError(f"qubit {qubit!r} out of range for {n} qubits")
    u = la.expm(-1j * t * raman_hamiltonian(omega_r, delta))
    return apply_gate(state, u, [qubit])


@dataclass(frozen=True)
class Term:
    """A one- or two-qubit Hermitian term acting on ``qubits``."""

    matrix: np.ndarray
    qubits: tuple


def _validate_terms(terms, n):
    checked = []
    for term in terms:
        matrix, qubits = (term.matrix, term.qubits) if isinstance(term, Term) else term
        qubits = tuple(int(q) for q in qubits)
        if not 1 <= len(qubits) <= 2:
            raise ValueError(f"terms act on one or two qubits, got support {qubits}")
        if len(set(qubits)) != len(qubits) or any(not 0 <= q < n for q in qubits):
            raise ValueError(f"malformed support {qubits} for {n} qubits")
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.shape != (2 ** len(qubits),) * 2:
            raise ValueError(f"term on {qubits} needs a {2 ** len(qubits)}x{2 ** len(qubits)} matrix")
        check_hermitian(matrix)
        checked.append(Term(matrix, qubits))
    return checked


def ising_terms(n, B, W, boundary="open"):
    """The chain split as all field terms followed by all bond terms."""
    terms = [Term(B * SIGMA_X, (j,)) for j in range(n)]
    zz = np.kron(SIGMA_Z, SIGMA_Z)
    terms += [Term(W * zz, bond) for bond in _bonds(n, boundary)]
    return terms


def trotter_evolve(state, terms, dt, steps):
    """First-order product formula: each step applies exp(-i H_term dt) term by term, in order."""
    state = check_state(state)
    n = int(round(math.log2(state.size)))
    dt = check_positive(dt, "dt")
    steps = check_int(steps, "steps", minimum=0)
    gates = [(la.expm(-1j * dt * t.matrix), t.qubits) for t in _validate_terms(terms, n)]
    psi = state.copy()
    for _ in range(steps):
        for u, qubits in gates:
            psi = apply_gate(psi, u, qubits)
    return psi


def terms_to_sparse(terms, n, max_qubits=12):
    """Sum of the terms as a sparse 2^n matrix (for exact reference propagation)."""
    if n > max_qubits:
        raise CapacityError(f"dense term embedding is limited to {max_qubits} qubits")
    dim = 2**n
    total = np.zeros((dim, dim), dtype=complex)
    for t in _validate_terms(terms, n):
        k = len(t.qubits)
        eye = np.eye(dim, dtype=complex).reshape([2] * n + [dim])
        g = t.matrix.reshape([2] * (2 * k))
        out = np.tensordot(g, eye, axes=(list(range(k, 2 * k)), list(t.qubits)))
        total += np.moveaxis(out, list(range(k)), list(t.qubits)).reshape(dim, dim)
    return sp.csr_matrix(total)
