"""Occupation-number basis for N bosons on M sites."""

from __future__ import annotations

import math

import numpy as np

from ._validation import CapacityError, check_int

DEFAULT_DIM_CAP = 2_000_000


def fock_dimension(n_sites, n_particles):
    """C(N + M - 1, N)."""
    return math.comb(n_particles + n_sites - 1, n_particles)


def _compositions(n, m):
    # lexicographically descending: (n, 0, ..., 0) first
    if m == 1:
        yield (n,)
        return
    for k in range(n, -1, -1):
        for rest in _compositions(n - k, m - 1):
            yield (k, *rest)


class FockBasis:
    """All occupation tuples with ``sum == n_particles``, in descending lexicographic order.

    ``rank`` is a hash lookup, so ``basis.rank(basis.unrank(i)) == i``.
    """

    def __init__(self, n_sites, n_particles, dim_cap=DEFAULT_DIM_CAP):
        self.n_sites = check_int(n_sites, "n_sites", minimum=1)
        self.n_particles = check_int(n_particles, "n_particles", minimum=0)
        dim = fock_dimension(self.n_sites, self.n_particles)
        if dim > dim_cap:
            raise CapacityError(
                f"Fock space of {self.n_particles} bosons on {self.n_sites} sites has dimension "
                f"{dim}, above the cap of {dim_cap}"
            )
        self.states = list(_compositions(self.n_particles, self.n_sites))
        self._index = {s: i for i, s in enumerate(self.states)}
        self.occupations = np.array(self.states, dtype=np.int64).reshape(dim, self.n_sites)

    @property
    def dim(self):
        return len(self.states)

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __contains__(self, state):
        return tuple(state) in self._index

    def rank(self, state):
        try:
            return self._index[tuple(state)]
        except KeyError:
            raise KeyError(f"{tuple(state)} is not in the {self.n_sites}-site, N={self.n_particles} basis") from None

    def unrank(self, index):
        return self.states[index]

    def __repr__(self):
        return f"FockBasis(n_sites={self.n_sites}, n_particles={self.n_particles}, dim={self.dim})"


def build_basis(n_sites, n_particles, dim_cap=DEFAULT_DIM_CAP):
    return FockBasis(n_sites, n_particles, dim_cap=dim_cap)


def _check_site(state, site):
    if isinstance(site, bool) or not isinstance(site, (int, np.integer)) or not 0 <= site < len(state):
        raise IndexError(f"site {site!r} out of range for {len(state)} sites")


def apply_hop(state, l, m):
    """Act with a_l^dagger a_m on an occupation tuple.

    Returns ``(new_state, amplitude)`` or ``None`` when site ``m`` is empty.
    """
    _check_site(state, l)
    _check_site(state, m)
    if l == m:
        raise ValueError("hop needs two distinct sites")
    n_l, n_m = state[l], state[m]
    if n_m == 0:
        return None
    new = list(state)
    new[m] -= 1
    new[l] += 1
    return tuple(new), math.sqrt((n_l + 1) * n_m)


def number_operator(state, l):
    _check_site(state, l)
    return state[l]
