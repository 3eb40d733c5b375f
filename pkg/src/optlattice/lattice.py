"""Single-atom optical lattice formulas and the Gaussian-overlap collision shift.

Units are arbitrary but consistent, with hbar = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_finite, check_positive


@dataclass(frozen=True)
class LatticeParams:
    """Standing-wave lattice seen by a two-level atom.

    ``detuning`` < 0 is a blue lattice (atoms sit at intensity nodes), > 0 red.
    """

    rabi_peak: float
    detuning: float
    wavenumber: float
    mass: float
    linewidth: float = 0.0

    def __post_init__(self):
        check_positive(self.rabi_peak, "rabi_peak")
        check_finite(self.detuning, "detuning")
        if self.detuning == 0:
            raise ValueError("detuning must be nonzero")
        check_positive(self.wavenumber, "wavenumber")
        check_positive(self.mass, "mass")
        check_positive(self.linewidth, "linewidth", strict=False)

    @property
    def spacing(self):
        """Lattice period lambda/2 = pi/k."""
        return math.pi / self.wavenumber

    @property
    def validity_ratio(self):
        """Omega_0/|Delta|; the adiabatic elimination wants this small."""
        return self.rabi_peak / abs(self.detuning)

    @property
    def recoil_energy(self):
        return self.wavenumber**2 / (2.0 * self.mass)

    @property
    def potential_minimum(self):
        """Position of the lattice site nearest the origin (x >= 0)."""
        return 0.0 if self.detuning < 0 else math.pi / (2.0 * self.wavenumber)


def optical_potential(x, p):
    """AC-Stark potential -Omega(x)^2 / (4 Delta) with Omega(x) = Omega_0 sin(kx)."""
    rabi = p.rabi_peak * np.sin(p.wavenumber * np.asarray(x, dtype=float))
    out = -(rabi**2) / (4.0 * p.detuning)
    return float(out) if np.ndim(out) == 0 else out


def trap_frequency(p):
    """Harmonic frequency at the bottom of a lattice site."""
    if p.detuning == 0:
        raise ValueError("trap frequency undefined at zero detuning")
    return abs(p.rabi_peak * p.wavenumber) / math.sqrt(2.0 * abs(p.detuning) * p.mass)


def spontaneous_rate_blue(p):
    """Effective photon scattering rate of an atom trapped in a blue lattice.

    Only defined for Delta < 0; a red lattice traps atoms at intensity maxima
    and needs a different estimate.
    """
    if p.detuning >= 0:
        raise ValueError(
            "spontaneous_rate_blue requires a blue-detuned lattice (detuning < 0); "
            "the red-detuned regime is unsupported"
        )
    return p.linewidth / (4.0 * abs(p.detuning)) * trap_frequency(p)


@dataclass(frozen=True)
class GaussianWell:
    """Motional ground state of one trap: a separable Gaussian density.

    ``widths`` are the rms widths of |psi_0|^2 along x, y, z. ``center`` maps a
    time to the x position of the trap (defaults to fixed at the origin).
    """

    widths: tuple
    center: object = None

    def __post_init__(self):
        widths = tuple(float(w) for w in self.widths)
        if len(widths) != 3:
            raise ValueError(f"widths needs three entries (x, y, z), got {len(widths)}")
        for w in widths:
            if not math.isfinite(w) or w <= 0:
                raise ValueError(f"well widths must be positive, got {widths}")
        object.__setattr__(self, "widths", widths)

    @classmethod
    def isotropic(cls, width, center=None):
        return cls((width, width, width), center)

    @classmethod
    def from_trap_frequency(cls, mass, omega, center=None):
        """Ground state of an isotropic harmonic trap: rms width 1/sqrt(2 m omega)."""
        check_positive(mass, "mass")
        check_positive(omega, "omega")
        return cls.isotropic(1.0 / math.sqrt(2.0 * mass * omega), center)

    def position(self, t):
        if self.center is None:
            return 0.0
        return float(self.center(t)) if callable(self.center) else float(self.center)


def overlap_factor(displacement, widths):
    """Integral of the product of two equal Gaussian densities offset by ``displacement`` along x."""
    ax, ay, az = widths
    norm = 1.0 / ((2.0 * math.sqrt(math.pi)) ** 3 * ax * ay * az)
    return norm * np.exp(-np.square(displacement) / (4.0 * ax * ax))


def contact_shift(displacement, scattering_length, widths, mass):
    """Contact-interaction energy of two wells separated by ``displacement`` along x."""
    coupling = 4.0 * math.pi * scattering_length / mass
    return coupling * overlap_factor(displacement, widths)


def interaction_shift(a_s, well_a, well_b, t, m):
    """Collisional energy shift between atoms held in ``well_a`` and ``well_b`` at time ``t``."""
    check_finite(a_s, "a_s")
    check_positive(m, "m")
    if well_a.widths != well_b.widths:
        raise ValueError("wells must share their widths along every axis")
    d = well_a.position(t) - well_b.position(t)
    return float(contact_shift(d, a_s, well_a.widths, m))
