"""Two-qubit phase gates for atoms in optical lattices.

Two mechanisms are simulated:

* collisional: state-selective transport brings two atoms into the same well;
  the contact interaction shifts the energy and the time integral of that
  shift is the gate phase (adiabatic limit).
* Rydberg dipole gates: each atom's logical |1> is laser-coupled to a Rydberg
  level |r>, and the pair interacts with energy u when both are excited. The
  9-level internal dynamics is integrated directly.

Phases follow the hbar = 1, exp(-iHt) convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_finite, check_positive
from .lattice import contact_shift, overlap_factor
from .numerics import evolve_path, quadrature

LOGICAL = ("00", "01", "10", "11")
ENDPOINT_OVERLAP_MAX = 1e-12


def wrap_phase(phi):
    """Map an angle into (-pi, pi]."""
    out = math.remainder(float(phi), 2.0 * math.pi)
    return math.pi if out == -math.pi else out


@dataclass(frozen=True)
class TruthTable:
    """Phases and return populations of the four logical inputs."""

    phases: dict
    populations: dict
    diagnostics: dict = field(default_factory=dict)

    @property
    def leakage(self):
        return 1.0 - min(self.populations[k] for k in LOGICAL)

    @property
    def entangling_phase(self):
        """phi_11 - phi_10 - phi_01 + phi_00, wrapped; blind to single-atom phases."""
        p = self.phases
        return wrap_phase(p["11"] - p["10"] - p["01"] + p["00"])

    def unitary(self):
        """Diagonal gate matrix in the |00>, |01>, |10>, |11> basis."""
        return np.diag([math.sqrt(self.populations[k]) * np.exp(1j * self.phases[k]) for k in LOGICAL])

    def to_dict(self):
        return {
            "phases": {k: float(self.phases[k]) for k in LOGICAL},
            "populations": {k: float(self.populations[k]) for k in LOGICAL},
            "entangling_phase": float(self.entangling_phase),
            "leakage": float(self.leakage),
            "diagnostics": {k: _jsonable(v) for k, v in sorted(self.diagnostics.items())},
        }


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


# --- collisional gate -----------------------------------------------------


@dataclass(frozen=True)
class Trajectory:
    """Relative displacement d(t) = x_a(t) - x_b(t) on [t_start, t_end]."""

    displacement: object
    t_start: float
    t_end: float
    breakpoints: tuple = ()

    def __call__(self, t):
        return float(self.displacement(t))

    def reversed(self):
        """The time-reversed path t -> d(-t)."""
        d = self.displacement
        return Trajectory(lambda t: d(-t), -self.t_end, -self.t_start, tuple(-b for b in self.breakpoints))


def approach_hold_return(d_far, d_hold, t_move, t_hold):
    """Raised-cosine approach over ``t_move``, constant ``d_hold`` for ``t_hold``, mirrored return.

    Centred on t = 0, so it spans [-tau, tau] with tau = t_move + t_hold / 2.
    ``t_move = 0`` is instantaneous transport.
    """
    check_positive(t_move, "t_move", strict=False)
    check_positive(t_hold, "t_hold", strict=False)
    half = 0.5 * t_hold
    tau = t_move + half
    if tau <= 0:
        raise ValueError("trajectory has zero duration")

    def d(t):
        s = abs(t)
        if s >= tau:
            return d_far
        if s <= half:
            return d_hold
        x = (s - half) / t_move
        return d_hold + (d_far - d_hold) * 0.5 * (1.0 - math.cos(math.pi * x))

    return Trajectory(d, -tau, tau, (-half, half) if t_hold > 0 else (0.0,))


@dataclass(frozen=True)
class GatePhaseReport:
    phase: float
    phase_a: float
    phase_b: float
    phase_ab: float
    adiabaticity: float
    max_shift: float
    trap_frequency: float


def _well_widths(wells):
    a, b = wells
    if a.widths != b.widths:
        raise ValueError("wells must share their widths along every axis")
    return a.widths


def collisional_phase(traj, wells, a_s, m, trap_frequency=None, tol=1e-10):
    """Interaction phase accumulated along ``traj`` in the adiabatic limit.

    The kinematic single-particle phases are reported as zero: they depend on
    transport details and cancel in the entangling phase. ``trap_frequency``
    defaults to that of a harmonic well whose ground state has the x width.
    """
    widths = _well_widths(wells)
    check_finite(a_s, "a_s")
    check_positive(m, "m")
    if trap_frequency is None:
        trap_frequency = 1.0 / (2.0 * m * widths[0] ** 2)
    for t in (traj.t_start, traj.t_end):
        ov = math.exp(-traj(t) ** 2 / (4.0 * widths[0] ** 2))
        if ov > ENDPOINT_OVERLAP_MAX:
            raise ValueError(
                f"wave packets overlap at the trajectory endpoint t={t} (factor {ov:.2e}); "
                "the atoms must start and end separated"
            )

    def shift(t):
        return contact_shift(traj(t), a_s, widths, m)

    phase_ab = quadrature(shift, traj.t_start, traj.t_end, tol=tol, points=traj.breakpoints)
    samples = np.linspace(traj.t_start, traj.t_end, 4001)
    grid = np.concatenate([samples, np.asarray(traj.breakpoints, dtype=float)])
    max_shift = float(np.max(np.abs([shift(t) for t in grid])))
    return GatePhaseReport(
        phase=wrap_phase(phase_ab),
        phase_a=0.0,
        phase_b=0.0,
        phase_ab=phase_ab,
        adiabaticity=max_shift / trap_frequency,
        max_shift=max_shift,
        trap_frequency=trap_frequency,
    )


def solve_hold_time(d_far, d_hold, t_move, wells, a_s, m, target=math.pi, tol=1e-10):
    """Hold time that makes the approach-hold-return path accumulate ``target``.

    The hold segment contributes shift(d_hold) * t_hold exactly, so the answer
    is (target - transport phase) / shift(d_hold).
    """
    check_positive(target, "target")
    widths = _well_widths(wells)
    hold_shift = float(contact_shift(d_hold, a_s, widths, m))
    if not hold_shift > 0 or overlap_factor(d_hold, widths) == 0:
        raise ValueError(f"target phase unreachable: interaction shift at the hold point is {hold_shift:.3e}")
    if t_move > 0:
        transport = collisional_phase(approach_hold_return(d_far, d_hold, t_move, 0.0), wells, a_s, m, tol=tol).phase_ab
    else:
        transport = 0.0
    t_hold = (target - transport) / hold_shift
    if t_hold < 0:
        raise ValueError(f"transport alone accumulates {transport:.6g} rad, more than the target {target:.6g}")
    return t_hold


def collisional_truth_table(phi_ab):
    """Ideal gate: only the |0,1> input (atom a moving into atom b) picks up ``phi_ab``."""
    phases = {"00": 0.0, "01": float(phi_ab), "10": 0.0, "11": 0.0}
    return TruthTable(phases, {k: 1.0 for k in LOGICAL})


@dataclass(frozen=True)
class CollisionalSetup:
    """Shipped default: unit mass and trap frequency, separation 12 widths, slow 20/omega moves."""

    mass: float = 1.0
    trap_frequency: float = 1.0
    scattering_length: float = 0.01
    far_widths: float = 12.0
    t_move: float = 20.0
    d_hold: float = 0.0

    @property
    def width(self):
        return 1.0 / math.sqrt(2.0 * self.mass * self.trap_frequency)

    @property
    def d_far(self):
        return self.far_widths * self.width

    def wells(self):
        from .lattice import GaussianWell

        w = GaussianWell.isotropic(self.width)
        return w, w


def collisional_gate(setup=None, target=math.pi, tol=1e-10):
    """Solve the hold time for ``target`` and return (hold time, report, truth table)."""
    setup = setup or CollisionalSetup()
    wells = setup.wells()
    t_hold = solve_hold_time(setup.d_far, setup.d_hold, setup.t_move, wells,
                             setup.scattering_length, setup.mass, target, tol=tol)
    traj = approach_hold_return(setup.d_far, setup.d_hold, setup.t_move, t_hold)
    report = collisional_phase(traj, wells, setup.scattering_length, setup.mass,
                               trap_frequency=setup.trap_frequency, tol=tol)
    table = collisional_truth_table(report.phase_ab)
    table.diagnostics.update(hold_time=t_hold, phase_ab=report.phase_ab,
                             adiabaticity=report.adiabaticity, duration=traj.t_end - traj.t_start)
    return t_hold, report, table


# --- Rydberg gates --------------------------------------------------------

_LEVELS = 3  # |0>, |1>, |r>
_R = 2


def _single(op, atom):
    eye = np.eye(_LEVELS)
    return np.kron(op, eye) if atom == 0 else np.kron(eye, op)


def _ket(i, j):
    v = np.zeros(_LEVELS * _LEVELS, dtype=complex)
    v[_LEVELS * i + j] = 1.0
    return v


_PROJ_R = np.zeros((3, 3))
_PROJ_R[_R, _R] = 1.0
_FLIP = np.zeros((3, 3))
_FLIP[1, _R] = _FLIP[_R, 1] = 1.0  # |1><r| + h.c.
_DETUNING_OPS = (_single(_PROJ_R, 0), _single(_PROJ_R, 1))
_DRIVE_OPS = (-0.5 * _single(_FLIP, 0), -0.5 * _single(_FLIP, 1))
_RR = np.kron(_PROJ_R, _PROJ_R)
RR_INDEX = _LEVELS * _R + _R


def _zero(t):
    return 0.0


def square(amplitude, start, stop):
    """Envelope equal to ``amplitude`` on [start, stop) and zero elsewhere."""
    return lambda t: amplitude if start <= t < stop else 0.0


@dataclass(frozen=True)
class PulseSchedule:
    """Laser envelopes for the two atoms plus their Rydberg-Rydberg shift ``u``."""

    omega1: object = _zero
    omega2: object = _zero
    delta1: object = _zero
    delta2: object = _zero
    u: float = 0.0
    duration: float = 0.0
    breakpoints: tuple = ()
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        check_finite(self.u, "u")
        check_positive(self.duration, "duration", strict=False)

    def hamiltonian(self, t):
        h = self.u * _RR
        for f, op in zip((self.delta1, self.delta2), _DETUNING_OPS):
            v = f(t)
            if v:
                h = h + v * op
        for f, op in zip((self.omega1, self.omega2), _DRIVE_OPS):
            v = f(t)
            if v:
                h = h + v * op
        return h

    def max_rate(self):
        """Largest energy scale on the schedule (for sampling resolution)."""
        ts = np.linspace(0.0, self.duration, 513) if self.duration > 0 else np.array([0.0])
        scale = abs(self.u)
        for f in (self.omega1, self.omega2, self.delta1, self.delta2):
            scale += max(abs(f(t)) for t in ts)
        return scale


def blockade_schedule(omega, u, omega2=None):
    """pi pulse on atom 1, 2pi pulse on atom 2, pi pulse on atom 1 (resonant, square)."""
    omega = check_positive(omega, "omega")
    omega2 = omega if omega2 is None else check_positive(omega2, "omega2")
    t1 = math.pi / omega
    t2 = t1 + 2.0 * math.pi / omega2
    t3 = t2 + math.pi / omega
    first, third = square(omega, 0.0, t1), square(omega, t2, t3)
    return PulseSchedule(
        omega1=lambda t: first(t) + third(t),
        omega2=square(omega2, t1, t2),
        u=u,
        duration=t3,
        breakpoints=(t1, t2),
        name="blockade",
        params={"omega": omega, "omega2": omega2, "u": u},
    )


def fast_schedule(omega, u, phi=math.pi, wait=None):
    """Simultaneous pi pulses, free evolution for ``wait`` (default phi/u), pi pulses back."""
    omega = check_positive(omega, "omega")
    if wait is None:
        wait = abs(phi / u) if u else 0.0
    wait = check_positive(wait, "wait", strict=False)
    t1 = math.pi / omega
    t2 = t1 + wait
    t3 = t2 + math.pi / omega
    a, b = square(omega, 0.0, t1), square(omega, t2, t3)
    env = lambda t: a(t) + b(t)
    return PulseSchedule(omega1=env, omega2=env, u=u, duration=t3, breakpoints=(t1, t2),
                         name="fast", params={"omega": omega, "u": u, "wait": wait, "phi": phi})


def adiabatic_schedule(omega_peak, delta, u, duration, chirp=0.0):
    """Smooth sin^2 Rabi envelope with a (linearly chirped) detuning, applied to both atoms.

    ``delta(t) = delta + chirp * (t - duration/2)``; the detuning must keep one
    sign over the pulse.
    """
    omega_peak = check_positive(omega_peak, "omega_peak")
    duration = check_positive(duration, "duration")
    check_finite(delta, "delta")
    check_finite(chirp, "chirp")

    def om(t):
        return omega_peak * math.sin(math.pi * t / duration) ** 2 if 0.0 <= t <= duration else 0.0

    def de(t):
        return delta + chirp * (t - 0.5 * duration)

    return PulseSchedule(omega1=om, omega2=om, delta1=de, delta2=de, u=u, duration=duration,
                         name="adiabatic",
                         params={"omega_peak": omega_peak, "delta": delta, "u": u,
                                 "duration": duration, "chirp": chirp})


@dataclass(frozen=True)
class RydbergRun:
    state: np.ndarray
    phase: float
    population: float
    max_rr_population: float
    rydberg_time: float


def rydberg_evolve(schedule, label, tol=1e-10, samples=None):
    """Propagate one logical input through ``schedule``.

    Returns the final 9-component state, the phase and weight of the amplitude
    on the input state, the largest |rr> population seen on a sampling grid,
    and the integrated Rydberg occupation sum_j int P_j(r) dt.
    """
    if label not in LOGICAL:
        raise ValueError(f"label must be one of {LOGICAL}, got {label!r}")
    i, j = int(label[0]), int(label[1])
    psi0 = _ket(i, j)
    if samples is None:
        samples = int(min(200_000, max(2001, math.ceil(8.0 * schedule.duration * schedule.max_rate()))))
    times = np.linspace(0.0, schedule.duration, samples)
    t, states = evolve_path(psi0, schedule.hamiltonian, 0.0, schedule.duration, tol=tol,
                            breakpoints=schedule.breakpoints, t_eval=times)
    final = states[-1]
    amp = np.vdot(psi0, final)
    probs = np.abs(states) ** 2
    r_pop = probs.reshape(-1, _LEVELS, _LEVELS)
    excited = r_pop[:, _R, :].sum(axis=1) + r_pop[:, :, _R].sum(axis=1)
    return RydbergRun(
        state=final,
        phase=float(np.angle(amp)) if abs(amp) > 0 else 0.0,
        population=float(abs(amp) ** 2),
        max_rr_population=float(probs[:, RR_INDEX].max()),
        rydberg_time=float(np.trapezoid(excited, t)),
    )


def _schedule_for(family, params):
    if family == "blockade":
        return blockade_schedule(params["omega"], params["u"], params.get("omega2"))
    if family == "fast":
        return fast_schedule(params["omega"], params["u"], params.get("phi", math.pi), params.get("wait"))
    if family == "adiabatic":
        return adiabatic_schedule(params["omega_peak"], params["delta"], params["u"], params["duration"],
                                  params.get("chirp", 0.0))
    raise ValueError(f"unknown schedule family {family!r}; expected fast, blockade or adiabatic")


def rydberg_truth_table(family, tol=1e-10, gamma=0.0, **params):
    """Run all four logical inputs through one schedule family.

    ``diagnostics`` carries the validity ratio of the family (Omega/u), the
    largest doubly excited population, and gamma * (time spent in |r>) as a
    post-hoc loss estimate.
    """
    schedule = params.pop("schedule", None) or _schedule_for(family, params)
    runs = {k: rydberg_evolve(schedule, k, tol=tol) for k in LOGICAL}
    table = TruthTable({k: r.phase for k, r in runs.items()}, {k: r.population for k, r in runs.items()})
    omega = params.get("omega", params.get("omega_peak"))
    diag = table.diagnostics
    diag["family"] = family
    diag["duration"] = schedule.duration
    diag["max_rr_population"] = max(r.max_rr_population for r in runs.values())
    diag["loss_estimate"] = gamma * max(r.rydberg_time for r in runs.values())
    if omega is not None and schedule.u:
        diag["omega_over_u"] = omega / abs(schedule.u)
    if family == "blockade":
        diag["residual_phase"] = wrap_phase(table.phases["11"] - math.pi)
        if schedule.u:
            diag["residual_phase_estimate"] = math.pi * schedule.params["omega2"] / (2.0 * schedule.u)
    if family == "fast":
        diag["target_phase"] = -schedule.u * schedule.params["wait"]
    return table


# --- adiabatic phase formula ----------------------------------------------


def _sgn(x):
    return (x > 0) - (x < 0)


def adiabatic_integrand(omega, delta, u):
    """Dressed-state energy of |11> minus twice that of |1>, with the Stark-shifted detuning."""
    stark = delta - omega * omega / (4.0 * delta + 2.0 * u)
    pair = _sgn(stark) * (abs(stark) - math.sqrt(stark * stark + 2.0 * omega * omega)) / 2.0
    single = _sgn(delta) * (abs(delta) - math.sqrt(delta * delta + omega * omega))
    return pair - single


def adiabatic_gate_phase(omega, delta, u, t0, tau, tol=1e-10, scan=4001):
    """Integral of :func:`adiabatic_integrand` over [t0, t0 + tau].

    ``omega`` and ``delta`` are callables of time. The window is scanned for
    zeros of delta and of 4 delta + 2u before integrating.
    """
    check_finite(u, "u")
    tau = check_positive(tau, "tau", strict=False)
    ts = np.linspace(t0, t0 + tau, scan)
    d = np.array([delta(t) for t in ts])
    for name, g in (("delta", d), ("4*delta + 2u", 4.0 * d + 2.0 * u)):
        flips = np.zeros(g.shape, dtype=bool)
        flips[1:] = np.sign(g[1:]) != np.sign(g[:-1])
        bad = np.flatnonzero((g == 0) | flips)
        if bad.size:
            raise ValueError(f"adiabatic phase integrand is singular: {name} vanishes near t={ts[bad[0]]:.6g}")
    return quadrature(lambda t: adiabatic_integrand(omega(t), delta(t), u), t0, t0 + tau, tol=tol)


def schedule_adiabatic_phase(schedule, tol=1e-10):
    return adiabatic_gate_phase(schedule.omega1, schedule.delta1, schedule.u, 0.0, schedule.duration, tol=tol)


def solve_adiabatic_amplitude(delta, u, duration, target=math.pi, bracket=(1e-3, 10.0), chirp=0.0):
    """Peak Rabi frequency for which the formula phase of :func:`adiabatic_schedule` has magnitude ``target``."""
    from scipy.optimize import brentq

    def f(om):
        s = adiabatic_schedule(om, delta, u, duration, chirp)
        return abs(schedule_adiabatic_phase(s)) - target

    lo, hi = bracket
    if f(lo) * f(hi) > 0:
        raise ValueError(f"target phase {target} not bracketed by peak Rabi frequencies {bracket}")
    return brentq(f, lo, hi, xtol=1e-12)
