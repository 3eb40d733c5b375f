"""Batch front end: TOML configs in, CSV/JSON tables with provenance headers out."""

from __future__ import annotations

import argparse
import difflib
import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from . import __version__
from ._validation import CapacityError
from .results import ResultTable, render_csv, render_json, write_table

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAPACITY = 3
EXIT_IO = 5
MODULE_EXIT = {
    "lattice": 10,
    "ed": 11,
    "phase-diagram": 12,
    "butterfly": 13,
    "gate collisional": 14,
    "gate rydberg": 15,
    "ising-sweep": 16,
    "trotter-bench": 17,
}

REQUIRED = object()


@dataclass(frozen=True)
class Param:
    kind: str  # int | float | floats | str
    default: object = REQUIRED
    choices: tuple = ()
    help: str = ""


SCHEMAS = {
    "lattice": {
        "rabi_peak": Param("float"),
        "detuning": Param("float"),
        "wavenumber": Param("float"),
        "mass": Param("float"),
        "linewidth": Param("float", 0.0),
    },
    "ed": {
        "M": Param("int", help="number of sites"),
        "N": Param("int", help="number of bosons"),
        "U_over_J": Param("floats"),
        "J": Param("float", 1.0),
        "boundary": Param("str", "periodic", ("periodic", "open")),
        "dim_cap": Param("int", 2_000_000),
    },
    "phase-diagram": {
        "n_mu": Param("int", 200),
        "n_j": Param("int", 200),
        "mu_max": Param("float", 2.0),
        "j_max": Param("float", 0.3),
        "n_max": Param("int", None),
    },
    "butterfly": {
        "q_max": Param("int"),
        "resolution": Param("int", 8),
    },
    "gate collisional": {
        "mass": Param("float", 1.0),
        "trap_frequency": Param("float", 1.0),
        "scattering_length": Param("float", 0.01),
        "far_widths": Param("float", 12.0),
        "t_move": Param("float", 20.0),
        "d_hold": Param("float", 0.0),
        "target": Param("float", math.pi),
        "tol": Param("float", 1e-10),
    },
    "gate rydberg": {
        "scheme": Param("str", REQUIRED, ("blockade", "fast", "adiabatic")),
        "omega": Param("float", None),
        "omega2": Param("float", None),
        "u": Param("float"),
        "phi": Param("float", None),
        "wait": Param("float", None),
        "omega_peak": Param("float", None),
        "delta": Param("float", None),
        "duration": Param("float", None),
        "chirp": Param("float", None),
        "gamma": Param("float", 0.0),
        "tol": Param("float", 1e-10),
    },
    "ising-sweep": {
        "N": Param("int"),
        "W": Param("float"),
        "B0": Param("float"),
        "T": Param("float"),
        "boundary": Param("str", "open", ("open", "periodic")),
        "samples": Param("int", 201),
        "tol": Param("float", 1e-10),
    },
    "trotter-bench": {
        "N": Param("int", 6),
        "B": Param("float", 1.0),
        "W": Param("float", 1.0),
        "horizon": Param("float", 1.0),
        "dt": Param("floats", (0.1, 0.05, 0.025, 0.01)),
        "boundary": Param("str", "open", ("open", "periodic")),
    },
}

# keys each Rydberg scheme needs / accepts besides the always-present ones
RYDBERG_KEYS = {
    "blockade": ({"omega", "u"}, {"omega2"}),
    "fast": ({"omega", "u"}, {"phi", "wait"}),
    "adiabatic": ({"omega_peak", "delta", "u", "duration"}, {"chirp"}),
}
RYDBERG_COMMON = {"scheme", "gamma", "tol"}

TOP_LEVEL_KEYS = ("subcommand", "seed", "out", "threads", "params")

COLUMNS = {
    "lattice": ("quantity", "value"),
    "ed": ("U_over_J", "E0", "gap", "S0_over_N", "dn2_site0", "degenerate_flag"),
    "phase-diagram": ("mu_over_U", "zJ_over_U", "abs_psi", "label"),
    "butterfly": ("p", "q", "alpha", "kx_index", "ky_index", "energy_over_eps0"),
    "ising-sweep": ("t", "B_t", "energy", "subspace_fidelity", "parity_leak"),
    "trotter-bench": ("dt", "steps", "error"),
}


class ConfigError(ValueError):
    """Every problem found in a configuration, not just the first."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {v}" for v in self.violations))


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    params: dict
    out: str = None
    seed: int = 0
    threads: int = 1

    def digest(self):
        """sha256 over the canonical JSON of everything that affects the numbers."""
        payload = {"subcommand": self.subcommand, "params": self.params, "seed": self.seed}
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _suggest(key, known):
    close = difflib.get_close_matches(key, list(known), n=1, cutoff=0.5)
    return f"; did you mean {close[0]!r}?" if close else ""


def _coerce(name, value, spec, errors):
    kind = spec.kind
    if isinstance(value, bool):
        errors.append(f"{name}: expected {kind}, got boolean")
        return None
    if kind == "int":
        if not isinstance(value, int):
            errors.append(f"{name}: expected integer, got {type(value).__name__} {value!r}")
            return None
        return value
    if kind == "float":
        if not isinstance(value, (int, float)):
            errors.append(f"{name}: expected number, got {type(value).__name__} {value!r}")
            return None
        return float(value)
    if kind == "floats":
        if not isinstance(value, (list, tuple)) or not value:
            errors.append(f"{name}: expected a non-empty list of numbers, got {value!r}")
            return None
        bad = [v for v in value if isinstance(v, bool) or not isinstance(v, (int, float))]
        if bad:
            errors.append(f"{name}: non-numeric entries {bad!r}")
            return None
        return [float(v) for v in value]
    if not isinstance(value, str):
        errors.append(f"{name}: expected string, got {type(value).__name__} {value!r}")
        return None
    if spec.choices and value not in spec.choices:
        errors.append(f"{name}: {value!r} is not one of {', '.join(spec.choices)}")
        return None
    return value


def validate(subcommand, raw_params, seed=0, out=None, threads=1, errors=None):
    """Check parameters against the subcommand schema; collect every violation."""
    errors = [] if errors is None else errors
    if subcommand not in SCHEMAS:
        errors.append(f"unknown subcommand {subcommand!r}{_suggest(str(subcommand), SCHEMAS)}")
        raise ConfigError(errors)
    schema = SCHEMAS[subcommand]
    params = {}
    for key, value in raw_params.items():
        if key not in schema:
            errors.append(f"unknown key {key!r} for {subcommand}{_suggest(key, schema)}")
            continue
        coerced = _coerce(key, value, schema[key], errors)
        if coerced is not None:
            params[key] = coerced
    for key, spec in schema.items():
        if key in raw_params:
            continue
        if spec.default is REQUIRED:
            errors.append(f"missing required key {key!r} for {subcommand}")
        elif spec.default is not None:
            params[key] = list(spec.default) if isinstance(spec.default, tuple) else spec.default
    if subcommand == "gate rydberg" and params.get("scheme") in RYDBERG_KEYS:
        need, allowed = RYDBERG_KEYS[params["scheme"]]
        for key in sorted(need - set(raw_params)):
            errors.append(f"missing required key {key!r} for scheme {params['scheme']}")
        for key in sorted(set(raw_params) - need - allowed - RYDBERG_COMMON):
            if key in schema:
                errors.append(f"key {key!r} is not used by scheme {params['scheme']}")
    if isinstance(seed, bool) or not isinstance(seed, int):
        errors.append(f"seed: expected integer, got {seed!r}")
    if isinstance(threads, bool) or not isinstance(threads, int) or threads < 1:
        errors.append(f"threads: expected a positive integer, got {threads!r}")
    if out is not None and not isinstance(out, str):
        errors.append(f"out: expected a path string, got {out!r}")
    if errors:
        raise ConfigError(errors)
    return RunConfig(subcommand, params, out, seed, threads)


def parse_config(text, subcommand=None, overrides=None):
    """Parse TOML text into a validated :class:`RunConfig`.

    Layout: top-level ``subcommand``, ``seed``, ``out``, ``threads`` and a
    ``[params]`` table. ``subcommand`` may instead be supplied by the caller;
    ``overrides`` are merged over ``[params]``.
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"malformed TOML: {exc}"]) from None
    errors = []
    for key in doc:
        if key not in TOP_LEVEL_KEYS:
            errors.append(f"unknown top-level key {key!r}{_suggest(key, TOP_LEVEL_KEYS)}")
    name = doc.get("subcommand", subcommand)
    if subcommand is not None and name != subcommand:
        errors.append(f"config is for subcommand {name!r} but {subcommand!r} was requested")
    if name is None:
        raise ConfigError(errors + ["missing subcommand"])
    params = doc.get("params", {})
    if not isinstance(params, dict):
        errors.append("params must be a table")
        params = {}
    params = {**params, **(overrides or {})}
    return validate(name, params, doc.get("seed", 0), doc.get("out"), doc.get("threads", 1), errors)


# --- subcommand bodies ------------------------------------------------------


def _lattice(cfg):
    from .lattice import LatticeParams, spontaneous_rate_blue, trap_frequency

    p = LatticeParams(**cfg.params)
    rows = [
        ("spacing", p.spacing),
        ("recoil_energy", p.recoil_energy),
        ("validity_ratio", p.validity_ratio),
        ("potential_depth", p.rabi_peak**2 / (4.0 * abs(p.detuning))),
        ("potential_minimum", p.potential_minimum),
        ("trap_frequency", trap_frequency(p)),
    ]
    if p.detuning < 0:
        rows.append(("spontaneous_rate_blue", spontaneous_rate_blue(p)))
    return rows


def _ed(cfg):
    from .bose_hubbard import BHModel, crossover_scan
    from .fock import build_basis

    q = cfg.params
    basis = build_basis(q["M"], q["N"], dim_cap=q["dim_cap"])
    model = BHModel(q["M"], J=q["J"], boundary=q["boundary"])
    return crossover_scan(model, q["U_over_J"], basis, threads=cfg.threads)


def _phase_diagram(cfg):
    from .meanfield import phase_diagram

    q = cfg.params
    pd = phase_diagram(q["n_mu"], q["n_j"], q["mu_max"], q["j_max"], q.get("n_max"), seed=cfg.seed)
    return list(pd.rows())


def _butterfly(cfg):
    from .hofstadter import butterfly, butterfly_rows

    return list(butterfly_rows(butterfly(cfg.params["q_max"], cfg.params["resolution"])))


def _gate_collisional(cfg):
    from .gates import CollisionalSetup, collisional_gate

    q = dict(cfg.params)
    target, tol = q.pop("target"), q.pop("tol")
    setup = CollisionalSetup(**q)
    t_hold, report, table = collisional_gate(setup, target=target, tol=tol)
    return {"hold_time": t_hold, "report": asdict(report), "truth_table": table.to_dict()}


def _gate_rydberg(cfg):
    from .gates import rydberg_truth_table

    q = dict(cfg.params)
    scheme, gamma, tol = q.pop("scheme"), q.pop("gamma"), q.pop("tol")
    table = rydberg_truth_table(scheme, tol=tol, gamma=gamma, **q)
    return {"scheme": scheme, "truth_table": table.to_dict()}


def _ising_sweep(cfg):
    from .spin_chain import IsingParams, adiabatic_sweep

    q = cfg.params
    p = IsingParams(q["N"], q["W"], 0.0, q["boundary"])
    return adiabatic_sweep(p, q["B0"], q["T"], tol=q["tol"], samples=q["samples"]).rows


def _trotter_bench(cfg):
    from .numerics import evolve
    from .spin_chain import ising_terms, terms_to_sparse, trotter_evolve

    q = cfg.params
    n = q["N"]
    terms = ising_terms(n, q["B"], q["W"], q["boundary"])
    psi0 = np.zeros(2**n, dtype=complex)
    psi0[0] = 1.0
    exact = evolve(psi0, terms_to_sparse(terms, n), 0.0, q["horizon"], tol=1e-12)
    rows = []
    for dt in q["dt"]:
        steps = round(q["horizon"] / dt)
        if steps < 1 or abs(steps * dt - q["horizon"]) > 1e-9 * q["horizon"]:
            raise ValueError(f"dt={dt} does not divide the horizon {q['horizon']}")
        err = float(np.linalg.norm(trotter_evolve(psi0, terms, dt, steps) - exact))
        rows.append((dt, steps, err))
    return rows


RUNNERS = {
    "lattice": _lattice,
    "ed": _ed,
    "phase-diagram": _phase_diagram,
    "butterfly": _butterfly,
    "gate collisional": _gate_collisional,
    "gate rydberg": _gate_rydberg,
    "ising-sweep": _ising_sweep,
    "trotter-bench": _trotter_bench,
}


@dataclass
class RunOutcome:
    table: ResultTable = None
    exit_code: int = EXIT_OK
    message: str = ""
    text: str = field(default=None, repr=False)


def header(cfg):
    return {
        "tool": f"optlattice {__version__}",
        "subcommand": cfg.subcommand,
        "config_sha256": cfg.digest(),
        "seed": cfg.seed,
    }


def run(cfg):
    """Compute the table for ``cfg`` and write it to ``cfg.out`` if set.

    Failures map to exit codes: capacity 3, output errors 5, anything raised
    by the computation the per-subcommand code in ``MODULE_EXIT``.
    """
    try:
        result = RUNNERS[cfg.subcommand](cfg)
    except CapacityError as exc:
        return RunOutcome(exit_code=EXIT_CAPACITY, message=f"capacity: {exc}")
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        return RunOutcome(exit_code=MODULE_EXIT[cfg.subcommand], message=f"{cfg.subcommand}: {exc}")
    if isinstance(result, dict):
        table = ResultTable((), [], header(cfg), result)
        text = render_json(table)
    else:
        table = ResultTable(COLUMNS[cfg.subcommand], result, header(cfg))
        text = render_csv(table)
    if cfg.out is not None:
        try:
            write_table(table, cfg.out)
        except OSError as exc:
            return RunOutcome(table, EXIT_IO, f"cannot write {cfg.out}: {exc}", text)
    return RunOutcome(table, EXIT_OK, "", text)


# --- argument parsing ---------------------------------------------------------


def _parse_override(item):
    key, sep, value = item.partition("=")
    if not sep or not key:
        raise ConfigError([f"--param expects KEY=VALUE, got {item!r}"])
    try:
        return key.strip(), tomllib.loads(f"v = {value}")["v"]
    except tomllib.TOMLDecodeError:
        return key.strip(), value


def _common(parser):
    parser.add_argument("--config", help="TOML configuration file")
    parser.add_argument("--out", help="output path (stdout if omitted)")
    parser.add_argument("--threads", type=int, help="worker threads for grid scans")
    parser.add_argument("--seed", type=int, help="random seed recorded in the header")
    parser.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                        help="override one parameter (TOML value syntax)")


def build_parser():
    parser = argparse.ArgumentParser(prog="optlattice", description=__doc__)
    parser.add_argument("--version", action="version", version=f"optlattice {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("lattice", "ed", "phase-diagram", "butterfly", "ising-sweep", "trotter-bench"):
        _common(sub.add_parser(name))
    gate = sub.add_parser("gate").add_subparsers(dest="gate", required=True)
    _common(gate.add_parser("collisional"))
    ryd = gate.add_parser("rydberg")
    _common(ryd)
    ryd.add_argument("--scheme", choices=("blockade", "fast", "adiabatic"))
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    name = f"gate {args.gate}" if args.command == "gate" else args.command
    try:
        overrides = dict(_parse_override(p) for p in args.param)
        if getattr(args, "scheme", None):
            overrides["scheme"] = args.scheme
        text = ""
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError([f"cannot read config {args.config}: {exc}"]) from None
        cfg = parse_config(text, subcommand=name, overrides=overrides)
        cfg = RunConfig(
            cfg.subcommand,
            cfg.params,
            args.out if args.out is not None else cfg.out,
            args.seed if args.seed is not None else cfg.seed,
            args.threads if args.threads is not None else cfg.threads,
        )
        if cfg.threads < 1:
            raise ConfigError([f"threads: expected a positive integer, got {cfg.threads}"])
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    outcome = run(cfg)
    if outcome.exit_code:
        print(outcome.message, file=sys.stderr)
        return outcome.exit_code
    if cfg.out is None:
        sys.stdout.write(outcome.text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
