"""Command-line front end: config parsing, command dispatch, output files.

Usage::

    dampwave COMMAND CONFIG [--output-dir DIR]

Exit status is 0 when every audit passes, 2 when an audit fails and 1 on
any error.
"""
from __future__ import annotations

import argparse
import logging
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import functionals as fn
from . import io
from . import presets
from .errors import (DampWaveError, InvalidExponents, NonFiniteState, ParseError,
                     ValidationError)
from .galerkin import METHODS, ModelSpec, PhaseState, simulate, strong_simulate
from .model import (DAMPING_FAMILIES, NONLINEARITY_FAMILIES, DampingSpec, NonlinearitySpec,
                    check_assumptions)
from .spectral import Domain

log = logging.getLogger(__name__)

COMMANDS = ("validate", "simulate", "audit-energy", "audit-identity", "spacetime",
            "equilibrium", "dependence", "sweep", "decompose", "strong-audit", "converge")
EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2

REQUIRED = object()


# -- value converters --------------------------------------------------------

def _float(text):
    x = float(text)
    if not math.isfinite(x):
        raise ValueError("must be finite")
    return x


def _int(text):
    try:
        return int(text)
    except ValueError:
        x = _float(text)
        if x != int(x):
            raise ValueError("must be an integer") from None
        return int(x)


def _floats(text):
    return tuple(_float(t) for t in text.split(",") if t.strip())


def _ints(text):
    return tuple(_int(t) for t in text.split(",") if t.strip())


def _str(text):
    return text.strip()


def _positive(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _all_positive(xs):
    return len(xs) > 0 and all(x > 0 for x in xs)


def _increasing(xs):
    return len(xs) > 0 and all(b > a for a, b in zip(xs, xs[1:]))


def _one_of(*choices):
    return lambda x: x in choices


# key -> (converter, default, check, constraint text)
SCHEMA = {
    "domain": {
        "dim": (_int, REQUIRED, lambda x: x in (1, 2, 3), "dim in {1, 2, 3}"),
        "lengths": (_floats, REQUIRED, _all_positive, "positive lengths"),
        "modes": (_int, REQUIRED, lambda x: 1 <= x <= 512, "1 <= modes <= 512"),
        "oversample": (_int, 4, lambda x: x >= 2, "oversample >= 2"),
    },
    "damping": {
        "family": (_str, "power", _one_of(*DAMPING_FAMILIES),
                   "family in {" + ", ".join(DAMPING_FAMILIES) + "}"),
        "sigma0": (_float, 1.0, _positive, "sigma0 > 0"),
        "r": (_float, 0.0, lambda x: 0 <= x <= 4, "r in [0, 4]"),
        "m": (_float, None, lambda x: 0 <= x <= 4, "m in [0, 4]"),
        "gamma": (_float, 1.0, _positive, "gamma > 0"),
        "l": (_float, 1.0, _positive, "l > 0"),
        "c_growth": (_float, 10.0, _positive, "c_growth > 0"),
    },
    "nonlinearity": {
        "family": (_str, "power", _one_of(*NONLINEARITY_FAMILIES),
                   "family in {" + ", ".join(NONLINEARITY_FAMILIES) + "}"),
        "p": (_float, 3.0, lambda x: 2 <= x <= 7, "p in [2, 7]"),
        "a": (_float, 1.0, _nonneg, "a >= 0"),
        "b": (_float, 0.0, _nonneg, "b >= 0"),
        "K": (_float, 0.0, _nonneg, "K >= 0"),
        "lambda_margin": (_float, None, _positive, "lambda_margin > 0"),
        "c_growth": (_float, 10.0, _positive, "c_growth > 0"),
    },
    "run": {
        "dt": (_float, 1e-3, _positive, "dt > 0"),
        "t_end": (_float, 10.0, _positive, "t_end > 0"),
        "stride": (_int, 1, lambda x: x >= 1, "stride >= 1"),
        "integrator": (_str, "rk4", _one_of(*METHODS), "integrator in {" + ", ".join(METHODS) + "}"),
        "seed": (_int, 0, _nonneg, "seed >= 0"),
        "output_dir": (_str, "out", lambda x: bool(x), "non-empty path"),
        "tolerance": (_float, None, _positive, "tolerance > 0"),
        "initial": (_str, "default", _one_of("default", "zero", "random", "equilibrium"),
                    "initial in {default, zero, random, equilibrium}"),
        "radius": (_float, 1.0, _nonneg, "radius >= 0"),
    },
    "experiment": {
        "alpha": (_float, 0.1, _positive, "alpha > 0"),
        "k": (_float, 2.0, lambda x: 0 <= x <= 2, "k in [0, 2]"),
        "horizons": (_floats, (5.0, 10.0, 20.0, 40.0), _increasing, "increasing horizons"),
        "factor": (_float, None, _positive, "factor > 0"),
        "perturb_sizes": (_floats, (1e-2, 1e-3, 1e-4), _all_positive, "positive sizes"),
        "radii": (_floats, (1.0, 5.0, 10.0), _all_positive, "positive radii"),
        "samples_per_radius": (_int, 1, lambda x: x >= 1, "samples_per_radius >= 1"),
        "workers": (_int, None, lambda x: x >= 1, "workers >= 1"),
        "cutoffs": (_ints, (2, 4, 8), _all_positive, "positive cut-off levels"),
        "offsets": (_floats, (), lambda xs: all(x > 0 for x in xs), "positive offsets"),
        "gamma": (_float, None, _positive, "gamma > 0"),
        "t_i": (_float, 0.0, _nonneg, "t_i >= 0"),
        "mode": (_str, "coupled", _one_of("coupled", "sequential"), "mode in {coupled, sequential}"),
        "Ns": (_ints, (8, 16, 32, 64), _increasing, "increasing resolutions"),
        "newton_tol": (_float, 1e-10, _positive, "newton_tol > 0"),
        "max_iters": (_int, 20, lambda x: x >= 1, "max_iters >= 1"),
    },
}
SECTIONS = ("domain", "damping", "nonlinearity", "forcing", "run", "experiment")
FORCING_KEY = re.compile(r"^e(\d+(?:_\d+)*)$")


@dataclass
class Config:
    """Parsed configuration; ``values[section][key]`` holds typed values."""

    values: dict
    forcing: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)

    def __getitem__(self, section):
        return self.values[section]

    @property
    def output_dir(self):
        return Path(self.values["run"]["output_dir"])

    def domain(self):
        d = self.values["domain"]
        lengths = d["lengths"]
        if len(lengths) == 1:
            lengths = lengths * d["dim"]
        return Domain(d["dim"], lengths, d["modes"], d["oversample"])

    def model(self, check=True):
        dom = self.domain()
        phi = dom.zeros()
        for idx, val in self.forcing.items():
            phi[tuple(i - 1 for i in idx)] = val
        damp = self.values["damping"]
        try:
            dspec = DampingSpec(**damp)
        except InvalidExponents as exc:
            raise ValidationError("damping.m", str(exc)) from None
        nspec = NonlinearitySpec(**self.values["nonlinearity"])
        try:
            return ModelSpec(dom, dspec, nspec, phi, check=check)
        except ValueError as exc:
            raise ValidationError("model", str(exc)) from None


def parse_config(text):
    """Parse and validate a ``[section]`` / ``key = value`` document."""
    raw = {}
    lines = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(lineno, "unterminated section header")
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ParseError(lineno, f"unknown section [{section}]")
            if section in raw:
                first = lines[(section, None)]
                raise ParseError(lineno, f"duplicate section [{section}] (first defined on line {first})")
            raw[section] = {}
            lines[(section, None)] = lineno
            continue
        if "=" not in line:
            raise ParseError(lineno, "expected 'key = value'")
        if section is None:
            raise ParseError(lineno, "key outside of any section")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParseError(lineno, "empty key")
        if not value:
            raise ParseError(lineno, f"empty value for {key!r}")
        if key in raw[section]:
            first = lines[(section, key)]
            err = ParseError(lineno, f"duplicate key {key!r} (first defined on line {first})")
            err.first_line = first
            raise err
        raw[section][key] = value
        lines[(section, key)] = lineno
    return _validate(raw, lines)


def _validate(raw, lines):
    for section in ("domain", "damping", "nonlinearity"):
        if section not in raw:
            raise ValidationError(section, "section is required")
    values = {}
    for section, schema in SCHEMA.items():
        given = dict(raw.get(section, {}))
        out = {}
        for key, (conv, default, check, constraint) in schema.items():
            name = f"{section}.{key}"
            if key not in given:
                if default is REQUIRED:
                    raise ValidationError(name, "required key is missing")
                out[key] = default
                continue
            text = given.pop(key)
            try:
                val = conv(text)
            except ValueError:
                raise ValidationError(name, f"{constraint} (cannot parse {text!r}, "
                                            f"line {lines[(section, key)]})") from None
            if not check(val):
                raise ValidationError(name, f"{constraint} (got {text}, line {lines[(section, key)]})")
            out[key] = val
        if given:
            key = sorted(given, key=lambda k: lines[(section, k)])[0]
            raise ValidationError(f"{section}.{key}", f"unknown key (line {lines[(section, key)]})")
        values[section] = out
    dim, modes = values["domain"]["dim"], values["domain"]["modes"]
    if len(values["domain"]["lengths"]) not in (1, dim):
        raise ValidationError("domain.lengths", f"need 1 or {dim} lengths")
    forcing = {}
    for key, text in raw.get("forcing", {}).items():
        name = f"forcing.{key}"
        m = FORCING_KEY.match(key)
        if not m:
            raise ValidationError(name, "forcing keys look like e1, e2_3 (1-based mode indices)")
        idx = tuple(int(i) for i in m.group(1).split("_"))
        if len(idx) == 1:
            idx = idx + (1,) * (dim - 1)
        if len(idx) != dim or not all(1 <= i <= modes for i in idx):
            raise ValidationError(name, f"need {dim} indices in [1, {modes}]")
        try:
            forcing[idx] = _float(text)
        except ValueError:
            raise ValidationError(name, f"finite number (got {text!r})") from None
    return Config(values, forcing, lines)


def load_config(path):
    return parse_config(Path(path).read_text(encoding="utf-8"))


# -- commands ----------------------------------------------------------------

def _initial(cfg, model):
    run = cfg["run"]
    kind = run["initial"]
    if kind == "default":
        return presets.default_initial(model.domain)
    if kind == "zero":
        return PhaseState.zero(model.domain)
    if kind == "random":
        return ex.random_initial(model.domain, run["radius"], run["seed"])
    eq = _equilibrium(cfg, model)
    return PhaseState.from_arrays(model.domain, eq.ubar.coeffs)


def _equilibrium(cfg, model):
    e = cfg["experiment"]
    return ex.solve_equilibrium(model, tol=e["newton_tol"], max_iters=e["max_iters"])


def _tol(cfg, default):
    t = cfg["run"]["tolerance"]
    return default if t is None else t


def _factor(cfg, default):
    f = cfg["experiment"]["factor"]
    return default if f is None else f


def _simulate(cfg, model, strong=False, dense=False):
    """Run the configured integration; ``dense`` keeps every step (identity audits)."""
    run = cfg["run"]
    sim = strong_simulate if strong else simulate
    stride = 1 if dense else run["stride"]
    return sim(model, _initial(cfg, model), run["dt"], run["t_end"], stride=stride,
               method=run["integrator"])


def cmd_validate(cfg, out):
    model = cfg.model(check=False)
    rep = check_assumptions(model)
    header = ("assumption", "verdict", "witness_s", "lhs", "rhs", "min_constant")
    io.write_csv(out / "assumptions.csv", header, rep.rows())
    print(f"region={rep.region.value} k={rep.k:g}")
    for row in rep.rows():
        print(f"{row[0]}: {row[1]}")
    return [], rep.passed


def _energy_outputs(out, traj, tolerance, name="energy.csv"):
    rep = fn.energy_equality_audit(traj, tolerance)
    io.write_energy_csv(out / name, traj, rep.metadata["energy"], rep.metadata["residual"])
    return rep


def cmd_simulate(cfg, out):
    model = cfg.model()
    traj = _simulate(cfg, model)
    io.write_trajectory(out / "trajectory.wdwv", model.domain, traj.times, traj.u, traj.v)
    _energy_outputs(out, traj, _tol(cfg, 1e-6))
    return [], True


def cmd_audit_energy(cfg, out):
    try:
        traj = _simulate(cfg, cfg.model())
    except NonFiniteState as exc:
        # a blow-up is an unbounded energy residual, i.e. a failed audit
        rep = _energy_outputs(out, exc.partial, _tol(cfg, 1e-6))
        rep.max_residual = math.inf
        rep.metadata["blowup_time"] = exc.time
        print(f"integration blew up at t={exc.time:g}")
        return [rep], None
    return [_energy_outputs(out, traj, _tol(cfg, 1e-6))], None


def cmd_audit_identity(cfg, out):
    traj = _simulate(cfg, cfg.model(), dense=True)
    rep = fn.perturbed_identity_audit(traj, cfg["experiment"]["alpha"], _tol(cfg, 1e-5))
    io.write_audit_csv(out / "identity.csv", rep)
    return [rep], None


def cmd_spacetime(cfg, out):
    model = cfg.model()
    e = cfg["experiment"]
    rep = fn.spacetime_bound_audit(model, _initial(cfg, model), e["k"], e["horizons"],
                                   dt=cfg["run"]["dt"], factor=_factor(cfg, 10.0))
    io.write_audit_csv(out / "spacetime.csv", rep)
    return [rep], None


def cmd_equilibrium(cfg, out):
    model = cfg.model()
    e = cfg["experiment"]
    eq = _equilibrium(cfg, model)
    io.write_trajectory(out / "equilibrium.wdwv", model.domain, [0.0],
                        eq.ubar.coeffs[None], np.zeros((1,) + model.domain.shape))
    io.write_csv(out / "newton.csv", ("iteration", "residual"), enumerate(eq.history))
    samples = [(float(i), r, e["newton_tol"]) for i, r in enumerate(eq.history)]
    rep = fn.AuditReport("equilibrium", samples, eq.residual, e["newton_tol"],
                         {"iterations": eq.newton_iters, "v_norm": eq.v_norm})
    print(f"newton_iters={eq.newton_iters} v_norm={eq.v_norm:.17g}")
    return [rep], None


def cmd_dependence(cfg, out):
    model = cfg.model()
    run, e = cfg["run"], cfg["experiment"]
    rep = ex.continuous_dependence(model, _initial(cfg, model), e["perturb_sizes"], run["t_end"],
                                   dt=run["dt"], seed=run["seed"], factor=_factor(cfg, 2.0))
    io.write_audit_csv(out / "dependence.csv", rep)
    return [rep], None


def cmd_sweep(cfg, out):
    model = cfg.model()
    run, e = cfg["run"], cfg["experiment"]

    def write_run(radius, seed, traj):
        E = fn.energy_series(traj)
        io.write_energy_csv(out / "sweep" / f"R{radius:g}_seed{seed}.csv", traj, E,
                            np.abs(E - E[0] + traj.dissipation_cum))

    rep = ex.dissipative_sweep(model, e["radii"], run["t_end"], e["samples_per_radius"],
                               dt=run["dt"], seed=run["seed"], factor=_factor(cfg, 2.0),
                               stride=run["stride"], workers=e["workers"], on_run=write_run)
    io.write_audit_csv(out / "sweep.csv", rep)
    worst = max(rep.metadata["lyapunov"], key=lambda r: r.max_residual / r.tolerance)
    return [rep, worst], None


def cmd_decompose(cfg, out):
    model = cfg.model()
    run, e = cfg["run"], cfg["experiment"]
    eq = _equilibrium(cfg, model)
    x0 = _initial(cfg, model)
    reports, runs = [], []
    for n in e["cutoffs"]:
        r = ex.decompose(model, x0, n, eq, T=run["t_end"], dt=run["dt"], gamma=e["gamma"],
                         stride=run["stride"], mode=e["mode"], t_i=e["t_i"])
        runs.append(r)
        io.write_csv(out / f"decompose_n{n}.csv",
                     ("t", "reconstruction_residual", "lemma53_ratio", "vn_energy"),
                     zip(r.times, r.reconstruction_residual, r.lemma53_ratio, r.vn_energy))
        rec = ex.reconstruction_audit(r, _tol(cfg, 1e-6))
        rec.name = f"reconstruction_n{n}"
        reports.append(rec)
    l53 = ex.lemma53_audit(runs if len(runs) > 1 else runs[0], _factor(cfg, 10.0))
    io.write_audit_csv(out / "lemma53.csv", l53)
    reports.append(l53)
    if e["offsets"]:
        r54 = ex.lemma54_runs(model, eq, e["offsets"], e["cutoffs"][-1], T=run["t_end"],
                              dt=run["dt"], seed=run["seed"], stride=run["stride"])
        l54 = ex.lemma54_audit(r54)
        io.write_audit_csv(out / "lemma54.csv", l54)
        reports.append(l54)
    return reports, None


def cmd_strong_audit(cfg, out):
    traj = _simulate(cfg, cfg.model(), strong=True, dense=True)
    rep = ex.strong_audit(traj, _tol(cfg, 1e-5))
    io.write_audit_csv(out / "strong.csv", rep)
    return [rep], None


def cmd_converge(cfg, out):
    model = cfg.model()
    run = cfg["run"]
    rep = ex.galerkin_convergence(model, _initial(cfg, model), cfg["experiment"]["Ns"],
                                  run["t_end"], dt=run["dt"])
    io.write_audit_csv(out / "converge.csv", rep)
    return [rep], None


HANDLERS = {
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "audit-energy": cmd_audit_energy,
    "audit-identity": cmd_audit_identity,
    "spacetime": cmd_spacetime,
    "equilibrium": cmd_equilibrium,
    "dependence": cmd_dependence,
    "sweep": cmd_sweep,
    "decompose": cmd_decompose,
    "strong-audit": cmd_strong_audit,
    "converge": cmd_converge,
}


def run(command, config, output_dir=None):
    """Execute ``command``; return the exit status."""
    if command not in HANDLERS:
        print(f"error: unknown command {command!r}", file=sys.stderr)
        return EXIT_ERROR
    out = Path(output_dir) if output_dir is not None else config.output_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
        reports, ok = HANDLERS[command](config, out)
    except (DampWaveError, ValueError, FloatingPointError, OSError) as exc:
        print(f"error: {command}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if reports:
        io.write_summary_csv(out / "summary.csv", reports)
        for rep in reports:
            print(rep)
        ok = all(r.passed for r in reports) if ok is None else ok and all(r.passed for r in reports)
    return EXIT_PASS if ok else EXIT_FAIL


def main(argv=None):
    ap = argparse.ArgumentParser(prog="dampwave", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("config", help="path to the configuration file")
    ap.add_argument("--output-dir", help="overrides run.output_dir")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        cfg = load_config(args.config)
    except (ParseError, ValidationError, OSError, UnicodeDecodeError) as exc:
        print(f"error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return run(args.command, cfg, args.output_dir)


if __name__ == "__main__":
    sys.exit(main())
