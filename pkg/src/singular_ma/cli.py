"""Batch front end.

    singular-ma run scenarios/dirichlet_one_atom.cfg --out results
    singular-ma run scenarios/*.cfg --jobs 4 --tol-scale 2
    singular-ma list-checks --filter solver

A scenario is an INI file. ``[scenario]`` names it and picks a mode
(``radial``, ``dirichlet``, ``global``, ``verify-suite`` or ``dims``); the
other sections hold the parameters of that mode. Each scenario writes into
``<out>/<name>/``: columnar tables or solution files, ``checks.jsonl`` with
one record per check, and ``summary.txt``. Nothing time-dependent is written,
so repeated runs give byte-identical files.

Exit status: 0 when every check passes, 1 when a check fails, 2 for a
malformed configuration, 3 when a solve does not converge.
"""
from __future__ import annotations

import argparse
import configparser
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geometry as geo
from . import io
from .checks import REGISTRY, CheckRecord, list_checks, run_checks
from .mesh import graded_polygon_mesh, regular_polygon
from .radial import (RadialSingularSolution, radial_hessian_spectrum, radial_value)
from .solver import (ConvergenceError, DirichletProblem, SandwichViolation,
                     SingularConfiguration, comparison_check, log_boundary_data,
                     solve_dirichlet, solve_global)
from .verify import (InsufficientSamples, asymptotic_decay_check, hessian_growth_fit,
                     moduli_parameter_count, orbifold_dimension)

MODES = ("radial", "dirichlet", "global", "verify-suite", "dims")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


class ConfigError(ValueError):
    def __init__(self, path, line, where, message):
        self.path, self.line, self.where = path, line, where
        loc = f"{path}:{line}" if line else str(path)
        super().__init__(f"{loc}: {where}: {message}" if where else f"{loc}: {message}")


# ---------------------------------------------------------------------------
# configuration


class Config:
    """configparser wrapper that remembers where every key was written."""

    def __init__(self, path):
        self.path = Path(path)
        try:
            text = self.path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(path, 0, "", f"cannot read file ({exc.strerror})") from None
        self.parser = configparser.ConfigParser(interpolation=None,
                                                inline_comment_prefixes=(";", "#"))
        self.parser.optionxform = str
        try:
            self.parser.read_string(text, source=str(path))
        except configparser.Error as exc:
            line = getattr(exc, "lineno", 0) or 0
            msg = exc.message.splitlines()[0] if hasattr(exc, "message") else str(exc)
            raise ConfigError(path, line, "", msg) from None
        self.lines = {}
        section = None
        for lineno, raw in enumerate(text.splitlines(), 1):
            s = raw.strip()
            m = re.match(r"^\[([^\]]+)\]", s)
            if m:
                section = m.group(1).strip()
                self.lines[(section, None)] = lineno
            elif section and s and not s.startswith(("#", ";")) and not raw[:1].isspace():
                key = re.split(r"[=:]", s, 1)[0].strip()
                self.lines.setdefault((section, key), lineno)

    def error(self, section, key, message):
        line = self.lines.get((section, key)) or self.lines.get((section, None), 0)
        where = f"[{section}] {key}" if key else f"[{section}]"
        return ConfigError(self.path, line, where, message)

    def has(self, section, key=None):
        if key is None:
            return self.parser.has_section(section)
        return self.parser.has_option(section, key)

    def require_section(self, section):
        if not self.parser.has_section(section):
            raise ConfigError(self.path, 0, f"[{section}]", "missing section")

    def raw(self, section, key, default=None):
        if not self.parser.has_section(section):
            if default is not None:
                return default
            raise ConfigError(self.path, 0, f"[{section}]", "missing section")
        if not self.parser.has_option(section, key):
            if default is not None:
                return default
            raise self.error(section, None, f"missing required field '{key}'")
        return self.parser.get(section, key)

    def get(self, section, key, kind=str, default=None):
        text = self.raw(section, key, default=None if default is None else "\0")
        if text == "\0":
            return default
        try:
            return kind(text.strip())
        except (ValueError, TypeError) as exc:
            raise self.error(section, key, f"bad value {text.strip()!r} ({exc})") from None

    def floats(self, section, key, default=None):
        return self.get(section, key, _floats, default)

    def ints(self, section, key, default=None):
        return self.get(section, key, _ints, default)

    def rows(self, section, key, width, default=None):
        text = self.raw(section, key, default="\0" if default is not None else None)
        if text == "\0":
            return default
        out = []
        base = self.lines.get((section, key), 0)
        for k, line in enumerate(text.splitlines()):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                vals = _floats(line)
            except ValueError as exc:
                raise ConfigError(self.path, base + k, f"[{section}] {key}", str(exc)) from None
            if len(vals) != width:
                raise ConfigError(self.path, base + k, f"[{section}] {key}",
                                  f"expected {width} numbers per row, got {len(vals)}")
            out.append(vals)
        return np.array(out, float).reshape(-1, width)

    def boolean(self, section, key, default=False):
        if not self.has(section, key):
            return default
        try:
            return self.parser.getboolean(section, key)
        except ValueError:
            raise self.error(section, key, "expected true or false") from None


def _floats(text):
    parts = [p for p in re.split(r"[\s,]+", text.strip()) if p]
    if not parts:
        raise ValueError("empty list")
    return [float(p) for p in parts]


def _ints(text):
    text = text.strip()
    m = re.fullmatch(r"(-?\d+)\s*\.\.\s*(-?\d+)", text)
    if m:
        a, b = int(m.group(1)), int(m.group(2))
        if b < a:
            raise ValueError("empty range")
        return list(range(a, b + 1))
    parts = [p for p in re.split(r"[\s,]+", text) if p]
    if not parts:
        raise ValueError("empty list")
    return [int(p) for p in parts]


def _names(text):
    return [p for p in re.split(r"[\s,]+", text.strip()) if p]


@dataclass
class Scenario:
    name: str
    mode: str
    config: Config
    path: Path
    checks: list = field(default_factory=list)


def load_scenario(path) -> Scenario:
    cfg = Config(path)
    cfg.require_section("scenario")
    name = cfg.get("scenario", "name")
    if not re.fullmatch(r"[A-Za-z0-9_.-]+", name):
        raise cfg.error("scenario", "name", "use letters, digits, '.', '_' or '-'")
    mode = cfg.get("scenario", "mode")
    if mode not in MODES:
        raise cfg.error("scenario", "mode", f"unknown mode {mode!r}; expected one of {MODES}")
    checks = _names(cfg.raw("checks", "enabled", default="")) if cfg.has("checks") else []
    sc = Scenario(name, mode, cfg, Path(path), checks)
    VALIDATORS[mode](sc)
    return sc


# ---------------------------------------------------------------------------
# scenario parameters


def _positive(cfg, section, key, value):
    if not value > 0:
        raise cfg.error(section, key, "must be positive")
    return value


def _validate_radial(sc):
    cfg = sc.config
    dims = cfg.ints("radial", "dimensions")
    if min(dims) < 2:
        raise cfg.error("radial", "dimensions", "dimensions must be at least 2")
    c = cfg.get("radial", "c", float)
    if c < 0:
        raise cfg.error("radial", "c", "must be nonnegative")
    radii = cfg.floats("radial", "radii")
    if min(radii) <= 0:
        raise cfg.error("radial", "radii", "radii must be positive")
    _known_checks(sc, set(REGISTRY))


def _domain(cfg):
    if cfg.has("domain", "vertices"):
        return cfg.rows("domain", "vertices", 2)
    sides = cfg.get("domain", "sides", int, 64)
    if sides < 3:
        raise cfg.error("domain", "sides", "a polygon needs at least three sides")
    radius = _positive(cfg, "domain", "radius", cfg.get("domain", "radius", float, 1.0))
    return regular_polygon(sides, radius)


def _boundary(cfg):
    kind = cfg.get("boundary", "data", str, "paraboloid")
    if kind == "radial":
        c = cfg.get("boundary", "c", float, 1.0)
        sol = RadialSingularSolution(2, c)
        return kind, lambda x: np.asarray(
            radial_value(sol, np.linalg.norm(np.atleast_2d(x), axis=1)), float)
    if kind == "paraboloid":
        shift = cfg.get("boundary", "shift", float, 0.0)
        return kind, lambda x: 0.5 * np.sum(np.atleast_2d(x) ** 2, axis=1) + shift
    if kind == "log":
        return kind, log_boundary_data(cfg.get("boundary", "d", float))
    if kind == "constant":
        value = cfg.get("boundary", "value", float, 0.0)
        return kind, lambda x: np.full(len(np.atleast_2d(x)), value)
    raise cfg.error("boundary", "data",
                    f"unknown selector {kind!r}; expected radial, paraboloid, log or constant")


def _density(cfg):
    if not cfg.has("density"):
        return 1.0
    if cfg.has("density", "table"):
        tab = cfg.rows("density", "table", 2)
        if len(tab) < 2 or np.any(np.diff(tab[:, 0]) <= 0):
            raise cfg.error("density", "table", "need at least two rows with increasing radius")
        if np.any(tab[:, 1] < 0):
            raise cfg.error("density", "table", "density must be nonnegative")
        r, v = tab[:, 0].copy(), tab[:, 1].copy()
        return _RadialTable(r, v)
    value = cfg.get("density", "value", float, 1.0)
    if value < 0:
        raise cfg.error("density", "value", "density must be nonnegative")
    return value


@dataclass(frozen=True)
class _RadialTable:
    """Density interpolated linearly in ``|x|``; picklable for ``--jobs``."""
    r: np.ndarray
    v: np.ndarray

    def __call__(self, x):
        return np.interp(np.linalg.norm(np.atleast_2d(x), axis=1), self.r, self.v)


def _atoms(cfg, section="atoms"):
    atoms = []
    if cfg.has(section, "points"):
        rows = cfg.rows(section, "points", 3)
        if np.any(rows[:, 2] <= 0):
            raise cfg.error(section, "points", "atom masses must be positive")
        atoms += [((r[0], r[1]), r[2]) for r in rows]
    if cfg.has("segment", "table"):
        tab = cfg.rows("segment", "table", 3)
        if len(tab) < 2:
            raise cfg.error("segment", "table", "a segment needs at least two nodes")
        if np.any(tab[:, 2] <= 0):
            raise cfg.error("segment", "table", "per-node masses must be positive")
        d = tab[-1, :2] - tab[0, :2]
        off = (tab[:, 0] - tab[0, 0]) * d[1] - (tab[:, 1] - tab[0, 1]) * d[0]
        if np.linalg.norm(d) == 0 or np.max(np.abs(off)) > 1e-9 * np.dot(d, d):
            raise cfg.error("segment", "table", "segment nodes must be collinear")
        atoms += [((r[0], r[1]), r[2]) for r in tab]
    return atoms


DIRICHLET_CHECKS = {"converged", "exact-error", "hessian-growth", "strict-convexity",
                    "comparison", "sandwich", "log-coefficient", "cauchy",
                    "dimension-forms"}


def _known_checks(sc, allowed):
    for name in sc.checks:
        if name not in allowed:
            raise sc.config.error("checks", "enabled", f"unknown check {name!r}")


def _dirichlet_problem(sc):
    cfg = sc.config
    domain = _domain(cfg)
    h = _positive(cfg, "mesh", "h", cfg.get("mesh", "h", float))
    kind, phi = _boundary(cfg)
    atoms = _atoms(cfg)
    mesh = None
    if cfg.boolean("mesh", "graded"):
        if not atoms:
            raise cfg.error("mesh", "graded", "grading needs at least one atom")
        r_min = _positive(cfg, "mesh", "r_min", cfg.get("mesh", "r_min", float, 1e-3))
        mesh = graded_polygon_mesh(domain, h, [p for p, _ in atoms], r_min=r_min)
    try:
        prob = DirichletProblem(domain, phi, h=h, density=_density(cfg), atoms=atoms, mesh=mesh)
    except ValueError as exc:
        section = "atoms" if "atom" in str(exc) else "mesh"
        raise cfg.error(section, None, str(exc)) from None
    return prob, kind


def _validate_dirichlet(sc):
    _dirichlet_problem(sc)
    _known_checks(sc, DIRICHLET_CHECKS)
    cfg = sc.config
    method = cfg.get("solver", "method", str, "auto")
    if method not in ("auto", "newton", "sweep"):
        raise cfg.error("solver", "method", f"unknown method {method!r}")
    if "exact-error" in sc.checks and cfg.get("boundary", "data", str, "") != "radial":
        raise cfg.error("checks", "enabled", "exact-error needs radial boundary data")


def _global_config(sc):
    cfg = sc.config
    rows = cfg.rows("global", "points", 3)
    if len(rows) == 0 or np.any(rows[:, 2] <= 0):
        raise cfg.error("global", "points", "need at least one atom with positive mass")
    radii = cfg.floats("global", "radii")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise cfg.error("global", "radii", "radii must increase")
    h = _positive(cfg, "global", "h", cfg.get("global", "h", float))
    try:
        conf = SingularConfiguration(2, rows[:, :2], rows[:, 2])
    except ValueError as exc:
        raise cfg.error("global", "points", str(exc)) from None
    if np.linalg.norm(rows[:, :2], axis=1).max() >= radii[0] / 2:
        raise cfg.error("global", "radii", "atoms must lie within half the smallest radius")
    return conf, radii, h


def _validate_global(sc):
    _global_config(sc)
    _known_checks(sc, DIRICHLET_CHECKS)


def _validate_suite(sc):
    cfg = sc.config
    names = _names(cfg.get("suite", "checks", str, "all"))
    if names != ["all"]:
        for n in names:
            if n not in REGISTRY:
                raise cfg.error("suite", "checks", f"unknown check {n!r}")


def _validate_dims(sc):
    cfg = sc.config
    ns, ks = cfg.ints("dims", "n"), cfg.ints("dims", "k")
    if min(ns) < 3:
        raise cfg.error("dims", "n", "the dimension formula needs n >= 3")
    if min(ks) < 2:
        raise cfg.error("dims", "k", "the dimension formula needs k >= 2")
    if cfg.has("dims", "expect"):
        cfg.rows("dims", "expect", 3)


VALIDATORS = {"radial": _validate_radial, "dirichlet": _validate_dirichlet,
              "global": _validate_global, "verify-suite": _validate_suite,
              "dims": _validate_dims}


# ---------------------------------------------------------------------------
# runners; each returns (records, summary dict) and writes its own tables


def _rec(name, inputs, measured, expected, tol, passed, notes=""):
    return CheckRecord(name, "scenario", inputs, measured, expected, tol, bool(passed), notes)


def _run_radial(sc, out, tol_scale):
    cfg = sc.config
    dims = cfg.ints("radial", "dimensions")
    c = cfg.get("radial", "c", float)
    r = np.asarray(cfg.floats("radial", "radii"))
    rows = []
    for n in dims:
        sol = RadialSingularSolution(n, c)
        u = np.asarray(radial_value(sol, r), float)
        du = (r ** n + c) ** (1 / n)
        lr, lt = radial_hessian_spectrum(sol, r)
        rows += [(n, *vals) for vals in zip(r, u, du, lr, lt)]
    io._write_rows(out / "radial_table.txt", [f"c = {io.fmt(c)}", "n r u du lambda_r lambda_t"],
                   rows)
    records = [REGISTRY[name](tol_scale) for name in sc.checks]
    return records, {"rows": len(rows), "c": c, "dimensions": dims}


def _solution_checks(sc, f, rep, kind, tol_scale, atoms):
    cfg = sc.config
    recs = []
    for name in sc.checks:
        if name == "converged":
            recs.append(_rec(name, {"tol": rep.tol}, rep.max_residual, "<= tol", rep.tol,
                             rep.converged))
        elif name == "exact-error":
            c = cfg.get("boundary", "c", float, 1.0)
            exact = radial_value(RadialSingularSolution(2, c), np.linalg.norm(f.nodes, axis=1))
            err = float(np.max(np.abs(f.values - exact)))
            tol = cfg.get("checks", "max_error", float, 5 * f.mesh_size) * tol_scale
            recs.append(_rec(name, {"c": c}, err, 0.0, tol, err <= tol))
        elif name == "hessian-growth":
            gamma = [p for p, _ in atoms][:1] or [(0.0, 0.0)]
            lo = cfg.get("checks", "window_min", float, 4 * f.mesh_size)
            hi = cfg.get("checks", "window_max", float, 0.3)
            slack = cfg.get("checks", "exponent_slack", float, 0.1) * tol_scale
            try:
                fit = hessian_growth_fit(f, gamma[0], distances=(lo, hi),
                                         min_decades=math.log10(hi / lo) * 0.9)
            except InsufficientSamples as exc:
                recs.append(_rec(name, {"window": [lo, hi]}, None, -1.0, slack, False, str(exc)))
                continue
            recs.append(_rec(name, {"window": [lo, hi]},
                             {"exponent": fit.exponent, "C": fit.constant,
                              "residual": fit.residual},
                             -1.0, slack, abs(fit.exponent + 1) <= slack))
        elif name == "strict-convexity":
            gamma = np.array([p for p, _ in atoms]) if atoms else np.zeros((1, 2))
            chk = geo.check_strict_convexity(f, gamma)
            recs.append(_rec(name, {"margin": "2h"},
                             {"checked": len(chk.checked), "failures": len(chk.failures)},
                             {"failures": 0}, 0.0, chk.passed))
        elif name == "comparison":
            para = geo.build_pl(f.nodes, 0.5 * np.sum(f.nodes ** 2, axis=1),
                                boundary_mask=f.boundary_mask)
            tol = 1e-9 * tol_scale
            res = comparison_check(f, para, tol)
            recs.append(_rec(name, {"against": "|x|^2/2"}, res.max_excess, "<= tol", tol,
                             res.max_excess <= tol))
    return recs


def _run_dirichlet(sc, out, tol_scale):
    cfg = sc.config
    prob, kind = _dirichlet_problem(sc)
    method = cfg.get("solver", "method", str, "auto")
    tol = cfg.get("solver", "tol", float, 0.0) or None
    max_iter = cfg.get("solver", "max_iter", int, 0) or None
    f, rep = solve_dirichlet(prob, method=method, tol=tol, max_iter=max_iter)
    _write_solution(out, f, rep)
    recs = _solution_checks(sc, f, rep, kind, tol_scale, prob.atoms)
    return recs, {"nodes": len(f.nodes), **rep.summary()}


def _write_solution(out, f, rep):
    io.write_pl(out / "solution.txt", f, [f"converged = {io.fmt(rep.converged)}"])
    io.write_atoms(out / "atoms.txt", f, geo.ma_measure(f))


def _run_global(sc, out, tol_scale):
    cfg = sc.config
    conf, radii, h = _global_config(sc)
    run = solve_global(conf, radii, h)
    f = run.limit
    _write_solution(out, f, run.reports[-1])
    recs = []
    for name in sc.checks:
        if name == "sandwich":
            viol = [len(b["violations"]) for b in run.bounds]
            recs.append(_rec(name, {"radii": radii, "h": h},
                             {"violations": viol,
                              "beta_minus": [b["beta_minus"] for b in run.bounds],
                              "beta_plus": [b["beta_plus"] for b in run.bounds]},
                             0, 0.0, sum(viol) == 0))
        elif name == "log-coefficient":
            lo = cfg.get("checks", "fit_min", float, 3.0)
            hi = cfg.get("checks", "fit_max", float, 10.0)
            fit = asymptotic_decay_check(f, conf, radii=np.geomspace(lo, hi, 16))
            tol = cfg.get("checks", "relative_tol", float, 0.1) * tol_scale
            recs.append(_rec(name, {"window": [lo, hi], "R": radii[-1]},
                             {"d": fit.d, "residual": fit.residual}, fit.expected, tol,
                             fit.relative_error <= tol))
        elif name == "cauchy":
            gaps = run.cauchy
            ok = all(b <= a for a, b in zip(gaps, gaps[1:]))
            recs.append(_rec(name, {"core_radius": run.core_radius}, gaps, "decreasing", 0.0,
                             ok))
        elif name == "converged":
            ok = all(r.converged for r in run.reports)
            recs.append(_rec(name, {"radii": radii},
                             [r.max_residual for r in run.reports], "<= tol",
                             run.reports[-1].tol, ok))
    summary = {"radii": radii, "h": h, "log_coefficient": run.log_coefficient,
               "cauchy": run.cauchy, "nodes": [len(s.nodes) for s in run.solutions],
               "iterations": [r.iterations for r in run.reports]}
    return recs, summary


def _run_suite(sc, out, tol_scale):
    cfg = sc.config
    names = _names(cfg.get("suite", "checks", str, "all"))
    slow = cfg.boolean("suite", "include_slow", True)
    recs = run_checks(None if names == ["all"] else names, tol_scale, include_slow=slow)
    return recs, {"checks": len(recs)}


def _run_dims(sc, out, tol_scale):
    cfg = sc.config
    ns, ks = cfg.ints("dims", "n"), cfg.ints("dims", "k")
    table = [(n, k, orbifold_dimension(n, k)) for n in ns for k in ks]
    io._write_rows(out / "dims_table.txt", ["n k d"], table)
    recs = []
    agree = all(d == moduli_parameter_count(n, k) for n, k, d in table)
    recs.append(_rec("dimension-forms", {"n": ns, "k": ks}, agree, True, 0.0, agree))
    if cfg.has("dims", "expect"):
        exp = cfg.rows("dims", "expect", 3)
        got = [orbifold_dimension(int(n), int(k)) for n, k, _ in exp]
        want = [int(d) for *_, d in exp]
        recs.append(_rec("dimension-values", {"pairs": exp[:, :2].astype(int).tolist()},
                         got, want, 0.0, got == want))
    width = max(len(str(k)) for k in ks) + 2
    lines = ["n \\ k" + "".join(f"{k:>{width}}" for k in ks)]
    for n in ns:
        lines.append(f"{n:<5}" + "".join(f"{orbifold_dimension(n, k):>{width}}" for k in ks))
    return recs, {"table": lines}


RUNNERS = {"radial": _run_radial, "dirichlet": _run_dirichlet, "global": _run_global,
           "verify-suite": _run_suite, "dims": _run_dims}


# ---------------------------------------------------------------------------
# driver


@dataclass
class Outcome:
    name: str
    status: int
    records: list
    message: str = ""
    table: list = field(default_factory=list)


def _summary_lines(name, mode, records, summary):
    lines = [f"scenario {name} ({mode})", ""]
    width = max([len(r.name) for r in records] + [5])
    for r in records:
        lines.append(f"{r.name:<{width}}  {'pass' if r.passed else 'FAIL'}  "
                     f"{io.dumps_record(r.measured)}")
    if not records:
        lines.append("(no checks enabled)")
    lines.append("")
    for key in sorted(summary):
        val = summary[key]
        if key == "table":
            lines += val
        else:
            lines.append(f"{key} = {io.dumps_record(val)}")
    return lines


def run_scenario(path, out_root, tol_scale=1.0) -> Outcome:
    try:
        sc = load_scenario(path)
    except ConfigError as exc:
        return Outcome(Path(path).stem, EXIT_CONFIG, [], str(exc))
    out = Path(out_root) / sc.name
    out.mkdir(parents=True, exist_ok=True)
    try:
        records, summary = RUNNERS[sc.mode](sc, out, tol_scale)
    except ConvergenceError as exc:
        return Outcome(sc.name, EXIT_SOLVER, [], f"{path}: solver did not converge: {exc}")
    except SandwichViolation as exc:
        rec = _rec("sandwich", {}, str(exc), 0, 0.0, False)
        records, summary = [rec], {}
    with open(out / "checks.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(io.dumps_record(r.as_dict()) + "\n")
    lines = _summary_lines(sc.name, sc.mode, records, summary)
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    status = EXIT_OK if all(r.passed for r in records) else EXIT_FAILED
    return Outcome(sc.name, status, records, "", lines)


def _cmd_run(args):
    if args.tol_scale <= 0:
        print("error: --tol-scale must be positive", file=sys.stderr)
        return EXIT_CONFIG
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    names = [load_name(p) for p in args.files]
    dup = {n for n in names if n and names.count(n) > 1}
    if dup:
        print(f"error: scenario names must be unique, repeated: {', '.join(sorted(dup))}",
              file=sys.stderr)
        return EXIT_CONFIG
    if args.jobs > 1 and len(args.files) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(run_scenario, args.files, [args.out] * len(args.files),
                                     [args.tol_scale] * len(args.files)))
    else:
        outcomes = [run_scenario(p, args.out, args.tol_scale) for p in args.files]
    for o in outcomes:
        if o.message:
            print(o.message, file=sys.stderr)
        else:
            print("\n".join(o.table))
            print()
    width = max([len(o.name) for o in outcomes] + [8])
    print(f"{'scenario':<{width}}  {'checks':>6}  {'failed':>6}  status")
    for o in outcomes:
        failed = sum(not r.passed for r in o.records)
        print(f"{o.name:<{width}}  {len(o.records):>6}  {failed:>6}  {o.status}")
    return max(o.status for o in outcomes)


def load_name(path):
    """Scenario name without running validation (used to spot output clashes)."""
    try:
        p = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
        p.read(path, encoding="utf-8")
        return p.get("scenario", "name", fallback=None)
    except configparser.Error:
        return None


def _cmd_list(args):
    chosen = list_checks(args.filter or "")
    for c in chosen:
        slow = " (slow)" if c.slow else ""
        print(f"{c.name:<24} tol={c.tolerance:<8g} [{', '.join(c.tags)}]{slow}")
        print(f"    {c.anchor}")
    print(f"{len(chosen)} check(s)")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="singular-ma",
                                description="Monge-Ampere solutions with point singularities")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one or more scenario files")
    r.add_argument("files", nargs="+", help="scenario .cfg files")
    r.add_argument("--out", default="out", help="output directory (default: out)")
    r.add_argument("--jobs", type=int, default=1, help="scenarios to run concurrently")
    r.add_argument("--tol-scale", type=float, default=1.0,
                   help="multiply every check tolerance by this factor")
    r.set_defaults(func=_cmd_run)
    ls = sub.add_parser("list-checks", help="print the catalogue of checks")
    ls.add_argument("--filter", default="", help="substring of a name, tag or description")
    ls.set_defaults(func=_cmd_list)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
