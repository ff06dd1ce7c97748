"""Command-line front end: ``fanomom <subcommand> [options]``.

Exit status is 0 on success, 1 on a configuration error and 2 when a
computed check fails.  Every artifact starts with a ``#`` line holding the
library version and the fully resolved configuration.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, acceptance, dh, lift, model, openness, radialma
from . import logconcave as lc
from .errors import DivergentZeta, DomainError, FanomomError

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2
_INTERNAL = {"command", "config", "handler"}


class ConfigError(Exception):
    """Bad or inconsistent configuration; the message names the key."""


class CheckFailure(Exception):
    """A computed invariant or acceptance check did not hold."""


# -- formatting ----------------------------------------------------------------------
def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, Fraction):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def dump_json(obj) -> str:
    """JSON with floats written to 17 significant digits; non-finite floats become strings."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dump_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(dump_json(v) for v in obj) + "]"
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return fmt(x) if math.isfinite(x) else json.dumps(fmt(x))
    return json.dumps(str(obj))


def csv_text(columns: list[str], rows: list[list]) -> str:
    return "\n".join([",".join(columns)] + [",".join(fmt(v) for v in r) for r in rows]) + "\n"


# -- parsing helpers ------------------------------------------------------------------
def parse_grid(text, key: str) -> np.ndarray:
    """'start:stop:count' (inclusive linspace) or a comma list."""
    if isinstance(text, (list, tuple)):
        vals = [float(v) for v in text]
    else:
        text = str(text).strip()
        try:
            if ":" in text:
                parts = text.split(":")
                if len(parts) != 3:
                    raise ValueError
                a, b, k = float(parts[0]), float(parts[1]), int(parts[2])
                if k < 1 or b < a:
                    raise ValueError
                vals = np.linspace(a, b, k).tolist()
            else:
                vals = [float(v) for v in text.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"{key}: expected 'start:stop:count' with start <= stop and count >= 1, "
                              f"or a comma list, got {text!r}") from None
    if not vals or not all(math.isfinite(v) for v in vals):
        raise ConfigError(f"{key}: grid must be nonempty and finite")
    return np.asarray(vals, dtype=float)


def parse_floats(text, key: str) -> list[float]:
    try:
        vals = [float(Fraction(str(v).strip())) for v in
                (text if isinstance(text, (list, tuple)) else str(text).split(",")) if str(v).strip()]
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{key}: expected a comma list of numbers, got {text!r}") from None
    if not vals:
        raise ConfigError(f"{key}: empty list")
    return vals


def parse_divisor(text, key: str = "exponents") -> openness.MonomialDivisor:
    try:
        if isinstance(text, (list, tuple)):
            return openness.MonomialDivisor(tuple(Fraction(str(a)) for a in text))
        return openness.MonomialDivisor.parse(str(text))
    except (ValueError, ZeroDivisionError, DomainError) as exc:
        raise ConfigError(f"{key}: {exc}") from None


def _require(cond: bool, key: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{key}: {msg}")


def make_geometry(space: str, n: int) -> model.ModelGeometry:
    _require(n >= 1, "n", "dimension must be >= 1")
    return model.Ball(n) if space == "ball" else model.Proj(n)


def make_potential(spec: str, geom: model.ModelGeometry) -> model.RadialPotential:
    """zero | monomial:a | capped:a,cap[,beta] | random:seed | file:path.csv"""
    kind, _, arg = str(spec).partition(":")
    try:
        if kind == "zero":
            return model.zero_potential(geom)
        if kind == "monomial":
            return model.monomial_potential(geom, float(arg))
        if kind == "capped":
            vals = [float(v) for v in arg.split(",")]
            return model.capped_monomial(geom, *vals)
        if kind == "random":
            return model.random_potential(geom, int(arg))
        if kind == "file":
            return model.RadialPotential.from_csv(Path(arg).read_text())
    except (ValueError, TypeError, OSError, FanomomError) as exc:
        raise ConfigError(f"potential: {exc}") from None
    raise ConfigError(f"potential: unknown kind {kind!r} (zero, monomial, capped, random, file)")


# -- subcommands ------------------------------------------------------------------------
# Each handler returns (artifacts, failures) where artifacts is a list of
# (suffix, text) and failures a list of messages.

def cmd_zeta(cfg: dict):
    gam = parse_grid(cfg["gamma_grid"], "gamma-grid")
    rows, fails = [], []
    if cfg["exponents"] is not None:
        d = parse_divisor(cfg["exponents"])
        geom = model.Ball(1)
        pots = {a: model.monomial_potential(geom, float(a)) for a in set(d.exponents)}
        for g in gam:
            if not g < d.c_u:
                rows.append([g, math.inf, math.inf, None])
                continue
            exact = d.zeta(float(g))
            quad = math.prod(model.zeta_eval(pots[a], float(g)) for a in d.exponents)
            err = abs(quad - exact) / exact
            if err > cfg["tol"]:
                fails.append(f"zeta quadrature at gamma={fmt(g)} off by {err:.3e}")
            rows.append([g, exact, quad, err])
        return [("csv", csv_text(["gamma", "Z", "Z_quadrature", "rel_error"], rows))], fails
    geom = make_geometry(cfg["space"], cfg["n"])
    u = make_potential(cfg["potential"], geom)
    for g in gam:
        try:
            lz = model.log_zeta(u, float(g))
        except DivergentZeta:
            lz = math.inf
        rows.append([g, math.exp(lz) if lz < 709 else math.inf, lz])
    return [("csv", csv_text(["gamma", "Z", "log_Z"], rows))], fails


def cmd_openness(cfg: dict):
    d = parse_divisor(cfg["exponents"])
    c = float(d.c_u)
    _require(c < 1, "exponents", f"complex singularity exponent {d.c_u} is not below 1")
    _require(cfg["A"] > 0, "A", "must be positive")
    _require(cfg["B"] >= 0, "B", "must be nonnegative")
    if cfg["gamma_grid"] is None:
        gam = c * np.linspace(0.01, 0.99, 100)
    else:
        gam = parse_grid(cfg["gamma_grid"], "gamma-grid")
        _require(bool(np.all((gam > 0) & (gam < c))), "gamma-grid", f"values must lie in (0, {c!r})")
    rows, fails = [], []
    for g in gam:
        r = openness.openness_bound_check(d, float(g), A=cfg["A"], B=cfg["B"], b=cfg["b"])
        rows.append([r.gamma, r.Z, r.g, r.rhs, r.margin])
        if r.margin < 0 and not fails:
            fails.append(f"openness margin {r.margin:.6g} < 0 at gamma={fmt(g)}")
    return [("csv", csv_text(["gamma", "Z", "g", "rhs", "margin"], rows))], fails


def cmd_kk(cfg: dict):
    ps = parse_floats(cfg["p"], "p")
    _require(all(p >= 1 for p in ps), "p", "exponents must be >= 1")
    _require(cfg["count"] >= 1, "count", "must be >= 1")
    seeds = range(cfg["seed"], cfg["seed"] + cfg["count"])

    def one(s):
        m = lc.random_log_concave(s)
        return [[s, p, lc.kahane_khinchin_ratio(m, p, centered=cfg["centered"]), dh.kk_envelope(p)] for p in ps]

    rows = [r for block in acceptance.pmap(one, seeds) for r in block]
    fails = [f"seed {s}: ratio {r:.6g} exceeds envelope {e:.6g} at p={fmt(p)}"
             for s, p, r, e in rows if r > e + 1e-9][:1]
    return [("csv", csv_text(["seed", "p", "ratio", "envelope"], rows))], fails


def cmd_lift_verify(cfg: dict):
    gam = parse_grid(cfg["gamma_grid"], "gamma-grid")
    _require(bool(np.all((gam > 0) & (gam < 1))), "gamma-grid", "values must lie in (0, 1)")
    geom = make_geometry(cfg["space"], cfg["n"])
    u = make_potential(cfg["potential"], geom)
    nu = lift.nu0(u)
    reps = acceptance.pmap(lambda g: lift.verify_factorization(u, float(g), tol=cfg["tol"], nu=nu), gam)
    lines = [dump_json(json.loads(r.to_json())) for r in reps]
    fails = [f"factorization failed at gamma={fmt(r.gamma)} (rel error {r.rel_error:.3e})"
             for r in reps if not r.success][:1]
    return [("jsonl", "\n".join(lines) + "\n")], fails


def _load_tc(cfg: dict) -> dh.TCFunctionSpec:
    if cfg["spec"] is not None:
        src = cfg["spec"]
        try:
            doc = src if isinstance(src, dict) else (
                json.loads(src) if str(src).lstrip().startswith("{") else json.loads(Path(src).read_text()))
            return dh.TCFunctionSpec.from_json(doc)
        except (OSError, ValueError, KeyError, TypeError, FanomomError) as exc:
            raise ConfigError(f"spec: {exc}") from None
    try:
        return dh.preset(cfg["preset"])
    except DomainError as exc:
        raise ConfigError(f"preset: {exc}") from None


def cmd_dh(cfg: dict):
    spec = _load_tc(cfg)
    _require(cfg["k"] >= 1, "k", "must be >= 1")
    ps = parse_floats(cfg["p"], "p")
    _require(all(p >= 1 for p in ps), "p", "exponents must be >= 1")
    data = dh.toric_tc_weights(spec, cfg["k"])
    rep = dh.reverse_holder_report(data.empirical, spec.body.n, ps)
    rows = [[r.p, r.uncentered, r.centered, r.ratio, r.flag_nplus1, r.flag_logconcave] for r in rep.rows]
    fails = [] if rep.ok else [f"reverse Hoelder flag failed for {spec.name or 'spec'} at k={cfg['k']}"]
    return [("csv", csv_text(["p", "uncentered", "centered", "ratio", "flag_nplus1", "flag_logconcave"], rows))], fails


def cmd_normal_cone(cfg: dict):
    _require(cfg["n"] >= 2, "n", "must be >= 2")
    _require(cfg["k"] >= 1, "k", "must be >= 1")
    try:
        eps = Fraction(str(cfg["epsilon"]))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"epsilon: not a rational number: {cfg['epsilon']!r}") from None
    _require(0 < eps < 1, "epsilon", "must lie in (0, 1)")
    ps = parse_floats(cfg["p"], "p")
    rep = dh.normal_cone_weights(cfg["n"], eps, cfg["k"], ps)
    if cfg["format"] == "json":
        return [("json", dump_json(json.loads(rep.to_json())) + "\n")], []
    rows = [[p, c, u] for p, c, u in zip(rep.p_list, rep.centered_ratios, rep.uncentered_ratios)]
    return [("csv", csv_text(["p", "centered_ratio", "uncentered_ratio"], rows))], []


def cmd_radial_ma(cfg: dict):
    n = cfg["n"]
    _require(n >= 1, "n", "dimension must be >= 1")
    grid = parse_grid(cfg["gamma_grid"], "gamma-grid")
    arts, fails = [], []
    if cfg["space"] == "ball":
        _require(bool(np.all((grid >= 0) & (grid < n + 1))), "gamma-grid", f"values must lie in [0, {n + 1})")
        sols = acceptance.pmap(lambda g: radialma.solve_ball(n, float(g), tol=math.inf), grid)
        rows = [[g, radialma.ball_energy(s, cfg["energy"]), s.residual] for g, s in zip(grid, sols)]
        arts.append(("csv", csv_text(["gamma", "E", "residual"], rows)))
        if cfg["fit_slope"]:
            fit = radialma.blowup_slope(n, grid, energy=cfg["energy"], accept=cfg["accept"])
            arts.append(("fit.json", dump_json(fit.to_dict()) + "\n"))
    else:
        _require(bool(np.all((grid >= 0) & (grid <= 1))), "gamma-grid", "path parameters must lie in [0, 1]")
        sols = acceptance.pmap(lambda t: radialma.solve_proj(n, float(t), twist=cfg["twist"]), grid)
        rows = []
        for t, s in zip(grid, sols):
            tr = model.twisted_ricci(s.potential, float(t)) if t > 0 else None
            rows.append([t, model.ding(s.potential, float(t)), s.residual,
                         None if tr is None else tr.sup - tr.inf])
        arts.append(("csv", csv_text(["t", "ding", "residual", "ricci_spread"], rows)))
        if cfg["fit_slope"]:
            raise ConfigError("fit-slope: only available for --space ball")
    bad = [s for s in sols if s.residual > cfg["accept"]]
    if bad:
        fails.append(f"solver residual {bad[0].residual:.3e} exceeds {cfg['accept']:.1e} at {fmt(bad[0].param)}")
    if cfg["emit_potentials"]:
        for s in sols:
            arts.append((f"u_{fmt(s.param)}.csv", s.potential.to_csv()))
    return arts, fails


def cmd_verify_all(cfg: dict):
    only = None
    if cfg["only"]:
        try:
            only = sorted({int(x) for x in str(cfg["only"]).split(",") if x.strip()})
        except ValueError:
            raise ConfigError(f"only: expected a comma list of criterion numbers, got {cfg['only']!r}") from None
        _require(all(k in acceptance.CRITERIA for k in only), "only", "criteria are numbered 1..13")
    overrides: dict[int, dict] = {}
    for item in cfg["tolerance"] or []:
        try:
            lhs, val = str(item).split("=")
            num, key = lhs.split(".", 1)
            overrides.setdefault(int(num), {})[key] = float(val)
            acceptance.tolerances(int(num), overrides[int(num)])
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"tolerance: expected N.key=value, got {item!r} ({exc})") from None
    results = acceptance.run_all(cfg["profile"], only, overrides)
    for r in results:
        print(r.line(), file=sys.stderr)
    fails = [f"criterion {r.number} ({r.name}) failed: {r.note}" for r in results if not r.passed]
    return [("json", dump_json(acceptance.summary(results, cfg["profile"])) + "\n")], fails


# -- parser ------------------------------------------------------------------------------
def _add_potential(p: argparse.ArgumentParser) -> None:
    p.add_argument("--space", choices=["ball", "proj"], default="ball")
    p.add_argument("--n", type=int, default=1, help="complex dimension")
    p.add_argument("--potential", default="zero",
                   help="zero | monomial:a | capped:a,cap[,beta] | random:seed | file:path.csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fanomom", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fanomom {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text, ext="csv"):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(handler=handler)
        p.add_argument("--config", help="JSON file (or inline object) with option values")
        p.add_argument("--out", default=None, help="output directory (default: stdout)")
        p.add_argument("--output", default=None, help=f"file name inside --out (default: {name}.{ext})")
        p.add_argument("--format", choices=["csv", "json"], default="csv")
        return p

    p = add("zeta", cmd_zeta, "Z_u(gamma) for a radial potential or a monomial divisor")
    _add_potential(p)
    p.add_argument("--exponents", default=None, help="monomial exponents, e.g. 3,1 (closed form vs quadrature)")
    p.add_argument("--gamma-grid", default="0.05:0.45:9")
    p.add_argument("--tol", type=float, default=1e-8)

    p = add("openness", cmd_openness, "effective openness margins for a monomial divisor")
    p.add_argument("--exponents", required=False, default=None)
    p.add_argument("--A", dest="A", type=float, default=16.0)
    p.add_argument("--B", dest="B", type=float, default=1.0)
    p.add_argument("--b", dest="b", type=float, default=0.0)
    p.add_argument("--gamma-grid", default=None)

    p = add("kk", cmd_kk, "Kahane-Khinchin ratios of seeded random log-concave laws")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--p", default="2,3,4")
    p.add_argument("--centered", action="store_true")

    p = add("lift-verify", cmd_lift_verify, "log-concave Laplace factorization reports", ext="jsonl")
    _add_potential(p)
    p.add_argument("--gamma-grid", default="0.05:0.9:18")
    p.add_argument("--tol", type=float, default=1e-5)

    p = add("dh", cmd_dh, "reverse Hoelder table for a toric test configuration")
    p.add_argument("--preset", default="p1-linear", help=", ".join(sorted(dh.PRESETS)))
    p.add_argument("--spec", default=None, help="JSON document (path or inline) with body and pieces")
    p.add_argument("--k", type=int, default=40)
    p.add_argument("--p", default="1,2,4,8")

    p = add("normal-cone", cmd_normal_cone, "weight measure of the deformation to the normal cone")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--epsilon", default="1/10")
    p.add_argument("--k", type=int, default=60)
    p.add_argument("--p", default="1,2,3,4,8")

    p = add("radial-ma", cmd_radial_ma, "radial Aubin Monge-Ampere solves (ball: gamma, proj: t)")
    p.add_argument("--space", choices=["ball", "proj"], default="ball")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--gamma-grid", default="1.5:1.99:25")
    p.add_argument("--fit-slope", action="store_true")
    p.add_argument("--energy", choices=["pluricomplex", "local"], default="pluricomplex")
    p.add_argument("--accept", type=float, default=1e-6, help="largest residual accepted")
    p.add_argument("--twist", type=float, default=0.0, help="proj only: reference twist")
    p.add_argument("--emit-potentials", action="store_true", help="write each solution as s,phi,phi_prime CSV")

    p = add("verify-all", cmd_verify_all, "run the acceptance suite", ext="json")
    p.add_argument("--profile", choices=["quick", "full"], default="quick")
    p.add_argument("--only", default=None, help="comma list of criterion numbers")
    p.add_argument("--tolerance", action="append", default=None, metavar="N.key=value",
                   help="override a criterion bound, e.g. 7.c_error=1e-12")
    return parser


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:  # noqa: SLF001
        if name in action.choices:
            return action.choices[name]
    raise KeyError(name)


def _load_config(text: str) -> dict:
    try:
        doc = json.loads(text) if text.lstrip().startswith("{") else json.loads(Path(text).read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"config: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be an object")
    return doc


def resolve(argv: list[str] | None = None) -> tuple[dict, object]:
    """Parse flags, merge --config (flags win), reject unknown keys."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sp = _subparser(parser, args.command)
        known = {a.dest for a in sp._actions if a.dest not in {"help"} | _INTERNAL}  # noqa: SLF001
        doc = {k.replace("-", "_"): v for k, v in _load_config(args.config).items()}
        doc.pop("command", None)
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"config: unknown key(s) {unknown} for {args.command}")
        sp.set_defaults(**doc)
        args = parser.parse_args(argv)
    cfg = {k: v for k, v in vars(args).items() if k not in _INTERNAL}
    if args.command == "openness" and cfg["exponents"] is None:
        raise ConfigError("exponents: required")
    for key in ("tol", "accept"):
        if key in cfg:
            _require(isinstance(cfg[key], (int, float)) and cfg[key] > 0, key, "must be a positive number")
    out_name = cfg.get("output")
    if out_name is not None:
        _require(Path(out_name).name == out_name and out_name not in ("", ".", ".."), "output",
                 "must be a bare file name inside --out")
    return {"command": args.command, **cfg}, args.handler


def header(cfg: dict) -> str:
    return f"# fanomom {__version__} config={dump_json(cfg)}\n"


def write_artifacts(cfg: dict, artifacts: list[tuple[str, str]]) -> list[Path]:
    head = header(cfg)
    if cfg["out"] is None:
        for _, text in artifacts:
            sys.stdout.write(head + text)
        return []
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    written = []
    base = cfg["output"] or cfg["command"]
    for i, (suffix, text) in enumerate(artifacts):
        if i == 0:
            name = cfg["output"] or f"{base}.{suffix}"
        else:
            name = f"{Path(base).stem}.{suffix}"
        path = out / name
        path.write_text(head + text)
        written.append(path)
    return written


def run_scenario(argv: list[str] | None = None) -> list[Path]:
    """Resolve, dispatch and write; raises ConfigError or CheckFailure."""
    cfg, handler = resolve(argv)
    try:
        artifacts, failures = handler(cfg)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    except FanomomError as exc:
        raise CheckFailure(f"{type(exc).__name__}: {exc}") from exc
    written = write_artifacts(cfg, artifacts)
    if failures:
        raise CheckFailure(failures[0])
    return written


def main(argv: list[str] | None = None) -> int:
    try:
        run_scenario(argv)
    except ConfigError as exc:
        print(f"fanomom: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckFailure as exc:
        print(f"fanomom: check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
