"""Command-line driver: cross-checks between methods, parameter sweeps and property suites.

Config files hold flat ``key = value`` lines (``#`` comments allowed).  Known keys:

    n, L, seed, draws, box, delta_gen
    gamma, h, hbar, mu          explicit parameters (mu comma separated); omit for random draws
    X, Y                        explicit spectral points (comma separated complex)
    methods                     comma list of direct, contour_residue, contour_quadrature,
                                recursion, closed_n1, or "all"
    suites                      comma list of identities, lemmas, equations, asymptotics, onshell
    sweep_start, sweep_stop, sweep_points    lambda_1^B sweep for the table command
    quad_nodes                  node count per circle for quadrature (default: budgeted)
    tol.NAME = VALUE            tolerance overrides
    format, out

Exit codes: 0 pass, 1 tolerance failure, 2 resonance or genericity flag, 3 configuration error.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import itertools
import json
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .algebra import (crossing_unitarity, double_row_monodromy, dual_reflection_residual,
                      reflection_residual, transfer_matrix, unitarity_residual, ybe_residual)
from .bethe import (NewtonError, _jsonable, direct_value, eigencheck, polynomial_holdout_error,
                    solve_bethe_newton, special_zero_values, symmetry_defect, bethe_residual)
from .funceq import (asymptotic_coefficient, equation_residual, jj_vacuum, closed_vacuum_sum,
                     scaled_limit, verify_exchange_relation)
from .numkernel import (DEFAULT_BOX, DELTA_GEN, DimensionLimitError, GenericityError, ModelParams,
                        SingularDenominatorError, SpectralSets, check_sites, relerr)
from .solver import (QuadratureError, contour_scalar_product, n1_value, scalar_product_recursion)

ALL_METHODS = ("direct", "contour_residue", "contour_quadrature", "recursion", "closed_n1")
ALL_SUITES = ("identities", "lemmas", "equations", "asymptotics", "onshell")

DEFAULT_TOLS = dict(crosscheck=1e-8, table=1e-8, identity=1e-12, exchange=1e-10, symmetry=1e-12,
                    polynomial=1e-8, zeros=1e-9, equation=1e-10, asym_ops=1e-10, asym_limit=1e-4,
                    bethe=1e-10, eigen=1e-8)

EXIT_OK, EXIT_TOL, EXIT_FLAG, EXIT_CONFIG = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    n: int = 1
    L: int = 1
    seed: int = 0
    draws: int = 3
    box: float = DEFAULT_BOX
    delta_gen: float = DELTA_GEN
    gamma: complex | None = None
    h: complex | None = None
    hbar: complex | None = None
    mu: tuple | None = None
    X: tuple | None = None
    Y: tuple | None = None
    methods: tuple = ()
    suites: tuple = ()
    sweep_start: complex = -1.0 + 0.3j
    sweep_stop: complex = 1.0 + 0.3j
    sweep_points: int = 11
    quad_nodes: int | None = None
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLS))
    format: str = "json"
    out: str | None = None

    @property
    def explicit_params(self) -> bool:
        return self.gamma is not None

    def resolved_methods(self) -> tuple:
        ms = ALL_METHODS if not self.methods or "all" in self.methods else self.methods
        return tuple(m for m in ms if m != "closed_n1" or self.n == 1)

    def as_dict(self) -> dict:
        d = asdict(self)
        return _jsonable({k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()})


def _complex(s: str) -> complex:
    return complex(s.replace(" ", "").replace("i", "j"))


def _clist(s: str) -> tuple:
    return tuple(_complex(x) for x in s.split(",") if x.strip())


_PARSERS = dict(n=int, L=int, seed=int, draws=int, box=float, delta_gen=float, gamma=_complex,
                h=_complex, hbar=_complex, mu=_clist, X=_clist, Y=_clist,
                methods=lambda s: tuple(x.strip() for x in s.split(",") if x.strip()),
                suites=lambda s: tuple(x.strip() for x in s.split(",") if x.strip()),
                sweep_start=_complex, sweep_stop=_complex, sweep_points=int, quad_nodes=int,
                format=str, out=str)


def _line_of(text: str, key: str) -> int:
    for i, line in enumerate(text.splitlines(), 1):
        if line.split("=")[0].strip() == key:
            return i
    return 0


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        # flat files: prepend a section header, then shift reported lines back by one
        cp.read_string("[run]\n" + text)
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] - 1
        bad = text.splitlines()[lineno - 1].strip()
        raise ConfigError(f"config parse error at line {lineno}: expected 'key = value', got {bad!r}") from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"config parse error at line {exc.lineno - 1}, field {exc.option}: "
                          "duplicate key") from None
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", None)
        where = f"line {lineno - 1}" if lineno else "unknown line"
        raise ConfigError(f"config parse error at {where}: {exc.message}") from None
    cfg = RunConfig()
    for key, raw in cp["run"].items():
        line = _line_of(text, key)
        if key.startswith("tol."):
            try:
                cfg.tolerances[key[4:]] = float(raw)
            except ValueError:
                raise ConfigError(f"line {line}, field {key}: not a number: {raw!r}") from None
            continue
        if key not in _PARSERS:
            raise ConfigError(f"line {line}, field {key}: unknown key")
        try:
            setattr(cfg, key, _PARSERS[key](raw))
        except ValueError as exc:
            raise ConfigError(f"line {line}, field {key}: {exc}") from None
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.n < 1 or cfg.L < 1:
        raise ConfigError("n and L must be positive")
    if cfg.n > cfg.L:
        raise ConfigError(f"infeasible size: n={cfg.n} exceeds L={cfg.L}")
    try:
        check_sites(cfg.L)
    except DimensionLimitError as exc:
        raise ConfigError(f"infeasible size: {exc}") from None
    bad = [m for m in cfg.methods if m not in ALL_METHODS + ("all",)]
    if bad:
        raise ConfigError(f"unknown methods {bad}")
    if "closed_n1" in cfg.methods and cfg.n != 1:
        raise ConfigError("closed_n1 requires n = 1")
    bad = [s for s in cfg.suites if s not in ALL_SUITES]
    if bad:
        raise ConfigError(f"unknown suites {bad}")
    if cfg.explicit_params:
        if cfg.h is None or cfg.hbar is None or cfg.mu is None:
            raise ConfigError("explicit parameters need gamma, h, hbar and mu")
        if len(cfg.mu) != cfg.L:
            raise ConfigError(f"mu has {len(cfg.mu)} entries, expected L={cfg.L}")
    for name, Z in (("X", cfg.X), ("Y", cfg.Y)):
        if Z is not None and len(Z) != cfg.n:
            raise ConfigError(f"{name} has {len(Z)} entries, expected n={cfg.n}")
    if cfg.format not in ("json", "csv"):
        raise ConfigError(f"unknown format {cfg.format!r}")
    if cfg.sweep_points < 0:
        raise ConfigError("sweep_points must be nonnegative")


def draw(cfg: RunConfig, k: int):
    """Parameters and spectral sets of draw k, from the seed sequence (seed, k)."""
    rng = np.random.default_rng([cfg.seed, k])
    if cfg.explicit_params:
        p = ModelParams(cfg.gamma, cfg.h, cfg.hbar, cfg.L, cfg.mu, cfg.delta_gen)
    else:
        p = ModelParams.random_generic(cfg.L, rng, cfg.box, cfg.delta_gen)
    if cfg.X is not None and cfg.Y is not None:
        s = SpectralSets(cfg.X, cfg.Y)
    else:
        s = SpectralSets.random(cfg.n, rng, cfg.box, p)
    return p, s


def evaluate(method: str, s: SpectralSets, p: ModelParams, cfg: RunConfig):
    """(value, flags, diagnostics) for one method."""
    if method == "direct":
        return direct_value(s.X, s.Y, p), [], {}
    if method == "contour_residue":
        r = contour_scalar_product(s, p, "residue", require_generic=False)
        return r.value, r.flags, r.diagnostics
    if method == "contour_quadrature":
        r = contour_scalar_product(s, p, "quadrature", nodes=cfg.quad_nodes, require_generic=False)
        return r.value, r.flags, r.diagnostics
    if method == "recursion":
        return scalar_product_recursion(s, p), [], {}
    if method == "closed_n1":
        return n1_value(s.X[0], s.Y[0], p), [], {}
    raise ConfigError(f"unknown method {method!r}")


def run_crosscheck(cfg: RunConfig) -> tuple[dict, int]:
    tol = cfg.tolerances["crosscheck"]
    records, diffs = [], []
    status = EXIT_OK
    for k in range(cfg.draws):
        p, s = draw(cfg, k)
        gen = p.genericity_violations() + s.genericity_violations(p)
        vals = {}
        for m in cfg.resolved_methods():
            try:
                v, flags, dg = evaluate(m, s, p, cfg)
            except (SingularDenominatorError, QuadratureError) as exc:
                v, flags, dg = None, [f"error: {exc}"], {}
            flags = list(flags) + [f"genericity: {g}" for g in gen]
            if flags:
                status = max(status, EXIT_FLAG)
            records.append(dict(draw=k, method=m, params=p.as_dict(), sets=s.as_dict(),
                                value=v, flags=flags, diagnostics=dg, seed=[cfg.seed, k]))
            if v is not None:
                vals[m] = v
        for a, b in itertools.combinations(sorted(vals), 2):
            d = abs(vals[a] - vals[b]) / max(abs(vals[a]), abs(vals[b]))
            ok = d <= tol
            if not ok and status == EXIT_OK:
                status = EXIT_TOL
            diffs.append(dict(draw=k, pair=[a, b], rel_diff=d, tol=tol, ok=ok))
    checks = run_suites(cfg) if cfg.suites else []
    if any(not c["ok"] for c in checks) and status == EXIT_OK:
        status = EXIT_TOL
    rep = dict(command="crosscheck", version=__version__, config=cfg.as_dict(), records=records,
               pairwise=diffs, checks=checks,
               max_rel_diff=max((d["rel_diff"] for d in diffs), default=0.0), exit_status=status)
    return _jsonable(rep), status


def run_table(cfg: RunConfig) -> tuple[dict, int]:
    tol = cfg.tolerances["table"]
    p, s = draw(cfg, 0)
    methods = cfg.resolved_methods()
    grid = np.linspace(cfg.sweep_start, cfg.sweep_stop, cfg.sweep_points) if cfg.sweep_points else []
    rows = []
    status = EXIT_OK
    for i, lam in enumerate(grid):
        Y = (complex(lam),) + tuple(s.Y[1:])
        si = SpectralSets(s.X, Y)
        row = dict(index=i, lambda1B=complex(lam))
        vals = []
        for m in methods:
            try:
                v, flags, _ = evaluate(m, si, p, cfg)
            except (SingularDenominatorError, QuadratureError) as exc:
                v, flags = None, [str(exc)]
            if flags:
                status = max(status, EXIT_FLAG)
            row[m] = v
            if v is not None:
                vals.append(v)
        spread = 0.0
        for a, b in itertools.combinations(vals, 2):
            spread = max(spread, abs(a - b) / max(abs(a), abs(b)))
        row["max_rel_diff"] = spread
        if spread > tol and status == EXIT_OK:
            status = EXIT_TOL
        rows.append(row)
    rep = dict(command="table", version=__version__, config=cfg.as_dict(), params=p.as_dict(),
               sets=s.as_dict(), methods=list(methods), rows=rows, exit_status=status)
    return _jsonable(rep), status


# ----- property suites ------------------------------------------------------------------

def _check(suite, name, value, tol, note=""):
    value = float(value)
    return dict(suite=suite, name=name, value=value, tol=tol, ok=bool(value <= tol), note=note)


def suite_identities(cfg, p, s, rng):
    T = cfg.tolerances
    l1, l2 = (complex(*rng.uniform(-1, 1, 2)) for _ in range(2))
    out = [_check("identities", "ybe", ybe_residual(l1, l2, p), T["identity"]),
           _check("identities", "reflection", reflection_residual(l1, l2, p), T["identity"]),
           _check("identities", "dual_reflection", dual_reflection_residual(l1, l2, p), T["identity"]),
           _check("identities", "unitarity", unitarity_residual(l1, p), T["identity"]),
           _check("identities", "crossing_unitarity", crossing_unitarity(l1, p)[1], T["identity"])]
    b1, b2 = double_row_monodromy(l1, p), double_row_monodromy(l2, p)
    out.append(_check("identities", "BB_commute", relerr(b1.B @ b2.B, b2.B @ b1.B), T["identity"]))
    out.append(_check("identities", "CC_commute", relerr(b1.C @ b2.C, b2.C @ b1.C), T["identity"]))
    t1, t2 = transfer_matrix(l1, p), transfer_matrix(l2, p)
    out.append(_check("identities", "TT_commute", relerr(t1 @ t2, t2 @ t1), T["identity"]))
    l0 = complex(*rng.uniform(-1, 1, 2))
    for kind in ("AB", "CA", "DB", "CD"):
        out.append(_check("identities", f"exchange_{kind}",
                          verify_exchange_relation(kind, l0, s.Y, p), T["exchange"]))
    return out


def suite_lemmas(cfg, p, s, rng):
    T = cfg.tolerances
    out = [_check("lemmas", "symmetry", symmetry_defect(s, p), T["symmetry"])]
    for which in ("X", "Y"):
        out.append(_check("lemmas", f"polynomial_{which}",
                          polynomial_holdout_error(s, p, which, 0), T["polynomial"]))
    if s.n >= 2:
        for k, v in sorted(special_zero_values(s, p).items()):
            out.append(_check("lemmas", f"zero_{k}", v, T["zeros"]))
    return out


def suite_equations(cfg, p, s, rng):
    T = cfg.tolerances
    l0 = complex(*rng.uniform(-1, 1, 2))
    out = []
    for kind in ("typeA", "typeD"):
        r1 = equation_residual(kind, l0, s, None, p)
        # the boundary field hbar never enters S_n; record the residual at a second value
        r2 = equation_residual(kind, l0, s, None, p.replace(hbar=p.hbar + 0.37 - 0.21j))
        out.append(_check("equations", kind, r1, T["equation"], note=f"second hbar: {r2:.3e}"))
    return out


def suite_asymptotics(cfg, p, s, rng):
    T = cfg.tolerances
    n = s.n
    ops = jj_vacuum(n, p)
    closed = closed_vacuum_sum(n, p)
    out = [_check("asymptotics", "closed_sum_vs_operators", abs(ops - closed) / abs(closed), T["asym_ops"])]
    coef = asymptotic_coefficient(n, p)
    for re in (8.0, 10.0):
        lim = scaled_limit(n, p, re)
        out.append(_check("asymptotics", f"limit_re{int(re)}", abs(lim - coef) / abs(coef), T["asym_limit"]))
    return out


def suite_onshell(cfg, p, s, rng):
    T = cfg.tolerances
    n = min(s.n, 2)
    try:
        roots = solve_bethe_newton(n, None, p, rng=int(rng.integers(1 << 30)))
    except NewtonError as exc:
        return [dict(suite="onshell", name="newton", value=None, tol=T["bethe"], ok=False,
                     note=str(exc))]
    res = float(np.max(np.abs(bethe_residual(roots, p))))
    return [_check("onshell", "bethe_residual", res, T["bethe"]),
            _check("onshell", "eigencheck", eigencheck(roots, 0.31 + 0.17j, p), T["eigen"])]


SUITES = dict(identities=suite_identities, lemmas=suite_lemmas, equations=suite_equations,
              asymptotics=suite_asymptotics, onshell=suite_onshell)


def run_suites(cfg: RunConfig) -> list:
    out = []
    for k in range(cfg.draws):
        p, s = draw(cfg, k)
        for name in cfg.suites:
            rng = np.random.default_rng([cfg.seed, k, ALL_SUITES.index(name)])
            try:
                checks = SUITES[name](cfg, p, s, rng)
            except (SingularDenominatorError, GenericityError) as exc:
                checks = [dict(suite=name, name="error", value=None, tol=0.0, ok=False,
                               note=str(exc))]
            for c in checks:
                c["draw"] = k
            out.extend(checks)
    return out


def run_verify(cfg: RunConfig) -> tuple[dict, int]:
    if not cfg.suites:
        cfg.suites = ALL_SUITES
    checks = run_suites(cfg)
    status = EXIT_OK if all(c["ok"] for c in checks) else EXIT_TOL
    rep = dict(command="verify", version=__version__, config=cfg.as_dict(), checks=checks,
               exit_status=status)
    return _jsonable(rep), status


# ----- rendering ------------------------------------------------------------------------

def _flat(v):
    if isinstance(v, dict) and set(v) == {"re", "im"}:
        return f"{v['re']!r}{v['im']:+.17g}j"
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True)
    return v


def render(rep: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rep, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cmd = rep.get("command")
    if cmd == "table":
        methods = rep["methods"]
        w.writerow(["index", "lambda1B_re", "lambda1B_im"]
                   + [f"{m}_{part}" for m in methods for part in ("re", "im")] + ["max_rel_diff"])
        for r in rep["rows"]:
            row = [r["index"], r["lambda1B"]["re"], r["lambda1B"]["im"]]
            for m in methods:
                v = r.get(m)
                row += [v["re"], v["im"]] if v else ["", ""]
            w.writerow(row + [r["max_rel_diff"]])
    elif cmd == "crosscheck":
        w.writerow(["kind", "draw", "name", "value_re", "value_im", "rel_diff", "tol", "ok", "flags"])
        for r in rep["records"]:
            v = r["value"]
            w.writerow(["value", r["draw"], r["method"], v["re"] if v else "", v["im"] if v else "",
                        "", "", "", ";".join(r["flags"])])
        for d in rep["pairwise"]:
            w.writerow(["diff", d["draw"], "|".join(d["pair"]), "", "", d["rel_diff"], d["tol"], d["ok"], ""])
        for c in rep.get("checks", []):
            w.writerow(["check", c["draw"], f"{c['suite']}.{c['name']}", "", "", c["value"], c["tol"],
                        c["ok"], c.get("note", "")])
    else:
        w.writerow(["suite", "name", "draw", "value", "tol", "ok", "note"])
        for c in rep.get("checks", []):
            w.writerow([c["suite"], c["name"], c["draw"], c["value"], c["tol"], c["ok"], c.get("note", "")])
    return buf.getvalue()


def _write(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="openxxz", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("crosscheck", "table", "verify", "report"):
        sp = sub.add_parser(name)
        if name == "report":
            sp.add_argument("input", help="stored JSON report")
        else:
            sp.add_argument("--config", help="flat key = value config file")
            sp.add_argument("--seed", type=int)
            sp.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE")
        sp.add_argument("--out")
        sp.add_argument("--format", choices=("json", "csv"))
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            with open(args.input, encoding="utf-8") as fh:
                rep = json.load(fh)
            _write(render(rep, args.format or "json"), args.out)
            return EXIT_OK
        cfg = RunConfig()
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                cfg = parse_config(fh.read())
        if args.seed is not None:
            cfg.seed = args.seed
        for item in args.tol:
            name, sep, val = item.partition("=")
            if not sep:
                raise ConfigError(f"--tol expects NAME=VALUE, got {item!r}")
            try:
                cfg.tolerances[name.strip()] = float(val)
            except ValueError:
                raise ConfigError(f"--tol {name}: not a number: {val!r}") from None
        if args.format:
            cfg.format = args.format
        if args.out:
            cfg.out = args.out
        validate(cfg)
        runner = dict(crosscheck=run_crosscheck, table=run_table, verify=run_verify)[args.command]
        rep, status = runner(cfg)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"openxxz: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GenericityError as exc:
        print(f"openxxz: genericity: {exc}", file=sys.stderr)
        return EXIT_FLAG
    _write(render(rep, cfg.format), cfg.out)
    return status


if __name__ == "__main__":
    sys.exit(main())
