"""Command-line interface: ``levyfactor {classify,transform,factorize,sample,verify,catalog}``.

A spec is a JSON document, either a catalog reference

    {"schema_version": 1, "catalog": {"name": "gamma", "params": {"alpha": 2, "lam": 1}}}

or an inline triple whose densities are expressions in ``r``

    {"schema_version": 1, "triple": {"shift": 0.0, "gaussian_var": 0.0,
     "pos_density": "exp(-r)/r", "neg_density": null, "atoms": [[2.0, 0.5]], "breaks": []}}

On the command line ``name`` or ``name:key=value,...`` is accepted in place
of a file for catalog entries.  Exit codes: 0 success, 1 parse or
validation error, 2 undecided verdict, 3 not in class L, 4 not in L^f (or
driver not in U), 5 numerical failure, 6 a Monte Carlo check failed its
tolerance.
"""

from __future__ import annotations

import argparse
import ast
import csv
import inspect
import io
import json
import math
import operator
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .catalog import CATALOG, DistributionSpec, get_spec
from .core import DIRECTIONS, LevyExponent, LevyTriple, SpectralDensityPair, Verdict, standard_grid
from .errors import LevyFactorError, NotClassL, NotClassU, SpecParseError, Undecidable

SCHEMA_VERSION = 1
EXIT_OK, EXIT_PARSE, EXIT_UNDECIDED, EXIT_NOT_L, EXIT_NOT_LF, EXIT_NUMERIC, EXIT_CHECK_FAILED = range(7)
TABLE_NODES = 128
MIN_SAMPLES = 1000

# --------------------------------------------------------------------------
# expression language

_BINARY = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv, ast.Pow: np.power}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_FUNCS = {
    "exp": (np.exp, 1), "log": (np.log, 1), "pow": (np.power, 2), "abs": (np.abs, 1), "sqrt": (np.sqrt, 1),
    "max": (np.maximum, 2), "min": (np.minimum, 2), "expm1": (np.expm1, 1), "log1p": (np.log1p, 1),
    "sinh": (np.sinh, 1), "cosh": (np.cosh, 1), "tanh": (np.tanh, 1),
}
_CONSTS = {"pi": math.pi, "e": math.e}


def _caret(text: str, col: int, message: str) -> str:
    col = min(max(col, 0), len(text))
    return f"{message}\n  {text}\n  {' ' * col}^"


def _check(node, text):
    if isinstance(node, ast.BinOp) and type(node.op) in _BINARY:
        _check(node.left, text)
        _check(node.right, text)
    elif isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        _check(node.operand, text)
    elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        pass
    elif isinstance(node, ast.Name):
        if node.id != "r" and node.id not in _CONSTS:
            raise SpecParseError(_caret(text, node.col_offset, f"unknown name {node.id!r}; the variable is 'r'"))
    elif isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
        entry = _FUNCS.get(node.func.id)
        if entry is None:
            raise SpecParseError(_caret(text, node.col_offset, f"unknown function {node.func.id!r}; allowed: {', '.join(sorted(_FUNCS))}"))
        if len(node.args) != entry[1]:
            raise SpecParseError(_caret(text, node.col_offset, f"{node.func.id} takes {entry[1]} argument(s), got {len(node.args)}"))
        for a in node.args:
            _check(a, text)
    else:
        raise SpecParseError(_caret(text, getattr(node, "col_offset", 0), f"unsupported syntax: {type(node).__name__}"))


def _evaluate(node, r):
    if isinstance(node, ast.BinOp):
        return _BINARY[type(node.op)](_evaluate(node.left, r), _evaluate(node.right, r))
    if isinstance(node, ast.UnaryOp):
        return _UNARY[type(node.op)](_evaluate(node.operand, r))
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        return r if node.id == "r" else _CONSTS[node.id]
    return _FUNCS[node.func.id][0](*(_evaluate(a, r) for a in node.args))


def parse_expression(text: str):
    """Compile a density expression in ``r`` to a vectorised function.

    Arithmetic (``+ - * / **``), the constants ``pi`` and ``e`` and the
    functions in ``_FUNCS`` are allowed; anything else raises
    ``SpecParseError`` with a caret under the offending column.
    """
    if not isinstance(text, str) or not text.strip():
        raise SpecParseError("density expression must be a nonempty string")
    text = text.strip()
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        col = (exc.offset - 1) if exc.offset else len(text)
        raise SpecParseError(_caret(text, col, f"syntax error: {exc.msg}")) from None
    _check(tree.body, text)
    body = tree.body

    def density(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(all="ignore"):
            out = _evaluate(body, r)
        return np.broadcast_to(np.asarray(out, dtype=float), r.shape).copy()

    density.expression = text
    return density


# --------------------------------------------------------------------------
# spec documents


@dataclass(frozen=True)
class LoadedSpec:
    name: str
    triple: LevyTriple
    exponent: LevyExponent | None
    document: dict
    catalog: DistributionSpec | None = None

    @property
    def law(self):
        return self.catalog if self.catalog is not None else self.triple

    def exponent_or_quadrature(self) -> LevyExponent:
        from .exponents import exponent_from_triple

        return self.exponent or exponent_from_triple(self.triple)


def spec_document(spec: DistributionSpec) -> dict:
    """Catalog reference document for ``spec``; ``parse_spec_document`` inverts it."""
    return {"schema_version": SCHEMA_VERSION, "catalog": {"name": _catalog_key(spec), "params": _jsonable(spec.params)}}


def _catalog_key(spec):
    if spec.name not in CATALOG:
        raise SpecParseError(f"spec {spec.name!r} is not a catalog entry")
    return spec.name


def _density_field(value, field_name, grid):
    if value is None:
        return None
    f = parse_expression(value)
    vals = f(grid)
    if not np.all(np.isfinite(vals)):
        bad = grid[~np.isfinite(vals)][0]
        raise SpecParseError(f"{field_name} = {value!r} is not finite at r = {bad:.6g}")
    if np.any(vals < 0):
        bad = grid[vals < 0][0]
        raise SpecParseError(f"{field_name} = {value!r} is negative at r = {bad:.6g}")
    return f


def parse_spec_document(doc) -> LoadedSpec:
    if not isinstance(doc, dict):
        raise SpecParseError("spec document must be a JSON object")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SpecParseError(f"unsupported schema_version {version!r}; expected {SCHEMA_VERSION}")
    has_cat, has_tri = "catalog" in doc, "triple" in doc
    if has_cat == has_tri:
        raise SpecParseError("spec document needs exactly one of 'catalog' or 'triple'")
    if has_cat:
        ref = doc["catalog"]
        if not isinstance(ref, dict) or "name" not in ref:
            raise SpecParseError("'catalog' must be an object with a 'name'")
        params = ref.get("params") or {}
        try:
            spec = get_spec(ref["name"], **params)
        except KeyError as exc:
            raise SpecParseError(str(exc.args[0])) from None
        except TypeError as exc:
            raise SpecParseError(f"bad parameters for {ref['name']!r}: {exc}") from None
        return LoadedSpec(spec.name, spec.triple, spec.exponent, doc, spec)
    tri = doc["triple"]
    if not isinstance(tri, dict):
        raise SpecParseError("'triple' must be an object")
    unknown = set(tri) - {"shift", "gaussian_var", "pos_density", "neg_density", "atoms", "breaks", "name"}
    if unknown:
        raise SpecParseError(f"unknown triple fields: {sorted(unknown)}")
    grid = standard_grid()
    try:
        pos = _density_field(tri.get("pos_density"), "pos_density", grid)
        neg = _density_field(tri.get("neg_density"), "neg_density", grid)
        atoms = tuple((float(x), float(w)) for x, w in tri.get("atoms") or ())
        breaks = tuple(float(b) for b in tri.get("breaks") or ())
        spectral = SpectralDensityPair(pos, neg, atoms, breaks)
        triple = LevyTriple(float(tri.get("shift", 0.0)), float(tri.get("gaussian_var", 0.0)), spectral)
        spectral.check_integrability()
    except SpecParseError:
        raise
    except (TypeError, ValueError) as exc:
        raise SpecParseError(f"invalid triple: {exc}") from None
    return LoadedSpec(str(tri.get("name", "inline")), triple, None, doc)


def _shorthand(text: str) -> dict:
    name, _, rest = text.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, sep, raw = item.partition("=")
        if not sep:
            raise SpecParseError(_caret(text, text.index(item), f"expected key=value, got {item!r}"))
        try:
            params[key.strip()] = json.loads(raw)
        except json.JSONDecodeError:
            params[key.strip()] = raw
    return {"schema_version": SCHEMA_VERSION, "catalog": {"name": name, "params": params}}


def load_spec(source: str) -> LoadedSpec:
    """Read a spec from a file path, ``-`` (stdin) or ``name[:key=value,...]``."""
    if source == "-":
        text = sys.stdin.read()
    elif Path(source).is_file():
        text = Path(source).read_text()
    elif source.partition(":")[0] in CATALOG:
        return parse_spec_document(_shorthand(source))
    else:
        raise SpecParseError(f"{source!r} is neither a readable file nor a catalog entry ({', '.join(sorted(CATALOG))})")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        line = text.splitlines()[exc.lineno - 1] if text.splitlines() else ""
        raise SpecParseError(_caret(line, exc.colno - 1, f"invalid JSON at line {exc.lineno}: {exc.msg}")) from None
    return parse_spec_document(doc)


# --------------------------------------------------------------------------
# result documents


def _jsonable(x):
    if isinstance(x, Verdict):
        return x.value
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


def _table(columns, *cols) -> dict:
    rows = np.column_stack([np.asarray(c, dtype=float) for c in cols]) if cols else np.zeros((0, 0))
    return {"columns": list(columns), "rows": rows.tolist()}


def _witness(w) -> dict | None:
    if w is None:
        return None
    return {"class": w.cls, "direction": w.direction, "interval": list(w.interval), "magnitude": w.magnitude, "note": w.note}


def _triple_summary(triple: LevyTriple) -> dict:
    return {
        "shift": triple.shift,
        "gaussian_var": triple.gaussian_var,
        "atoms": [list(a) for a in triple.spectral.atoms],
        "breaks": list(triple.spectral.breaks),
    }


def _density_table(triple: LevyTriple, grid) -> dict:
    spec = triple.spectral
    return _table(["r", "pos_density", "neg_density"], grid, *(spec.density(d)(grid) for d in DIRECTIONS))


def _exponent_table(phi: LevyExponent, t) -> dict:
    v = phi(t)
    return _table(["t", "re", "im"], t, v.real, v.imag)


def _document(args, result: dict, tables: dict, primary: str | None, seed=None) -> dict:
    echo = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "output")}
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "levyfactor", "version": __version__},
        "command": echo,
        "seed": seed,
        "result": result,
        "tables": tables,
        "primary_table": primary,
    }


def render(doc: dict, fmt: str) -> str:
    """JSON (canonical: sorted keys, fixed indentation) or the primary table as CSV."""
    doc = _jsonable(doc)
    if fmt == "json":
        return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"
    key = doc.get("primary_table")
    if key is None:
        raise SpecParseError(f"command {doc['command'].get('command')!r} has no tabular output; use --format json")
    table = doc["tables"][key]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table["columns"])
    w.writerows(table["rows"])
    return buf.getvalue()


# --------------------------------------------------------------------------
# commands


def _t_grid(t_max, points=41):
    return np.linspace(t_max / points, t_max, points)


def _r_grid(nodes):
    return standard_grid(nodes)


def cmd_classify(args):
    from .membership import classify

    spec = load_spec(args.spec)
    grid = standard_grid(args.grid_nodes) if args.grid_nodes else None
    report = classify(spec.triple, max_n=args.max_n, grid=grid)
    rows = list(report.verdicts.items())
    result = {
        "name": spec.name,
        "verdicts": report.verdicts,
        "witnesses": [_witness(w) for w in report.witnesses],
        "cross_checks": report.cross_checks,
    }
    if spec.catalog is not None:
        result["known_classes"] = {k: v for k, v in spec.catalog.known_classes.items() if k in report.verdicts}
    table = {
        "columns": ["class", "verdict", "direction", "interval_lo", "interval_hi", "magnitude"],
        "rows": [
            [cls, v.value] + ([w.direction, w.interval[0], w.interval[1], w.magnitude] if (w := report.witness_for(cls)) else [None] * 4)
            for cls, v in rows
        ],
    }
    doc = _document(args, result, {"verdicts": table}, "verdicts")
    return doc, (EXIT_UNDECIDED if report.any_undecided else EXIT_OK)


_TRANSFORMS = ("I", "J", "IJ", "invert_I", "invert_J")


def cmd_transform(args):
    from . import exponents, spectral

    spec = load_spec(args.spec)
    phi = spec.exponent_or_quadrature()
    exp_map = {"I": exponents.apply_I, "J": exponents.apply_J, "IJ": exponents.apply_IJ,
               "invert_I": exponents.invert_I, "invert_J": exponents.invert_J}[args.kind]
    tri_map = {"I": spectral.triple_I, "J": spectral.triple_J, "IJ": spectral.triple_IJ,
               "invert_I": spectral.triple_invert_I, "invert_J": spectral.triple_invert_J}[args.kind]
    out_triple = tri_map(spec.triple)
    out_phi = exp_map(phi)
    t = _t_grid(args.t_max)
    r = _r_grid(args.grid_nodes or TABLE_NODES)
    tables = {"exponent": _exponent_table(out_phi, t), "density": _density_table(out_triple, r)}
    result = {"name": spec.name, "kind": args.kind, "triple": _triple_summary(out_triple)}
    return _document(args, result, tables, "exponent"), EXIT_OK


def cmd_factorize(args):
    from .exponents import apply_I
    from .factorization import NUMERIC_EPSABS, NUMERIC_EPSREL, factorize

    spec = load_spec(args.spec)
    cert = factorize(spec.law, t_max=args.t_max, tol=args.tol)
    r = _r_grid(args.grid_nodes or TABLE_NODES)
    t = cert.t_grid
    result = {
        "name": spec.name,
        "valid": cert.valid,
        "in_Lf": cert.in_Lf,
        "identity_residual": cert.identity_residual,
        "tol": cert.tol,
        "route_discrepancy": cert.route_discrepancy,
        "rho_route_discrepancy": cert.rho_route_discrepancy,
        "rho_log_moment": cert.rho_log_moment,
        "nu_verdicts": cert.nu_report.verdicts,
        "witness": _witness(cert.witness),
        "nu": _triple_summary(cert.nu.triple),
        "rho": _triple_summary(cert.rho.triple) if cert.rho else None,
    }
    tables = {"nu_density": _density_table(cert.nu.triple, r), "nu_exponent": _exponent_table(cert.nu.exponent, t)}
    if cert.rho is not None:
        tables["rho_density"] = _density_table(cert.rho.triple, r)
        tables["rho_exponent"] = _exponent_table(cert.rho.exponent, t)
    if args.emit_cf and cert.rho is not None:
        mu, nu = cert.mu.exponent(t), cert.nu.exponent(t)
        irho = apply_I(cert.rho.exponent, NUMERIC_EPSREL, NUMERIC_EPSABS)(t)
        cf = _table(["t", "re_phi_mu", "im_phi_mu", "re_phi_nu", "im_phi_nu", "re_phi_I_rho", "im_phi_I_rho"],
                    t, mu.real, mu.imag, nu.real, nu.imag, irho.real, irho.imag)
        Path(args.emit_cf).write_text(render({"tables": {"cf": cf}, "primary_table": "cf", "command": {}}, "csv"))
        result["emit_cf"] = str(args.emit_cf)
    if cert.in_Lf is not Verdict.YES:
        code = EXIT_NOT_LF
    elif not cert.valid:
        code = EXIT_NUMERIC
    else:
        code = EXIT_OK
    return _document(args, result, tables, "nu_exponent"), code


def _mc_config(args):
    from .simulate import SimConfig

    if args.n < MIN_SAMPLES:
        raise SpecParseError(f"--n must be at least {MIN_SAMPLES}, got {args.n}")
    return SimConfig(n_samples=args.n, seed=args.seed, t_grid=np.linspace(-args.t_max, args.t_max, 101), workers=args.workers)


def _cf_table(t, emp, target):
    return _table(["t", "re_empirical", "im_empirical", "re_target", "im_target", "abs_diff"],
                  t, emp.real, emp.imag, target.real, target.imag, np.abs(emp - target))


def cmd_sample(args):
    from .exponents import apply_I, apply_J
    from .simulate import empirical_cf, random_integral

    spec = load_spec(args.spec)
    config = _mc_config(args)
    phi = spec.exponent_or_quadrature()
    if args.integral == "I":
        batch = random_integral(lambda s: np.exp(-s), spec.law, config)
        target_phi = apply_I(phi)
    elif args.integral == "J":
        batch = random_integral(lambda s: s, spec.law, config, horizon=1.0)
        target_phi = apply_J(phi)
    else:
        batch = random_integral(lambda s: np.ones_like(s), spec.law, config, horizon=1.0)
        target_phi = phi
    t = config.t_grid
    emp = empirical_cf(batch, t).values
    target = target_phi.cf(t)
    dist = float(np.max(np.abs(emp - target)))
    x = batch.values
    q = np.quantile(x, [0.01, 0.25, 0.5, 0.75, 0.99])
    result = {
        "name": spec.name,
        "integral": args.integral,
        "n": config.n_samples,
        "mean": float(x.mean()),
        "std": float(x.std()),
        "quantiles": dict(zip(["q01", "q25", "q50", "q75", "q99"], q.tolist())),
        "cf_distance": dist,
        "tol": args.tol,
        "passed": dist <= args.tol,
        "diagnostics": batch.diagnostics,
    }
    doc = _document(args, result, {"cf": _cf_table(t, emp, target)}, "cf", seed=args.seed)
    return doc, (EXIT_OK if dist <= args.tol else EXIT_CHECK_FAILED)


def cmd_verify(args):
    from .simulate import verify_factorization_mc

    spec = load_spec(args.spec)
    config = _mc_config(args)
    report = verify_factorization_mc(spec.law, config, tol=args.tol)
    t = report.t_grid
    result = {
        "name": spec.name,
        "distance": report.distance,
        "tol": report.tol,
        "passed": report.passed,
        "n": report.n_samples,
        "diagnostics": report.diagnostics,
    }
    doc = _document(args, result, {"cf": _cf_table(t, report.empirical.values, report.target.values)}, "cf", seed=args.seed)
    return doc, (EXIT_OK if report.passed else EXIT_CHECK_FAILED)


def cmd_catalog(args):
    rows, entries = [], []
    for name, maker in sorted(CATALOG.items()):
        defaults = {k: p.default for k, p in inspect.signature(maker).parameters.items()
                    if p.default is not inspect.Parameter.empty and k != "name"}
        spec = maker()
        entries.append({"name": name, "defaults": defaults, "known_classes": spec.known_classes, "note": spec.note,
                        "document": spec_document(spec)})
        first_no = next((c for c, v in spec.known_classes.items() if v is Verdict.NO), None)
        rows.append([name, spec.family, first_no, spec.note])
    table = {"columns": ["name", "family", "first_class_failed", "note"], "rows": rows}
    return _document(args, {"entries": entries}, {"catalog": table}, "catalog"), EXIT_OK


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", "-o", help="write the result here instead of stdout")
    common.add_argument("--grid-nodes", type=int, default=None, help="radial grid size for criteria and tables")

    parser = argparse.ArgumentParser(prog="levyfactor", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"levyfactor {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[common], help="decide class membership")
    p.add_argument("spec")
    p.add_argument("--max-n", type=int, default=2)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("transform", parents=[common], help="apply I, J, IJ or an inverse")
    p.add_argument("spec")
    p.add_argument("--kind", choices=_TRANSFORMS, default="I")
    p.add_argument("--t-max", type=float, default=10.0)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("factorize", parents=[common], help="driver, factor and identity residual")
    p.add_argument("spec")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--emit-cf", help="CSV file for the exponent curves of mu, nu and I(rho)")
    p.set_defaults(func=cmd_factorize)

    for name, func, helptext in (("sample", cmd_sample, "simulate a random integral"),
                                 ("verify", cmd_verify, "Monte Carlo check of the factorization identity")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("spec")
        p.add_argument("--n", type=int, default=200_000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--t-max", type=float, default=5.0)
        p.add_argument("--tol", type=float, default=0.03)
        p.add_argument("--workers", type=int, default=1)
        if name == "sample":
            p.add_argument("--integral", choices=("increment", "I", "J"), default="increment")
        p.set_defaults(func=func)

    p = sub.add_parser("catalog", parents=[common], help="list catalog entries")
    p.set_defaults(func=cmd_catalog)
    return parser


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, (SpecParseError, ValueError)):
        return EXIT_PARSE
    if isinstance(exc, Undecidable):
        return EXIT_UNDECIDED
    if isinstance(exc, NotClassL):
        return EXIT_NOT_L
    if isinstance(exc, NotClassU):
        return EXIT_NOT_LF
    return EXIT_NUMERIC


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        doc, code = args.func(args)
        text = render(doc, args.format)
    except (LevyFactorError, ValueError) as exc:
        code = _exit_code(exc)
        print(f"error: {exc}", file=sys.stderr)
        witness = getattr(exc, "witness", None)
        if witness is not None:
            print(json.dumps({"witness": _jsonable(_witness(witness))}, sort_keys=True), file=sys.stderr)
        return code
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
