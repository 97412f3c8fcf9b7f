"""Command-line front end.

Curve specification files are JSON objects::

    {"id": "e21", "kind": "ellipse", "parameters": {"a": 2, "b": 1},
     "engine": {"K": 8, "N_outer": 256}}

Tables go to stdout as CSV (default) or JSON; diagnostics go to stderr as
``error[CODE]: message``.  Exit codes: 0 success, 2 parse error, 3 pole
proximity, 4 usage or domain error, 5 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import beta, continuation, curves, localgraph, suites
from .errors import (BrylinskiError, CurveValidationError, ParseError, PoleProximityError,
                     UsageError, VerificationFailure)

CURVE_PARAMS = {
    "circle": ("R",),
    "ellipse": ("a", "b"),
    "torus_knot": ("p", "q", "R", "r"),
    "fourier": (),
}
SPEC_FIELDS = {"id", "kind", "parameters", "fourier", "engine"}
# name -> (type, lower, upper) for engine overrides.
ENGINE_RANGES = {
    "K": (int, 1, 26),
    "epsilon": (float, 0.0, math.inf),
    "N_outer": (int, 16, 8192),
    "N_far": (int, 64, 16384),
    "quad_nodes": (int, 64, 4096),
}


@dataclass
class CurveSpec:
    id: str
    curve: curves.Curve
    engine: dict = field(default_factory=dict)


# -- parsing --------------------------------------------------------------------------------


def _check_engine(values: dict, where: str) -> dict:
    out = {}
    for key, val in values.items():
        if key not in ENGINE_RANGES:
            raise ParseError(f"{where}: unknown engine field {key!r}")
        typ, lo, hi = ENGINE_RANGES[key]
        if val is None:
            continue
        if typ is int and (isinstance(val, bool) or not float(val).is_integer()):
            raise UsageError(f"{where}: {key} must be an integer")
        v = typ(val)
        if not (lo < v <= hi if key == "epsilon" else lo <= v <= hi):
            raise UsageError(f"{where}: {key}={v} outside [{lo}, {hi}]")
        if key in ("N_outer", "quad_nodes") and v % 2:
            raise UsageError(f"{where}: {key} must be even")
        out[key] = v
    return out


def curve_from_spec(data: dict, default_id: str = "curve") -> CurveSpec:
    if not isinstance(data, dict):
        raise ParseError("curve spec must be a JSON object")
    unknown = set(data) - SPEC_FIELDS
    if unknown:
        raise ParseError(f"unknown fields in curve spec: {sorted(unknown)}")
    kind = data.get("kind")
    if kind not in CURVE_PARAMS:
        raise ParseError(f"kind must be one of {sorted(CURVE_PARAMS)}, got {kind!r}")
    names = CURVE_PARAMS[kind]
    params = data.get("parameters", {})
    if isinstance(params, list):
        if len(params) != len(names):
            raise ParseError(f"{kind} needs parameters {list(names)}")
        params = dict(zip(names, params))
    if not isinstance(params, dict):
        raise ParseError("parameters must be an object or a list")
    extra = set(params) - set(names)
    missing = set(names) - set(params)
    if extra or missing:
        raise ParseError(f"{kind} parameters: unknown {sorted(extra)}, missing {sorted(missing)}")
    for k, v in params.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ParseError(f"parameter {k} must be a number")
    try:
        if kind == "fourier":
            tables = data.get("fourier")
            if not isinstance(tables, dict) or set(tables) != {"x", "y", "z"}:
                raise ParseError("fourier curves need a 'fourier' object with exactly x, y, z")
            c = curves.fourier(tables["x"], tables["y"], tables["z"])
        else:
            if "fourier" in data:
                raise ParseError("'fourier' tables are only allowed with kind 'fourier'")
            if kind == "circle":
                if not params["R"] > 0:
                    raise CurveValidationError("circle radius must be positive")
                c = curves.circle(float(params["R"]))
            elif kind == "ellipse":
                if not (params["a"] > 0 and params["b"] > 0):
                    raise CurveValidationError("ellipse semi-axes must be positive")
                c = curves.ellipse(float(params["a"]), float(params["b"]))
            else:
                p, q = params["p"], params["q"]
                if not (float(p).is_integer() and float(q).is_integer()):
                    raise CurveValidationError("torus knot p and q must be integers")
                if not 0 < params["r"] < params["R"]:
                    raise CurveValidationError("torus knot needs 0 < r < R")
                c = curves.torus_knot(int(p), int(q), float(params["R"]), float(params["r"]))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, BrylinskiError):
            raise
        raise ParseError(f"malformed curve data: {exc}") from None
    engine = data.get("engine", {})
    if not isinstance(engine, dict):
        raise ParseError("engine must be an object")
    cid = data.get("id", default_id)
    if not isinstance(cid, str):
        raise ParseError("id must be a string")
    return CurveSpec(cid, c, _check_engine(engine, "spec engine"))


def load_spec(path: str) -> CurveSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    except OSError as exc:
        raise ParseError(f"{path}: cannot read ({exc.strerror})") from None
    stem = os.path.splitext(os.path.basename(path))[0]
    return curve_from_spec(data, default_id=stem)


def parse_complex(text: str) -> complex:
    t = text.strip().replace(" ", "").replace("i", "j")
    try:
        return complex(t)
    except ValueError:
        raise UsageError(f"cannot parse {text!r} as a complex number") from None


# -- output ------------------------------------------------------------------------------------


def fmt_number(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def emit(rows: list, columns: list, fmt: str, out) -> None:
    if fmt == "json":
        payload = [{k: _json_value(r.get(k)) for k in columns} for r in rows]
        out.write(json.dumps(payload, indent=2) + "\n")
        return
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow(["" if r.get(k) is None else fmt_number(r.get(k)) for k in columns])
    out.write(buf.getvalue())


def _json_value(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _diagnostic(err: BrylinskiError) -> str:
    use_color = sys.stderr.isatty() and not os.environ.get("NO_COLOR")
    head = f"error[{err.code}]"
    if use_color:
        head = f"\x1b[31m{head}\x1b[0m"
    return f"{head}: {err}"


# -- engine configuration -------------------------------------------------------------------------


def _engine_settings(spec: CurveSpec, args) -> dict:
    flags = {"K": args.K, "epsilon": args.epsilon, "N_outer": args.N_outer,
             "N_far": args.N_far, "quad_nodes": args.nodes}
    merged = dict(spec.engine)
    merged.update(_check_engine({k: v for k, v in flags.items() if v is not None}, "flags"))
    return merged


def _engine_config(settings: dict) -> continuation.EngineConfig:
    keys = ("K", "epsilon", "N_outer", "N_far")
    return continuation.EngineConfig(**{k: settings[k] for k in keys if k in settings})


def _quad_spec(settings: dict) -> beta.QuadratureSpec:
    return beta.QuadratureSpec(nodes=settings.get("quad_nodes", 512))


def _near_pole(kind: str, s: complex, guard: float):
    for p in continuation.pole_lattice(kind, 64):
        if abs(s - p) < guard:
            return p
    return None


# -- commands ------------------------------------------------------------------------------------


def cmd_invariants(args) -> int:
    spec = load_spec(args.spec)
    c = spec.curve
    if args.t:
        t = np.array([float(v) for v in args.t])
    else:
        if args.grid < 1:
            raise UsageError("--grid must be positive")
        t = np.linspace(0.0, curves.TWO_PI, args.grid, endpoint=False)
    fr = curves.frenet_invariants(c, t, 3)
    L = curves.arclength(c)
    rows = []
    for i, ti in enumerate(t):
        row = {"curve": spec.id, "t": float(ti)}
        row.update({f"kappa{n}": float(fr.kappa[n][i]) for n in range(4)})
        row.update({f"tau{n}": float(fr.tau[n][i]) for n in range(4)})
        row["length"] = L
        rows.append(row)
    cols = ["curve", "t"] + list(localgraph.INVARIANT_NAMES) + ["length"]
    emit(rows, cols, args.format, sys.stdout)
    return 0


def cmd_beta_eval(args) -> int:
    spec = load_spec(args.spec)
    settings = _engine_settings(spec, args)
    kind = "single_layer" if args.kind == "single" else "coaxial"
    cfg = _engine_config(settings)
    q = _quad_spec(settings)
    rows = []
    for text in args.s:
        s = parse_complex(text)
        pole = _near_pole(kind, s, cfg.pole_guard)
        if pole is not None:
            raise PoleProximityError(
                f"s = {text} is at the pole {pole} of the {kind} beta function; use the residues command",
                pole=pole)
        if args.continued:
            v = continuation.continue_beta(spec.curve, s, kind, cfg)
        elif kind == "single_layer":
            v = beta.beta_single_layer(spec.curve, s, q)
        else:
            v = beta.beta_coaxial(spec.curve, s, q)
        rows.append({"curve": spec.id, "kind": kind, "s_re": s.real, "s_im": s.imag,
                     "value_re": v.value.real, "value_im": v.value.imag,
                     "error_estimate": v.abs_error_estimate, "method": v.method})
    cols = ["curve", "kind", "s_re", "s_im", "value_re", "value_im", "error_estimate", "method"]
    emit(rows, cols, args.format, sys.stdout)
    return 0


def cmd_residues(args) -> int:
    spec = load_spec(args.spec)
    settings = _engine_settings(spec, args)
    kind = "single_layer" if args.kind == "single" else "coaxial"
    cfg = _engine_config(settings)
    if args.all_known:
        poles = list(suites.SINGLE_POLES if kind == "single_layer" else suites.COAXIAL_POLES)
    elif args.pole:
        poles = []
        for text in args.pole:
            p = parse_complex(text)
            if not continuation.is_lattice_pole(kind, p):
                continuation.require_pole(kind, text)
            poles.append(int(round(p.real)))
    else:
        raise UsageError("give --pole values or --all-known")
    rows = []
    for p in poles:
        rep = continuation.residue(spec.curve, p, kind, cfg, numeric_check=args.numeric_check)
        row = {"curve": spec.id, "kind": kind, "pole": p, "residue": rep.residue,
               "error_estimate": rep.error_estimate, "method": rep.method,
               "removable": rep.removable}
        if args.numeric_check:
            row["numeric_limit"] = rep.numeric_limit
            row["numeric_error"] = rep.numeric_error
        rows.append(row)
    cols = ["curve", "kind", "pole", "residue", "error_estimate", "method", "removable"]
    if args.numeric_check:
        cols += ["numeric_limit", "numeric_error"]
    emit(rows, cols, args.format, sys.stdout)
    return 0


def _parse_mutation(text: Optional[str]):
    if text is None:
        return None
    parts = text.split(":")
    name = parts[0]
    if name not in localgraph.formula_table():
        raise UsageError(f"--mutate: unknown formula {name!r}")
    try:
        term = int(parts[1]) if len(parts) > 1 else 0
        delta = float(parts[2]) if len(parts) > 2 else 1.0
    except ValueError:
        raise UsageError("--mutate expects NAME[:TERM[:DELTA]]") from None
    if not 0 <= term < len(localgraph.formula_table()[name].coeffs):
        raise UsageError(f"--mutate: {name} has no term {term}")
    return localgraph.mutated_table(name, term, delta)


def cmd_verify(args) -> int:
    table = _parse_mutation(args.mutate)
    if args.suite == "circle":
        if args.curve:
            raise UsageError("the circle suite uses the built-in unit circle; drop --curve")
        checks = suites.circle_suite(table)
        cid = "circle"
    else:
        if not args.curve:
            raise UsageError("the paper-residues suite needs --curve SPEC")
        spec = load_spec(args.curve)
        settings = _engine_settings(spec, args)
        checks = suites.residue_identity_suite(spec.curve, table, _engine_config(settings))
        cid = spec.id
    rows = [{"curve": cid, "check": ch.name, "value": complex(ch.value).real,
             "reference": complex(ch.reference).real, "error": ch.error,
             "tolerance": ch.tolerance, "status": "pass" if ch.passed else "FAIL"}
            for ch in checks]
    emit(rows, ["curve", "check", "value", "reference", "error", "tolerance", "status"],
         args.format, sys.stdout)
    failed = [ch.name for ch in checks if not ch.passed]
    if failed:
        raise VerificationFailure(f"{len(failed)} of {len(checks)} checks failed: {failed[0]}"
                                  + (" ..." if len(failed) > 1 else ""))
    return 0


# -- argument parsing ---------------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _engine_flags(p):
    g = p.add_argument_group("engine overrides (win over the spec file)")
    g.add_argument("--K", type=int, help="Taylor subtraction order")
    g.add_argument("--epsilon", type=float, help="near-diagonal split radius (arclength)")
    g.add_argument("--N-outer", dest="N_outer", type=int, help="outer trapezoid nodes")
    g.add_argument("--N-far", dest="N_far", type=int, help="far-field Gauss nodes per base point")
    g.add_argument("--nodes", type=int, help="direct quadrature nodes per parameter circle")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="brylinski", description=__doc__.splitlines()[0])
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("invariants", help="curvature, torsion and their derivatives")
    p.add_argument("spec")
    p.add_argument("--t", nargs="+", help="parameter values")
    p.add_argument("--grid", type=int, default=8, help="uniform grid size when --t is absent")
    p.set_defaults(func=cmd_invariants)

    p = sub.add_parser("beta-eval", help="evaluate the beta function")
    p.add_argument("spec")
    p.add_argument("--s", nargs="+", required=True, help="values of s, e.g. 2 or 2+3i")
    p.add_argument("--kind", choices=("single", "coaxial"), default="single")
    p.add_argument("--continued", action="store_true", help="use the continuation engine")
    _engine_flags(p)
    p.set_defaults(func=cmd_beta_eval)

    p = sub.add_parser("residues", help="residues at lattice poles")
    p.add_argument("spec")
    p.add_argument("--kind", choices=("single", "coaxial"), default="single")
    p.add_argument("--pole", nargs="+")
    p.add_argument("--all-known", action="store_true")
    p.add_argument("--numeric-check", action="store_true")
    _engine_flags(p)
    p.set_defaults(func=cmd_residues)

    p = sub.add_parser("verify", help="run a built-in verification suite")
    p.add_argument("--suite", choices=suites.SUITES, default="circle")
    p.add_argument("--curve")
    p.add_argument("--mutate", metavar="NAME[:TERM[:DELTA]]",
                   help="perturb one closed-form term (sensitivity check)")
    _engine_flags(p)
    p.set_defaults(func=cmd_verify)

    for name, sp in sub.choices.items():
        sp.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except BrylinskiError as err:
        print(_diagnostic(err), file=sys.stderr)
        return err.exit_status
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
