"""``kahlerstar``: compute products, units and symbol maps, or run property suites.

Exit status is 0 on success, 1 when a verification or engine comparison
fails and 2 for usage and configuration errors.
"""
from __future__ import annotations

import argparse
import json
import os
import random
import sys

from . import __version__
from .expr import parse_polynomial
from .graphs import graph_operator_series
from .jets import HbarSeries
from .laplace import OperatorSeries, engine_for, vacuum_constant
from .models import (BudgetError, Flat, FubiniStudy1D, Hyperbolic1D, ModelError,
                     PolynomialPerturbation, build_context, load_jet_table, random_perturbation)
from .rings import QQI, QQi
from .star import star_algebra
from .suites import SUITES, SuiteConfig, run_suite

OUTPUT_ENV = "KSTAR_OUTPUT_DIR"
PRESETS = ("flat", "fubini-study", "hyperbolic", "perturbation", "random")


class UsageError(ValueError):
    pass


# --- configuration ----------------------------------------------------------------------

def make_model(args):
    name = args.model
    if name == "flat":
        return Flat(args.n)
    if name == "fubini-study":
        return FubiniStudy1D()
    if name == "hyperbolic":
        return Hyperbolic1D()
    if name == "perturbation":
        if not args.potential:
            raise UsageError("--model perturbation needs --potential, e.g. "
                             "\"z**2*conj(z) + z*conj(z)**2\"")
        poly = parse_polynomial(args.potential, args.n)
        n = args.n
        return PolynomialPerturbation(n, {(k[:n], k[n:]): c for k, c in poly.terms.items()})
    if name == "random":
        return random_perturbation(args.n, random.Random(args.seed))
    if os.path.exists(name):
        return load_jet_table(name)
    raise UsageError(f"unknown model {name!r}: use one of {', '.join(PRESETS)} "
                     "or the path of a jet-table file")


def parse_point(text: str | None, n: int) -> tuple:
    if text is None:
        return (QQI.zero,) * n
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != n:
        raise UsageError(f"--point needs {n} comma-separated coordinate(s), got {text!r}")
    try:
        return tuple(QQi.parse(p) for p in parts)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot read point {text!r}; write e.g. 1/2 or 1/3+2/5*i") from None


def _function(text, name, n, point, order):
    if text is None:
        return None
    try:
        return parse_polynomial(text, n).jet(point, order)
    except ValueError as exc:
        raise UsageError(f"{name}: {exc}") from None


def _header(args, model, point, engine):
    h = {"model": model.spec(), "point": [str(p) for p in point], "K": args.order,
         "engine": engine, "n": model.n}
    if getattr(args, "seed", None) is not None and args.model == "random":
        h["seed"] = args.seed
    return h


def _series_json(s: HbarSeries) -> list:
    return [{"k": k, **s.coeff(k).to_json()} for k in range(s.K + 1)]


def _series_text(s: HbarSeries) -> str:
    return "  ".join(f"hbar^{k}: {s.coeff(k)}" for k in range(s.K + 1))


def _emit(args, name: str, payload: dict):
    text = json.dumps(payload, sort_keys=True, indent=1)
    path = args.output
    if path is None and os.environ.get(OUTPUT_ENV):
        path = os.path.join(os.environ[OUTPUT_ENV], f"{name}.json")
    if path:
        d = os.path.dirname(path)
        if d:
            os.makedirs(d, exist_ok=True)
        with open(path, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote {path}")
    if args.json:
        print(text)


def _print_table(op: OperatorSeries):
    for k, tab in enumerate(op.tables):
        terms = [(J, I, v) for (J, I), v in tab.items() if v != 0]
        print(f"hbar^{k}: {len(terms)} term(s)")
        for J, I, v in sorted(terms, key=lambda t: (sum(t[0]) + sum(t[1]), t[0], t[1])):
            print(f"  dbar^{list(J)} f1 * d^{list(I)} f2 : {v}")


# --- commands -----------------------------------------------------------------------------

def _operators(args, model, point):
    """``{engine: OperatorSeries}`` for the bullet product."""
    ctx = build_context(model, point, 2 * args.order + 2)
    out = {}
    if args.engine in ("oracle", "both"):
        out["oracle"] = engine_for(ctx).operator_series(args.order)
    if args.engine in ("graphs", "both"):
        out["graphs"] = graph_operator_series(ctx, args.order)
    return out


def _compare(ops) -> int:
    if len(ops) < 2:
        return 0
    diff = ops["oracle"].diff(ops["graphs"])
    print(f"engine diff: {len(diff)} coefficient(s)")
    if diff:
        k, J, I, a, b = diff[0]
        print(f"first difference at hbar^{k}, J={list(J)}, I={list(I)}: oracle {a}, graphs {b}")
        return 1
    return 0


def cmd_bullet(args) -> int:
    model = make_model(args)
    point = parse_point(args.point, model.n)
    ops = _operators(args, model, point)
    status = _compare(ops)
    engine = next(iter(ops))
    op = ops[engine]
    op.header = _header(args, model, point, args.engine)
    _print_table(op)
    payload = op.to_json()
    f1 = _function(args.f1, "--f1", model.n, point, 2 * args.order)
    f2 = _function(args.f2, "--f2", model.n, point, 2 * args.order)
    if f1 is not None and f2 is not None:
        val = op.apply(f1, f2)
        print("f1 • f2 =", _series_text(val))
        payload["value"] = _series_json(val)
    _emit(args, "bullet", payload)
    return status


def cmd_star(args) -> int:
    model = make_model(args)
    point = parse_point(args.point, model.n)
    engines = ("oracle", "graphs") if args.engine == "both" else (args.engine,)
    ops = {e: star_algebra(model, point, args.order, engine=e).star_operator() for e in engines}
    status = _compare(ops)
    op = ops[engines[0]]
    op.header = _header(args, model, point, args.engine)
    _print_table(op)
    payload = op.to_json()
    f1 = _function(args.f1, "--f1", model.n, point, 2 * args.order)
    f2 = _function(args.f2, "--f2", model.n, point, 2 * args.order)
    if f1 is not None and f2 is not None:
        val = op.apply(f1, f2)
        print("f1 * f2 =", _series_text(val))
        payload["value"] = _series_json(val)
    _emit(args, "star", payload)
    return status


def cmd_unit(args) -> int:
    model = make_model(args)
    point = parse_point(args.point, model.n)
    engines = ("oracle", "graphs") if args.engine == "both" else (args.engine,)
    units = {e: star_algebra(model, point, args.order, engine=e).unit("both").values()
             for e in engines}
    e = units[engines[0]]
    status = 0
    if len(units) == 2 and units["oracle"] != units["graphs"]:
        print(f"engines disagree: oracle {units['oracle']}, graphs {units['graphs']}")
        status = 1
    D = vacuum_constant(build_context(model, point, 2 * max(args.order, 2) + 2))
    print("e =", _series_text(e))
    print("D =", D)
    payload = {"header": _header(args, model, point, args.engine), "unit": _series_json(e),
               "D": D.to_json()}
    _emit(args, "unit", payload)
    return status


def cmd_imap(args) -> int:
    model = make_model(args)
    point = parse_point(args.point, model.n)
    if args.f is None:
        raise UsageError("imap needs --f, the contravariant symbol")
    S = star_algebra(model, point, args.order)
    f = _function(args.f, "--f", model.n, point, 2 * args.order)
    val = S.i_map_value(f)
    inv = S.i_inverse(f).values()
    print("I(f) =", _series_text(val))
    print("I^-1(f) =", _series_text(inv))
    tables = []
    for k in range(args.order + 1):
        tab = S.i_table(k)
        terms = [{"A": list(A), "B": list(B), **v.to_json()}
                 for (A, B), v in sorted(tab.items(), key=lambda t: (sum(t[0][0]) + sum(t[0][1]),
                                                                     t[0]))
                 if v != 0]
        tables.append({"k": k, "terms": terms})
    payload = {"header": _header(args, model, point, "oracle"), "series": tables,
               "value": _series_json(val), "inverse": _series_json(inv)}
    _emit(args, "imap", payload)
    return 0


def cmd_verify(args) -> int:
    model = make_model(args) if args.model else None
    point = parse_point(args.point, model.n) if (model and args.point) else None
    engine = "oracle" if args.engine == "both" else args.engine
    cfg = SuiteConfig(order=args.order, trials=args.trials, seed=args.seed, n=args.n_suite,
                      model=model, point=point, engine=engine)
    res = run_suite(args.suite, cfg)
    print(f"{res.suite}: {res.passed}/{res.trials} passed")
    for note in res.notes:
        print(" ", note)
    if res.failure:
        print("first counterexample:", res.failure)
    _emit(args, f"verify-{args.suite}", {**res.to_json(), "seed": args.seed, "order": args.order})
    return 0 if res.ok else 1


# --- parser ---------------------------------------------------------------------------------

def _common(p, model_default="flat"):
    p.add_argument("--model", default=model_default,
                   help=f"{', '.join(PRESETS)}, or a jet-table JSON file")
    p.add_argument("--n", type=int, default=1, help="complex dimension of flat/perturbation/random")
    p.add_argument("--potential", help="extra terms of a perturbation, e.g. \"z**2*conj(z)\"")
    p.add_argument("--point", help="base point, comma-separated Gaussian rationals")
    p.add_argument("--order", type=int, default=2, help="hbar cutoff K")
    p.add_argument("--engine", choices=("oracle", "graphs", "both"), default="oracle")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help=f"JSON output path (default: ${OUTPUT_ENV}/<command>.json)")
    p.add_argument("--json", action="store_true", help="also print the JSON document")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kahlerstar", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn, helptext in (("bullet", cmd_bullet, "bidifferential table of f1 • f2"),
                               ("star", cmd_star, "normalised star product table"),
                               ("unit", cmd_unit, "unit element e and the constant D")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--f1")
        p.add_argument("--f2")
        p.set_defaults(func=fn)
    p = sub.add_parser("imap", help="covariant symbol I(f) of a contravariant one")
    _common(p)
    p.add_argument("--f")
    p.set_defaults(func=cmd_imap)
    p = sub.add_parser("verify", help="run a seeded property suite")
    p.add_argument("suite", choices=sorted(SUITES))
    _common(p, model_default=None)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--suite-n", dest="n_suite", type=int, choices=(1, 2),
                   help="restrict suites that mix dimensions to one n")
    p.set_defaults(func=cmd_verify, order=3)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.order < 0:
        ap.error("--order must be non-negative")
    if getattr(args, "trials", 1) < 1:
        ap.error("--trials must be positive")
    try:
        return args.func(args)
    except (UsageError, ModelError, BudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
