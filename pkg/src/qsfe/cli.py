"""Command-line interface: ``qsfe {bound,primitive,function,attack,verify}``.

Results go to stdout (or ``--out``) as JSON; sweeps can be written as CSV.
Exit codes: 0 feasible/ok, 1 infeasible/predicate false, 2 usage or input
error, 3 when an exact attack falls below its analytic guarantee.
"""

from __future__ import annotations

import argparse
import itertools
import sys
from typing import Callable

from . import acceptance, attack, bounds, functions, primitives
from .io import (
    SchemaError,
    dumps,
    function_from_json,
    function_to_json,
    load_json,
    protocol_from_json,
    rows_to_csv,
    state_to_json,
)

EXIT_OK, EXIT_FALSE, EXIT_USAGE, EXIT_BELOW_BOUND = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _num_list(kind: Callable):
    def parse(text: str):
        try:
            return [kind(v) for v in text.split(",") if v.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a comma-separated list of {kind.__name__}, got {text!r}")
    parse.__name__ = kind.__name__
    return parse


_ints, _floats = _num_list(int), _num_list(float)


def _emit(args, payload, rows: list[dict] | None = None):
    if args.format == "csv":
        text = rows_to_csv(rows if rows is not None else [payload])
    else:
        text = dumps(payload)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- bound ------------------------------------------------------------------

def _grid(args, names) -> list[dict]:
    values = [getattr(args, n) for n in names]
    for n, v in zip(names, values):
        if v is None:
            raise UsageError(f"--{n.replace('_', '-')} is required")
    return [dict(zip(names, combo)) for combo in itertools.product(*(sorted(v) for v in values))]


def _optional_m(args):
    return [None] if args.m is None else sorted(args.m)


def cmd_bound(args) -> int:
    kind = args.bound
    variant = args.eps_prime
    reports = []
    if kind == "prop1":
        rows = []
        for p in _grid(args, ["eps", "m"]):
            s = bounds.prop1_success(p["eps"], p["m"])
            rows.append({"eps": p["eps"], "m": p["m"], "simple": s.simple, "exact_chain": s.exact_chain})
        _emit(args, rows[0] if len(rows) == 1 else rows, rows)
        return EXIT_OK
    if kind == "thm1":
        rows = []
        eps_list = [None] if args.eps is None else sorted(args.eps)
        for p in _grid(args, ["x", "y"]):
            for eps in eps_list:
                row = {"x": p["x"], "y": p["y"], "threshold": bounds.thm1_threshold(p["x"], p["y"])}
                if eps is not None:
                    rep = bounds.thm1_check(p["x"], p["y"], eps)
                    row.update(eps=eps, report=rep.to_dict())
                    reports.append(rep)
                rows.append(row)
        _emit(args, rows[0] if len(rows) == 1 else rows, rows)
        return EXIT_OK if all(r.feasible for r in reports) else EXIT_FALSE
    if kind == "thm2":
        if args.function:
            f = functions.parse_builtin(args.function)
            args.t = [functions.concealment_t(f)]
            args.x, args.y = [len(f.x_alphabet)], [len(f.y_alphabet)]
        if args.resource:
            args.entropy_sum = [primitives.entropy_sum(primitives.from_json(load_json(args.resource)))]
        for p in _grid(args, ["entropy_sum", "t", "x", "y", "eps"]):
            reports.append(bounds.thm2_check(p["entropy_sum"], p["t"], p["x"], p["y"], p["eps"], variant))
    elif kind == "cor3":
        for p in _grid(args, ["n", "m", "eps"]):
            reports.append(bounds.cor3_check(**p)[0])
    elif kind == "cor4":
        for p in _grid(args, ["n", "k", "eps"]):
            for m in _optional_m(args):
                reports.append(bounds.cor4_check(**p, m=m, variant=variant))
    elif kind == "cor5":
        for p in _grid(args, ["n", "eps"]):
            for m in _optional_m(args):
                reports.append(bounds.cor5_bound(**p, m=m, variant=variant))
    elif kind == "cor6":
        for p in _grid(args, ["k", "eps"]):
            for m in _optional_m(args):
                reports.append(bounds.cor6_bound(**p, m=m, variant=variant))
    rows = [r.to_dict() for r in reports]
    _emit(args, rows[0] if len(rows) == 1 else rows, rows)
    return EXIT_OK if all(r.feasible for r in reports) else EXIT_FALSE


# -- primitive --------------------------------------------------------------

def _load_dist(path: str) -> primitives.JointDistribution:
    return primitives.from_json(load_json(path))


def cmd_primitive(args) -> int:
    kind = args.primitive
    if kind == "otkey":
        _emit(args, primitives.to_json(primitives.oblivious_key(args.n, args.k)))
    elif kind == "rabin":
        _emit(args, primitives.to_json(primitives.rabin_key(args.p, args.k)))
    elif kind == "reduce":
        _emit(args, primitives.to_json(primitives.min_sufficient_stat(_load_dist(args.file), args.tol)))
    elif kind == "embed":
        _emit(args, state_to_json(primitives.embed_pure(_load_dist(args.file))))
    elif kind == "entropy":
        P = _load_dist(args.file)
        huv, hvu = primitives.hmax_u_given_v(P), primitives.hmax_v_given_u(P)
        _emit(args, {"hmax_uv": huv, "hmax_vu": hvu, "sum": huv + hvu, "support": P.support_size})
    return EXIT_OK


# -- function ---------------------------------------------------------------

def _function_arg(args) -> functions.FunctionTable:
    if args.builtin:
        return functions.builtin(args.builtin, n=args.n, k=args.k)
    if not args.file:
        raise UsageError("give a function table file or --builtin")
    return function_from_json(load_json(args.file))


def cmd_function(args) -> int:
    kind = args.function_cmd
    if kind == "builtin":
        _emit(args, function_to_json(functions.builtin(args.name, n=args.n, k=args.k)))
        return EXIT_OK
    f = _function_arg(args)
    if kind == "t":
        _emit(args, {"function": f.name, "t": functions.concealment_t(f),
                     "profile": dict(zip(f.y_alphabet, functions.concealment_profile(f).tolist()))})
        return EXIT_OK
    nt, nr = functions.is_non_trivial(f), functions.is_non_redundant(f)
    _emit(args, {"function": f.name,
                 "non_trivial": {"holds": nt.holds, "witness": nt.witness},
                 "non_redundant": {"holds": nr.holds, "witness": list(nr.witness) if nr.witness else None}})
    return EXIT_OK if nt.holds and nr.holds else EXIT_FALSE


# -- attack -----------------------------------------------------------------

def _order(args, f) -> list[str] | None:
    if args.order in (None, "all"):
        return None
    order = [v.strip() for v in args.order.split(",") if v.strip()]
    unknown = [y for y in order if y not in f.y_alphabet]
    if unknown:
        raise UsageError(f"unknown inputs in --order: {unknown}")
    return order


def cmd_attack(args) -> int:
    if args.attack == "canonical":
        f = functions.builtin(args.function, n=args.n, k=args.k)
        p = attack.canonical_protocol(f, args.noise)
    else:
        p = protocol_from_json(load_json(args.file))
    try:
        res = attack.extraction_attack(p, _order(args, p.function))
    except KeyError as e:
        raise UsageError(str(e).strip("'\"")) from None
    check = attack.attack_bound_check(p, res)
    payload = {"function": p.function.name, "result": res.to_dict(), "guarantee": check}
    rows = [{"step": i, "y": y, "fail": fl} for i, (y, fl) in enumerate(zip(res.order, res.per_step_fail))]
    _emit(args, payload, rows)
    return EXIT_OK if check["respects_simple"] and check["respects_chain"] else EXIT_BELOW_BOUND


# -- verify -----------------------------------------------------------------

def cmd_verify(args) -> int:
    tol = args.tol if args.tol_given else None
    results = acceptance.run(args.filter, tol=tol, seed=args.seed_given)
    if not results:
        raise UsageError(f"no criterion matches {args.filter!r}")
    for r in results:
        print(r.line())
        if not r.passed:
            print(f"       details: {r.details}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(dumps([r.to_dict() for r in results]))
    return EXIT_OK if all(r.passed for r in results) else EXIT_FALSE


# -- parser -----------------------------------------------------------------

def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not v > 0:
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return v


def _globals() -> argparse.ArgumentParser:
    g = argparse.ArgumentParser(add_help=False)
    s = argparse.SUPPRESS
    g.add_argument("--tol", type=_positive, default=s, help="numerical tolerance (default 1e-9)")
    g.add_argument("--seed", type=int, default=s, help="seed for randomized batteries")
    g.add_argument("--out", default=s, help="write the result here instead of stdout")
    g.add_argument("--format", choices=("json", "csv"), default=s)
    g.add_argument("--eps-prime", choices=tuple(bounds.EPS_PRIME_FACTORS), default=s,
                   help="constant c in eps' = c |Y|^2 sqrt(eps): theorem (2) or proof (3)")
    return g


def build_parser() -> argparse.ArgumentParser:
    common = _globals()
    parser = argparse.ArgumentParser(prog="qsfe", parents=[common],
                                     description="Lower bounds and attacks for quantum SFE reductions.")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bound", parents=[common], help="evaluate a closed-form bound").add_subparsers(
        dest="bound", required=True)
    for name, opts in {
        "prop1": {"eps": _floats, "m": _ints},
        "thm1": {"x": _ints, "y": _ints, "eps": _floats},
        "thm2": {"entropy_sum": _floats, "t": _floats, "x": _ints, "y": _ints, "eps": _floats},
        "cor3": {"n": _ints, "m": _ints, "eps": _floats},
        "cor4": {"n": _ints, "k": _ints, "eps": _floats, "m": _ints},
        "cor5": {"n": _ints, "eps": _floats, "m": _ints},
        "cor6": {"k": _ints, "eps": _floats, "m": _ints},
    }.items():
        sp = b.add_parser(name, parents=[common])
        for opt, kind in opts.items():
            sp.add_argument("--" + opt.replace("_", "-"), dest=opt, type=kind,
                            help="value or comma-separated sweep")
        if name == "thm2":
            sp.add_argument("--function", help="builtin name, e.g. ot(2,1); supplies t, x and y")
            sp.add_argument("--resource", help="distribution JSON; supplies the entropy sum")

    pr = sub.add_parser("primitive", parents=[common], help="resource distributions").add_subparsers(
        dest="primitive", required=True)
    sp = pr.add_parser("otkey", parents=[common])
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--k", type=int, default=1)
    sp = pr.add_parser("rabin", parents=[common])
    sp.add_argument("--p", type=float, default=0.5)
    sp.add_argument("--k", type=int, default=1)
    for name in ("reduce", "embed", "entropy"):
        pr.add_parser(name, parents=[common]).add_argument("file")

    fn = sub.add_parser("function", parents=[common], help="function tables").add_subparsers(
        dest="function_cmd", required=True)
    for name in ("check", "t"):
        sp = fn.add_parser(name, parents=[common])
        sp.add_argument("file", nargs="?")
        sp.add_argument("--builtin", choices=("ip", "eq", "eq_restricted", "ot"))
        sp.add_argument("--n", type=int, default=2)
        sp.add_argument("--k", type=int, default=1)
    sp = fn.add_parser("builtin", parents=[common])
    sp.add_argument("name", choices=("ip", "eq", "eq_restricted", "ot"))
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--k", type=int, default=1)

    at = sub.add_parser("attack", parents=[common], help="run the extraction attack").add_subparsers(
        dest="attack", required=True)
    sp = at.add_parser("run", parents=[common])
    sp.add_argument("file")
    sp.add_argument("--order", help="comma-separated Bob inputs, or 'all' (default)")
    sp = at.add_parser("canonical", parents=[common])
    sp.add_argument("--function", required=True, choices=("ip", "eq", "eq_restricted", "ot"))
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--noise", type=float, default=0.0)
    sp.add_argument("--order", help="comma-separated Bob inputs, or 'all' (default)")

    v = sub.add_parser("verify", parents=[common], help="run the acceptance battery")
    v.add_argument("--filter", help="substring of a criterion name or tag, or its number")
    return parser


_DEFAULTS = {"tol": 1e-9, "seed": None, "out": None, "format": "json", "eps_prime": "theorem"}
_HANDLERS = {"bound": cmd_bound, "primitive": cmd_primitive, "function": cmd_function,
             "attack": cmd_attack, "verify": cmd_verify}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    args.tol_given = hasattr(args, "tol")
    args.seed_given = getattr(args, "seed", None)
    for key, val in _DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, val)
    try:
        return _HANDLERS[args.command](args)
    except (UsageError, SchemaError, ValueError, KeyError, OSError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"qsfe: error: {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
