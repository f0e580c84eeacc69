"""Command-line interface.

Exit status: 0 on success, 1 when a check or verification fails, 2 on
usage, parse or derivation errors.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import sys
from pathlib import Path

from ..corelang import ParseError, check, parse, parse_call, parse_facts
from ..corelang.syntax import print_decl, print_program
from ..corelang.values import format_value, to_json
from ..funcinc import DerivationError, poly_diff, report_json
from ..funcinc.poly import NotPolynomial
from ..interp.machine import EvalError, evaluate
from .. import ruleinc, setinc
from .bench import bench, tables_json
from .config import Config
from .programs import bundled_path, derive_all, derive_function
from .verify import verify_equiv


class UsageError(Exception):
    pass


def _resolve(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    b = bundled_path(path)
    if b.exists():
        return b
    raise UsageError(f"no such file: {path}")


def _load(path: str):
    p = _resolve(path)
    return parse(p.read_text(encoding="utf-8")), p


def _facts_for(args, source: Path):
    if getattr(args, "facts", None):
        return parse_facts(_resolve(args.facts).read_text(encoding="utf-8"))
    sibling = source.with_suffix(".facts")
    if sibling.exists():
        return parse_facts(sibling.read_text(encoding="utf-8"))
    return None


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


# -- commands -------------------------------------------------------------------


def cmd_check(args, out):
    p, _ = _load(args.file)
    diags = check(p)
    if args.json:
        out.write(_dump({"schema": 1, "kind": "check", "ok": not diags,
                         "diagnostics": [{"code": d.code, "message": d.message, "where": d.where}
                                         for d in diags]}))
    elif diags:
        for d in diags:
            out.write(f"{d.where}: {d.message} [{d.code}]\n")
    else:
        out.write("ok\n")
    return 1 if diags else 0


def _require_clean(p):
    diags = check(p)
    if diags:
        raise UsageError("; ".join(f"{d.where}: {d.message}" for d in diags))


def cmd_inc_set(args, out):
    p, _ = _load(args.file)
    _require_clean(p)
    if not p.invariants:
        raise UsageError("program declares no invariants")
    d = setinc.derive(p)
    out.write(setinc.report_json_text(d) if args.json else d.report_text())
    return 0


def cmd_inc_func(args, out):
    p, _ = _load(args.file)
    _require_clean(p)
    b = derive_function(p, args.func, args.cache_depth, iterative=args.derive_iter, strict=True)
    fprime, d1 = b.p1
    if args.json:
        parts = [fprime, d1]
        obj = json.loads(report_json(*parts))
        obj["kind"] = "func-derivation"
        obj["increment"] = b.inc.describe()
        obj["offsets"] = list(b.inc.offsets)
        if b.cached:
            obj["cached_form"] = b.cached[0].as_dict()
            obj["cache_derivation"] = b.cached[1].as_dict()
        if b.iterative is not None:
            obj["iterative"] = [print_decl(fn) for fn in b.iterative.functions]
        out.write(_dump(obj))
        return 0
    offs = ", ".join(str(o) for o in b.inc.offsets) if b.inc.kind == "int" else ""
    out.write(f"increment: {b.inc.describe()}" + (f" (offsets {offs})\n" if offs else "\n"))
    out.write("incremental function:\n")
    out.write(f"  {print_decl(fprime)}\n")
    if d1.residuals:
        out.write(f"  residual calls: {', '.join(d1.residuals)}\n")
    if b.cached:
        out.write(b.cached[0].to_text())
    if b.iterative is not None:
        out.write("iterative program:\n")
        for fn in b.iterative.functions:
            out.write(f"  {print_decl(fn)}\n")
    out.write(d1.to_text())
    if b.cached:
        out.write(b.cached[1].to_text())
    return 0


def cmd_poly_diff(args, out):
    try:
        d = poly_diff(args.expr, args.step, args.mode, var=args.var)
    except ParseError as exc:
        raise UsageError(f"--expr: {exc}") from None
    if args.json:
        out.write(_dump({"schema": 1, "kind": "poly-diff", "expr": args.expr, "step": args.step,
                         "mode": args.mode, "delta": d.delta_text, "statement": d.text,
                         "core": d.core_text()}))
    else:
        out.write(d.text + "\n")
    return 0


def cmd_inc_rules(args, out):
    p, src = _load(args.file)
    naive = ruleinc.compile_fixpoint(ruleinc.RuleSet.from_program(p))
    semi = ruleinc.seminaive(naive)
    facts = _facts_for(args, src)
    result = None
    if facts is not None:
        idb, s_stats = ruleinc.eval_rules(semi, facts, args.order)
        _, n_stats = ruleinc.eval_rules(naive, facts)
        result = (idb, n_stats, s_stats)
    if args.json:
        obj = {"schema": 1, "kind": "rules", "naive": naive.as_dict(), "seminaive": semi.as_dict()}
        if result:
            idb, n_stats, s_stats = result
            obj["result"] = {q: to_json(v) for q, v in sorted(idb.items())}
            obj["stats"] = {"naive": n_stats.as_dict(), "seminaive": s_stats.as_dict()}
        out.write(_dump(obj))
        return 0
    out.write("naive fixpoint:\n")
    out.write(_indent(naive.to_text()))
    out.write("semi-naive program:\n")
    out.write(_indent(semi.to_text()))
    if result:
        idb, n_stats, s_stats = result
        out.write("result:\n")
        out.write(_indent(ruleinc.format_idb(idb)))
        for label, st in (("naive", n_stats), ("semi-naive", s_stats)):
            out.write(f"{label}: {st.instantiations} instantiations, {st.iterations} iterations, "
                      f"{st.facts_derived} facts, cost {st.cost.total}\n")
    return 0


def _indent(text):
    return "".join(f"  {line}\n" if line else "\n" for line in text.splitlines())


def cmd_run(args, out):
    p, _ = _load(args.file)
    _require_clean(p)
    try:
        name, call_args = parse_call(args.entry)
    except ParseError as exc:
        raise UsageError(f"--entry: {exc}") from None
    f = p.functions.get(name)
    if f is None:
        raise UsageError(f"--entry: no function named {name}")
    if len(f.params) != len(call_args):
        raise UsageError(f"--entry: {name} takes {len(f.params)} arguments, got {len(call_args)}")
    value, cost = evaluate(p, (name, call_args), args.step_limit)
    if args.json:
        out.write(_dump({"schema": 1, "kind": "run", "entry": args.entry,
                         "value": to_json(value), "cost": cost.as_dict()}))
    else:
        out.write(f"value = {format_value(value)}\n")
        out.write(cost.to_text())
    return 0


def _config(args, **kw) -> Config:
    if getattr(args, "seed", None) is not None:
        kw["seed"] = args.seed
    try:
        return Config.from_env(format="json" if args.json else "text", **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_verify(args, out):
    p, src = _load(args.file)
    _require_clean(p)
    cfg = _config(args, ops=args.ops, universe=args.universe, cache_depth=args.cache_depth)
    report = verify_equiv(p, None, cfg, program_id=src.name, facts=_facts_for(args, src))
    out.write(report.to_json() if args.json else report.to_text())
    return 0 if report.passed else 1


def _sizes(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--sizes must be a comma-separated list of integers, got {text!r}") from None


def cmd_bench(args, out):
    p, src = _load(args.file)
    _require_clean(p)
    cfg = _config(args, step_limit=args.step_limit)
    tables = bench(p, derive_all(p, cfg.cache_depth), _sizes(args.sizes), cfg, func=args.func)
    if args.json:
        out.write(tables_json(tables))
    else:
        out.write("".join(t.to_text() for t in tables) or "no derivations to benchmark\n")
    return 0


def cmd_print(args, out):
    p, _ = _load(args.file)
    out.write(print_program(p))
    return 0


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="write a JSON report")
    parser = argparse.ArgumentParser(
        prog="incral", parents=[common],
        description="Derive, verify and measure incremental programs.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_, description=help_)
        sp.set_defaults(fn=fn)
        return sp

    sp = add("check", cmd_check, "report well-formedness diagnostics")
    sp.add_argument("file")

    sp = add("inc-set", cmd_inc_set, "decompose invariants and derive their maintenance code")
    sp.add_argument("file")

    sp = add("inc-func", cmd_inc_func, "incrementalize a recursive function")
    sp.add_argument("file")
    sp.add_argument("--func", required=True)
    sp.add_argument("--derive-iter", action="store_true", help="also derive the iterative program")
    sp.add_argument("--cache-depth", type=int, default=16)

    sp = add("poly-diff", cmd_poly_diff, "difference a polynomial for a loop over x")
    sp.add_argument("--expr", required=True)
    sp.add_argument("--step", type=int, required=True)
    sp.add_argument("--mode", choices=("before", "after"), default="before")
    sp.add_argument("--var", default="x")

    sp = add("inc-rules", cmd_inc_rules, "compile rules to naive and semi-naive fixpoints")
    sp.add_argument("file")
    sp.add_argument("--facts")
    sp.add_argument("--order", choices=("fifo", "lifo"), default="fifo")

    sp = add("run", cmd_run, "evaluate a call and report its charged cost")
    sp.add_argument("file")
    sp.add_argument("--entry", required=True)
    sp.add_argument("--step-limit", type=int, default=Config().step_limit)

    sp = add("verify", cmd_verify, "replay a seeded update stream against recomputation")
    sp.add_argument("file")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--ops", type=int, default=1000)
    sp.add_argument("--universe", type=int, default=8)
    sp.add_argument("--cache-depth", type=int, default=16)
    sp.add_argument("--facts")

    sp = add("bench", cmd_bench, "tabulate charged cost, from scratch vs derived")
    sp.add_argument("file")
    sp.add_argument("--sizes", required=True)
    sp.add_argument("--func")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--step-limit", type=int, default=Config().step_limit)

    sp = add("print", cmd_print, "print a program in canonical form")
    sp.add_argument("file")
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        with contextlib.redirect_stderr(err), contextlib.redirect_stdout(out):
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args, out)
    except (UsageError, ParseError, DerivationError, NotPolynomial, ruleinc.RuleError,
            setinc.DerivationError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        err.write(f"incral: error: {msg}\n")
        return 2
    except EvalError as exc:
        err.write(f"incral: evaluation failed: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
