"""Incrementalizing recursive functions.

The pipeline for a single-parameter function ``f`` is

    detect_increment -> incrementalize_p1 -> cache_closure -> derive_iterative

``incrementalize_p1`` unfolds ``f`` at the incremented input and replaces the
exact previous call by ``r``. When other recursive calls survive,
``cache_closure`` grows the set of cached values ``f(n - j)`` until the new
tuple can be built from the old one, and ``derive_iterative`` wraps the
tuple maintenance in a tail-recursive loop started from base values.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..corelang import ast as A
from ..corelang.names import NameSupply, identifiers
from ..corelang.syntax import print_decl, print_expr
from ..interp.machine import EvalError, evaluate
from .poly import AtomTable, NotPolynomial, to_poly
from .simplify import simplify

DEFAULT_CACHE_DEPTH = 16


class DerivationError(ValueError):
    pass


@dataclass(frozen=True)
class IncrementSpec:
    """How the input of ``func`` grows: ``n += step`` or ``xs := cons(y, xs)``.

    A third kind, ``user``, wraps a change function ``change(x, ys...)`` that
    returns the new input; it is only meaningful for ``incrementalize_p1``.
    """

    func: str
    param: str
    kind: str  # "int" | "cons" | "user"
    step: int = 1
    offsets: tuple = ()
    change: A.FuncDef | None = None

    def describe(self) -> str:
        if self.kind == "int":
            return f"{self.param} += {self.step}"
        if self.kind == "cons":
            return f"{self.param} := cons(y, {self.param})"
        extra = "".join(", " + p for p in self.change.params[1:])
        return f"{self.param} := {self.change.name}({self.param}{extra})"

    @classmethod
    def user(cls, f: A.FuncDef, change: A.FuncDef) -> "IncrementSpec":
        if len(f.params) != 1 or not change.params:
            raise DerivationError("user change needs a single-parameter function and a change g(x, ...)")
        return cls(f.name, f.params[0], "user", change=change)


@dataclass(frozen=True)
class Step:
    kind: str  # unfold | simplify | replace-by-r | cache-extend | prune
    before: str
    after: str
    tag: str

    def as_dict(self) -> dict:
        return {"kind": self.kind, "before": self.before, "after": self.after, "tag": self.tag}


@dataclass
class Derivation:
    func: str
    increment: str
    steps: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    flagged: list = field(default_factory=list)
    phase: str = "reuse of the previous result"

    @property
    def needs_cache_closure(self) -> bool:
        return bool(self.residuals)

    def add(self, kind, before, after, tag):
        show = lambda x: x if isinstance(x, str) else print_expr(x)
        self.steps.append(Step(kind, show(before), show(after), tag))

    def extend(self, other: "Derivation"):
        self.steps.extend(other.steps)
        self.flagged.extend(other.flagged)

    def to_text(self) -> str:
        lines = [f"derivation of {self.func} under {self.increment} ({self.phase}):"]
        for i, s in enumerate(self.steps, 1):
            lines.append(f"  {i}. {s.kind} [{s.tag}]")
            lines.append(f"     before: {s.before}")
            lines.append(f"     after:  {s.after}")
        if self.residuals:
            lines.append("  residual calls: " + ", ".join(self.residuals) + " (needs cache_closure)")
        for note in self.flagged:
            lines.append(f"  flagged: {note}")
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict:
        return {
            "func": self.func,
            "increment": self.increment,
            "phase": self.phase,
            "steps": [s.as_dict() for s in self.steps],
            "residuals": list(self.residuals),
            "flagged": list(self.flagged),
        }


# -- increment detection ------------------------------------------------------


def _offset(arg: A.Expr, param: str):
    """``k`` when ``arg`` is ``param - k``, else None."""
    table = AtomTable()
    try:
        p = to_poly(arg, table, strict=True)
    except NotPolynomial:
        return None
    if table.atoms != [A.Var(param)] or p.coeff(((0, 1),)) != 1 or len(p.terms) > 2:
        return None
    return -p.const_value


def detect_increment(f: A.FuncDef) -> IncrementSpec:
    if len(f.params) != 1:
        raise DerivationError(
            f"increment not detectable: {f.name} has {len(f.params)} parameters, need exactly one")
    param = f.params[0]
    calls = [c for c in A.calls_in(f.body) if c.name == f.name]
    if not calls:
        raise DerivationError(f"increment not detectable: {f.name} has no recursive calls")
    offsets, tails, bad = set(), 0, []
    for c in calls:
        arg = c.args[0] if len(c.args) == 1 else None
        if arg == A.Tail(A.Var(param)):
            tails += 1
            continue
        k = None if arg is None else _offset(arg, param)
        if k is None or k < 1:
            bad.append(c)
        else:
            offsets.add(k)
    if bad or (tails and offsets):
        sites = bad if bad else calls
        raise DerivationError(
            "increment not detectable: call sites " + ", ".join(print_expr(c) for c in sites))
    if tails:
        return IncrementSpec(f.name, param, "cons", 1, (1,))
    offs = tuple(sorted(offsets))
    return IncrementSpec(f.name, param, "int", offs[0], offs)


# -- P1: unfold at the new input and reuse r ---------------------------------


def _taken(f: A.FuncDef, program) -> set:
    """Names a derived function for ``f`` must avoid: every function name and
    every identifier of ``f`` itself."""
    taken = set(program.functions) if program is not None else set()
    return taken | identifiers(A.Program((f,)))


def _unfold(f: A.FuncDef, arg: A.Expr) -> A.Expr:
    return A.substitute(f.body, {f.params[0]: arg})


def _replace_calls(e: A.Expr, fname: str, repl) -> A.Expr:
    """Replace calls ``fname(a)`` by ``repl(a)`` when it returns an expression."""
    def fn(node):
        if isinstance(node, A.Call) and node.name == fname and len(node.args) == 1:
            out = repl(node.args[0])
            if out is not None:
                return out
        return node
    return A.transform(e, fn)


def _residuals(e: A.Expr, fname: str) -> list:
    return [print_expr(c) for c in A.calls_in(e) if c.name == fname]


def incrementalize_p1(f: A.FuncDef, inc: IncrementSpec, allow_cache: bool = True,
                      program: A.Program | None = None):
    """Derive ``f'`` with ``f'(x, y, f(x)) = f(x ⊕ y)`` by unfolding and reuse.

    Returns ``(f', derivation)``. The parameters of ``f'`` are ``(n, r)`` for
    integer increments, ``(xs, y, r)`` for cons and ``(x, ys..., r)`` for a
    user change. Integer inputs are taken to be non-negative when deciding
    guards. Residual recursive calls are listed on the derivation; with
    ``allow_cache=False`` they are an error.
    """
    param = f.params[0]
    names = NameSupply(_taken(f, program), "v")
    r = names.named("r")
    d = Derivation(f.name, inc.describe())
    x = A.Var(param)

    if inc.kind == "int":
        new_input = A.BinOp("+", x, A.Int(inc.step))
        params = (param, r)
    elif inc.kind == "cons":
        y = names.named("y")
        new_input = A.Cons(A.Var(y), x)
        params = (param, y, r)
    else:
        g = inc.change
        extra = tuple(names.named(p) for p in g.params[1:])
        mapping = {g.params[0]: x, **{p: A.Var(q) for p, q in zip(g.params[1:], extra)}}
        inlined = A.substitute(g.body, mapping)
        new_input = simplify(inlined)
        d.add("unfold", A.Call(g.name, (x,) + tuple(A.Var(q) for q in extra)), new_input,
              f"definition of {g.name}")
        params = (param,) + extra + (r,)

    target = A.Call(f.name, (new_input,))
    if new_input == x:
        body = A.Var(r)
        d.add("replace-by-r", target, body, f"unchanged input, {r} = {f.name}({param})")
    else:
        unfolded = _unfold(f, new_input)
        d.add("unfold", target, unfolded, f"definition of {f.name}")
        assume = {param: 0} if inc.kind == "int" else None
        simp = simplify(unfolded, assume)
        d.add("simplify", unfolded, simp, "normalize arithmetic, fold selectors and decided guards")
        body = _replace_calls(simp, f.name, lambda a: A.Var(r) if a == x else None)
        d.add("replace-by-r", simp, body, f"{r} = {f.name}({param})")
    d.residuals = _residuals(body, f.name)
    if d.residuals and not allow_cache:
        raise DerivationError(
            f"residual recursive calls after replacement: {', '.join(d.residuals)}")
    fprime = A.FuncDef(names.named(f.name + "_inc"), params, body)
    return fprime, d


# -- P2/P3: selective cache closure -------------------------------------------


@dataclass(frozen=True)
class BaseGuards:
    """Base cases read from an ``if`` chain on ``n <= b``, ``n < b``, ``n == b``."""

    cases: tuple  # (guard expr, base value expr, set-of-values description)
    le: int | None  # all n <= le are base
    eq: frozenset
    recursive: A.Expr  # final else branch
    frontier: int  # least n >= 0 from which every input is recursive

    def is_base(self, n: int) -> bool:
        return (self.le is not None and n <= self.le) or n in self.eq


def base_guards(f: A.FuncDef) -> BaseGuards:
    param = f.params[0]
    e, cases, le, eq = f.body, [], None, set()
    while isinstance(e, A.If):
        g = e.cond
        if not (isinstance(g, A.BinOp) and g.op in ("<=", "<", "==")
                and g.left == A.Var(param) and isinstance(g.right, A.Int)):
            raise DerivationError(
                f"unsupported base guard {print_expr(g)}; expected {param} <= k, {param} < k or {param} == k")
        b = g.right.value
        if any(c.name == f.name for c in A.calls_in(e.then)):
            raise DerivationError(f"base branch of {print_expr(g)} calls {f.name}")
        if g.op == "==":
            eq.add(b)
        else:
            bound = b if g.op == "<=" else b - 1
            le = bound if le is None else max(le, bound)
        cases.append((g, e.then))
        e = e.orelse
    if not cases:
        raise DerivationError(f"{f.name} has no base cases of the form if {param} <= k then ...")
    top = max([le if le is not None else -1] + list(eq))
    frontier = max(top + 1, 0)
    holes = [n for n in range(frontier) if not ((le is not None and n <= le) or n in eq)]
    if holes:
        raise DerivationError(
            f"base cases must cover every value below {frontier}; missing {holes}")
    return BaseGuards(tuple(cases), le, frozenset(eq), e, frontier)


@dataclass
class CachedForm:
    """Extended function and its tuple maintenance under ``n += step``.

    ``ext(n)`` returns ``(f(n - s) for s in slots)``; with a single slot it is
    ``f`` itself and values are not wrapped. ``inc(n, r)`` maps ``ext(n)`` to
    ``ext(n + step)`` for every ``n >= valid_from``.
    """

    func: str
    param: str
    step: int
    slots: tuple
    ext: A.FuncDef
    inc: A.FuncDef
    valid_from: int
    guards: BaseGuards | None
    source: A.FuncDef
    flagged: tuple = ()

    @property
    def depth(self) -> int:
        return len(self.slots)

    @property
    def tupled(self) -> bool:
        return len(self.slots) > 1

    def to_text(self) -> str:
        cells = ", ".join(f"{self.func}({self.param})" if s == 0 else f"{self.func}({self.param} - {s})"
                          for s in self.slots)
        lines = [
            f"cached form of {self.func}: depth {self.depth}, slots ({cells})",
            f"  valid for {self.param} >= {self.valid_from}",
            "  " + print_decl(self.ext),
            "  " + print_decl(self.inc),
        ]
        for note in self.flagged:
            lines.append(f"  flagged: {note}")
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict:
        return {
            "func": self.func,
            "step": self.step,
            "slots": list(self.slots),
            "depth": self.depth,
            "valid_from": self.valid_from,
            "ext": print_decl(self.ext),
            "inc": print_decl(self.inc),
            "flagged": list(self.flagged),
        }


def _closure(offsets, k, max_depth):
    slots, todo = {0}, [0]
    while todo:
        j = todo.pop()
        needs = [j - k] if j >= k else [j + o - k for o in offsets]
        for m in needs:
            if m not in slots:
                if m + 1 > max_depth:
                    raise DerivationError(
                        f"cache depth exceeded: slot {m} needed, bound is {max_depth}")
                slots.add(m)
                todo.append(m)
    return tuple(sorted(slots))


def cache_closure(f: A.FuncDef, inc: IncrementSpec, max_depth: int = DEFAULT_CACHE_DEPTH,
                  program: A.Program | None = None):
    """Smallest set of cached values ``f(n - j)`` closed under the increment.

    Returns ``(CachedForm, Derivation)``.
    """
    if inc.kind != "int":
        raise DerivationError("cache closure needs an integer increment")
    param, k = f.params[0], inc.step
    names = NameSupply(_taken(f, program), "v")
    r = names.named("r")
    d = Derivation(f.name, inc.describe(), phase="cache closure")

    slots = _closure(inc.offsets, k, max_depth)
    d.add("cache-extend", f"{f.name}({param})",
          "(" + ", ".join(print_expr(_slot_call(f, s)) for s in slots) + ")",
          f"closure of offsets {list(inc.offsets)} under {inc.describe()}")

    try:
        guards = base_guards(f)
    except DerivationError as exc:
        guards = None
        d.flagged.append(f"no syntactic base cases ({exc}); maintenance keeps its guards")
    below = [j for j in slots if j < k]
    valid_from = max(guards.frontier - k + max(below), 0) if guards else 0
    assume = {param: valid_from}
    index = {s: i + 1 for i, s in enumerate(slots)}
    n = A.Var(param)
    rv = A.Var(r)

    def read(m):
        return rv if len(slots) == 1 else A.Proj(rv, index[m])

    def from_cache(arg):
        m = _offset(arg, param)
        if m is not None and m in index:
            return read(m)
        return None

    cells, used = [], set()
    for j in slots:
        if j >= k:
            cells.append(read(j - k))
            used.add(j - k)
            continue
        at = A.BinOp("+", n, A.Int(k - j)) if k > j else n
        unfolded = _unfold(f, at)
        simp = simplify(unfolded, assume)
        d.add("unfold", A.Call(f.name, (simplify(at),)), simp,
              f"definition of {f.name}, guards decided for {param} >= {valid_from}")
        body = _replace_calls(simp, f.name, from_cache)
        left = _residuals(body, f.name)
        if left:
            raise DerivationError(f"cache slots do not cover calls {', '.join(left)}")
        used |= {m for m in slots if _reads(body, read(m))}
        d.add("replace-by-r", simp, body, "cached slots read from " + r)
        cells.append(simplify(body))
    inc_body = cells[0] if len(cells) == 1 else A.Tuple(tuple(cells))
    inc_fn = A.FuncDef(names.named(f.name + "_next"), (param, r), inc_body)

    if len(slots) == 1:
        ext = f
    else:
        ext = A.FuncDef(names.named(f.name + "_ext"), (param,),
                        A.Tuple(tuple(_slot_call(f, s) for s in slots)))
    flagged = [f"slot {f.name}({param} - {m}) is never read by the maintenance"
               for m in slots if m not in used]
    d.flagged.extend(flagged)
    d.add("prune", print_decl(ext), print_decl(ext),
          "first component is " + f"{f.name}({param})" + "; closure is exact, nothing dropped")
    cf = CachedForm(f.name, param, k, slots, ext, inc_fn, valid_from, guards, f, tuple(flagged))
    return cf, d


def _slot_call(f, s):
    n = A.Var(f.params[0])
    return A.Call(f.name, (n if s == 0 else A.BinOp("-", n, A.Int(s)),))


def _reads(e, target):
    return any(node == target for node in A.walk(e))


# -- iterative program ----------------------------------------------------------


@dataclass
class IterativeForm:
    """Loop-based replacement for ``f``: ``main`` plus its helper functions."""

    main: A.FuncDef
    helpers: tuple
    starts: dict  # residue -> (start, start tuple value)
    support: tuple = ()  # other functions the helpers may call

    @property
    def functions(self) -> tuple:
        return self.helpers + (self.main,)

    def program(self) -> A.Program:
        return A.Program(tuple(self.support) + self.functions)

    def to_text(self) -> str:
        return "".join(print_decl(fn) + "\n" for fn in self.functions)


def derive_iterative(cf: CachedForm, inc: IncrementSpec, program: A.Program | None = None,
                     step_limit: int = 10**6) -> IterativeForm:
    """Loop ``cf.inc`` from base values up to the input; cost is linear in n."""
    if inc.kind != "int":
        raise DerivationError("iterative derivation needs an integer increment")
    guards = cf.guards or base_guards(cf.source)
    f, k, param = cf.source, cf.step, cf.param
    support = tuple(d for d in (program.of_type(A.FuncDef) if program else ())
                    if d.name != f.name)
    oracle = A.Program(support + (f,))
    names = NameSupply(set(oracle.functions) | {cf.inc.name, cf.ext.name}, "v")
    loop_name = names.named(f.name + "_loop")
    main_name = names.named(f.name + "_iter")
    i, n, r = (names.named(x) for x in ("i", "n", "r"))

    starts = {}
    top = guards.frontier + k + max(cf.slots)
    for rho in range(k):
        s = cf.valid_from + ((rho - cf.valid_from) % k)
        first_rec = guards.frontier + ((rho - guards.frontier) % k)
        while True:
            if s > first_rec or s > top:
                raise DerivationError(f"no start value for inputs congruent to {rho} mod {k}")
            try:
                vals = [evaluate(oracle, (f.name, [s - j]), step_limit)[0] for j in cf.slots]
                break
            except EvalError:
                s += k
        starts[rho] = (s, vals[0] if len(vals) == 1 else tuple(vals))

    loop = A.FuncDef(loop_name, (i, n, r), A.If(
        A.BinOp(">=", A.Var(i), A.Var(n)),
        A.Var(r),
        A.Call(loop_name, (A.BinOp("+", A.Var(i), A.Int(k)), A.Var(n),
                           A.Call(cf.inc.name, (A.Var(i), A.Var(r)))))))

    x = A.Var(param)

    def run_from(rho):
        s, val = starts[rho]
        call = A.Call(loop_name, (A.Int(s), x, _literal(val)))
        return A.Proj(call, 1) if cf.tupled else call

    dispatch = run_from(k - 1)
    for rho in reversed(range(k - 1)):
        dispatch = A.If(A.BinOp("==", A.BinOp("%", x, A.Int(k)), A.Int(rho)), run_from(rho), dispatch)
    body = dispatch
    for g, then in reversed(guards.cases):
        body = A.If(g, then, body)
    main = A.FuncDef(main_name, (param,), body)
    return IterativeForm(main, (cf.inc, loop), starts, support)


def _literal(v) -> A.Expr:
    if isinstance(v, bool):
        return A.Bool(v)
    if isinstance(v, int):
        return A.Int(v)
    if isinstance(v, tuple):
        return A.Tuple(tuple(_literal(x) for x in v))
    raise DerivationError(f"base value {v!r} has no literal form")


def report_json(*parts) -> str:
    """Deterministic JSON report for derivation objects (schema 1)."""
    out = {"schema": 1}
    for p in parts:
        if isinstance(p, Derivation):
            out["derivation"] = p.as_dict()
        elif isinstance(p, CachedForm):
            out["cached_form"] = p.as_dict()
        elif isinstance(p, IterativeForm):
            out["iterative"] = [print_decl(fn) for fn in p.functions]
        elif isinstance(p, A.FuncDef):
            out["incremental"] = print_decl(p)
    return json.dumps(out, indent=2)
