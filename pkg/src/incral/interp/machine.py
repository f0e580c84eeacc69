"""Reference interpreter with elementary-operation cost counting.

Expressions and statements are compiled once into Python closures; each
closure charges the shared :class:`CostReport` as it runs. Calls in tail
position are trampolined so derived loops (tail-recursive functions) run in
constant Python stack.
"""
from __future__ import annotations

import operator
import sys
from dataclasses import dataclass, field

from ..corelang import ast as A
from ..corelang.syntax import parse_call
from ..corelang.values import NIL, LList, VMap, VSet, copy_value, format_value
from .cost import CostReport

DEFAULT_STEP_LIMIT = 10**8

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))


class EvalError(Exception):
    pass


class StrictChangeError(EvalError):
    """An add of a present element or a delete of an absent one."""


class StepLimitExceeded(EvalError):
    pass


class UnboundVariable(EvalError):
    pass


class _TailCall:
    __slots__ = ("name", "args")

    def __init__(self, name, args):
        self.name = name
        self.args = args


_ARITH = {"+": operator.add, "-": operator.sub, "*": operator.mul}
_COMPARE = {
    "==": operator.eq, "!=": operator.ne, "<": operator.lt,
    "<=": operator.le, ">": operator.gt, ">=": operator.ge,
}


@dataclass(eq=False)
class State:
    """Runtime store: declared variables, maintained invariants, auxiliary maps."""

    program: A.Program
    env: dict = field(default_factory=dict)
    invs: dict = field(default_factory=dict)
    aux: dict = field(default_factory=dict)
    step_limit: int = DEFAULT_STEP_LIMIT
    trace: list = field(default_factory=list)
    _machines: dict = field(default_factory=dict, repr=False)

    @property
    def functions(self) -> dict:
        return self.program.functions

    def value(self, name: str):
        for store in (self.env, self.invs, self.aux):
            if name in store:
                return store[name]
        raise UnboundVariable(f"variable {name} unbound")

    def store_of(self, name: str) -> dict:
        for store in (self.env, self.invs, self.aux):
            if name in store:
                return store
        raise UnboundVariable(f"variable {name} unbound")

    def snapshot(self) -> dict:
        out = {}
        for store in (self.env, self.invs, self.aux):
            for k, v in store.items():
                out[k] = format_value(v)
        return out

    def copy(self) -> "State":
        return State(
            self.program,
            {k: copy_value(v) for k, v in self.env.items()},
            {k: copy_value(v) for k, v in self.invs.items()},
            {k: copy_value(v) for k, v in self.aux.items()},
            self.step_limit,
        )

    def machine(self, code=None) -> "Machine":
        key = id(code)
        m = self._machines.get(key)
        if m is None or m.code is not code:
            m = Machine(self.program.functions, self, self.step_limit, code)
            self._machines[key] = m
        return m


def _on_blocks(code) -> list:
    if code is None:
        return []
    if isinstance(code, A.Program):
        return code.on_blocks
    if hasattr(code, "on_blocks"):
        blocks = code.on_blocks
        return list(blocks() if callable(blocks) else blocks)
    return list(code)


class Machine:
    def __init__(self, functions: dict, state: State | None = None,
                 step_limit: int = DEFAULT_STEP_LIMIT, code=None):
        self.functions = functions
        self.state = state
        self.limit = step_limit
        self.cost = CostReport()
        self.code = code
        self.trace = state.trace if state is not None else []
        self._funcs = {}
        self._blocks = {}
        for b in _on_blocks(code):
            body = self._stmts(b.body, frozenset({b.param}))
            self._blocks.setdefault((b.kind, b.target), []).append((b.param, body))

    # -- globals --
    def _global(self, name):
        st = self.state
        if st is not None:
            for store in (st.env, st.invs, st.aux):
                if name in store:
                    return store[name]
        raise UnboundVariable(f"variable {name} unbound")

    # -- functions --
    def _func(self, name):
        f = self._funcs.get(name)
        if f is None:
            fd = self.functions.get(name)
            if fd is None:
                raise EvalError(f"call to undefined function {name}")
            f = self._funcs[name] = (fd.params, self.compile(fd.body, frozenset(fd.params), tail=True))
        return f

    def invoke(self, name, args):
        c = self.cost
        limit = self.limit
        while True:
            params, body = self._func(name)
            c.call += 1
            if c.total > limit:
                raise StepLimitExceeded(f"step limit {limit} exceeded")
            if len(args) != len(params):
                raise EvalError(f"{name} expects {len(params)} arguments, got {len(args)}")
            r = body(dict(zip(params, args)))
            if type(r) is _TailCall:
                name, args = r.name, r.args
                continue
            return r

    # -- expressions --
    def compile(self, e: A.Expr, scope=frozenset(), tail: bool = False):
        c = self.cost
        T = type(e)
        if T is A.Int or T is A.Bool:
            v = e.value
            return lambda env: v
        if T is A.Var:
            name = e.name
            if name in scope:
                return lambda env: env[name]
            g = self._global
            return lambda env: g(name)
        if T is A.BinOp:
            return self._binop(e, scope)
        if T is A.Not:
            f = self.compile(e.operand, scope)

            def not_(env):
                c.compare += 1
                return not f(env)
            return not_
        if T is A.Neg:
            f = self.compile(e.operand, scope)

            def neg(env):
                c.arith += 1
                return -f(env)
            return neg
        if T is A.If:
            cond = self.compile(e.cond, scope)
            a = self.compile(e.then, scope, tail)
            b = self.compile(e.orelse, scope, tail)
            return lambda env: a(env) if cond(env) else b(env)
        if T is A.Tuple:
            fs = [self.compile(x, scope) for x in e.items]
            if len(fs) == 2:
                f0, f1 = fs
                return lambda env: (f0(env), f1(env))
            return lambda env: tuple([f(env) for f in fs])
        if T is A.Proj:
            f = self.compile(e.expr, scope)
            i = e.index - 1

            def proj(env):
                v = f(env)
                if type(v) is not tuple or i >= len(v):
                    raise EvalError(f"cannot select component {i + 1} of {format_value(v)}")
                return v[i]
            return proj
        if T is A.Nil:
            return lambda env: NIL
        if T is A.Cons:
            h = self.compile(e.head, scope)
            t = self.compile(e.tail, scope)

            def cons(env):
                c.list_op += 1
                hv, tv = h(env), t(env)
                if not isinstance(tv, LList):
                    raise EvalError("cons onto a non-list")
                return LList(hv, tv)
            return cons
        if T is A.Head or T is A.Tail:
            f = self.compile(e.expr, scope)
            is_head = T is A.Head
            what = "head" if is_head else "tail"

            def ht(env):
                c.list_op += 1
                v = f(env)
                if not isinstance(v, LList):
                    raise EvalError(f"{what} of a non-list")
                if v.tail is None:
                    raise EvalError(f"{what} of empty list")
                return v.head if is_head else v.tail
            return ht
        if T is A.IsEmpty:
            f = self.compile(e.expr, scope)

            def is_empty(env):
                c.list_op += 1
                v = f(env)
                if isinstance(v, LList):
                    return v.tail is None
                if isinstance(v, (VSet, VMap)):
                    return not v
                raise EvalError("empty() of a non-collection")
            return is_empty
        if T is A.SetLit:
            fs = [self.compile(x, scope) for x in e.items]

            def setlit(env):
                out = VSet()
                for f in fs:
                    c.set_add += 1
                    out.add(f(env))
                return out
            return setlit
        if T is A.SetOp:
            return self._setop(e, scope)
        if T is A.Member:
            x = self.compile(e.elem, scope)
            s = self.compile(e.container, scope)

            def member(env):
                xv, sv = x(env), s(env)
                if isinstance(sv, VMap):
                    c.map_get += 1
                elif isinstance(sv, VSet):
                    c.membership += 1
                else:
                    raise EvalError("membership test on a non-set")
                return xv in sv
            return member
        if T is A.Comp:
            return self._comp(e, scope)
        if T is A.Join:
            return self._join(e, scope)
        if T is A.Agg:
            f = self.compile(e.expr, scope)
            is_sum = e.kind == "sum"

            def agg(env):
                v = f(env)
                if not isinstance(v, (VSet, LList)):
                    raise EvalError(f"{e.kind} over a non-collection")
                total = 0
                for x in v:
                    c.iter_step += 1
                    if is_sum:
                        c.arith += 1
                        total += x
                    else:
                        total += 1
                return total
            return agg
        if T is A.MapGet:
            m = self.compile(e.map, scope)
            k = self.compile(e.key, scope)

            def mapget(env):
                mv = m(env)
                if not isinstance(mv, VMap):
                    raise EvalError("lookup in a non-map")
                c.map_get += 1
                return VSet(mv.get(k(env), ()))
            return mapget
        if T is A.Call:
            fs = [self.compile(a, scope) for a in e.args]
            name = e.name
            if tail:
                return lambda env: _TailCall(name, [f(env) for f in fs])
            invoke = self.invoke
            return lambda env: invoke(name, [f(env) for f in fs])
        raise EvalError(f"cannot evaluate {T.__name__}")

    def _binop(self, e, scope):
        c = self.cost
        l = self.compile(e.left, scope)
        r = self.compile(e.right, scope)
        op = e.op
        if op in _ARITH:
            fn = _ARITH[op]

            def arith(env):
                c.arith += 1
                return fn(l(env), r(env))
            return arith
        if op in ("/", "%"):
            is_div = op == "/"

            def divmod_(env):
                c.arith += 1
                a, b = l(env), r(env)
                if b == 0:
                    raise EvalError("division by zero")
                return a // b if is_div else a % b
            return divmod_
        if op in _COMPARE:
            fn = _COMPARE[op]

            def compare(env):
                c.compare += 1
                return fn(l(env), r(env))
            return compare
        if op == "and":
            def and_(env):
                c.compare += 1
                return bool(l(env)) and bool(r(env))
            return and_
        if op == "or":
            def or_(env):
                c.compare += 1
                return bool(l(env)) or bool(r(env))
            return or_
        raise EvalError(f"unknown operator {op}")

    def _setop(self, e, scope):
        c = self.cost
        l = self.compile(e.left, scope)
        r = self.compile(e.right, scope)
        op = e.op

        def setop(env):
            a, b = l(env), r(env)
            if not (isinstance(a, VSet) and isinstance(b, VSet)):
                raise EvalError(f"{op} of non-sets")
            out = VSet()
            if op == "union":
                for x in a:
                    c.iter_step += 1
                    c.set_add += 1
                    out.add(x)
                for x in b:
                    c.iter_step += 1
                    c.membership += 1
                    if x not in out:
                        c.set_add += 1
                        out.add(x)
            else:
                keep = op == "inter"
                for x in a:
                    c.iter_step += 1
                    c.membership += 1
                    if (x in b) == keep:
                        c.set_add += 1
                        out.add(x)
            return out
        return setop

    def _comp(self, e, scope):
        c = self.cost
        src = self.compile(e.source, scope)
        inner_scope = scope | {e.var}
        image = self.compile(e.image, inner_scope)
        cond = None if e.cond is None else self.compile(e.cond, inner_scope)
        key = None if e.key is None else self.compile(e.key, inner_scope)
        var = e.var

        def comp(env):
            sv = src(env)
            if not isinstance(sv, (VSet, LList)):
                raise EvalError("comprehension over a non-collection")
            out = VSet() if key is None else VMap()
            inner = dict(env)
            for x in sv:
                c.iter_step += 1
                inner[var] = x
                if cond is not None and not cond(inner):
                    continue
                v = image(inner)
                if key is None:
                    c.set_add += 1
                    out.add(v)
                else:
                    c.map_put += 1
                    out.inc(key(inner), v)
            return out
        return comp

    def _join(self, e, scope):
        c = self.cost
        lv, rv = e.left_vars, e.right_vars
        shared = e.shared
        li, ri = lv.index(shared), rv.index(shared)
        left = self.compile(e.left, scope)
        right = self.compile(e.right, scope)
        inner_scope = scope | set(lv) | set(rv)
        image = self.compile(e.image, inner_scope)
        key = None if e.key is None else self.compile(e.key, inner_scope)

        def join(env):
            L, R = left(env), right(env)
            index = {}
            for t in R:
                c.iter_step += 1
                _check_arity(t, rv)
                c.map_put += 1
                index.setdefault(t[ri], []).append(t)
            out = VSet() if key is None else VMap()
            inner = dict(env)
            for s in L:
                c.iter_step += 1
                _check_arity(s, lv)
                c.map_get += 1
                for t in index.get(s[li], ()):
                    c.iter_step += 1
                    inner.update(zip(lv, s))
                    inner.update(zip(rv, t))
                    v = image(inner)
                    if key is None:
                        c.set_add += 1
                        out.add(v)
                    else:
                        c.map_put += 1
                        out.inc(key(inner), v)
            return out
        return join

    # -- statements --
    def _stmts(self, stmts, scope):
        fs = [self._stmt(s, scope) for s in stmts]

        def run(env):
            for f in fs:
                f(env)
        return run

    def _stmt(self, s, scope):
        c = self.cost
        T = type(s)
        if T is A.AddStmt or T is A.DelStmt:
            elem = self.compile(s.elem, scope)
            target = s.target
            change = self.add if T is A.AddStmt else self.delete
            return lambda env: change(target, elem(env))
        if T is A.Assign:
            val = self.compile(s.value, scope)
            target = s.target

            def assign(env):
                v = val(env)
                self.state.store_of(target)[target] = v
            return assign
        if T is A.IfStmt:
            cond = self.compile(s.cond, scope)
            body = self._stmts(s.body, scope)
            orelse = self._stmts(s.orelse, scope)

            def if_(env):
                if cond(env):
                    body(env)
                else:
                    orelse(env)
            return if_
        if T is A.ForStmt:
            src = self.compile(s.source, scope)
            body = self._stmts(s.body, scope | {s.var})
            var = s.var

            def for_(env):
                sv = src(env)
                if not isinstance(sv, (VSet, LList)):
                    raise EvalError("for over a non-collection")
                inner = dict(env)
                for x in list(sv):
                    c.iter_step += 1
                    inner[var] = x
                    body(inner)
            return for_
        if T is A.MapInc or T is A.MapDec:
            k = self.compile(s.key, scope)
            v = self.compile(s.value, scope)
            name = s.map
            inc = T is A.MapInc

            def mapupd(env):
                m = self._global(name)
                if not isinstance(m, VMap):
                    raise EvalError(f"{name} is not a map")
                c.map_put += 1
                kv, vv = k(env), v(env)
                if inc:
                    m.inc(kv, vv)
                else:
                    try:
                        m.dec(kv, vv)
                    except KeyError:
                        raise StrictChangeError(
                            f"mapdec({name}, {format_value(kv)}, {format_value(vv)}): entry absent") from None
            return mapupd
        raise EvalError(f"cannot execute {T.__name__}")

    # -- element changes with event propagation --
    def add(self, target, v):
        s = self._global(target)
        if not isinstance(s, VSet):
            raise EvalError(f"add to non-set {target}")
        self.cost.set_add += 1
        if v in s:
            raise StrictChangeError(f"add({target}, {format_value(v)}): element already present")
        s.add(v)
        self.trace.append(("add", target, v))
        for param, block in self._blocks.get(("add", target), ()):
            block({param: v})

    def delete(self, target, v):
        s = self._global(target)
        if not isinstance(s, VSet):
            raise EvalError(f"del from non-set {target}")
        self.cost.set_del += 1
        if v not in s:
            raise StrictChangeError(f"del({target}, {format_value(v)}): element absent")
        del s[v]
        self.trace.append(("del", target, v))
        for param, block in self._blocks.get(("del", target), ()):
            block({param: v})

    def run(self, fn):
        """Run ``fn()`` and return the cost it charged."""
        before = self.cost.copy()
        try:
            fn()
        except RecursionError:
            raise EvalError("recursion depth exceeded") from None
        except TypeError as exc:
            raise EvalError(f"type error: {exc}") from None
        return self.cost - before


def _check_arity(t, pattern):
    if type(t) is not tuple or len(t) != len(pattern):
        raise EvalError(f"join element {format_value(t)} does not match pattern ({', '.join(pattern)})")


# -- public operations ------------------------------------------------------


def evaluate(p: A.Program, entry, step_limit: int = DEFAULT_STEP_LIMIT, state: State | None = None):
    """Evaluate a call ``entry`` (``"f(1, 2)"`` or ``(name, args)``) call-by-value.

    Returns ``(value, CostReport)``.
    """
    name, args = parse_call(entry) if isinstance(entry, str) else entry
    m = Machine(p.functions, state, step_limit)
    out = []
    cost = m.run(lambda: out.append(m.invoke(name, list(args))))
    return out[0], cost


def eval_expr(e: A.Expr, state: State | None = None, env: dict | None = None,
              functions: dict | None = None, step_limit: int = DEFAULT_STEP_LIMIT):
    """Evaluate a closed (or ``env``-closed) expression; returns ``(value, CostReport)``."""
    if functions is None:
        functions = state.functions if state is not None else {}
    env = dict(env or {})
    m = Machine(functions, state, step_limit)
    f = m.compile(e, frozenset(env))
    out = []
    cost = m.run(lambda: out.append(f(env)))
    return out[0], cost


def init_state(p: A.Program, base: dict | None = None,
               step_limit: int = DEFAULT_STEP_LIMIT) -> State:
    """Build a state for ``p``: declared sets from ``base`` (default empty),
    other ``base`` entries as plain variables, invariants computed from scratch."""
    base = dict(base or {})
    st = State(p, step_limit=step_limit)
    for n in p.set_names:
        st.env[n] = VSet(base.pop(n, ()))
    for k, v in base.items():
        st.env[k] = copy_value(v)
    for inv in p.invariants:
        # a copy invariant would otherwise share its operand's set object
        v = copy_value(recompute(st, inv))
        (st.aux if isinstance(v, VMap) else st.invs)[inv.name] = v
    return st


def recompute_with_cost(st: State, inv):
    if isinstance(inv, str):
        inv = next(d for d in st.program.invariants if d.name == inv)
    e = inv if isinstance(inv, A.Expr) else inv.expr
    return eval_expr(e, st, step_limit=st.step_limit)


def recompute(st: State, inv):
    """From-scratch value of an invariant (an ``InvDecl``, its name, or an expression)."""
    return recompute_with_cost(st, inv)[0]


def apply_update(st: State, op: A.UpdateOp, args, code=None):
    """Apply the change ``op(args)`` to ``st`` then run maintenance ``code``.

    ``args`` is a list of argument values (a non-list is taken as the single
    argument). Returns ``(st, CostReport)``; a strict-change violation by the
    update itself raises before the state is touched.
    """
    if not isinstance(args, list):
        args = [args]
    if len(args) != len(op.params) and op.kind != "incr":
        raise EvalError(f"update {op.name} expects {len(op.params)} arguments, got {len(args)}")
    m = st.machine(code)
    st.trace.clear()
    target = op.target
    c = m.cost
    kind = op.kind

    def go():
        if kind == "add" or kind == "del":
            (m.add if kind == "add" else m.delete)(target, args[0])
        elif kind == "incr":
            step = args[0] if args else op.params[0]
            store = st.store_of(target)
            c.arith += 1
            store[target] = store[target] + step
        elif kind == "cons":
            store = st.store_of(target)
            c.list_op += 1
            store[target] = LList(args[0], store[target])
        else:
            store = st.store_of(target)
            store[target] = m.invoke(kind, [store[target]] + list(args))

    if kind in ("add", "del"):
        s = st.value(target)
        present = args[0] in s
        if kind == "add" and present:
            raise StrictChangeError(f"add({target}, {format_value(args[0])}): element already present")
        if kind == "del" and not present:
            raise StrictChangeError(f"del({target}, {format_value(args[0])}): element absent")
    cost = m.run(go)
    return st, cost
