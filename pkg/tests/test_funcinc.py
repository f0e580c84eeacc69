import random

import pytest
import sympy
from hypothesis import given, strategies as st

from incral.corelang import ast as A
from incral.corelang import parse, parse_expr
from incral.corelang.syntax import print_decl
from incral.corelang.values import LList
from incral.driver.programs import load
from incral.funcinc import (
    DerivationError, IncrementSpec, base_guards, cache_closure, derive_iterative,
    detect_increment, incrementalize_p1, poly_diff, simplify,
)
from incral.funcinc.poly import AtomTable, NotPolynomial, format_poly, to_poly
from incral.interp import evaluate, eval_expr

FIB = "def fib(n) = if n <= 1 then n else fib(n-1) + fib(n-2);"
H = "def h(n) = if n <= 2 then 1 else h(n-2) + h(n-3);"
K = "def k(n) = if n == 0 then 0 else k(n-1) + 1;"


def func(text, name=None):
    p = parse(text)
    return p, (p.functions[name] if name else p.decls[0])


def py_fib(n):
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


def py_h(n):
    memo = [1, 1, 1]
    for i in range(3, n + 1):
        memo.append(memo[i - 2] + memo[i - 3])
    return memo[n]


def call(prog, name, *args):
    return evaluate(prog, (name, list(args)))[0]


# -- increment detection -----------------------------------------------------


def test_detect_fib():
    inc = detect_increment(func(FIB)[1])
    assert (inc.kind, inc.step, inc.offsets) == ("int", 1, (1, 2))
    assert inc.describe() == "n += 1"


def test_detect_single_offset():
    _, g = func("def g(n) = if n <= 2 then 0 else g(n-3) + n;")
    inc = detect_increment(g)
    assert inc.step == 3 and inc.describe() == "n += 3"


def test_detect_tail():
    _, f = func("def length(xs) = if empty(xs) then 0 else 1 + length(tail(xs));")
    inc = detect_increment(f)
    assert inc.kind == "cons"
    assert inc.describe() == "xs := cons(y, xs)"


@pytest.mark.parametrize("text", [
    "def f(n) = if n <= 1 then n else f(n - 1) + f(n + 1);",
    "def f(n) = if n <= 1 then n else f(n * 2);",
    "def f(xs) = if empty(xs) then 0 else f(tail(xs)) + f(xs - 1);",
    "def f(n) = n;",
    "def f(n, m) = if n <= 0 then m else f(n - 1, m);",
])
def test_detect_rejects(text):
    with pytest.raises(DerivationError, match="increment not detectable"):
        detect_increment(func(text)[1])


def test_detect_names_offending_call():
    with pytest.raises(DerivationError, match=r"f\(n \* 2\)"):
        detect_increment(func("def f(n) = if n <= 1 then n else f(n * 2);")[1])


# -- P1 ------------------------------------------------------------------


def test_p1_sum_under_cons():
    p = load("sum")
    f = p.functions["total"]
    fp, d = incrementalize_p1(f, detect_increment(f), program=p)
    assert print_decl(fp) == "def total_inc(xs, y, r) = y + r;"
    assert not d.residuals
    prog = A.Program(p.decls + (fp,))
    rng = random.Random(0)
    for _ in range(100):
        xs = [rng.randrange(-5, 6) for _ in range(rng.randrange(9))]
        y = rng.randrange(-5, 6)
        r = sum(xs)
        assert call(prog, "total_inc", LList.of(xs), y, r) == y + sum(xs)


def test_p1_insertion_sort():
    p = load("sort")
    f = p.functions["sort"]
    fp, _ = incrementalize_p1(f, detect_increment(f), program=p)
    assert print_decl(fp) == "def sort_inc(xs, y, r) = insert(y, r);"


def test_p1_identity_change():
    p = load("sort")
    f = p.functions["sort"]
    ident = parse("def same(xs) = xs;").decls[0]
    fp, _ = incrementalize_p1(f, IncrementSpec.user(f, ident), program=p)
    assert print_decl(fp) == "def sort_inc(xs, r) = r;"


def test_p1_fib_reports_residual():
    _, f = func(FIB)
    fp, d = incrementalize_p1(f, detect_increment(f))
    assert d.needs_cache_closure
    assert d.residuals == ["fib(n - 1)"]
    assert [s.kind for s in d.steps] == ["unfold", "simplify", "replace-by-r"]
    with pytest.raises(DerivationError, match="fib\\(n - 1\\)"):
        incrementalize_p1(f, detect_increment(f), allow_cache=False)


def test_p1_k_is_self_sufficient():
    _, f = func(K)
    fp, d = incrementalize_p1(f, detect_increment(f))
    assert print_decl(fp) == "def k_inc(n, r) = r + 1;"
    assert not d.needs_cache_closure


@pytest.mark.parametrize("text, name, oracle", [(FIB, "fib", py_fib), (H, "h", py_h), (K, "k", lambda n: n)])
def test_p1_contract_on_integers(text, name, oracle):
    p, f = func(text, name)
    inc = detect_increment(f)
    fp, _ = incrementalize_p1(f, inc)
    prog = A.Program(p.decls + (fp,))
    for n in range(0, 21):
        assert call(prog, fp.name, n, oracle(n)) == oracle(n + inc.step)


@pytest.mark.parametrize("text, name", [(FIB, "fib"), (H, "h"), (K, "k")])
def test_derivation_steps_preserve_meaning(text, name):
    p, f = func(text, name)
    inc = detect_increment(f)
    _, d = incrementalize_p1(f, inc)
    for s in d.steps:
        before, after = parse_expr(s.before), parse_expr(s.after)
        for n in range(0, 12):
            env = {"n": n, "r": call(p, name, n)}
            assert eval_expr(before, env=env, functions=p.functions)[0] == \
                eval_expr(after, env=env, functions=p.functions)[0], (s.kind, n)


# -- cache closure ------------------------------------------------------------------


def test_fib_cache():
    _, f = func(FIB)
    cf, d = cache_closure(f, detect_increment(f))
    assert cf.slots == (0, 1) and cf.depth == 2
    assert print_decl(cf.inc) == "def fib_next(n, r) = (r.1 + r.2, r.1);"
    assert [s.kind for s in d.steps] == ["cache-extend", "unfold", "replace-by-r", "prune"]


def test_h_cache_depth_three():
    _, f = func(H)
    cf, _ = cache_closure(f, detect_increment(f))
    assert cf.depth == 3 and cf.slots == (0, 1, 2)
    assert print_decl(cf.inc) == "def h_next(n, r) = (r.1 + r.2, r.2 + r.3, r.1);"


def test_k_cache_depth_one():
    _, f = func(K)
    cf, _ = cache_closure(f, detect_increment(f))
    assert cf.depth == 1 and not cf.tupled


def test_cache_depth_exceeded():
    _, f = func("def g(n) = if n <= 20 then 1 else g(n-1) + g(n-20);")
    with pytest.raises(DerivationError, match="cache depth exceeded"):
        cache_closure(f, detect_increment(f))
    cf, _ = cache_closure(f, detect_increment(f), max_depth=20)
    assert cf.depth == 20


def _needs(m, slots, offsets):
    if m in slots:
        return True
    if m < 0:
        return all(_needs(m + o, slots, offsets) for o in offsets)
    return False


def self_contained(slots, offsets, k):
    return all(_needs(s - k, slots, offsets) for s in slots)


@pytest.mark.parametrize("text", [FIB, H, K,
                                  "def g(n) = if n <= 3 then n else g(n-2) + g(n-4);",
                                  "def g(n) = if n <= 5 then 1 else g(n-3) + g(n-5);"])
def test_closure_minimality(text):
    _, f = func(text)
    inc = detect_increment(f)
    cf, _ = cache_closure(f, inc)
    slots = set(cf.slots)
    assert self_contained(slots, inc.offsets, inc.step)
    for s in cf.slots[1:]:
        assert not self_contained(slots - {s}, inc.offsets, inc.step)


@pytest.mark.parametrize("text, name, oracle", [(FIB, "fib", py_fib), (H, "h", py_h), (K, "k", lambda n: n)])
def test_cached_contract_and_prune(text, name, oracle):
    p, f = func(text, name)
    inc = detect_increment(f)
    cf, _ = cache_closure(f, inc)
    prog = A.Program(p.decls + tuple(fn for fn in (cf.ext, cf.inc) if fn.name != name))
    for n in range(cf.valid_from, 21):
        old = call(prog, cf.ext.name, n)
        new = call(prog, cf.inc.name, n, old)
        assert new == call(prog, cf.ext.name, n + inc.step)
        first = new[0] if cf.tupled else new
        assert first == oracle(n + inc.step)


def test_base_guards():
    _, f = func(H)
    g = base_guards(f)
    assert g.frontier == 3
    assert [g.is_base(n) for n in range(5)] == [True, True, True, False, False]
    with pytest.raises(DerivationError):
        base_guards(func("def f(n) = if n * n < 4 then 1 else f(n - 1);")[1])


# -- iterative ------------------------------------------------------------------


def iterative(text, name=None):
    p, f = func(text, name)
    inc = detect_increment(f)
    cf, _ = cache_closure(f, inc)
    it = derive_iterative(cf, inc, p)
    return p, it, A.Program(p.decls + it.functions)


def test_fib_iterative_program():
    _, it, prog = iterative(FIB)
    assert [print_decl(fn) for fn in it.functions] == [
        "def fib_next(n, r) = (r.1 + r.2, r.1);",
        "def fib_loop(i, n, r) = if i >= n then r else fib_loop(i + 1, n, fib_next(i, r));",
        "def fib_iter(n) = if n <= 1 then n else fib_loop(1, n, (1, 0)).1;",
    ]
    assert call(prog, "fib_iter", 10) == 55
    assert call(prog, "fib_iter", 30) == 832040
    v, c = evaluate(prog, "fib_iter(0)")
    assert v == 0 and c.call == 1


def test_fib30_cost_bound():
    _, _, prog = iterative(FIB)
    assert evaluate(prog, "fib_iter(30)")[1].total <= 30 * 20


@pytest.mark.parametrize("text, oracle", [
    (FIB, py_fib), (H, py_h), (K, lambda n: n),
    ("def g(n) = if n <= 2 then n else g(n-3) + 1;", lambda n: n if n <= 2 else g_oracle(n)),
    ("def g(n) = if n <= 3 then n else g(n-2) + g(n-4);", None),
])
def test_iterative_matches_naive(text, oracle):
    p, it, prog = iterative(text)
    name = p.decls[0].name
    for n in range(0, 21):
        expect = call(p, name, n)
        assert call(prog, it.main.name, n) == expect
        if oracle is not None:
            assert expect == oracle(n)


def g_oracle(n):
    return g_oracle(n - 3) + 1 if n > 2 else n


def test_linear_cost():
    _, _, prog = iterative(FIB)
    costs = [evaluate(prog, ("fib_iter", [n]))[1].total for n in (10, 15, 20, 25)]
    diffs = {b - a for a, b in zip(costs, costs[1:])}
    assert len(diffs) == 1


# -- simplifier ------------------------------------------------------------------

simple = st.deferred(lambda: st.one_of(
    st.integers(-5, 5).map(A.Int),
    st.sampled_from(["a", "b"]).map(A.Var),
    st.tuples(st.sampled_from(["+", "-", "*"]), simple, simple).map(lambda t: A.BinOp(*t)),
))


@given(simple, st.integers(-4, 4), st.integers(-4, 4))
def test_simplify_preserves_value(e, a, b):
    env = {"a": a, "b": b}
    assert eval_expr(simplify(e), env=env)[0] == eval_expr(e, env=env)[0]


@given(simple)
def test_poly_matches_sympy(e):
    table = AtomTable()
    poly = to_poly(e, table, strict=True)
    env = {n: sympy.Symbol(n) for n in ("a", "b")}
    got = sympy.sympify(format_poly(poly, table), locals=env)
    assert sympy.expand(_to_sympy(e, env) - got) == 0


def _to_sympy(e, env):
    if isinstance(e, A.Int):
        return sympy.Integer(e.value)
    if isinstance(e, A.Var):
        return env[e.name]
    l, r = _to_sympy(e.left, env), _to_sympy(e.right, env)
    return {"+": l + r, "-": l - r, "*": l * r}[e.op]


# -- polynomial differencing ------------------------------------------------------------------


def test_square_before_and_after():
    assert poly_diff("x * x", 1, "before").text == "r += 2*x + 1"
    assert poly_diff("x * x", 1, "after").text == "r += 2*x - 1"


def test_cubic_step_two():
    d = poly_diff("x*x*x + x", 2, "before")
    assert d.text == "r += 6*x*x + 12*x + 10"
    x = sympy.Symbol("x")
    p = x ** 3 + x
    oracle = sympy.Poly(sympy.expand(p.subs(x, x + 2) - p), x)
    for v in range(-3, 4):
        assert d.delta_at(v) == oracle.eval(v)


def test_core_statement():
    assert poly_diff("x * x", 1).core_text() == "r := r + (2 * x + 1);"


@pytest.mark.parametrize("text", ["x * y", "x / 2", "f(x)", "x % 3"])
def test_non_polynomial_rejected(text):
    with pytest.raises(NotPolynomial):
        poly_diff(text, 1)


def test_bad_arguments():
    with pytest.raises(ValueError):
        poly_diff("x", 0)
    with pytest.raises(ValueError):
        poly_diff("x", 1, "sideways")


coeffs = st.lists(st.integers(-6, 6), min_size=1, max_size=4)


@given(coeffs, st.integers(-5, 5).filter(bool), st.sampled_from(["before", "after"]),
       st.integers(-10, 10))
def test_tabulation_is_exact(cs, c, mode, x0):
    text = " + ".join(f"{a}" + "".join(" * x" for _ in range(i)) for i, a in enumerate(cs))
    d = poly_diff(text, c, mode)
    for x, r in d.tabulate(x0, 12):
        assert r == sum(a * x ** i for i, a in enumerate(cs))


@given(coeffs, st.integers(1, 4), st.sampled_from(["before", "after"]))
def test_delta_against_sympy(cs, c, mode):
    x = sympy.Symbol("x")
    p = sum(a * x ** i for i, a in enumerate(cs))
    text = " + ".join(f"{a}" + "".join(" * x" for _ in range(i)) for i, a in enumerate(cs))
    d = poly_diff(text, c, mode)
    expect = p.subs(x, x + c) - p if mode == "before" else p - p.subs(x, x - c)
    got = sympy.sympify(d.delta_text, locals={"x": x})
    assert sympy.expand(expect - got) == 0
