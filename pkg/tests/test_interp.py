import random

import pytest
from hypothesis import given, strategies as st

from incral import setinc
from incral.corelang import ast as A
from incral.corelang import parse, parse_expr
from incral.corelang.values import NIL, LList, VSet
from incral.interp import (
    COUNTERS, CostReport, EvalError, StepLimitExceeded, StrictChangeError, UnboundVariable,
    apply_update, eval_expr, evaluate, init_state, recompute, recompute_with_cost,
)

FIB = parse("def fib(n) = if n <= 1 then n else fib(n-1) + fib(n-2);")

# fib(25) makes 2*fib(26) - 1 calls; fixed by the closed form, not by this interpreter.
FIB25_CALLS = 2 * 121393 - 1


def op(kind, target):
    return A.UpdateOp(f"{kind}_{target}", target, kind, ("y",))


def py_fib(n):
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


def test_fib_values():
    for n in range(15):
        assert evaluate(FIB, ("fib", [n]))[0] == py_fib(n)
    assert evaluate(FIB, "fib(5)")[0] == 5


def test_fib25_call_count():
    v, c = evaluate(FIB, "fib(25)")
    assert v == 75025
    assert c.call == FIB25_CALLS
    assert c.call >= 100000


def test_empty_sum():
    v, _ = eval_expr(parse_expr("sum(s)"), env={"s": VSet()})
    assert v == 0


def test_membership_costs_one_regardless_of_size():
    for size in (1, 10, 1000, 10000):
        _, c = eval_expr(parse_expr("3 in s"), env={"s": VSet(range(size))})
        assert c.total == 1 and c.membership == 1


def test_for_loop_charges_iteration_steps():
    p = parse("set s; def f(x) = 0;")
    st0 = init_state(p, {"s": VSet(range(5)), "z": 0})
    stmts = parse("on add(s, y) { for x in s { z := x; } }").decls[0].body
    from incral.interp import Machine
    m = Machine({}, st0)
    run = m._stmts(stmts, frozenset({"y"}))
    cost = m.run(lambda: run({"y": 0}))
    assert cost.iter_step == 5


@pytest.mark.parametrize("text, exc", [
    ("def f(x) = head(x);", EvalError),
    ("def f(x) = 1 / (x - x);", EvalError),
    ("def f(x) = f(x);", StepLimitExceeded),
])
def test_eval_errors(text, exc):
    arg = NIL if "head" in text else 1
    with pytest.raises(exc):
        evaluate(parse(text), ("f", [arg]), step_limit=10000)


def test_unbound_variable():
    with pytest.raises(UnboundVariable):
        eval_expr(A.Var("nowhere"))


def test_tail_recursion_is_not_bounded_by_python_stack():
    p = parse("def loop(i, acc) = if i == 0 then acc else loop(i - 1, acc + i);")
    assert evaluate(p, ("loop", [100000, 0]))[0] == 100000 * 100001 // 2


def test_lists():
    p = parse("def total(xs) = if empty(xs) then 0 else head(xs) + total(tail(xs));")
    assert evaluate(p, ("total", [LList.of([1, 2, 3])]))[0] == 6
    assert evaluate(p, ("total", [NIL]))[0] == 0


# -- updates ------------------------------------------------------------------

UNION = parse("set s, t; inv u = s union t;")


def test_add_element():
    st0 = init_state(parse("set s;"), {"s": VSet([1])})
    apply_update(st0, op("add", "s"), 2)
    assert st0.value("s") == VSet([1, 2])


def test_strict_change_leaves_state_unchanged():
    st0 = init_state(parse("set s;"), {"s": VSet([1])})
    with pytest.raises(StrictChangeError):
        apply_update(st0, op("add", "s"), 1)
    with pytest.raises(StrictChangeError):
        apply_update(st0, op("del", "s"), 5)
    assert st0.value("s") == VSet([1])


def test_union_absorbs_duplicate_without_event():
    d = setinc.derive(UNION)
    st0 = init_state(d.program, {"s": VSet([1]), "t": VSet([2])})
    assert st0.value("u") == VSet([1, 2])
    apply_update(st0, op("add", "s"), 2, d.program)
    assert st0.value("u") == VSet([1, 2])
    assert st0.trace == [("add", "s", 2)]


def test_update_without_code_does_not_maintain():
    st0 = init_state(UNION, {"s": VSet([1])})
    apply_update(st0, op("add", "s"), 3)
    assert st0.value("u") == VSet([1])
    assert recompute(st0, "u") == VSet([1, 3])


def test_incr_and_cons_updates():
    p = parse("def f(n) = n;")
    st0 = init_state(p, {"n": 3, "xs": NIL})
    apply_update(st0, A.UpdateOp("bump", "n", "incr", (1,)), [])
    apply_update(st0, A.UpdateOp("push", "xs", "cons", ("y",)), [7])
    assert st0.value("n") == 4
    assert st0.value("xs") == LList.of([7])


# -- recompute ------------------------------------------------------------------


def test_recompute_examples():
    p = parse("set s, t, w; inv u = (s union t) inter w;")
    st0 = init_state(p, {"s": VSet([1]), "t": VSet([2]), "w": VSet([2, 3])})
    assert recompute(st0, "u") == VSet([2])
    img = parse("set s; inv u = {x * x : x in s};")
    assert recompute(init_state(img, {"s": VSet([-1, 1])}), "u") == VSet([1])


@pytest.mark.parametrize("text, empty", [
    ("set s, t, w; inv u = (s union t) inter w;", VSet()),
    ("set s; inv u = sum(s);", 0),
    ("set s; inv u = count(s);", 0),
    ("set r, q; inv u = {(x, z) : (x, y) in r, (y, z) in q};", VSet()),
    ("set s; inv u = {x : x in s | x > 1};", VSet()),
])
def test_recompute_over_empty_operands(text, empty):
    assert recompute(init_state(parse(text)), "u") == empty


def test_recompute_cost_grows_with_operands():
    p = parse("set s, t; inv u = s union t;")
    small = recompute_with_cost(init_state(p, {"s": VSet(range(10))}), "u")[1].total
    large = recompute_with_cost(init_state(p, {"s": VSet(range(1000))}), "u")[1].total
    assert large > 50 * small


# -- cost reports ------------------------------------------------------------------


def test_cost_report_serialization():
    c = CostReport(set_add=2, call=3, iter_step=1)
    assert c.total == 6
    assert list(c.as_dict()) == list(COUNTERS) + ["total"]
    assert CostReport.from_text(c.to_text()) == c
    import json
    assert json.loads(c.to_json())["total"] == 6
    assert CostReport.from_dict(json.loads(c.to_json())) == c


@given(st.lists(st.integers(0, 50), max_size=10), st.lists(st.integers(0, 50), max_size=10))
def test_cost_total_is_component_sum(a, b):
    c = CostReport(*a[:10]) if a else CostReport()
    d = c + (CostReport(*b[:10]) if b else CostReport())
    assert d.total == sum(d.as_dict(total=False).values())


def test_counters_only_increase():
    p = parse("set s, t, w; inv u = (s union t) inter w;")
    d = setinc.derive(p)
    st0 = init_state(d.program)
    rng = random.Random(3)
    for _ in range(200):
        name = rng.choice("stw")
        y = rng.randrange(6)
        kind = "del" if y in st0.value(name) else "add"
        _, c = apply_update(st0, op(kind, name), y, d.program)
        assert all(v >= 0 for v in c.as_dict().values())


def _run_stream(seed):
    p = parse("set s, t; inv u = {(x, z) : (x, y) in s, (y, z) in t};")
    d = setinc.derive(p)
    st0 = init_state(d.program)
    rng = random.Random(seed)
    costs = []
    for _ in range(300):
        name = rng.choice("st")
        y = (rng.randrange(3), rng.randrange(3))
        kind = "del" if y in st0.value(name) else "add"
        costs.append(apply_update(st0, op(kind, name), y, d.program)[1].as_dict())
    return st0.snapshot(), costs


def test_determinism():
    assert _run_stream(11) == _run_stream(11)
