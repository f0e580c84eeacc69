import random

import pytest
from hypothesis import given, strategies as st

from incral import ruleinc
from incral.corelang import ast as A
from incral.corelang import parse
from incral.corelang.values import VSet
from incral.driver.bench import random_graph
from incral.interp import EvalError, StrictChangeError, apply_update, init_state

TC = "path(x,y) :- edge(x,y). path(x,z) :- edge(x,y), path(y,z)."
SG = ("sg(x,x) :- node(x). sg(x,y) :- par(x,a), sg(a,b), par(y,b).")


def closure(edges):
    """Reachability by repeated squaring on Python sets."""
    reach = set(edges)
    while True:
        more = {(a, d) for (a, b) in reach for (c, d) in reach if b == c} - reach
        if not more:
            return reach
        reach |= more


def both(text):
    naive = ruleinc.compile_fixpoint(text)
    return naive, ruleinc.seminaive(naive)


def test_tc_small():
    naive, semi = both(TC)
    facts = {"edge": {(1, 2), (2, 3)}}
    a, _ = ruleinc.eval_rules(naive, facts)
    b, _ = ruleinc.eval_rules(semi, facts)
    assert a == b == {"path": {(1, 2), (2, 3), (1, 3)}}


def test_no_facts():
    _, semi = both(TC)
    idb, stats = ruleinc.eval_rules(semi, {})
    assert idb == {"path": set()} and stats.facts_derived == 0


def test_self_loop():
    _, semi = both(TC)
    assert (1, 1) in ruleinc.eval_rules(semi, {"edge": {(1, 1)}})[0]["path"]


def test_classification():
    rs = ruleinc.RuleSet.from_program(TC)
    assert rs.idb == ["path"] and rs.edb == ["edge"]
    assert rs.arity == {"edge": 2, "path": 2}


def test_head_constants_seed_facts():
    naive, semi = both("p(1,2). q(x,y) :- p(x,y).")
    assert naive.rules.seed_facts() == {"p": {(1, 2)}}
    assert ruleinc.eval_rules(semi, {})[0]["q"] == {(1, 2)}


def test_empty_rule_set():
    naive, semi = both("")
    assert ruleinc.eval_rules(naive, {})[0] == {}
    assert ruleinc.eval_rules(semi, {})[0] == {}


@pytest.mark.parametrize("text", [
    "p(x,y) :- q(x).",
    "p(x) :- q(x), p(x, x).",
    "p(x) :- a(x), b(x), c(x), d(x).",
    "p(1, x).",
])
def test_rejects_bad_rules(text):
    with pytest.raises(ruleinc.RuleError):
        ruleinc.compile_fixpoint(text)


def test_arity_mismatch():
    _, semi = both(TC)
    with pytest.raises(EvalError):
        ruleinc.eval_rules(semi, {"edge": {(1, 2, 3)}})


def test_naive_text_is_a_loop():
    naive, _ = both(TC)
    text = naive.to_text()
    assert text.startswith("set edge, path;\ninv path_by_1 = {e.1 -> e : e in path};\nrepeat {")
    assert text.rstrip().endswith("} until no fact is added;")


def test_single_nonrecursive_rule():
    naive, semi = both("q(x,z) :- p(x,y), r(y,z).")
    facts = {"p": {(1, 2), (2, 3)}, "r": {(2, 5), (3, 6)}}
    a, sa = ruleinc.eval_rules(naive, facts)
    b, sb = ruleinc.eval_rules(semi, facts)
    assert a == b == {"q": {(1, 5), (2, 6)}}
    assert sb.instantiations <= sa.instantiations


graphs = st.integers(0, 2 ** 31).map(lambda seed: random_graph(
    random.Random(seed).randrange(1, 15), random.Random(seed + 1).randrange(0, 30),
    random.Random(seed + 2)))


@given(graphs)
def test_naive_equals_seminaive_equals_oracle(edges):
    naive, semi = both(TC)
    a, _ = ruleinc.eval_rules(naive, {"edge": edges})
    b, _ = ruleinc.eval_rules(semi, {"edge": edges})
    c, _ = ruleinc.eval_rules(semi, {"edge": edges}, order="lifo")
    assert a == b == c == {"path": closure(edges)}


@given(st.integers(0, 10 ** 6))
def test_same_generation_three_atom_body(seed):
    rng = random.Random(seed)
    nodes = set(range(rng.randrange(1, 10)))
    par = {(rng.randrange(10), rng.randrange(10)) for _ in range(rng.randrange(12))}
    facts = {"node": {(n,) for n in nodes}, "par": par}
    naive, semi = both(SG)
    a, _ = ruleinc.eval_rules(naive, facts)
    b, _ = ruleinc.eval_rules(semi, facts, order="lifo")
    assert a == b


def test_work_saving_on_large_graph():
    naive, semi = both(TC)
    edges = random_graph(50, 200, random.Random(42))
    a, sa = ruleinc.eval_rules(naive, {"edge": edges})
    b, sb = ruleinc.eval_rules(semi, {"edge": edges})
    assert a == b
    assert sa.iterations >= 3
    assert sb.instantiations < sa.instantiations
    assert sb.facts_derived == len(b["path"])


def test_insert_fact_examples():
    _, semi = both(TC)
    st0, _ = ruleinc.evaluate_state(semi, {"edge": {(1, 2), (2, 3)}})
    ruleinc.insert_fact(st0, "edge(3, 1)")
    assert st0.idb()["path"] == {(a, b) for a in (1, 2, 3) for b in (1, 2, 3)}

    empty, _ = ruleinc.evaluate_state(semi, {})
    ruleinc.insert_fact(empty, ("edge", (4, 5)))
    assert empty.idb()["path"] == {(4, 5)}

    st1, _ = ruleinc.evaluate_state(semi, {"edge": {(1, 2), (2, 3)}})
    stats = ruleinc.insert_fact(st1, (1, 3), "edge")[1]
    assert st1.idb()["path"] == {(1, 2), (2, 3), (1, 3)}
    assert stats.facts_derived == 0


def test_insert_fact_strict_and_edb_only():
    _, semi = both(TC)
    st0, _ = ruleinc.evaluate_state(semi, {"edge": {(1, 2)}})
    with pytest.raises(StrictChangeError):
        ruleinc.insert_fact(st0, "edge(1, 2)")
    with pytest.raises(ruleinc.RuleError):
        ruleinc.insert_fact(st0, "path(5, 6)")


@given(st.lists(st.tuples(st.integers(0, 7), st.integers(0, 7)), max_size=25, unique=True))
def test_incremental_equals_from_scratch(inserts):
    naive, semi = both(TC)
    st0, _ = ruleinc.evaluate_state(semi, {})
    for e in inserts:
        ruleinc.insert_fact(st0, ("edge", e))
    assert st0.idb() == ruleinc.eval_rules(naive, {"edge": set(inserts)})[0]


def test_insert_after_naive_evaluation():
    naive, _ = both(TC)
    st0, _ = ruleinc.evaluate_state(naive, {"edge": {(1, 2)}})
    ruleinc.insert_fact(st0, "edge(2, 3)")
    assert st0.idb()["path"] == {(1, 2), (2, 3), (1, 3)}


def test_derived_program_round_trips_and_runs():
    _, semi = both(TC)
    prog = semi.derived_program()
    assert parse(semi.to_text()) == prog
    st0 = init_state(prog)
    op = A.UpdateOp("add_edge", "edge", "add", ("y",))
    edges = random_graph(12, 30, random.Random(3))
    for e in sorted(edges):
        apply_update(st0, op, e, prog)
    assert st0.value("path") == VSet(closure(edges))


def test_stats_json_shape():
    _, semi = both(TC)
    _, stats = ruleinc.eval_rules(semi, {"edge": {(1, 2)}})
    d = stats.as_dict()
    assert {"instantiations", "facts_derived", "iterations"} <= set(d)
    assert semi.as_dict()["schema"] == 1
    assert semi.as_dict()["indexes"] == ["path_by_1", "edge_by_2"]
