"""Hypothesis strategies for core-language syntax trees."""
from hypothesis import strategies as st

from incral.corelang import ast as A
from incral.corelang.syntax import KEYWORDS

names = st.from_regex(r"[a-z][a-z0-9_]{0,5}", fullmatch=True).filter(lambda s: s not in KEYWORDS)
ints = st.integers(min_value=-10**12, max_value=10**12)
ARITH = ("+", "-", "*", "/", "%")
CMP = ("==", "!=", "<", "<=", ">", ">=")


def exprs(max_leaves=12):
    leaves = st.one_of(
        ints.map(A.Int),
        st.booleans().map(A.Bool),
        names.map(A.Var),
        st.just(A.Nil()),
    )

    def extend(sub):
        return st.one_of(
            st.tuples(st.sampled_from(ARITH + CMP + ("and", "or")), sub, sub).map(lambda t: A.BinOp(*t)),
            sub.map(A.Not),
            sub.map(A.Neg),
            st.tuples(sub, sub, sub).map(lambda t: A.If(*t)),
            st.lists(sub, min_size=2, max_size=3).map(lambda xs: A.Tuple(tuple(xs))),
            st.tuples(sub, st.integers(1, 4)).map(lambda t: A.Proj(*t)),
            st.tuples(sub, sub).map(lambda t: A.Cons(*t)),
            sub.map(A.Head),
            sub.map(A.Tail),
            sub.map(A.IsEmpty),
            st.lists(sub, max_size=3).map(lambda xs: A.SetLit(tuple(xs))),
            st.tuples(st.sampled_from(("union", "inter", "diff")), sub, sub).map(lambda t: A.SetOp(*t)),
            st.tuples(sub, sub).map(lambda t: A.Member(*t)),
            st.tuples(sub, names, sub, st.none() | sub, st.none() | sub).map(lambda t: A.Comp(*t)),
            st.tuples(sub, names, names, names, sub, sub).map(
                lambda t: A.Join(t[0], (t[1], t[2]), t[4], (t[2], t[3]), t[5])),
            st.tuples(st.sampled_from(("sum", "count")), sub).map(lambda t: A.Agg(*t)),
            st.tuples(sub, sub).map(lambda t: A.MapGet(*t)),
            st.tuples(names, st.lists(sub, max_size=3)).map(lambda t: A.Call(t[0], tuple(t[1]))),
        )

    return st.recursive(leaves, extend, max_leaves=max_leaves)


def stmts(depth=2):
    e = exprs(6)
    simple = st.one_of(
        st.tuples(names, e).map(lambda t: A.AddStmt(*t)),
        st.tuples(names, e).map(lambda t: A.DelStmt(*t)),
        st.tuples(names, e).map(lambda t: A.Assign(*t)),
        st.tuples(names, e, e).map(lambda t: A.MapInc(*t)),
        st.tuples(names, e, e).map(lambda t: A.MapDec(*t)),
    )
    if depth == 0:
        return simple
    inner = st.lists(stmts(depth - 1), max_size=2).map(tuple)
    return st.one_of(
        simple,
        st.tuples(e, inner, inner).map(lambda t: A.IfStmt(*t)),
        st.tuples(names, e, inner).map(lambda t: A.ForStmt(*t)),
    )


terms = st.one_of(names.map(A.Var), st.integers(-50, 50).map(A.Int))
atoms = st.tuples(names, st.lists(terms, min_size=1, max_size=4)).map(lambda t: A.Atom(t[0], tuple(t[1])))

decls = st.one_of(
    st.lists(names, min_size=1, max_size=3).map(lambda xs: A.SetDecl(tuple(xs))),
    st.tuples(names, exprs()).map(lambda t: A.InvDecl(*t)),
    st.tuples(names, st.lists(names, max_size=3), exprs()).map(lambda t: A.FuncDef(t[0], tuple(t[1]), t[2])),
    st.tuples(atoms, st.lists(atoms, max_size=3)).map(lambda t: A.Rule(t[0], tuple(t[1]))),
    st.tuples(names, names, st.sampled_from(("add", "del", "cons")), names).map(
        lambda t: A.UpdateOp(t[0], t[1], t[2], (t[3],))),
    st.tuples(names, names, st.integers(1, 9)).map(lambda t: A.UpdateOp(t[0], t[1], "incr", (t[2],))),
    st.tuples(st.sampled_from(("add", "del")), names, names, st.lists(stmts(), max_size=3)).map(
        lambda t: A.OnBlock(t[0], t[1], t[2], tuple(t[3]))),
)

programs = st.lists(decls, max_size=5).map(lambda ds: A.Program(tuple(ds)))
