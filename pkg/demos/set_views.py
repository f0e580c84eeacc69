"""
Maintaining a set view under element changes
============================================

A view ``u = (s union t) inter w`` is split into elementary invariants,
each kept current by a small guarded rule after every add or delete.
"""

from incral import setinc
from incral.corelang import ast as A, parse
from incral.corelang.values import VSet
from incral.interp import apply_update, init_state, recompute_with_cost

p = parse("set s, t, w; inv u = (s union t) inter w;")
d = setinc.derive(p)
print(d.report_text())

# start from sets of a few thousand elements
base = {n: VSet(range(i, 6000, 2 + i)) for i, n in enumerate("stw")}
st = init_state(d.program, base)
_, scratch = recompute_with_cost(st, p.invariants[0])
print("recomputing u from scratch costs", scratch.total, "units")

add_s = A.UpdateOp("add_s", "s", "add", ("y",))
del_w = A.UpdateOp("del_w", "w", "del", ("y",))
for op, y in ((add_s, 7001), (add_s, 1), (del_w, 4)):
    if (op.kind == "add") == (y in st.value(op.target)):
        continue
    _, cost = apply_update(st, op, y, d.program)
    print(f"{op.kind}({op.target}, {y}): {cost.total} units")

assert st.value("u") == recompute_with_cost(st, p.invariants[0])[0]

# images keep a count per image value, so deleting one of two sources
# of the same square leaves the square in place
img = setinc.derive(parse("set s; inv sq = {x * x : x in s};"))
st = init_state(img.program, {"s": VSet([-2, 2, 3])})
apply_update(st, A.UpdateOp("del_s", "s", "del", ("y",)), 2, img.program)
print("sq =", st.value("sq"))
