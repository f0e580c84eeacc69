"""
Rules as fixpoints, and their semi-naive form
=============================================

Transitive closure written as two rules is compiled to a naive fixpoint
loop, then differenced so each newly derived fact is joined only against
indexed counterparts.
"""

import random

from incral import ruleinc
from incral.driver.bench import random_graph
from incral.driver.programs import load, load_facts

naive = ruleinc.compile_fixpoint(load("tc"))
semi = ruleinc.seminaive(naive)
print(naive.to_text())
print(semi.to_text())

facts = load_facts("tc")
idb, _ = ruleinc.eval_rules(semi, facts)
print(ruleinc.format_idb(idb))

edges = random_graph(50, 200, random.Random(42))
a, sa = ruleinc.eval_rules(naive, {"edge": edges})
b, sb = ruleinc.eval_rules(semi, {"edge": edges})
print("same result:", a == b)
print("instantiations naive", sa.instantiations, "semi-naive", sb.instantiations)

# new facts resume propagation from where evaluation stopped
st, _ = ruleinc.evaluate_state(semi, facts)
ruleinc.insert_fact(st, "edge(3, 1)")
print(ruleinc.format_idb(st.idb()))
