"""
From exponential recursion to a linear loop
===========================================

Fibonacci is incrementalized under its minimal increment ``n += 1``. Reusing
the previous result alone leaves one residual call, so the cache is widened
to the pair (fib(n), fib(n - 1)), and a loop over the increment gives the
iterative program.
"""

from incral.corelang.syntax import print_decl
from incral.driver.programs import load
from incral.funcinc import cache_closure, derive_iterative, detect_increment, incrementalize_p1
from incral.interp import evaluate

p = load("fib")
f = p.functions["fib"]

inc = detect_increment(f)
print("increment:", inc.describe())

fprime, steps = incrementalize_p1(f, inc)
print(steps.to_text())

cached, closure = cache_closure(f, inc)
print(cached.to_text())

it = derive_iterative(cached, inc, p)
for fn in it.functions:
    print(print_decl(fn))

print()
print(f"{'n':>4} {'naive units':>12} {'iterative units':>16}")
prog = it.program()
for n in (10, 15, 20, 25):
    _, naive = evaluate(p, ("fib", [n]))
    v, fast = evaluate(prog, (it.main.name, [n]))
    print(f"{n:>4} {naive.total:>12} {fast.total:>16}   fib = {v}")

# a second recursion needs a deeper cache
h = load("h").functions["h"]
hc, _ = cache_closure(h, detect_increment(h))
print()
print(hc.to_text())
