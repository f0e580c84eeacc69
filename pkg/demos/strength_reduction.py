"""
Tabulating polynomials by differencing
======================================

Inside a loop over ``x``, ``r = p(x)`` can be kept up to date with an
addition per step. Updating ``r`` before or after the loop variable
changes the difference.
"""

from incral.funcinc import poly_diff

for mode in ("before", "after"):
    d = poly_diff("x * x", 1, mode)
    print(f"{mode:>6}: {d.text}")

d = poly_diff("x*x*x + x", 2)
print(d.text)
print(d.core_text())

# the maintained value never drifts from direct evaluation
for x, r in d.tabulate(-3, 6):
    print(f"x = {x:>3}  r = {r:>5}  p(x) = {x ** 3 + x:>5}")
