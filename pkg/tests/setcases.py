"""Shared set-differencing fixtures: one program per elementary form."""
from incral.corelang import ast as A
from incral.corelang import parse

FORMS = {
    "union": "set s, t; inv u = s union t;",
    "inter": "set s, t; inv u = s inter t;",
    "diff": "set s, t; inv u = s diff t;",
    "filter": "set s; inv u = {x : x in s | x % 2 == 0};",
    "image": "set s; inv u = {x * x : x in s};",
    "join": "set s, t; inv u = {(x, z) : (x, y) in s, (y, z) in t};",
    "sum": "set s; inv u = sum(s);",
    "count": "set s; inv u = count(s);",
}

# elements each form is exercised over
UNIVERSES = {
    "union": (0, 1, 2),
    "inter": (0, 1, 2),
    "diff": (0, 1, 2),
    "filter": (0, 1, 2),
    "image": (-1, 0, 1),
    "join": ((0, 0), (0, 1), (1, 1)),
    "sum": (0, 1, 2),
    "count": (0, 1, 2),
}


def program(form):
    return parse(FORMS[form])


def op(kind, target):
    return A.UpdateOp(f"{kind}_{target}", target, kind, ("y",))
