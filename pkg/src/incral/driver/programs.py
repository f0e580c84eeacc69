"""Loading programs and deriving everything a program supports."""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from ..corelang import ast as A
from ..corelang.syntax import parse, parse_facts
from ..funcinc import (
    DerivationError,
    IncrementSpec,
    cache_closure,
    derive_iterative,
    detect_increment,
    incrementalize_p1,
)
from .. import ruleinc, setinc

BUNDLED = ("fib", "h", "steps", "sum", "sort", "views", "setops", "image", "join",
           "aggregates", "tc")


def bundled_path(name: str) -> Path:
    """Path of a bundled example; ``name`` may omit the ``.inc`` suffix."""
    if "." not in name:
        name += ".inc"
    return Path(str(resources.files("incral") / "data" / name))


def bundled_text(name: str) -> str:
    return bundled_path(name).read_text(encoding="utf-8")


def _locate(path, suffix: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    name = str(path)
    return bundled_path(name if "." in name else name + suffix)


def load(path) -> A.Program:
    """Parse a program file, or a bundled example by name (``"fib"``)."""
    return parse(_locate(path, ".inc").read_text(encoding="utf-8"))


def load_facts(path) -> dict:
    return parse_facts(_locate(path, ".facts").read_text(encoding="utf-8"))


@dataclass
class FuncBundle:
    """Every derivation available for one function."""

    func: A.FuncDef
    inc: IncrementSpec | None = None
    p1: tuple | None = None  # (f', Derivation)
    cached: tuple | None = None  # (CachedForm, Derivation)
    iterative: object = None
    notes: list = field(default_factory=list)


def derive_function(p: A.Program, name: str, cache_depth: int = 16,
                    iterative: bool = True, strict: bool = False) -> FuncBundle:
    f = p.function(name)
    b = FuncBundle(f)
    change = _user_change(p, f)
    b.inc = IncrementSpec.user(f, p.function(change.kind)) if change else detect_increment(f)
    b.p1 = incrementalize_p1(f, b.inc, program=p)
    if b.inc.kind != "int":
        return b
    try:
        b.cached = cache_closure(f, b.inc, cache_depth, program=p)
        if iterative:
            b.iterative = derive_iterative(b.cached[0], b.inc, p)
    except DerivationError as exc:
        if strict:
            raise
        b.notes.append(str(exc))
    return b


def _user_change(p, f):
    for u in p.updates:
        if u.target in f.params and not u.is_builtin:
            return u
    return None


def derivable_functions(p: A.Program) -> list:
    """Functions whose increment can be determined (or that have a user change)."""
    out = []
    for f in p.of_type(A.FuncDef):
        if _user_change(p, f):
            out.append(f.name)
            continue
        try:
            detect_increment(f)
        except DerivationError:
            continue
        out.append(f.name)
    return out


@dataclass
class Derived:
    """All derivations of a program: sets, rules and functions."""

    source: A.Program
    sets: setinc.SetDerivation | None = None
    naive: ruleinc.FixpointProgram | None = None
    rules: ruleinc.FixpointProgram | None = None
    functions: dict = field(default_factory=dict)


def derive_all(p: A.Program, cache_depth: int = 16) -> Derived:
    d = Derived(p)
    if p.invariants:
        d.sets = setinc.derive(p)
    if p.rules:
        d.naive = ruleinc.compile_fixpoint(ruleinc.RuleSet.from_program(p))
        d.rules = ruleinc.seminaive(d.naive)
    for name in derivable_functions(p):
        d.functions[name] = derive_function(p, name, cache_depth)
    return d
