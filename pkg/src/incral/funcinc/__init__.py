"""Incrementalization of recursive functions and polynomial differencing."""
from .derive import (
    CachedForm,
    Derivation,
    DerivationError,
    IncrementSpec,
    IterativeForm,
    base_guards,
    cache_closure,
    derive_iterative,
    detect_increment,
    incrementalize_p1,
    report_json,
)
from .polydiff import PolyDiff, poly_diff
from .simplify import simplify

__all__ = [
    "CachedForm", "Derivation", "DerivationError", "IncrementSpec", "IterativeForm",
    "base_guards", "cache_closure", "derive_iterative", "detect_increment",
    "incrementalize_p1", "report_json", "PolyDiff", "poly_diff", "simplify",
]
