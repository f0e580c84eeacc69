"""Core language: abstract syntax, concrete syntax, values and checking."""
from . import ast
from .check import Diagnostic, check
from .names import NameSupply, fresh_names
from .syntax import (
    ParseError,
    parse,
    parse_call,
    parse_expr,
    parse_facts,
    parse_value,
    print_decl,
    print_expr,
    print_facts,
    print_program,
    print_stmt,
)
from .values import NIL, LList, VMap, VSet, format_value

__all__ = [
    "ast", "check", "Diagnostic", "fresh_names", "NameSupply", "ParseError",
    "parse", "parse_call", "parse_expr", "parse_facts", "parse_value",
    "print_decl", "print_expr", "print_facts", "print_program", "print_stmt",
    "NIL", "LList", "VMap", "VSet", "format_value",
]
