"""Concrete syntax: tokenizer, recursive-descent parser and canonical printer.

The printer emits the minimal parenthesization for the precedence table
below, so ``parse(print(p)) == p`` for every well-formed program.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from . import ast as A
from .values import NIL, LList, VSet

KEYWORDS = frozenset(
    """set inv def update on if then else for in not and or true false nil
    cons head tail empty union inter diff sum count mapinc mapdec add del""".split()
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str  # INT, IDENT, KW, OP, EOF
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9']*)
  | (?P<op>:-|:=|->|==|!=|<=|>=|[<>+\-*/%(){}\[\],;:|.=])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "int":
            tokens.append(Token("INT", value, line, col))
        elif kind == "ident":
            tokens.append(Token("KW" if value in KEYWORDS else "IDENT", value, line, col))
        elif kind == "op":
            tokens.append(Token("OP", value, line, col))
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


_COMPARE = set(A.COMPARE_OPS)


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # -- token helpers --
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("OP", "KW") and t.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return t

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        raise ParseError(message, tok.line, tok.col)

    def ident(self) -> str:
        t = self.tok
        if t.kind == "KW":
            self.error(f"reserved word {t.text!r} cannot be used as an identifier")
        if t.kind != "IDENT":
            self.error(f"expected identifier, found {t.text or 'end of input'!r}")
        self.i += 1
        return t.text

    def integer(self) -> int:
        neg = self.accept("-")
        t = self.tok
        if t.kind != "INT":
            self.error(f"expected integer, found {t.text or 'end of input'!r}")
        self.i += 1
        return -int(t.text) if neg else int(t.text)

    # -- declarations --
    def program(self) -> A.Program:
        decls = []
        while self.tok.kind != "EOF":
            decls.append(self.decl())
        return A.Program(tuple(decls))

    def decl(self) -> A.Decl:
        t = self.tok
        if self.accept("set"):
            names = [self.ident()]
            while self.accept(","):
                names.append(self.ident())
            self.expect(";")
            return A.SetDecl(tuple(names))
        if self.accept("inv"):
            name = self.ident()
            self.expect("=")
            e = self.expr()
            self.expect(";")
            return A.InvDecl(name, e)
        if self.accept("def"):
            name = self.ident()
            self.expect("(")
            params = []
            if not self.at(")"):
                params.append(self.ident())
                while self.accept(","):
                    params.append(self.ident())
            self.expect(")")
            self.expect("=")
            body = self.expr()
            self.expect(";")
            return A.FuncDef(name, tuple(params), body)
        if self.accept("update"):
            name = self.ident()
            self.expect("on")
            target = self.ident()
            self.expect(":")
            if self.tok.kind == "KW" and self.tok.text in ("add", "del", "cons"):
                kind = self.tok.text
                self.i += 1
            else:
                kind = self.ident()
            self.expect("(")
            params = []
            if not self.at(")"):
                params.append(self._update_param())
                while self.accept(","):
                    params.append(self._update_param())
            self.expect(")")
            self.expect(";")
            return A.UpdateOp(name, target, kind, tuple(params))
        if self.accept("on"):
            if not (self.at("add") or self.at("del")):
                self.error("expected 'add' or 'del' after 'on'")
            kind = self.tok.text
            self.i += 1
            self.expect("(")
            target = self.ident()
            self.expect(",")
            param = self.ident()
            self.expect(")")
            return A.OnBlock(kind, target, param, self.block())
        if t.kind == "IDENT":
            return self.rule()
        self.error(f"unexpected {t.text or 'end of input'!r} at start of declaration")

    def _update_param(self):
        if self.tok.kind == "INT" or self.at("-"):
            return self.integer()
        return self.ident()

    def atom(self) -> A.Atom:
        pred = self.ident()
        self.expect("(")
        args = [self._term()]
        while self.accept(","):
            args.append(self._term())
        self.expect(")")
        return A.Atom(pred, tuple(args))

    def _term(self):
        if self.tok.kind == "INT" or self.at("-"):
            return A.Int(self.integer())
        return A.Var(self.ident())

    def rule(self) -> A.Rule:
        head = self.atom()
        body = []
        if self.accept(":-"):
            body.append(self.atom())
            while self.accept(","):
                body.append(self.atom())
        self.expect(".")
        return A.Rule(head, tuple(body))

    # -- statements --
    def block(self) -> tuple:
        self.expect("{")
        stmts = []
        while not self.at("}"):
            stmts.append(self.stmt())
        self.expect("}")
        return tuple(stmts)

    def stmt(self) -> A.Stmt:
        if self.at("add") or self.at("del"):
            kind = self.tok.text
            self.i += 1
            self.expect("(")
            target = self.ident()
            self.expect(",")
            e = self.expr()
            self.expect(")")
            self.expect(";")
            return A.AddStmt(target, e) if kind == "add" else A.DelStmt(target, e)
        if self.at("mapinc") or self.at("mapdec"):
            kind = self.tok.text
            self.i += 1
            self.expect("(")
            m = self.ident()
            self.expect(",")
            k = self.expr()
            self.expect(",")
            v = self.expr()
            self.expect(")")
            self.expect(";")
            return A.MapInc(m, k, v) if kind == "mapinc" else A.MapDec(m, k, v)
        if self.accept("if"):
            cond = self.expr()
            body = self.block()
            orelse = self.block() if self.accept("else") else ()
            return A.IfStmt(cond, body, orelse)
        if self.accept("for"):
            var = self.ident()
            self.expect("in")
            src = self.expr()
            return A.ForStmt(var, src, self.block())
        if self.tok.kind == "IDENT" and self.peek().text == ":=":
            target = self.ident()
            self.expect(":=")
            e = self.expr()
            self.expect(";")
            return A.Assign(target, e)
        self.error(f"unexpected {self.tok.text or 'end of input'!r} at start of statement")

    # -- expressions --
    def expr(self) -> A.Expr:
        if self.accept("if"):
            c = self.expr()
            self.expect("then")
            a = self.expr()
            self.expect("else")
            b = self.expr()
            return A.If(c, a, b)
        return self.or_expr()

    def or_expr(self):
        e = self.and_expr()
        while self.accept("or"):
            e = A.BinOp("or", e, self.and_expr())
        return e

    def and_expr(self):
        e = self.not_expr()
        while self.accept("and"):
            e = A.BinOp("and", e, self.not_expr())
        return e

    def not_expr(self):
        if self.accept("not"):
            return A.Not(self.not_expr())
        return self.cmp_expr()

    def cmp_expr(self):
        e = self.setadd_expr()
        t = self.tok
        if t.kind == "OP" and t.text in _COMPARE:
            self.i += 1
            return A.BinOp(t.text, e, self.setadd_expr())
        if self.accept("in"):
            return A.Member(e, self.setadd_expr())
        return e

    def setadd_expr(self):
        e = self.setmul_expr()
        while self.at("union") or self.at("diff"):
            op = self.tok.text
            self.i += 1
            e = A.SetOp(op, e, self.setmul_expr())
        return e

    def setmul_expr(self):
        e = self.add_expr()
        while self.accept("inter"):
            e = A.SetOp("inter", e, self.add_expr())
        return e

    def add_expr(self):
        e = self.mul_expr()
        while self.at("+") or self.at("-"):
            op = self.tok.text
            self.i += 1
            e = A.BinOp(op, e, self.mul_expr())
        return e

    def mul_expr(self):
        e = self.unary()
        while self.at("*") or self.at("/") or self.at("%"):
            op = self.tok.text
            self.i += 1
            e = A.BinOp(op, e, self.unary())
        return e

    def unary(self):
        if self.at("-"):
            nxt, after = self.peek(1), self.peek(2)
            if nxt.kind == "INT" and not (after.kind == "OP" and after.text in (".", "[")):
                self.i += 2
                return A.Int(-int(nxt.text))
            self.i += 1
            return A.Neg(self.unary())
        return self.postfix()

    def postfix(self):
        e = self.primary()
        while True:
            if self.at(".") and self.peek().kind == "INT":
                self.i += 1
                idx = int(self.tok.text)
                if idx < 1:
                    self.error("tuple components are numbered from 1")
                self.i += 1
                e = A.Proj(e, idx)
            elif self.accept("["):
                k = self.expr()
                self.expect("]")
                e = A.MapGet(e, k)
            else:
                return e

    def primary(self):
        t = self.tok
        if t.kind == "INT":
            self.i += 1
            return A.Int(int(t.text))
        if self.accept("true"):
            return A.Bool(True)
        if self.accept("false"):
            return A.Bool(False)
        if self.accept("nil"):
            return A.Nil()
        if self.at("if"):
            return self.expr()
        if t.kind == "KW" and t.text in ("cons", "head", "tail", "empty", "sum", "count"):
            self.i += 1
            self.expect("(")
            a = self.expr()
            if t.text == "cons":
                self.expect(",")
                b = self.expr()
                self.expect(")")
                return A.Cons(a, b)
            self.expect(")")
            return {
                "head": A.Head,
                "tail": A.Tail,
                "empty": A.IsEmpty,
            }.get(t.text, lambda x: A.Agg(t.text, x))(a)
        if t.kind == "IDENT":
            self.i += 1
            if self.accept("("):
                args = []
                if not self.at(")"):
                    args.append(self.expr())
                    while self.accept(","):
                        args.append(self.expr())
                self.expect(")")
                return A.Call(t.text, tuple(args))
            return A.Var(t.text)
        if self.accept("("):
            first = self.expr()
            if self.accept(")"):
                return first
            items = [first]
            while self.accept(","):
                items.append(self.expr())
            self.expect(")")
            return A.Tuple(tuple(items))
        if self.at("{"):
            return self.braces()
        if t.kind == "KW":
            self.error(f"reserved word {t.text!r} cannot be used as an identifier")
        self.error(f"unexpected {t.text or 'end of input'!r} in expression")

    def braces(self):
        self.expect("{")
        if self.accept("}"):
            return A.SetLit(())
        first = self.expr()
        key = None
        if self.accept("->"):
            key, first = first, self.expr()
            self.expect(":")
            return self._generators(first, key)
        if self.accept(":"):
            return self._generators(first, None)
        items = [first]
        while self.accept(","):
            items.append(self.expr())
        self.expect("}")
        return A.SetLit(tuple(items))

    def _pattern(self) -> tuple:
        self.expect("(")
        names = [self.ident()]
        while self.accept(","):
            names.append(self.ident())
        self.expect(")")
        return tuple(names)

    def _generators(self, image, key):
        if self.at("("):
            lv = self._pattern()
            self.expect("in")
            left = self.setadd_expr()
            self.expect(",")
            rv = self._pattern()
            self.expect("in")
            right = self.setadd_expr()
            self.expect("}")
            return A.Join(image, lv, left, rv, right, key)
        var = self.ident()
        self.expect("in")
        source = self.setadd_expr()
        cond = self.expr() if self.accept("|") else None
        self.expect("}")
        return A.Comp(image, var, source, cond, key)


def parse(text: str) -> A.Program:
    return Parser(text).program()


def parse_expr(text: str) -> A.Expr:
    p = Parser(text)
    e = p.expr()
    if p.tok.kind != "EOF":
        p.error(f"unexpected {p.tok.text!r} after expression")
    return e


# -- values and facts -------------------------------------------------------


def parse_value(text: str):
    """Parse a literal value: ints, true/false, tuples, ``[..]`` lists, ``{..}`` sets."""
    p = Parser(text)
    v = _value(p)
    if p.tok.kind != "EOF":
        p.error(f"unexpected {p.tok.text!r} after value")
    return v


def _value(p: Parser):
    t = p.tok
    if t.kind == "INT" or p.at("-"):
        return p.integer()
    if p.accept("true"):
        return True
    if p.accept("false"):
        return False
    if p.accept("nil"):
        return NIL
    for open_, close in (("(", ")"), ("[", "]"), ("{", "}")):
        if p.accept(open_):
            items = []
            if not p.at(close):
                items.append(_value(p))
                while p.accept(","):
                    items.append(_value(p))
            p.expect(close)
            if open_ == "(":
                return items[0] if len(items) == 1 else tuple(items)
            return LList.of(items) if open_ == "[" else VSet(items)
    p.error(f"unexpected {t.text or 'end of input'!r} in value")


def parse_call(text: str) -> tuple:
    """Parse an entry call ``name(v1, ..., vk)`` into ``(name, [values])``."""
    p = Parser(text)
    name = p.ident()
    p.expect("(")
    args = []
    if not p.at(")"):
        args.append(_value(p))
        while p.accept(","):
            args.append(_value(p))
    p.expect(")")
    if p.tok.kind != "EOF":
        p.error(f"unexpected {p.tok.text!r} after call")
    return name, args


def parse_facts(text: str) -> dict:
    """Parse ``pred(c1, ..., ck).`` lines into ``{pred: VSet of tuples}``."""
    p = Parser(text)
    facts = {}
    while p.tok.kind != "EOF":
        start = p.tok
        a = p.atom()
        p.expect(".")
        if not all(isinstance(x, A.Int) for x in a.args):
            p.error("facts may only contain integer constants", start)
        facts.setdefault(a.pred, VSet()).add(tuple(x.value for x in a.args))
    return facts


def print_facts(facts: dict) -> str:
    from .values import sort_key

    lines = []
    for pred in sorted(facts):
        for tup in sorted(facts[pred], key=sort_key):
            lines.append(f"{pred}({', '.join(str(c) for c in tup)}).")
    return "\n".join(lines) + ("\n" if lines else "")


# -- printer ----------------------------------------------------------------

_PREC = {
    "or": 2, "and": 3,
    "==": 5, "!=": 5, "<": 5, "<=": 5, ">": 5, ">=": 5,
    "union": 6, "diff": 6, "inter": 7,
    "+": 8, "-": 8, "*": 9, "/": 9, "%": 9,
}
_ATOM = 12


def _prec(e: A.Expr) -> int:
    if isinstance(e, A.If):
        return 1
    if isinstance(e, (A.BinOp, A.SetOp)):
        return _PREC[e.op]
    if isinstance(e, A.Not):
        return 4
    if isinstance(e, A.Member):
        return 5
    if isinstance(e, A.Neg):
        return 10
    if isinstance(e, A.Int) and e.value < 0:
        return 10
    if isinstance(e, (A.Proj, A.MapGet)):
        return 11
    return _ATOM


def print_expr(e: A.Expr, need: int = 0) -> str:
    s = _expr(e)
    return f"({s})" if _prec(e) < need else s


def _expr(e: A.Expr) -> str:
    if isinstance(e, A.Int):
        return str(e.value)
    if isinstance(e, A.Bool):
        return "true" if e.value else "false"
    if isinstance(e, A.Var):
        return e.name
    if isinstance(e, A.Nil):
        return "nil"
    if isinstance(e, (A.BinOp, A.SetOp)):
        p = _PREC[e.op]
        if p == 5:
            return f"{print_expr(e.left, p + 1)} {e.op} {print_expr(e.right, p + 1)}"
        return f"{print_expr(e.left, p)} {e.op} {print_expr(e.right, p + 1)}"
    if isinstance(e, A.Member):
        return f"{print_expr(e.elem, 6)} in {print_expr(e.container, 6)}"
    if isinstance(e, A.Not):
        return f"not {print_expr(e.operand, 11)}"
    if isinstance(e, A.Neg):
        inner = e.operand
        if isinstance(inner, A.Int) or (isinstance(inner, A.Proj | A.MapGet) and _leads_with_int(inner)):
            return f"-({_expr(inner)})"
        return f"-{print_expr(inner, 10)}"
    if isinstance(e, A.If):
        return f"if {print_expr(e.cond)} then {print_expr(e.then)} else {print_expr(e.orelse)}"
    if isinstance(e, A.Tuple):
        if len(e.items) == 1:
            raise ValueError("1-tuples have no concrete syntax")
        return "(" + ", ".join(print_expr(x) for x in e.items) + ")"
    if isinstance(e, A.Proj):
        return f"{print_expr(e.expr, 11)}.{e.index}"
    if isinstance(e, A.MapGet):
        return f"{print_expr(e.map, 11)}[{print_expr(e.key)}]"
    if isinstance(e, A.Cons):
        return f"cons({print_expr(e.head)}, {print_expr(e.tail)})"
    if isinstance(e, A.Head):
        return f"head({print_expr(e.expr)})"
    if isinstance(e, A.Tail):
        return f"tail({print_expr(e.expr)})"
    if isinstance(e, A.IsEmpty):
        return f"empty({print_expr(e.expr)})"
    if isinstance(e, A.SetLit):
        return "{" + ", ".join(print_expr(x) for x in e.items) + "}"
    if isinstance(e, A.Agg):
        return f"{e.kind}({print_expr(e.expr)})"
    if isinstance(e, A.Call):
        return f"{e.name}(" + ", ".join(print_expr(a) for a in e.args) + ")"
    if isinstance(e, A.Comp):
        head = _comp_head(e.key, e.image)
        s = f"{{{head} : {e.var} in {print_expr(e.source, 6)}"
        if e.cond is not None:
            s += f" | {print_expr(e.cond)}"
        return s + "}"
    if isinstance(e, A.Join):
        head = _comp_head(e.key, e.image)
        return (
            f"{{{head} : ({', '.join(e.left_vars)}) in {print_expr(e.left, 6)}, "
            f"({', '.join(e.right_vars)}) in {print_expr(e.right, 6)}}}"
        )
    raise TypeError(f"cannot print {e!r}")


def _leads_with_int(e) -> bool:
    while isinstance(e, (A.Proj, A.MapGet)):
        e = e.expr if isinstance(e, A.Proj) else e.map
    return isinstance(e, A.Int)


def _comp_head(key, image) -> str:
    # An image starting with "{" would be fine, but "->"/":" inside keys need parens.
    if key is None:
        return print_expr(image, 2)
    return f"{print_expr(key, 2)} -> {print_expr(image, 2)}"


def print_stmt(s: A.Stmt, indent: int = 0) -> list:
    pad = "  " * indent
    if isinstance(s, A.AddStmt):
        return [f"{pad}add({s.target}, {print_expr(s.elem)});"]
    if isinstance(s, A.DelStmt):
        return [f"{pad}del({s.target}, {print_expr(s.elem)});"]
    if isinstance(s, A.Assign):
        return [f"{pad}{s.target} := {print_expr(s.value)};"]
    if isinstance(s, A.MapInc):
        return [f"{pad}mapinc({s.map}, {print_expr(s.key)}, {print_expr(s.value)});"]
    if isinstance(s, A.MapDec):
        return [f"{pad}mapdec({s.map}, {print_expr(s.key)}, {print_expr(s.value)});"]
    if isinstance(s, A.IfStmt):
        lines = [f"{pad}if {print_expr(s.cond)} {{"]
        for x in s.body:
            lines += print_stmt(x, indent + 1)
        if s.orelse:
            lines.append(f"{pad}}} else {{")
            for x in s.orelse:
                lines += print_stmt(x, indent + 1)
        lines.append(f"{pad}}}")
        return lines
    if isinstance(s, A.ForStmt):
        lines = [f"{pad}for {s.var} in {print_expr(s.source)} {{"]
        for x in s.body:
            lines += print_stmt(x, indent + 1)
        lines.append(f"{pad}}}")
        return lines
    raise TypeError(f"cannot print {s!r}")


def _term(t) -> str:
    return str(t.value) if isinstance(t, A.Int) else t.name


def print_atom(a: A.Atom) -> str:
    return f"{a.pred}({', '.join(_term(x) for x in a.args)})"


def print_decl(d: A.Decl) -> str:
    if isinstance(d, A.SetDecl):
        return f"set {', '.join(d.names)};"
    if isinstance(d, A.InvDecl):
        return f"inv {d.name} = {print_expr(d.expr)};"
    if isinstance(d, A.FuncDef):
        return f"def {d.name}({', '.join(d.params)}) = {print_expr(d.body)};"
    if isinstance(d, A.Rule):
        if d.is_fact:
            return print_atom(d.head) + "."
        return f"{print_atom(d.head)} :- {', '.join(print_atom(a) for a in d.body)}."
    if isinstance(d, A.UpdateOp):
        return f"update {d.name} on {d.target}: {d.kind}({', '.join(str(x) for x in d.params)});"
    if isinstance(d, A.OnBlock):
        lines = [f"on {d.kind}({d.target}, {d.param}) {{"]
        for s in d.body:
            lines += print_stmt(s, 1)
        lines.append("}")
        return "\n".join(lines)
    raise TypeError(f"cannot print {d!r}")


def print_program(p: A.Program) -> str:
    if not p.decls:
        return ""
    return "\n".join(print_decl(d) for d in p.decls) + "\n"
