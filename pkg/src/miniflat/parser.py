"""Parser for model files and parameter files.

Model files use `given` / `letting` / `find` / `such that` sections;
comments run from `$` to end of line.  Operator precedence, tightest
first: `**`, unary `-`, `* / %`, `+ -`, comparisons, `!`, `/\\`, `\\/`,
`->`.  See docs/language.md for the full grammar.
"""

from __future__ import annotations

import re
from typing import Mapping

from .errors import (
    DomainViolationError,
    MissingParamError,
    ParseError,
    TypeCheckError,
    UnknownParamError,
    ValidationError,
)
from .syntax import (
    AGGREGATE_NAMES,
    Aggregate,
    AllDiff,
    BinOp,
    BoolDomainExpr,
    BoolLit,
    Comprehension,
    DomainExpr,
    Expr,
    Generator,
    IntDomainExpr,
    IntLit,
    LetDecl,
    MatrixDomainExpr,
    MatrixIndex,
    MatrixLit,
    Model,
    Neg,
    Not,
    ParamDecl,
    Quantifier,
    SourceSpan,
    VarDecl,
    VarRef,
    substitute,
)
from .typecheck import validate_model

KEYWORDS = {
    "given",
    "letting",
    "be",
    "find",
    "such",
    "that",
    "matrix",
    "indexed",
    "by",
    "of",
    "int",
    "bool",
    "true",
    "false",
    "forAll",
    "exists",
    "allDiff",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<WS>\s+)
  | (?P<COMMENT>\$[^\n]*)
  | (?P<INT>\d+)
  | (?P<NAME>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<OP>\*\*|\.\.|->|!=|<=|>=|/\\|\\/|[-+*/%=<>!(),:.\[\]|])
    """,
    re.VERBOSE,
)


class _Token:
    __slots__ = ("kind", "text", "span")

    def __init__(self, kind: str, text: str, span: SourceSpan):
        self.kind = kind
        self.text = text
        self.span = span

    def __repr__(self):
        return f"Token({self.kind}, {self.text!r})"


def _tokenize(text: str, filename: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    line = 1
    line_start = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            span = SourceSpan(filename, line, pos - line_start + 1, pos, pos + 1)
            raise ParseError(f"unexpected character {text[pos]!r}", span)
        kind = m.lastgroup
        tok_text = m.group()
        if kind in ("WS", "COMMENT"):
            line += tok_text.count("\n")
            if "\n" in tok_text:
                line_start = pos + tok_text.rindex("\n") + 1
        else:
            span = SourceSpan(filename, line, pos - line_start + 1, pos, m.end())
            if kind == "NAME" and tok_text in KEYWORDS:
                kind = "KW"
            tokens.append(_Token(kind, tok_text, span))
        pos = m.end()
    tokens.append(_Token("EOF", "", SourceSpan(filename, line, pos - line_start + 1, pos, pos)))
    return tokens


class _Parser:
    def __init__(self, text: str, filename: str):
        self.tokens = _tokenize(text, filename)
        self.pos = 0

    # -- token plumbing ----------------------------------------------------

    def peek(self, ahead: int = 0) -> _Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def accept(self, kind: str, text: str | None = None) -> _Token | None:
        if self.at(kind, text):
            return self.next()
        return None

    def expect(self, kind: str, text: str | None = None) -> _Token:
        tok = self.peek()
        if not self.at(kind, text):
            want = text or kind.lower()
            raise ParseError(f"expected {want!r}, found {tok.text or 'end of input'!r}", tok.span)
        return self.next()

    # -- model structure ---------------------------------------------------

    def parse_model(self) -> Model:
        params: list[ParamDecl] = []
        lettings: list[LetDecl] = []
        finds: list[VarDecl] = []
        constraints: list[Expr] = []
        while not self.at("EOF"):
            if self.accept("KW", "given"):
                params.extend(self._given())
            elif self.accept("KW", "letting"):
                lettings.append(self._letting())
            elif self.accept("KW", "find"):
                finds.extend(self._find())
            elif self.at("KW", "such"):
                constraints.extend(self._such_that())
            else:
                tok = self.peek()
                raise ParseError(
                    f"expected 'given', 'letting', 'find' or 'such that', found {tok.text!r}",
                    tok.span,
                )
        return Model(tuple(params), tuple(lettings), tuple(finds), tuple(constraints))

    def _name(self) -> _Token:
        tok = self.peek()
        if tok.kind != "NAME":
            raise ParseError(f"expected a name, found {tok.text or 'end of input'!r}", tok.span)
        return self.next()

    def _name_list(self) -> list[_Token]:
        names = [self._name()]
        while self.accept("OP", ","):
            names.append(self._name())
        return names

    def _given(self) -> list[ParamDecl]:
        names = self._name_list()
        self.expect("OP", ":")
        dom = self._int_domain(allow_open=True)
        return [ParamDecl(t.text, dom, t.span) for t in names]

    def _letting(self) -> LetDecl:
        name = self._name()
        self.expect("KW", "be")
        value = self.parse_expr()
        return LetDecl(name.text, value, name.span)

    def _find(self) -> list[VarDecl]:
        names = self._name_list()
        self.expect("OP", ":")
        dom = self._domain()
        return [VarDecl(t.text, dom, t.span) for t in names]

    def _such_that(self) -> list[Expr]:
        self.expect("KW", "such")
        self.expect("KW", "that")
        constraints = [self.parse_expr()]
        while self.accept("OP", ","):
            constraints.append(self.parse_expr())
        return constraints

    # -- domains -----------------------------------------------------------

    def _domain(self) -> DomainExpr:
        if self.at("KW", "bool"):
            tok = self.next()
            return BoolDomainExpr(tok.span)
        if self.at("KW", "int"):
            return self._int_domain(allow_open=False)
        if self.at("KW", "matrix"):
            tok = self.next()
            self.expect("KW", "indexed")
            self.expect("KW", "by")
            self.expect("OP", "[")
            index = [self._int_domain(allow_open=False)]
            while self.accept("OP", ","):
                index.append(self._int_domain(allow_open=False))
            self.expect("OP", "]")
            self.expect("KW", "of")
            if self.at("KW", "bool"):
                elem: IntDomainExpr | BoolDomainExpr = BoolDomainExpr(self.next().span)
            else:
                elem = self._int_domain(allow_open=False)
            return MatrixDomainExpr(tuple(index), elem, tok.span)
        tok = self.peek()
        raise ParseError(f"expected a domain, found {tok.text!r}", tok.span)

    def _int_domain(self, allow_open: bool) -> IntDomainExpr:
        tok = self.expect("KW", "int")
        self.expect("OP", "(")
        lo = self.parse_expr()
        self.expect("OP", "..")
        if self.at("OP", ")"):
            if not allow_open:
                raise ParseError("open range 'int(lo..)' is only legal for 'given'", tok.span)
            hi: Expr | None = None
        else:
            hi = self.parse_expr()
        self.expect("OP", ")")
        return IntDomainExpr(lo, hi, tok.span)

    # -- expressions (precedence climbing) ----------------------------------

    def parse_expr(self) -> Expr:
        return self._implies()

    def _implies(self) -> Expr:
        lhs = self._or()
        if tok := self.accept("OP", "->"):
            rhs = self._implies()
            return BinOp("->", lhs, rhs, tok.span)
        return lhs

    def _or(self) -> Expr:
        lhs = self._and()
        while tok := self.accept("OP", "\\/"):
            lhs = BinOp("\\/", lhs, self._and(), tok.span)
        return lhs

    def _and(self) -> Expr:
        lhs = self._not()
        while tok := self.accept("OP", "/\\"):
            lhs = BinOp("/\\", lhs, self._not(), tok.span)
        return lhs

    def _not(self) -> Expr:
        if tok := self.accept("OP", "!"):
            return Not(self._not(), tok.span)
        return self._comparison()

    def _comparison(self) -> Expr:
        lhs = self._additive()
        tok = self.peek()
        if tok.kind == "OP" and tok.text in ("=", "!=", "<", "<=", ">", ">="):
            self.next()
            rhs = self._additive()
            return BinOp(tok.text, lhs, rhs, tok.span)
        return lhs

    def _additive(self) -> Expr:
        lhs = self._multiplicative()
        while True:
            tok = self.peek()
            if tok.kind == "OP" and tok.text in ("+", "-"):
                self.next()
                lhs = BinOp(tok.text, lhs, self._multiplicative(), tok.span)
            else:
                return lhs

    def _multiplicative(self) -> Expr:
        lhs = self._unary()
        while True:
            tok = self.peek()
            if tok.kind == "OP" and tok.text in ("*", "/", "%"):
                self.next()
                lhs = BinOp(tok.text, lhs, self._unary(), tok.span)
            else:
                return lhs

    def _unary(self) -> Expr:
        if tok := self.accept("OP", "-"):
            # Fold a directly-following integer token into a negative
            # literal so -3 round-trips; -(...) stays a Neg node and
            # -3**2 stays -(3**2) because ** binds tighter.
            if self.at("INT") and self.peek(1).text != "**":
                lit = self.next()
                return IntLit(-int(lit.text), tok.span)
            return Neg(self._unary(), tok.span)
        return self._power()

    def _power(self) -> Expr:
        base = self._postfix()
        if tok := self.accept("OP", "**"):
            return BinOp("**", base, self._unary(), tok.span)
        return base

    def _postfix(self) -> Expr:
        e = self._atom()
        while tok := self.accept("OP", "["):
            indexes = [self.parse_expr()]
            while self.accept("OP", ","):
                indexes.append(self.parse_expr())
            self.expect("OP", "]")
            e = MatrixIndex(e, tuple(indexes), tok.span)
        return e

    def _atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "INT":
            self.next()
            return IntLit(int(tok.text), tok.span)
        if tok.kind == "KW" and tok.text in ("true", "false"):
            self.next()
            return BoolLit(tok.text == "true", tok.span)
        if tok.kind == "KW" and tok.text in ("forAll", "exists"):
            return self._quantifier()
        if tok.kind == "KW" and tok.text == "allDiff":
            self.next()
            self.expect("OP", "(")
            arg = self.parse_expr()
            self.expect("OP", ")")
            return AllDiff(arg, tok.span)
        if tok.kind == "NAME" and tok.text in AGGREGATE_NAMES and self.peek(1).text == "(":
            self.next()
            self.expect("OP", "(")
            arg = self.parse_expr()
            self.expect("OP", ")")
            return Aggregate(tok.text, arg, tok.span)
        if tok.kind == "NAME":
            self.next()
            if tok.text.startswith("__"):
                raise ParseError(f"names starting with '__' are reserved: {tok.text!r}", tok.span)
            return VarRef(tok.text, tok.span)
        if tok.text == "(":
            self.next()
            e = self.parse_expr()
            self.expect("OP", ")")
            return e
        if tok.text == "[":
            return self._matrix_or_comprehension()
        raise ParseError(f"expected an expression, found {tok.text or 'end of input'!r}", tok.span)

    def _quantifier(self) -> Expr:
        tok = self.next()  # forAll | exists
        binders = self._binder_group()
        while self.accept("OP", ","):
            binders.extend(self._binder_group())
        self.expect("OP", ".")
        body = self.parse_expr()
        return Quantifier(tok.text, tuple(binders), body, tok.span)

    def _binder_group(self) -> list[Generator]:
        names = [self._name()]
        while self.at("OP", ",") and self.peek(1).kind == "NAME" and self.peek(2).text in (",", ":"):
            self.next()
            names.append(self._name())
        self.expect("OP", ":")
        dom = self._int_domain(allow_open=False)
        return [Generator(t.text, dom, t.span) for t in names]

    def _matrix_or_comprehension(self) -> Expr:
        open_tok = self.expect("OP", "[")
        if self.accept("OP", "]"):
            return MatrixLit((), open_tok.span)
        first = self.parse_expr()
        if self.accept("OP", "|"):
            generators: list[Generator] = []
            guards: list[Expr] = []
            while True:
                if self._at_generator():
                    if guards:
                        g = self.peek()
                        raise ParseError("generators must precede guards", g.span)
                    generators.extend(self._binder_group())
                else:
                    guards.append(self.parse_expr())
                if not self.accept("OP", ","):
                    break
            self.expect("OP", "]")
            if not generators:
                raise ParseError("comprehension needs at least one generator", open_tok.span)
            return Comprehension(first, tuple(generators), tuple(guards), open_tok.span)
        items = [first]
        while self.accept("OP", ","):
            items.append(self.parse_expr())
        self.expect("OP", "]")
        return MatrixLit(tuple(items), open_tok.span)

    def _at_generator(self) -> bool:
        """Lookahead for `name (, name)* :` distinguishing a generator
        group from a guard expression."""
        i = 0
        while True:
            if self.peek(i).kind != "NAME":
                return False
            i += 1
            nxt = self.peek(i)
            if nxt.kind == "OP" and nxt.text == ":":
                return True
            if nxt.kind == "OP" and nxt.text == ",":
                i += 1
                continue
            return False


# ---------------------------------------------------------------------------
# Public entry points


def parse_model(text: str, filename: str = "<model>") -> Model:
    """Parse and validate a model file."""
    p = _Parser(text, filename)
    model = p.parse_model()
    validate_model(model)
    return model


def parse_expression(text: str, filename: str = "<expr>") -> Expr:
    """Parse a single expression (no validation); test/debug helper."""
    p = _Parser(text, filename)
    e = p.parse_expr()
    p.expect("EOF")
    return e


def parse_params(text: str, filename: str = "<param>") -> dict[str, int]:
    """Parse a parameter file: a sequence of `letting NAME be INT`."""
    p = _Parser(text, filename)
    bindings: dict[str, int] = {}
    while not p.at("EOF"):
        p.expect("KW", "letting")
        name = p._name()
        p.expect("KW", "be")
        value = p.parse_expr()
        if not isinstance(value, IntLit):
            raise TypeCheckError(
                f"parameter '{name.text}' must be an integer literal", name.span
            )
        if name.text in bindings:
            raise ValidationError(f"parameter '{name.text}' bound twice", name.span)
        bindings[name.text] = value.value
    return bindings


def bind_params(model: Model, bindings: Mapping[str, int]) -> Model:
    """Substitute parameter values and letting definitions, leaving a
    model whose domains are all literal, closed ranges."""
    from .evaluator import eval_static, value_to_expr

    declared = {p.name for p in model.params}
    for name in bindings:
        if name not in declared:
            raise UnknownParamError(f"'{name}' is not declared with 'given'")

    env: dict[str, Expr] = {}
    values: dict[str, object] = {}
    for p in model.params:
        if p.name not in bindings:
            raise MissingParamError(f"missing value for parameter '{p.name}'")
        value = bindings[p.name]
        lo = eval_static(p.domain.lo, values)
        if value < lo:
            raise DomainViolationError(
                f"parameter '{p.name}' = {value} is below its domain (int({lo}..))", p.span
            )
        if p.domain.hi is not None:
            hi = eval_static(p.domain.hi, values)
            if value > hi:
                raise DomainViolationError(
                    f"parameter '{p.name}' = {value} is above its domain", p.span
                )
        env[p.name] = IntLit(value)
        values[p.name] = value

    lettings: list[LetDecl] = []
    for l in model.lettings:
        v = eval_static(substitute(l.value, env), {})
        env[l.name] = value_to_expr(v)
        values[l.name] = v
        lettings.append(LetDecl(l.name, value_to_expr(v), l.span))

    def bind_domain(d: DomainExpr) -> DomainExpr:
        if isinstance(d, IntDomainExpr):
            lo = value_to_expr(eval_static(substitute(d.lo, env), {}))
            hi = None
            if d.hi is not None:
                hi = value_to_expr(eval_static(substitute(d.hi, env), {}))
            return IntDomainExpr(lo, hi, d.span)
        if isinstance(d, BoolDomainExpr):
            return d
        if isinstance(d, MatrixDomainExpr):
            return MatrixDomainExpr(
                tuple(bind_domain(i) for i in d.index),
                bind_domain(d.element),
                d.span,
            )
        raise TypeCheckError(f"unknown domain {d!r}")

    finds = tuple(VarDecl(v.name, bind_domain(v.domain), v.span) for v in model.decision_vars)
    constraints = tuple(_bind_expr(c, env) for c in model.constraints)
    return Model((), tuple(lettings), finds, constraints)


def _bind_expr(e: Expr, env: Mapping[str, Expr]) -> Expr:
    """substitute() plus resolution of generator/binder domain bounds."""
    return substitute(e, env)
