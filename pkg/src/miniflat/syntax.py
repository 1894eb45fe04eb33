"""Typed abstract syntax for the mini constraint-modelling language.

Expression nodes are immutable dataclasses.  Structural equality and
hashing ignore source spans, so two parses of the same text compare
equal regardless of layout.  `children` / `with_children` give every
node a uniform way to enumerate and rebuild its sub-expressions, which
is what the generic walks (substitution, simplification, the rewrite
cursor) are built on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence, Union

from .errors import InternalError

# ---------------------------------------------------------------------------
# Source positions


@dataclass(frozen=True)
class SourceSpan:
    """Half-open byte span plus human-friendly line/column of its start."""

    file: str
    line: int
    column: int
    start: int = 0
    end: int = 0

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


def _span_field():
    return field(default=None, compare=False, repr=False)


# ---------------------------------------------------------------------------
# Concrete domains and types


@dataclass(frozen=True)
class IntRange:
    """Closed integer interval; lo > hi denotes the empty range."""

    lo: int
    hi: int

    @property
    def is_empty(self) -> bool:
        return self.lo > self.hi

    @property
    def size(self) -> int:
        return 0 if self.is_empty else self.hi - self.lo + 1

    def values(self) -> range:
        return range(self.lo, self.hi + 1)

    def contains(self, v: int) -> bool:
        return self.lo <= v <= self.hi

    def __str__(self) -> str:
        return f"int({self.lo}..{self.hi})"


@dataclass(frozen=True)
class BoolDomain:
    def values(self) -> tuple[bool, bool]:
        return (False, True)

    def __str__(self) -> str:
        return "bool"


BOOL_DOMAIN = BoolDomain()


@dataclass(frozen=True)
class MatrixDomain:
    index_ranges: tuple[IntRange, ...]
    element: Union[IntRange, BoolDomain]


Domain = Union[IntRange, BoolDomain, MatrixDomain]


@dataclass(frozen=True)
class IntType:
    def __str__(self) -> str:
        return "int"


@dataclass(frozen=True)
class BoolType:
    def __str__(self) -> str:
        return "bool"


INT = IntType()
BOOL = BoolType()


@dataclass(frozen=True)
class MatrixType:
    """index_ranges is None when the extent is not statically known
    (e.g. the type of a comprehension before unrolling)."""

    element: Union[IntType, BoolType]
    index_ranges: "tuple[IntRange, ...] | None"

    def __str__(self) -> str:
        return f"matrix of {self.element}"


Type = Union[IntType, BoolType, MatrixType]


def domain_type(d: Domain) -> Type:
    if isinstance(d, IntRange):
        return INT
    if isinstance(d, BoolDomain):
        return BOOL
    if isinstance(d, MatrixDomain):
        elem = INT if isinstance(d.element, IntRange) else BOOL
        return MatrixType(elem, d.index_ranges)
    raise InternalError(f"not a domain: {d!r}")


# ---------------------------------------------------------------------------
# Syntactic domains (bounds are expressions until parameters are bound)


@dataclass(frozen=True)
class IntDomainExpr:
    """`int(lo..hi)`; hi is None for the open form `int(lo..)` which is
    legal only in `given` declarations."""

    lo: "Expr"
    hi: "Expr | None"
    span: "SourceSpan | None" = _span_field()

    def concrete(self) -> IntRange:
        if self.hi is None:
            raise InternalError("open integer domain where a finite one is required")
        if not isinstance(self.lo, IntLit) or not isinstance(self.hi, IntLit):
            raise InternalError("domain bounds not resolved to literals; bind parameters first")
        return IntRange(self.lo.value, self.hi.value)


@dataclass(frozen=True)
class BoolDomainExpr:
    span: "SourceSpan | None" = _span_field()

    def concrete(self) -> BoolDomain:
        return BOOL_DOMAIN


@dataclass(frozen=True)
class MatrixDomainExpr:
    index: tuple[IntDomainExpr, ...]
    element: Union[IntDomainExpr, BoolDomainExpr]
    span: "SourceSpan | None" = _span_field()

    def concrete(self) -> MatrixDomain:
        return MatrixDomain(
            tuple(d.concrete() for d in self.index),
            self.element.concrete(),
        )


DomainExpr = Union[IntDomainExpr, BoolDomainExpr, MatrixDomainExpr]


# ---------------------------------------------------------------------------
# Expressions

ARITH_OPS = ("+", "-", "*", "/", "%", "**")
COMPARE_OPS = ("=", "!=", "<", "<=", ">", ">=")
LOGIC_OPS = ("/\\", "\\/", "->")
BINARY_OPS = ARITH_OPS + COMPARE_OPS + LOGIC_OPS

AGGREGATE_NAMES = ("and", "or", "sum", "product")
QUANTIFIER_KINDS = ("forAll", "exists")


@dataclass(frozen=True)
class IntLit:
    value: int
    span: "SourceSpan | None" = _span_field()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: "SourceSpan | None" = _span_field()


@dataclass(frozen=True)
class VarRef:
    name: str
    span: "SourceSpan | None" = _span_field()


@dataclass(frozen=True)
class MatrixIndex:
    base: "Expr"
    indexes: tuple["Expr", ...]
    span: "SourceSpan | None" = _span_field()


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    span: "SourceSpan | None" = _span_field()


@dataclass(frozen=True)
class Not:
    operand: "Expr"
    span: "SourceSpan | None" = _span_field()


@dataclass(frozen=True)
class BinOp:
    op: str
    lhs: "Expr"
    rhs: "Expr"
    span: "SourceSpan | None" = _span_field()


@dataclass(frozen=True)
class MatrixLit:
    items: tuple["Expr", ...]
    span: "SourceSpan | None" = _span_field()


@dataclass(frozen=True)
class Aggregate:
    """`and([...])`, `or([...])`, `sum([...])`, `product([...])`.
    arg is a MatrixLit, a Comprehension, or a reference to a matrix."""

    op: str
    arg: "Expr"
    span: "SourceSpan | None" = _span_field()


@dataclass(frozen=True)
class AllDiff:
    arg: "Expr"
    span: "SourceSpan | None" = _span_field()


@dataclass(frozen=True)
class Generator:
    """One induction variable and its integer domain."""

    name: str
    domain: IntDomainExpr
    span: "SourceSpan | None" = _span_field()


@dataclass(frozen=True)
class Comprehension:
    return_expr: "Expr"
    generators: tuple[Generator, ...]
    guards: tuple["Expr", ...]
    span: "SourceSpan | None" = _span_field()

    def generator_names(self) -> tuple[str, ...]:
        return tuple(g.name for g in self.generators)


@dataclass(frozen=True)
class Quantifier:
    kind: str  # 'forAll' | 'exists'
    binders: tuple[Generator, ...]
    body: "Expr"
    span: "SourceSpan | None" = _span_field()


Expr = Union[
    IntLit,
    BoolLit,
    VarRef,
    MatrixIndex,
    Neg,
    Not,
    BinOp,
    MatrixLit,
    Aggregate,
    AllDiff,
    Comprehension,
    Quantifier,
]

#: Nodes that introduce locally-bound (induction) names.
BINDING_NODES = (Comprehension, Quantifier)


# ---------------------------------------------------------------------------
# Generic navigation


def children(e: Expr) -> tuple[Expr, ...]:
    """Sub-expressions in left-to-right order; leaves return ()."""
    t = type(e)
    if t in (IntLit, BoolLit, VarRef):
        return ()
    if t is MatrixIndex:
        return (e.base, *e.indexes)
    if t in (Neg, Not):
        return (e.operand,)
    if t is BinOp:
        return (e.lhs, e.rhs)
    if t is MatrixLit:
        return e.items
    if t in (Aggregate, AllDiff):
        return (e.arg,)
    if t is Comprehension:
        out: list[Expr] = []
        for g in e.generators:
            out.append(g.domain.lo)
            if g.domain.hi is not None:
                out.append(g.domain.hi)
        out.extend(e.guards)
        out.append(e.return_expr)
        return tuple(out)
    if t is Quantifier:
        out = []
        for g in e.binders:
            out.append(g.domain.lo)
            if g.domain.hi is not None:
                out.append(g.domain.hi)
        out.append(e.body)
        return tuple(out)
    raise InternalError(f"not an expression: {e!r}")


def _rebuild_generators(gens: tuple[Generator, ...], it: Iterator[Expr]) -> tuple[Generator, ...]:
    out = []
    for g in gens:
        lo = next(it)
        hi = next(it) if g.domain.hi is not None else None
        out.append(Generator(g.name, IntDomainExpr(lo, hi, g.domain.span), g.span))
    return tuple(out)


def with_children(e: Expr, new: Sequence[Expr]) -> Expr:
    """Rebuild `e` with `new` as its children (same order as `children`)."""
    t = type(e)
    old = children(e)
    if len(old) != len(new):
        raise InternalError(f"child count mismatch rebuilding {t.__name__}")
    if all(a is b for a, b in zip(old, new)):
        return e
    if t is MatrixIndex:
        return MatrixIndex(new[0], tuple(new[1:]), e.span)
    if t is Neg:
        return Neg(new[0], e.span)
    if t is Not:
        return Not(new[0], e.span)
    if t is BinOp:
        return BinOp(e.op, new[0], new[1], e.span)
    if t is MatrixLit:
        return MatrixLit(tuple(new), e.span)
    if t is Aggregate:
        return Aggregate(e.op, new[0], e.span)
    if t is AllDiff:
        return AllDiff(new[0], e.span)
    if t is Comprehension:
        it = iter(new)
        gens = _rebuild_generators(e.generators, it)
        guards = tuple(next(it) for _ in e.guards)
        ret = next(it)
        return Comprehension(ret, gens, guards, e.span)
    if t is Quantifier:
        it = iter(new)
        binders = _rebuild_generators(e.binders, it)
        body = next(it)
        return Quantifier(e.kind, binders, body, e.span)
    raise InternalError(f"leaf node {t.__name__} has no children to replace")


def walk(e: Expr) -> Iterator[Expr]:
    """Pre-order traversal of `e` and all its sub-expressions."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def count_nodes(e: Expr) -> int:
    return sum(1 for _ in walk(e))


def free_names(e: Expr) -> frozenset[str]:
    """Names referenced by `e`, excluding induction variables bound inside."""
    if isinstance(e, VarRef):
        return frozenset((e.name,))
    names: set[str] = set()
    for c in children(e):
        names |= free_names(c)
    if isinstance(e, Comprehension):
        bound = set(e.generator_names())
        # Domain bounds are evaluated outside the binding scope, but with
        # shadowing rejected at validation the plain difference is exact.
        names -= bound
    elif isinstance(e, Quantifier):
        names -= {g.name for g in e.binders}
    return frozenset(names)


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace every VarRef whose name is in `mapping`.

    Assumes no shadowing (the validator rejects induction variables that
    reuse an enclosing name), so no capture handling is needed.
    """
    if isinstance(e, VarRef):
        return mapping.get(e.name, e)
    kids = children(e)
    if not kids:
        return e
    return with_children(e, [substitute(c, mapping) for c in kids])


# ---------------------------------------------------------------------------
# Aggregate operators


@dataclass(frozen=True)
class AggregateOp:
    name: str
    identity: Expr
    element_type: Union[IntType, BoolType]


AGG_AND = AggregateOp("and", BoolLit(True), BOOL)
AGG_OR = AggregateOp("or", BoolLit(False), BOOL)
AGG_SUM = AggregateOp("sum", IntLit(0), INT)
AGG_PRODUCT = AggregateOp("product", IntLit(1), INT)

AGGREGATE_OPS: dict[str, AggregateOp] = {
    op.name: op for op in (AGG_AND, AGG_OR, AGG_SUM, AGG_PRODUCT)
}


# ---------------------------------------------------------------------------
# Models


@dataclass(frozen=True)
class ParamDecl:
    name: str
    domain: IntDomainExpr
    span: "SourceSpan | None" = _span_field()


@dataclass(frozen=True)
class LetDecl:
    name: str
    value: Expr
    span: "SourceSpan | None" = _span_field()


@dataclass(frozen=True)
class VarDecl:
    name: str
    domain: DomainExpr
    span: "SourceSpan | None" = _span_field()


@dataclass(frozen=True)
class Model:
    """A parsed model.  Before `bind_params` the domains may reference
    `given` parameters; afterwards every domain is a literal range."""

    params: tuple[ParamDecl, ...]
    lettings: tuple[LetDecl, ...]
    decision_vars: tuple[VarDecl, ...]
    constraints: tuple[Expr, ...]

    @property
    def is_bound(self) -> bool:
        return not self.params

    def decision_domains(self) -> dict[str, Domain]:
        return {v.name: v.domain.concrete() for v in self.decision_vars}

    def decision_types(self) -> dict[str, Type]:
        return {name: domain_type(d) for name, d in self.decision_domains().items()}


@dataclass(frozen=True)
class FlatModel:
    """Compiler output: declarations plus a flat, ordered constraint list
    free of comprehensions and quantifiers."""

    decision_vars: tuple[VarDecl, ...]
    constraints: tuple[Expr, ...]
