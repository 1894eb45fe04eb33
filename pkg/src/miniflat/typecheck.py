"""Static typing and model validation rules.

`type_of` computes the unique type of an expression under an environment
of declared names.  `validate_model` enforces everything the grammar
alone cannot: unique names, bound references, static Boolean guards,
aggregate element types, and the v1 ban on nested comprehensions and
quantifiers.
"""

from __future__ import annotations

from typing import Mapping

from .errors import TypeCheckError, ValidationError
from .printer import print_expr
from .syntax import (
    AGGREGATE_NAMES,
    AGGREGATE_OPS,
    ARITH_OPS,
    BINDING_NODES,
    BOOL,
    COMPARE_OPS,
    INT,
    Aggregate,
    AllDiff,
    BinOp,
    BoolDomainExpr,
    BoolLit,
    Comprehension,
    Expr,
    Generator,
    IntDomainExpr,
    IntLit,
    IntRange,
    MatrixDomainExpr,
    MatrixIndex,
    MatrixLit,
    MatrixType,
    Model,
    Neg,
    Not,
    Quantifier,
    Type,
    VarRef,
    children,
    walk,
)

RESERVED_PREFIX = "__"


def type_of(e: Expr, env: Mapping[str, Type]) -> Type:
    """Type of `e`; raises TypeCheckError (with the node's span) on any
    mismatch or unbound name."""
    t = type(e)
    if t is IntLit:
        return INT
    if t is BoolLit:
        return BOOL
    if t is VarRef:
        ty = env.get(e.name)
        if ty is None:
            raise TypeCheckError(f"unbound name '{e.name}'", e.span)
        return ty
    if t is MatrixIndex:
        base = type_of(e.base, env)
        if not isinstance(base, MatrixType):
            raise TypeCheckError("indexing a non-matrix expression", e.span)
        if base.index_ranges is not None and len(e.indexes) != len(base.index_ranges):
            raise TypeCheckError(
                f"matrix expects {len(base.index_ranges)} indexes, got {len(e.indexes)}",
                e.span,
            )
        for idx in e.indexes:
            _expect(idx, INT, env, "matrix index")
        return base.element
    if t is Neg:
        _expect(e.operand, INT, env, "unary -")
        return INT
    if t is Not:
        _expect(e.operand, BOOL, env, "!")
        return BOOL
    if t is BinOp:
        if e.op in ARITH_OPS:
            _expect(e.lhs, INT, env, e.op)
            _expect(e.rhs, INT, env, e.op)
            return INT
        if e.op in COMPARE_OPS:
            lt = type_of(e.lhs, env)
            rt = type_of(e.rhs, env)
            if e.op in ("=", "!="):
                if lt != rt or isinstance(lt, MatrixType):
                    raise TypeCheckError(
                        f"'{e.op}' needs two ints or two bools, got {lt} and {rt}", e.span
                    )
            else:
                if lt != INT or rt != INT:
                    raise TypeCheckError(f"'{e.op}' compares ints, got {lt} and {rt}", e.span)
            return BOOL
        # logical connectives
        _expect(e.lhs, BOOL, env, e.op)
        _expect(e.rhs, BOOL, env, e.op)
        return BOOL
    if t is MatrixLit:
        if not e.items:
            raise TypeCheckError("cannot type an empty matrix literal", e.span)
        elem = type_of(e.items[0], env)
        if isinstance(elem, MatrixType):
            raise TypeCheckError("matrix literals hold scalars only", e.span)
        for item in e.items[1:]:
            if type_of(item, env) != elem:
                raise TypeCheckError("mixed element types in matrix literal", item.span or e.span)
        return MatrixType(elem, (IntRange(1, len(e.items)),))
    if t is Aggregate:
        op = AGGREGATE_OPS[e.op]
        elem = _matrix_arg_elem_type(e.arg, env, e.op)
        if elem is not None and elem != op.element_type:
            raise TypeCheckError(
                f"{e.op}(..) needs {op.element_type} elements, got {elem}", e.span
            )
        return op.element_type if e.op in ("sum", "product") else BOOL
    if t is AllDiff:
        elem = _matrix_arg_elem_type(e.arg, env, "allDiff")
        if elem is not None and elem != INT:
            raise TypeCheckError(f"allDiff(..) needs int elements, got {elem}", e.span)
        return BOOL
    if t is Comprehension:
        inner = _comprehension_env(e.generators, env)
        for g in e.guards:
            if type_of(g, inner) != BOOL:
                raise TypeCheckError("comprehension guard is not bool", g.span)
        ret = type_of(e.return_expr, inner)
        if isinstance(ret, MatrixType):
            raise TypeCheckError("comprehension items must be scalars", e.span)
        return MatrixType(ret, None)
    if t is Quantifier:
        inner = _comprehension_env(e.binders, env)
        _expect_env(e.body, BOOL, inner, e.kind)
        return BOOL
    raise TypeCheckError(f"cannot type {e!r}", getattr(e, "span", None))


def _expect(e: Expr, want: Type, env: Mapping[str, Type], what: str) -> None:
    got = type_of(e, env)
    if got != want:
        raise TypeCheckError(f"'{what}' expects {want}, got {got}", e.span)


def _expect_env(e: Expr, want: Type, env: Mapping[str, Type], what: str) -> None:
    _expect(e, want, env, what)


def _matrix_arg_elem_type(arg: Expr, env: Mapping[str, Type], what: str):
    """Element type of an aggregate/allDiff argument, or None for an
    empty literal (which every aggregate accepts)."""
    if isinstance(arg, MatrixLit) and not arg.items:
        return None
    ty = type_of(arg, env)
    if not isinstance(ty, MatrixType):
        raise TypeCheckError(f"{what}(..) takes a matrix argument, got {ty}", arg.span)
    return ty.element


def _comprehension_env(gens: tuple[Generator, ...], env: Mapping[str, Type]) -> dict[str, Type]:
    for g in gens:
        _expect(g.domain.lo, INT, env, "domain bound")
        if g.domain.hi is not None:
            _expect(g.domain.hi, INT, env, "domain bound")
    inner = dict(env)
    inner.update({g.name: INT for g in gens})
    return inner


# ---------------------------------------------------------------------------
# Model validation


def model_type_env(m: Model) -> dict[str, Type]:
    env: dict[str, Type] = {}
    for p in m.params:
        env[p.name] = INT
    for l in m.lettings:
        env[l.name] = type_of(l.value, env)
    for v in m.decision_vars:
        env[v.name] = _domain_expr_type(v.domain)
    return env


def _domain_expr_type(d) -> Type:
    if isinstance(d, IntDomainExpr):
        return INT
    if isinstance(d, BoolDomainExpr):
        return BOOL
    if isinstance(d, MatrixDomainExpr):
        elem = INT if isinstance(d.element, IntDomainExpr) else BOOL
        # Extents may still reference parameters, so leave them unknown.
        return MatrixType(elem, None)
    raise TypeCheckError(f"unknown domain {d!r}")


def validate_model(m: Model) -> None:
    seen: dict[str, str] = {}
    for kind, decls in (
        ("given", m.params),
        ("letting", m.lettings),
        ("find", m.decision_vars),
    ):
        for d in decls:
            if d.name.startswith(RESERVED_PREFIX):
                raise ValidationError(
                    f"name '{d.name}' uses the reserved '{RESERVED_PREFIX}' prefix", d.span
                )
            if d.name in AGGREGATE_NAMES:
                raise ValidationError(f"'{d.name}' is an aggregate operator name", d.span)
            if d.name in seen:
                raise ValidationError(
                    f"duplicate name '{d.name}' (already declared as {seen[d.name]})", d.span
                )
            seen[d.name] = kind

    env = model_type_env(m)
    static_names = {p.name for p in m.params} | {l.name for l in m.lettings}

    # Open domains are for parameters only.
    for v in m.decision_vars:
        _require_closed(v.domain, v.name)
    for l in m.lettings:
        _require_static(l.value, static_names, set(), "letting value")

    for c in m.constraints:
        _check_bound(c, env)
        if type_of(c, env) != BOOL:
            raise TypeCheckError("constraint is not bool", c.span)
        _validate_constraint(c, env, static_names)


def _check_bound(e: Expr, env, induction: frozenset[str] = frozenset()) -> None:
    if isinstance(e, VarRef):
        if e.name not in env and e.name not in induction:
            raise ValidationError(f"unbound name '{e.name}'", e.span)
        return
    if isinstance(e, BINDING_NODES):
        gens = e.generators if isinstance(e, Comprehension) else e.binders
        inner = induction | {g.name for g in gens}
        for g in gens:
            _check_bound(g.domain.lo, env, induction)
            if g.domain.hi is not None:
                _check_bound(g.domain.hi, env, induction)
        parts = e.guards + (e.return_expr,) if isinstance(e, Comprehension) else (e.body,)
        for p in parts:
            _check_bound(p, env, inner)
        return
    for c in children(e):
        _check_bound(c, env, induction)


def _require_closed(d, name: str) -> None:
    if isinstance(d, IntDomainExpr):
        if d.hi is None:
            raise ValidationError(f"decision variable '{name}' needs a finite domain", d.span)
    elif isinstance(d, MatrixDomainExpr):
        for i in d.index:
            _require_closed(i, name)
        _require_closed(d.element, name)


def _require_static(e: Expr, static_names: set[str], induction: set[str], what: str) -> None:
    for node in walk(e):
        if isinstance(node, VarRef) and node.name not in static_names and node.name not in induction:
            raise ValidationError(
                f"{what} references '{node.name}', which is not known at compile time",
                node.span,
            )


def _validate_constraint(e: Expr, env, static_names: set[str]) -> None:
    for node in walk(e):
        if isinstance(node, BINDING_NODES):
            _validate_binding_node(node, env, static_names)


def _validate_binding_node(node, env, static_names: set[str]) -> None:
    gens = node.generators if isinstance(node, Comprehension) else node.binders
    names: set[str] = set()
    for g in gens:
        if g.name.startswith(RESERVED_PREFIX):
            raise ValidationError(
                f"induction variable '{g.name}' uses the reserved prefix", g.span
            )
        if g.name in names:
            raise ValidationError(f"duplicate induction variable '{g.name}'", g.span)
        if g.name in env:
            raise ValidationError(
                f"induction variable '{g.name}' shadows a declared name", g.span
            )
        names.add(g.name)
        if g.domain.hi is None:
            raise ValidationError(
                f"induction variable '{g.name}' needs a finite domain", g.span
            )
        _require_static(g.domain.lo, static_names, set(), "domain bound")
        _require_static(g.domain.hi, static_names, set(), "domain bound")

    body_parts: tuple[Expr, ...]
    if isinstance(node, Comprehension):
        for guard in node.guards:
            _require_static(guard, static_names, names, "comprehension guard")
        body_parts = node.guards + (node.return_expr,)
    else:
        body_parts = (node.body,)

    for part in body_parts:
        for sub in walk(part):
            if isinstance(sub, BINDING_NODES):
                raise ValidationError(
                    "nested comprehensions/quantifiers are not supported",
                    sub.span or getattr(node, "span", None),
                )
