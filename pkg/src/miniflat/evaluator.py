"""Static evaluation and the shared partial evaluator.

Both unrolling pipelines use this one simplifier, so their outputs can
be compared byte-for-byte.  The rewrite rule set is deliberately frozen
(documented in docs/language.md); adding rules here would change what
counts as an "identity" item during expansion.

Integer semantics: checked 64-bit.  `/` and `%` are floor division
(results follow the divisor's sign, like Python).  Any result outside
[-2**63, 2**63 - 1] raises OverflowLimitError rather than wrapping.

The Boolean connectives evaluate left to right and short-circuit, in
both `eval_static` and `simplify`: `false /\\ x`, `true \\/ x` and
`false -> x` decide without looking at `x`, even if `x` would fail.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from .errors import (
    DivByZeroError,
    EvalError,
    IndexRangeError,
    InternalError,
    OverflowLimitError,
    UnboundNameError,
)
from .syntax import (
    AGGREGATE_OPS,
    Aggregate,
    AggregateOp,
    AllDiff,
    BinOp,
    BoolLit,
    Comprehension,
    Domain,
    Expr,
    IntLit,
    IntRange,
    MatrixDomain,
    MatrixIndex,
    MatrixLit,
    Neg,
    Not,
    Quantifier,
    VarRef,
    children,
    free_names,
    with_children,
)

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1

TRUE = BoolLit(True)
FALSE = BoolLit(False)
ZERO = IntLit(0)
ONE = IntLit(1)


@dataclass(frozen=True)
class MatrixVal:
    """A fully evaluated matrix; `values` nests one tuple per dimension."""

    values: tuple
    index_ranges: tuple[IntRange, ...]


Value = Union[int, bool, MatrixVal]


def value_to_expr(v: Value) -> Expr:
    if isinstance(v, bool):
        return TRUE if v else FALSE
    if isinstance(v, int):
        return IntLit(v)
    raise InternalError(f"no literal form for {v!r}")


def expr_to_value(e: Expr) -> "Value | None":
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, BoolLit):
        return e.value
    return None


# ---------------------------------------------------------------------------
# Checked 64-bit arithmetic


def _checked(v: int, span) -> int:
    if v < INT_MIN or v > INT_MAX:
        raise OverflowLimitError("integer result outside the 64-bit range", span)
    return v


def checked_arith(op: str, a: int, b: int, span=None) -> int:
    if op == "+":
        return _checked(a + b, span)
    if op == "-":
        return _checked(a - b, span)
    if op == "*":
        return _checked(a * b, span)
    if op == "/":
        if b == 0:
            raise DivByZeroError("division by zero", span)
        return _checked(a // b, span)
    if op == "%":
        if b == 0:
            raise DivByZeroError("modulo by zero", span)
        return _checked(a % b, span)
    if op == "**":
        return checked_pow(a, b, span)
    raise InternalError(f"not an arithmetic operator: {op}")


def checked_pow(base: int, exp: int, span=None) -> int:
    if exp < 0:
        raise EvalError("negative exponent", span)
    if base in (0, 1) or exp == 0:
        return 1 if exp == 0 else base
    if base == -1:
        return -1 if exp % 2 else 1
    # |base| >= 2: 2**63 already overflows, so the exponent is small.
    if exp > 63:
        raise OverflowLimitError("integer result outside the 64-bit range", span)
    return _checked(base**exp, span)


# ---------------------------------------------------------------------------
# Strict-ish evaluation of ground expressions


def eval_static(e: Expr, env: Mapping[str, Value]) -> Value:
    """Evaluate `e` with every free name bound in `env`."""
    t = type(e)
    if t is IntLit:
        return e.value
    if t is BoolLit:
        return e.value
    if t is VarRef:
        try:
            return env[e.name]
        except KeyError:
            raise UnboundNameError(f"unbound name '{e.name}'", e.span) from None
    if t is BinOp:
        op = e.op
        if op == "/\\":
            return eval_static(e.lhs, env) and eval_static(e.rhs, env)
        if op == "\\/":
            return eval_static(e.lhs, env) or eval_static(e.rhs, env)
        if op == "->":
            return (not eval_static(e.lhs, env)) or eval_static(e.rhs, env)
        a = eval_static(e.lhs, env)
        b = eval_static(e.rhs, env)
        if op == "=":
            return a == b
        if op == "!=":
            return a != b
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        if op == ">=":
            return a >= b
        return checked_arith(op, a, b, e.span)
    if t is Neg:
        return _checked(-eval_static(e.operand, env), e.span)
    if t is Not:
        return not eval_static(e.operand, env)
    if t is MatrixIndex:
        base = eval_static(e.base, env)
        if not isinstance(base, MatrixVal):
            raise EvalError("indexing a non-matrix value", e.span)
        vals = base.values
        for rng, idx_expr in zip(base.index_ranges, e.indexes):
            idx = eval_static(idx_expr, env)
            if not rng.contains(idx):
                raise IndexRangeError(
                    f"index {idx} outside int({rng.lo}..{rng.hi})", idx_expr.span or e.span
                )
            vals = vals[idx - rng.lo]
        return vals
    if t is MatrixLit:
        return MatrixVal(
            tuple(eval_static(i, env) for i in e.items),
            (IntRange(1, len(e.items)),),
        )
    if t is Aggregate:
        op = AGGREGATE_OPS[e.op]
        items = _matrix_arg_values(e.arg, env)
        return _fold_aggregate(op, items, e.span)
    if t is AllDiff:
        items = _matrix_arg_values(e.arg, env)
        return len(set(items)) == len(items)
    if t is Comprehension:
        items = tuple(_comprehension_values(e, env))
        return MatrixVal(items, (IntRange(1, len(items)),))
    if t is Quantifier:
        values = _quantifier_values(e, env)
        return all(values) if e.kind == "forAll" else any(values)
    raise InternalError(f"cannot evaluate {e!r}")


def _matrix_arg_values(arg: Expr, env) -> tuple:
    if isinstance(arg, Comprehension):
        return tuple(_comprehension_values(arg, env))
    v = eval_static(arg, env)
    if not isinstance(v, MatrixVal):
        raise EvalError("aggregate argument is not a matrix", arg.span)
    if len(v.index_ranges) != 1:
        raise EvalError("aggregate argument must be one-dimensional", arg.span)
    return v.values


def _fold_aggregate(op: AggregateOp, items: Sequence[Value], span) -> Value:
    if op.name == "and":
        return all(items)
    if op.name == "or":
        return any(items)
    if op.name == "sum":
        acc = 0
        for v in items:
            acc = checked_arith("+", acc, v, span)
        return acc
    acc = 1
    for v in items:
        acc = checked_arith("*", acc, v, span)
    return acc


def _generator_ranges(gens, env) -> list[tuple[str, range]]:
    out = []
    for g in gens:
        lo = eval_static(g.domain.lo, env)
        hi = eval_static(g.domain.hi, env) if g.domain.hi is not None else None
        if hi is None:
            raise EvalError(f"open domain for '{g.name}'", g.span)
        out.append((g.name, range(lo, hi + 1)))
    return out


def _comprehension_values(c: Comprehension, env):
    scope = dict(env)
    items = []
    _comp_rec(c, _generator_ranges(c.generators, env), 0, scope, items)
    return items


def _comp_rec(c, ranges, depth, scope, items):
    if depth == len(ranges):
        if all(eval_static(g, scope) for g in c.guards):
            items.append(eval_static(c.return_expr, scope))
        return
    name, rng = ranges[depth]
    for v in rng:
        scope[name] = v
        _comp_rec(c, ranges, depth + 1, scope, items)
    del scope[name]


def _quantifier_values(q: Quantifier, env) -> list:
    scope = dict(env)
    out: list = []

    def rec(depth, ranges):
        if depth == len(ranges):
            out.append(eval_static(q.body, scope))
            return
        name, rng = ranges[depth]
        for v in rng:
            scope[name] = v
            rec(depth + 1, ranges)
        del scope[name]

    rec(0, _generator_ranges(q.binders, env))
    return out


# ---------------------------------------------------------------------------
# The shared simplifier


def simplify(e: Expr, env: Mapping[str, Value]) -> Expr:
    """Substitute `env`, fold every maximal ground subexpression, and
    apply the frozen rewrite rules bottom-up.

    Rules (exactly these, nothing more):
      true /\\ x -> x        x /\\ true -> x
      false /\\ x -> false   x /\\ false -> false
      true \\/ x -> true     x \\/ true -> true
      false \\/ x -> x       x \\/ false -> x
      false -> x -> true     true -> x -> x      x -> true -> true
      !true -> false         !false -> true
      0 + x -> x             x - 0 -> x
      0 * x -> 0             1 * x -> x          x**1 -> x
    """
    t = type(e)
    if t is IntLit or t is BoolLit:
        return e
    if t is VarRef:
        v = env.get(e.name)
        if v is None or isinstance(v, MatrixVal):
            return e
        return value_to_expr(v)
    if t is BinOp:
        return _simplify_binop(e, env)
    if t is Not:
        operand = simplify(e.operand, env)
        if operand is TRUE or operand == TRUE:
            return FALSE
        if operand == FALSE:
            return TRUE
        return Not(operand, e.span)
    if t is Neg:
        operand = simplify(e.operand, env)
        if isinstance(operand, IntLit):
            return IntLit(_checked(-operand.value, e.span))
        return Neg(operand, e.span)
    if t is MatrixIndex:
        base = simplify(e.base, env)
        indexes = tuple(simplify(i, env) for i in e.indexes)
        if isinstance(base, VarRef) and isinstance(env.get(base.name), MatrixVal):
            if all(isinstance(i, IntLit) for i in indexes):
                return value_to_expr(eval_static(MatrixIndex(base, indexes, e.span), env))
        return MatrixIndex(base, indexes, e.span)
    if t in (Comprehension, Quantifier):
        if not (free_names(e) - env.keys()):
            return value_to_expr(eval_static(e, env))
        return with_children(e, [simplify(c, env) for c in children(e)])
    if t is MatrixLit:
        return MatrixLit(tuple(simplify(i, env) for i in e.items), e.span)
    if t in (Aggregate, AllDiff):
        arg = simplify(e.arg, env)
        node = with_children(e, [arg])
        if _is_ground_matrix_arg(arg, env):
            return value_to_expr(eval_static(node, env))
        return node
    raise InternalError(f"cannot simplify {e!r}")


def _is_ground_matrix_arg(arg: Expr, env) -> bool:
    if isinstance(arg, MatrixLit):
        return all(isinstance(i, (IntLit, BoolLit)) for i in arg.items)
    if isinstance(arg, (Comprehension, Quantifier)):
        return not (free_names(arg) - env.keys())
    if isinstance(arg, VarRef):
        return isinstance(env.get(arg.name), MatrixVal)
    return False


def _simplify_binop(e: BinOp, env) -> Expr:
    op = e.op
    if op == "/\\":
        lhs = simplify(e.lhs, env)
        if isinstance(lhs, BoolLit):
            return simplify(e.rhs, env) if lhs.value else FALSE
        rhs = simplify(e.rhs, env)
        if isinstance(rhs, BoolLit):
            return lhs if rhs.value else FALSE
        return BinOp(op, lhs, rhs, e.span)
    if op == "\\/":
        lhs = simplify(e.lhs, env)
        if isinstance(lhs, BoolLit):
            return TRUE if lhs.value else simplify(e.rhs, env)
        rhs = simplify(e.rhs, env)
        if isinstance(rhs, BoolLit):
            return TRUE if rhs.value else lhs
        return BinOp(op, lhs, rhs, e.span)
    if op == "->":
        lhs = simplify(e.lhs, env)
        if isinstance(lhs, BoolLit):
            return simplify(e.rhs, env) if lhs.value else TRUE
        rhs = simplify(e.rhs, env)
        if isinstance(rhs, BoolLit) and rhs.value:
            return TRUE
        return BinOp(op, lhs, rhs, e.span)

    lhs = simplify(e.lhs, env)
    rhs = simplify(e.rhs, env)
    lv = expr_to_value(lhs)
    rv = expr_to_value(rhs)
    if lv is not None and rv is not None:
        if op in ("=", "!=", "<", "<=", ">", ">="):
            return TRUE if _compare(op, lv, rv) else FALSE
        return IntLit(checked_arith(op, lv, rv, e.span))
    if op == "+" and lv == 0 and not isinstance(lv, bool):
        return rhs
    if op == "-" and rv == 0 and not isinstance(rv, bool):
        return lhs
    if op == "*" and lv == 0 and not isinstance(lv, bool):
        return ZERO
    if op == "*" and lv == 1:
        return rhs
    if op == "**" and rv == 1:
        return lhs
    return BinOp(op, lhs, rhs, e.span)


def _compare(op: str, a, b) -> bool:
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


# ---------------------------------------------------------------------------
# Aggregate assembly


def assemble_aggregate(op: AggregateOp, items: Sequence[Expr]) -> Expr:
    """Combine expanded items under `op`: identity items are dropped, an
    empty list collapses to the identity literal, and a singleton under
    and/or is returned bare."""
    kept = [i for i in items if i != op.identity]
    if not kept:
        return op.identity
    if len(kept) == 1 and op.name in ("and", "or"):
        return kept[0]
    return Aggregate(op.name, MatrixLit(tuple(kept)))


# ---------------------------------------------------------------------------
# Interval analysis (used for dummy-variable domains and for proving
# vectorized evaluation safe)


def int_interval(e: Expr, domains: Mapping[str, Domain]) -> tuple[int, int]:
    """Sound bounds on the value of an integer expression, given the
    declared domains of every variable it references.  Bounds are exact
    Python ints (no 64-bit clamp); callers decide what to do with wide
    results."""
    t = type(e)
    if t is IntLit:
        return e.value, e.value
    if t is VarRef:
        d = domains.get(e.name)
        if not isinstance(d, IntRange):
            raise InternalError(f"no integer domain for '{e.name}'")
        return d.lo, d.hi
    if t is MatrixIndex:
        if not isinstance(e.base, VarRef):
            raise InternalError("matrix index with a non-name base")
        d = domains.get(e.base.name)
        if not isinstance(d, MatrixDomain) or not isinstance(d.element, IntRange):
            raise InternalError(f"no integer matrix domain for '{e.base.name}'")
        return d.element.lo, d.element.hi
    if t is Neg:
        lo, hi = int_interval(e.operand, domains)
        return -hi, -lo
    if t is BinOp:
        a_lo, a_hi = int_interval(e.lhs, domains)
        b_lo, b_hi = int_interval(e.rhs, domains)
        op = e.op
        if op == "+":
            return a_lo + b_lo, a_hi + b_hi
        if op == "-":
            return a_lo - b_hi, a_hi - b_lo
        if op == "*":
            corners = (a_lo * b_lo, a_lo * b_hi, a_hi * b_lo, a_hi * b_hi)
            return min(corners), max(corners)
        if op == "/":
            return _div_interval(a_lo, a_hi, b_lo, b_hi)
        if op == "%":
            return _mod_interval(b_lo, b_hi)
        if op == "**":
            return _pow_interval(a_lo, a_hi, b_lo, b_hi)
    raise InternalError(f"no interval for {e!r}")


def _div_interval(a_lo, a_hi, b_lo, b_hi) -> tuple[int, int]:
    # Extremes of floor division occur at numerator bounds and at the
    # divisor bounds or the divisors nearest zero.  Zero divisors are
    # excluded: they raise at evaluation time, so they produce no value.
    divisors = {b for b in (b_lo, b_hi, -1, 1) if b_lo <= b <= b_hi and b != 0}
    if not divisors:
        return 0, 0  # every evaluation errors; any sound interval works
    corners = [a // b for a in (a_lo, a_hi) for b in divisors]
    return min(corners), max(corners)


def _mod_interval(b_lo, b_hi) -> tuple[int, int]:
    # Floor-mod result has the divisor's sign.
    lo = min(b_lo + 1, 0) if b_lo < 0 else 0
    hi = max(b_hi - 1, 0) if b_hi > 0 else 0
    return lo, hi


def _pow_interval(a_lo, a_hi, b_lo, b_hi) -> tuple[int, int]:
    # Negative exponents raise at evaluation time; clamp them away.
    b_lo = max(b_lo, 0)
    b_hi = max(b_hi, 0)
    if b_hi > 1024:
        b_hi = 1024  # anything larger overflows 64 bits unless |base| <= 1
        if abs(a_lo) > 1 or abs(a_hi) > 1:
            return -(2**70), 2**70  # sentinel-wide: callers treat as unsafe
    bases = {a_lo, a_hi}
    if a_lo <= 0 <= a_hi:
        bases.add(0)
    if a_lo <= -1 <= a_hi:
        bases.add(-1)
    if a_lo <= 1 <= a_hi:
        bases.add(1)
    exps = {b_lo, b_hi}
    if b_lo <= b_hi - 1:
        exps.add(b_hi - 1)  # parity of the exponent matters for negatives
    corners = [b**x for b in bases for x in exps]
    return min(corners), max(corners)
