"""Canonical text form for expressions, models, and generator models.

The printer is deterministic and inserts parentheses only where operator
precedence requires them, so `parse(print_expr(e))` reproduces `e` and
repeated prints are byte-identical.  Flattened models are compared
byte-for-byte across pipelines, which makes this module part of the
correctness contract rather than a debugging aid.
"""

from __future__ import annotations

from .errors import InternalError
from .syntax import (
    Aggregate,
    AllDiff,
    BinOp,
    BoolDomainExpr,
    BoolLit,
    Comprehension,
    DomainExpr,
    Expr,
    FlatModel,
    IntDomainExpr,
    IntLit,
    MatrixDomainExpr,
    MatrixIndex,
    MatrixLit,
    Model,
    Neg,
    Not,
    Quantifier,
    VarRef,
)

# Precedence, tightest first.  `!` binds looser than comparisons, as in
# the language reference.
_PREC_ATOM = 100
_PREC_INDEX = 90
_PREC_POW = 80
_PREC_NEG = 70
_PREC_MUL = 60
_PREC_ADD = 50
_PREC_CMP = 40
_PREC_NOT = 35
_PREC_AND = 30
_PREC_OR = 25
_PREC_IMP = 20

_BINOP_PREC = {
    "**": _PREC_POW,
    "*": _PREC_MUL,
    "/": _PREC_MUL,
    "%": _PREC_MUL,
    "+": _PREC_ADD,
    "-": _PREC_ADD,
    "=": _PREC_CMP,
    "!=": _PREC_CMP,
    "<": _PREC_CMP,
    "<=": _PREC_CMP,
    ">": _PREC_CMP,
    ">=": _PREC_CMP,
    "/\\": _PREC_AND,
    "\\/": _PREC_OR,
    "->": _PREC_IMP,
}

# assoc: 'left', 'right', or 'none' (both operands need strictly tighter
# precedence, so chained comparisons always print parenthesized).
_BINOP_ASSOC = {
    "**": "right",
    "*": "left",
    "/": "left",
    "%": "left",
    "+": "left",
    "-": "left",
    "=": "none",
    "!=": "none",
    "<": "none",
    "<=": "none",
    ">": "none",
    ">=": "none",
    "/\\": "left",
    "\\/": "left",
    "->": "right",
}


def print_expr(e: Expr) -> str:
    return _expr(e, 0)


def _paren(text: str, prec: int, minimum: int) -> str:
    return f"({text})" if prec < minimum else text


def _expr(e: Expr, minimum: int) -> str:
    text, prec = _render(e)
    return _paren(text, prec, minimum)


def _render(e: Expr) -> tuple[str, int]:
    t = type(e)
    if t is IntLit:
        # Negative literals render like `-3`; treat them as unary-minus
        # tight so `-3 ** 2` never prints without parentheses.
        return str(e.value), (_PREC_ATOM if e.value >= 0 else _PREC_NEG)
    if t is BoolLit:
        return ("true" if e.value else "false"), _PREC_ATOM
    if t is VarRef:
        return e.name, _PREC_ATOM
    if t is MatrixIndex:
        base = _expr(e.base, _PREC_INDEX)
        idx = ", ".join(_expr(i, 0) for i in e.indexes)
        return f"{base}[{idx}]", _PREC_INDEX
    if t is Neg:
        return f"-{_expr(e.operand, _PREC_NEG + 1)}", _PREC_NEG
    if t is Not:
        return f"!{_expr(e.operand, _PREC_NOT + 1)}", _PREC_NOT
    if t is BinOp:
        prec = _BINOP_PREC[e.op]
        assoc = _BINOP_ASSOC[e.op]
        lmin = prec if assoc == "left" else prec + 1
        rmin = prec if assoc == "right" else prec + 1
        sep = e.op if e.op == "**" else f" {e.op} "
        return f"{_expr(e.lhs, lmin)}{sep}{_expr(e.rhs, rmin)}", prec
    if t is MatrixLit:
        return "[" + ", ".join(_expr(i, 0) for i in e.items) + "]", _PREC_ATOM
    if t is Aggregate:
        return f"{e.op}({_expr(e.arg, 0)})", _PREC_ATOM
    if t is AllDiff:
        return f"allDiff({_expr(e.arg, 0)})", _PREC_ATOM
    if t is Comprehension:
        gens = ", ".join(f"{g.name}: {print_domain(g.domain)}" for g in e.generators)
        parts = [gens] + [_expr(g, 0) for g in e.guards]
        return f"[{_expr(e.return_expr, 0)} | {', '.join(parts)}]", _PREC_ATOM
    if t is Quantifier:
        binders = ", ".join(f"{g.name}: {print_domain(g.domain)}" for g in e.binders)
        # The body extends as far as possible, so no parentheses needed,
        # but a quantifier used as an operand must itself be wrapped.
        return f"{e.kind} {binders} . {_expr(e.body, 0)}", _PREC_IMP
    raise InternalError(f"cannot print {e!r}")


def print_domain(d: DomainExpr) -> str:
    if isinstance(d, IntDomainExpr):
        hi = _expr(d.hi, 0) if d.hi is not None else ""
        return f"int({_expr(d.lo, 0)}..{hi})"
    if isinstance(d, BoolDomainExpr):
        return "bool"
    if isinstance(d, MatrixDomainExpr):
        idx = ", ".join(print_domain(i) for i in d.index)
        return f"matrix indexed by [{idx}] of {print_domain(d.element)}"
    raise InternalError(f"cannot print domain {d!r}")


def print_model(m: Model) -> str:
    lines: list[str] = []
    for p in m.params:
        lines.append(f"given {p.name}: {print_domain(p.domain)}")
    for l in m.lettings:
        lines.append(f"letting {l.name} be {print_expr(l.value)}")
    for v in m.decision_vars:
        lines.append(f"find {v.name}: {print_domain(v.domain)}")
    if m.constraints:
        lines.append("such that")
        lines.extend(_constraint_lines(m.constraints))
    return "\n".join(lines) + "\n"


def print_flat_model(fm: FlatModel) -> str:
    """Surface-syntax form of a flattened model, one constraint per line.
    An empty constraint list prints as the trivial constraint `true`."""
    lines = [f"find {v.name}: {print_domain(v.domain)}" for v in fm.decision_vars]
    lines.append("such that")
    if fm.constraints:
        lines.extend(_constraint_lines(fm.constraints))
    else:
        lines.append("  true")
    return "\n".join(lines) + "\n"


def _constraint_lines(constraints) -> list[str]:
    out = []
    for i, c in enumerate(constraints):
        sep = "," if i < len(constraints) - 1 else ""
        out.append(f"  {print_expr(c)}{sep}")
    return out
