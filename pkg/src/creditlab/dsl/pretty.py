"""Canonical source form for programs.

``parse(pretty_print(p))`` is structurally equal to ``p`` for every valid
program; parentheses appear only where precedence requires them and numbers
print via ``repr`` (shortest round-trip form).
"""

from __future__ import annotations

from .ast import Binary, Call, Expr, Neg, Num, StateIndex, StateSlice, TfcafProgram, VecLit

_PREC_CMP = 1
_PREC_ADD = 2
_PREC_MUL = 3
_PREC_UNARY = 4
_PREC_ATOM = 5

_OP_PREC = {"<": _PREC_CMP, "<=": _PREC_CMP, ">": _PREC_CMP, ">=": _PREC_CMP, "==": _PREC_CMP,
            "+": _PREC_ADD, "-": _PREC_ADD, "*": _PREC_MUL, "/": _PREC_MUL}


def _fmt_number(value: float) -> str:
    return repr(value)


def _emit(expr: Expr, parent_prec: int) -> str:
    if isinstance(expr, Num):
        return _fmt_number(expr.value)
    if isinstance(expr, StateIndex):
        return f"s[{expr.index}]"
    if isinstance(expr, StateSlice):
        return f"s[{expr.start}:{expr.stop}]"
    if isinstance(expr, VecLit):
        return "[" + ", ".join(_emit(e, 0) for e in expr.items) + "]"
    if isinstance(expr, Call):
        return expr.fn + "(" + ", ".join(_emit(a, 0) for a in expr.args) + ")"
    if isinstance(expr, Neg):
        inner = _emit(expr.operand, _PREC_UNARY)
        text = f"-{inner}"
        return f"({text})" if parent_prec > _PREC_UNARY else text
    if isinstance(expr, Binary):
        prec = _OP_PREC[expr.op]
        # Left-associative: right child of equal precedence needs parens.
        # Comparisons do not chain, so a comparison child always needs them.
        left = _emit(expr.left, prec if prec > _PREC_CMP else prec + 1)
        right = _emit(expr.right, prec + 1)
        text = f"{left} {expr.op} {right}"
        return f"({text})" if prec < parent_prec else text
    raise TypeError(f"unknown expression node {type(expr).__name__}")


def pretty_expr(expr: Expr) -> str:
    return _emit(expr, 0)


def pretty_print(program: TfcafProgram) -> str:
    """Deterministic canonical source text (ends with a newline)."""
    return f"weights: {pretty_expr(program.weights_expr)}\nbias: {pretty_expr(program.bias_expr)}\n"
