"""AST node types and static types for the credit-assignment expression language.

A program is two expressions: a weight vector over agents and a scalar bias,
both functions of the global state vector ``s``. Nodes carry source spans
(character offsets into the original source) for error reporting; spans are
excluded from structural equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field


Span = tuple[int, int]

# Unary elementwise functions usable as calls: f(x).
ELEMENTWISE_FNS = ("abs", "sqrt", "exp", "log", "relu")
# Vector -> vector.
VECTOR_FNS = ("softmax",)
# Vector -> scalar reductions.
REDUCE_FNS = ("sum", "mean", "minv", "maxv")
# Other fixed-arity calls.
TERNARY_FNS = ("select", "clamp")

ALL_FNS = ELEMENTWISE_FNS + VECTOR_FNS + REDUCE_FNS + TERNARY_FNS

ARITH_OPS = ("+", "-", "*", "/")
CMP_OPS = ("<", "<=", ">", ">=", "==")


@dataclass(eq=True)
class Expr:
    span: Span = field(default=(0, 0), compare=False, kw_only=True)


@dataclass(eq=True)
class Num(Expr):
    value: float  # nonnegative by construction; negative constants are Neg(Num)


@dataclass(eq=True)
class StateIndex(Expr):
    index: int


@dataclass(eq=True)
class StateSlice(Expr):
    start: int
    stop: int  # half-open


@dataclass(eq=True)
class VecLit(Expr):
    items: list[Expr]


@dataclass(eq=True)
class Neg(Expr):
    operand: Expr


@dataclass(eq=True)
class Binary(Expr):
    op: str  # one of ARITH_OPS or CMP_OPS
    left: Expr
    right: Expr


@dataclass(eq=True)
class Call(Expr):
    fn: str  # one of ALL_FNS
    args: list[Expr]


@dataclass(frozen=True)
class Scalar:
    def __str__(self) -> str:
        return "scalar"


@dataclass(frozen=True)
class Vector:
    length: int

    def __str__(self) -> str:
        return f"vector({self.length})"


ExprType = Scalar | Vector


@dataclass
class TfcafProgram:
    """Parsed program: a weight expression and a bias expression.

    ``n_agents``/``state_dim`` record the binding the program was last
    validated against (None until :func:`creditlab.dsl.validate.validate`
    succeeds).
    """

    weights_expr: Expr
    bias_expr: Expr
    n_agents: int | None = None
    state_dim: int | None = None
