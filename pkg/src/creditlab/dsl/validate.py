"""Static shape checking for parsed programs.

Every expression types to either ``Scalar`` or ``Vector(k)`` with ``k`` known
statically; state accesses are range-checked against the bound ``state_dim``.
Problems are collected into a :class:`ValidationReport`, never raised.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .ast import (
    Binary,
    Call,
    ELEMENTWISE_FNS,
    Expr,
    ExprType,
    Neg,
    Num,
    REDUCE_FNS,
    Scalar,
    Span,
    StateIndex,
    StateSlice,
    TfcafProgram,
    VecLit,
    Vector,
)

# Weight expressions rooted in one of these cannot produce negative weights.
NONNEGATIVE_ROOTS = ("softmax", "relu", "abs", "exp")


@dataclass
class ValidationIssue:
    message: str
    span: Span

    def __str__(self) -> str:
        return f"[{self.span[0]}:{self.span[1]}] {self.message}"


@dataclass
class ValidationReport:
    ok: bool
    type_of_weights: ExprType | None
    type_of_bias: ExprType | None
    errors: list[ValidationIssue] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def summary(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(str(e) for e in self.errors)


class _TypeChecker:
    def __init__(self, state_dim: int):
        self.state_dim = state_dim
        self.errors: list[ValidationIssue] = []

    def fail(self, message: str, span: Span) -> None:
        self.errors.append(ValidationIssue(message, span))

    def check(self, expr: Expr) -> ExprType | None:
        """Infer the type of ``expr``; None when a sub-expression failed."""
        if isinstance(expr, Num):
            return Scalar()
        if isinstance(expr, StateIndex):
            if not 0 <= expr.index < self.state_dim:
                self.fail(
                    f"state index {expr.index} out of range [0, {self.state_dim})", expr.span
                )
                return None
            return Scalar()
        if isinstance(expr, StateSlice):
            if not (0 <= expr.start < expr.stop <= self.state_dim):
                self.fail(
                    f"state slice [{expr.start}:{expr.stop}] invalid for "
                    f"state_dim {self.state_dim} (need 0 <= start < stop <= dim)",
                    expr.span,
                )
                return None
            return Vector(expr.stop - expr.start)
        if isinstance(expr, VecLit):
            ok = True
            for item in expr.items:
                t = self.check(item)
                if t is None:
                    ok = False
                elif isinstance(t, Vector):
                    self.fail("vector literal elements must be scalars", item.span)
                    ok = False
            return Vector(len(expr.items)) if ok else None
        if isinstance(expr, Neg):
            return self.check(expr.operand)
        if isinstance(expr, Binary):
            lt = self.check(expr.left)
            rt = self.check(expr.right)
            if lt is None or rt is None:
                return None
            return self.broadcast(lt, rt, expr.span)
        if isinstance(expr, Call):
            return self.check_call(expr)
        raise TypeError(f"unknown expression node {type(expr).__name__}")

    def broadcast(self, a: ExprType, b: ExprType, span: Span) -> ExprType | None:
        if isinstance(a, Scalar):
            return b
        if isinstance(b, Scalar):
            return a
        if a.length != b.length:
            self.fail(f"vector length mismatch: {a.length} vs {b.length}", span)
            return None
        return a

    def check_call(self, expr: Call) -> ExprType | None:
        args = [self.check(a) for a in expr.args]
        if any(a is None for a in args):
            return None
        if expr.fn in ELEMENTWISE_FNS:
            return args[0]
        if expr.fn == "softmax":
            if not isinstance(args[0], Vector):
                self.fail("softmax requires a vector argument", expr.args[0].span)
                return None
            return args[0]
        if expr.fn in REDUCE_FNS:
            if not isinstance(args[0], Vector):
                self.fail(f"{expr.fn} requires a vector argument", expr.args[0].span)
                return None
            return Scalar()
        if expr.fn == "select":
            t = args[0]
            for arg_t, arg in zip(args[1:], expr.args[1:]):
                t = self.broadcast(t, arg_t, arg.span)
                if t is None:
                    return None
            return t
        if expr.fn == "clamp":
            for arg_t, arg in zip(args[1:], expr.args[1:]):
                if isinstance(arg_t, Vector):
                    self.fail("clamp bounds must be scalars", arg.span)
                    return None
            return args[0]
        raise ValueError(f"unknown function {expr.fn}")


def validate(program: TfcafProgram, n_agents: int, state_dim: int) -> ValidationReport:
    """Shape-check ``program`` against a (n_agents, state_dim) binding.

    On success the binding is recorded on the program. The report carries a
    warning when the weight expression is not of provably-nonnegative form
    (root not softmax/relu/abs/exp); such programs can break the
    individual-global-max property and are flagged rather than rejected.
    """
    checker = _TypeChecker(state_dim)
    w_type = checker.check(program.weights_expr)
    b_type = checker.check(program.bias_expr)

    if w_type is not None:
        if isinstance(w_type, Scalar):
            checker.fail(
                f"weights must be a vector of length {n_agents}, got scalar",
                program.weights_expr.span,
            )
        elif w_type.length != n_agents:
            checker.fail(
                f"weights vector length {w_type.length} != {n_agents} agents",
                program.weights_expr.span,
            )
    if b_type is not None and isinstance(b_type, Vector):
        checker.fail("bias must be a scalar", program.bias_expr.span)

    warnings = []
    root = program.weights_expr
    if not (isinstance(root, Call) and root.fn in NONNEGATIVE_ROOTS):
        warnings.append(
            "weights expression is not of provably-nonnegative form "
            f"(root is not one of {'/'.join(NONNEGATIVE_ROOTS)}); negative weights "
            "would break per-agent greedy maximisation"
        )

    ok = not checker.errors
    if ok:
        program.n_agents = n_agents
        program.state_dim = state_dim
    return ValidationReport(
        ok=ok,
        type_of_weights=w_type,
        type_of_bias=b_type,
        errors=checker.errors,
        warnings=warnings,
    )
