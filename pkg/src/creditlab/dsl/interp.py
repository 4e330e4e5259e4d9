"""Guarded interpreter for validated programs.

Evaluation is batched: a batch of states has shape ``(B, state_dim)``, scalar
expressions evaluate to ``(B,)`` arrays and vector expressions to ``(B, k)``.
Guards (near-zero division, log/sqrt domains, finiteness of every
intermediate) are tracked per batch lane; a lane's first failure is recorded
and its values are poisoned with NaN so later nodes cannot resurrect it.

The strict entry points raise the first failed lane's error; the collecting
entry point returns per-lane failures as data (used by the probe harness).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .ast import Binary, Call, CMP_OPS, Expr, Neg, Num, Span, StateIndex, StateSlice, TfcafProgram, VecLit
from .errors import DivisionNearZero, DomainError, DslRuntimeError, NonFiniteIntermediate

DIVISION_GUARD = 1e-9


def state_digest(state: np.ndarray) -> str:
    """Short content digest of one state vector (error attribution)."""
    return hashlib.sha256(np.asarray(state, dtype="<f8").tobytes()).hexdigest()[:12]


@dataclass
class _LaneError:
    cls: type[DslRuntimeError]
    message: str
    span: Span

    def build(self, state_row: np.ndarray) -> DslRuntimeError:
        return self.cls(self.message, self.span, state_digest(state_row))


class _Eval:
    def __init__(self, states: np.ndarray):
        self.states = states
        self.failed = np.zeros(states.shape[0], dtype=bool)
        self.errors: dict[int, _LaneError] = {}

    def mark(self, bad_lanes: np.ndarray, cls: type[DslRuntimeError], message: str, span: Span) -> None:
        newly = bad_lanes & ~self.failed
        if newly.any():
            for lane in np.nonzero(newly)[0]:
                self.errors[int(lane)] = _LaneError(cls, message, span)
            self.failed |= newly

    def poison(self, value: np.ndarray, bad_lanes: np.ndarray) -> np.ndarray:
        if bad_lanes.any():
            value[bad_lanes] = np.nan
        return value

    def finite_guard(self, value: np.ndarray, span: Span) -> np.ndarray:
        finite = np.isfinite(value)
        lanes_ok = finite if value.ndim == 1 else finite.all(axis=1)
        bad = ~lanes_ok
        self.mark(bad, NonFiniteIntermediate, "non-finite intermediate value", span)
        return self.poison(value, bad)

    def eval(self, expr: Expr) -> np.ndarray:
        value = self._eval_inner(expr)
        return self.finite_guard(value, expr.span)

    def _eval_inner(self, expr: Expr) -> np.ndarray:
        B = self.states.shape[0]
        if isinstance(expr, Num):
            return np.full(B, expr.value)
        if isinstance(expr, StateIndex):
            return self.states[:, expr.index].copy()
        if isinstance(expr, StateSlice):
            return self.states[:, expr.start : expr.stop].copy()
        if isinstance(expr, VecLit):
            return np.stack([self.eval(item) for item in expr.items], axis=1)
        if isinstance(expr, Neg):
            return -self.eval(expr.operand)
        if isinstance(expr, Binary):
            return self._eval_binary(expr)
        if isinstance(expr, Call):
            return self._eval_call(expr)
        raise TypeError(f"unknown expression node {type(expr).__name__}")

    @staticmethod
    def _lift(*arrays: np.ndarray) -> list[np.ndarray]:
        # Align scalar (B,) operands with vector (B, k) operands.
        if any(a.ndim == 2 for a in arrays):
            return [a[:, None] if a.ndim == 1 else a for a in arrays]
        return list(arrays)

    def _lanes_any(self, mask: np.ndarray) -> np.ndarray:
        return mask if mask.ndim == 1 else mask.any(axis=1)

    def _eval_binary(self, expr: Binary) -> np.ndarray:
        left = self.eval(expr.left)
        right = self.eval(expr.right)
        left, right = self._lift(left, right)
        if expr.op in CMP_OPS:
            with np.errstate(invalid="ignore"):
                if expr.op == "<":
                    out = left < right
                elif expr.op == "<=":
                    out = left <= right
                elif expr.op == ">":
                    out = left > right
                elif expr.op == ">=":
                    out = left >= right
                else:
                    out = left == right
            return out.astype(np.float64)
        if expr.op == "+":
            return left + right
        if expr.op == "-":
            return left - right
        if expr.op == "*":
            return left * right
        # Division: guarded, a hard error rather than an epsilon clamp.
        with np.errstate(invalid="ignore"):
            bad_elem = np.abs(right) < DIVISION_GUARD
        bad_lanes = self._lanes_any(bad_elem)
        self.mark(
            bad_lanes,
            DivisionNearZero,
            f"division by near-zero value (|denominator| < {DIVISION_GUARD:g})",
            expr.span,
        )
        with np.errstate(all="ignore"):
            out = left / np.where(bad_elem, np.nan, right)
        return out

    def _eval_call(self, expr: Call) -> np.ndarray:
        fn = expr.fn
        if fn in ("select", "clamp"):
            args = [self.eval(a) for a in expr.args]
        else:
            args = [self.eval(expr.args[0])]

        if fn == "abs":
            return np.abs(args[0])
        if fn == "relu":
            return np.maximum(args[0], 0.0)
        if fn == "exp":
            with np.errstate(over="ignore"):
                return np.exp(args[0])
        if fn == "sqrt":
            with np.errstate(invalid="ignore"):
                bad_elem = ~(args[0] >= 0.0)
            self.mark(
                self._lanes_any(bad_elem), DomainError, "sqrt requires argument >= 0", expr.span
            )
            with np.errstate(invalid="ignore"):
                return np.sqrt(np.where(bad_elem, np.nan, args[0]))
        if fn == "log":
            with np.errstate(invalid="ignore"):
                bad_elem = ~(args[0] > 0.0)
            self.mark(
                self._lanes_any(bad_elem), DomainError, "log requires argument > 0", expr.span
            )
            with np.errstate(all="ignore"):
                return np.log(np.where(bad_elem, np.nan, args[0]))
        if fn == "softmax":
            x = args[0]
            with np.errstate(invalid="ignore"):
                z = x - np.max(x, axis=1, keepdims=True)
                e = np.exp(z)
                return e / np.sum(e, axis=1, keepdims=True)
        if fn == "sum":
            return np.sum(args[0], axis=1)
        if fn == "mean":
            return np.mean(args[0], axis=1)
        if fn == "minv":
            return np.min(args[0], axis=1)
        if fn == "maxv":
            return np.max(args[0], axis=1)
        if fn == "select":
            cond, a, b = self._lift(*args)
            with np.errstate(invalid="ignore"):
                return np.where(cond != 0.0, a, b)
        if fn == "clamp":
            x, lo, hi = self._lift(*args)
            with np.errstate(invalid="ignore"):
                bad_elem = ~(lo <= hi)
            bad = self._lanes_any(np.broadcast_to(bad_elem, x.shape) if bad_elem.shape != x.shape else bad_elem)
            self.mark(bad, DomainError, "clamp requires lo <= hi", expr.span)
            with np.errstate(invalid="ignore"):
                return np.clip(x, np.where(bad_elem, np.nan, lo), np.where(bad_elem, np.nan, hi))
        raise ValueError(f"unknown function {fn}")


def _require_bound(program: TfcafProgram, state_dim: int) -> None:
    if program.state_dim is None:
        raise ValueError("program must be validated before evaluation")
    if program.state_dim != state_dim:
        raise ValueError(
            f"program validated for state_dim {program.state_dim}, got state of length {state_dim}"
        )


def eval_collect(
    program: TfcafProgram, states: np.ndarray
) -> tuple[np.ndarray, np.ndarray, dict[int, DslRuntimeError]]:
    """Evaluate on a batch of states, collecting per-lane failures as data.

    Returns ``(weights (B, n), bias (B,), failures)``; rows of failed lanes
    are NaN and appear in ``failures`` keyed by lane index.
    """
    states = np.asarray(states, dtype=np.float64)
    if states.ndim == 1:
        states = states[None, :]
    _require_bound(program, states.shape[1])
    ev = _Eval(states)
    weights = ev.eval(program.weights_expr)  # (B, n): validation guarantees a vector
    bias = ev.eval(program.bias_expr)
    failures = {lane: err.build(states[lane]) for lane, err in ev.errors.items()}
    return weights, bias, failures


def eval_weights_bias_batch(program: TfcafProgram, states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Strict batched evaluation; raises the first failed lane's error."""
    weights, bias, failures = eval_collect(program, states)
    if failures:
        raise failures[min(failures)]
    return weights, bias


def eval_weights_bias(program: TfcafProgram, state: np.ndarray) -> tuple[np.ndarray, float]:
    """Evaluate weights and bias on a single state vector.

    Raises DivisionNearZero / DomainError / NonFiniteIntermediate, each
    carrying the offending source span and the state digest.
    """
    weights, bias, failures = eval_collect(program, np.asarray(state, dtype=np.float64)[None, :])
    if failures:
        raise failures[0]
    return weights[0], float(bias[0])
