"""Expression language for training-free credit-assignment functions.

Parser, static shape checker, guarded interpreter, canonical printer, and
probe harness. Programs map a global state vector to per-agent mixing
weights and a bias; they carry no trainable parameters.
"""

from .ast import Expr, Scalar, TfcafProgram, Vector
from .errors import (
    DivisionNearZero,
    DomainError,
    DslError,
    DslRuntimeError,
    NonFiniteIntermediate,
    ParseError,
)
from .grammar import GRAMMAR_REFERENCE
from .interp import eval_collect, eval_weights_bias, eval_weights_bias_batch, state_digest
from .parser import parse, parse_expr
from .pretty import pretty_expr, pretty_print
from .probe import ArraySampler, ProbeFailure, ProbeReport, StateSampler, probe
from .validate import ValidationIssue, ValidationReport, validate

__all__ = [
    "ArraySampler",
    "DivisionNearZero",
    "DomainError",
    "DslError",
    "DslRuntimeError",
    "Expr",
    "GRAMMAR_REFERENCE",
    "NonFiniteIntermediate",
    "ParseError",
    "ProbeFailure",
    "ProbeReport",
    "Scalar",
    "StateSampler",
    "TfcafProgram",
    "ValidationIssue",
    "ValidationReport",
    "Vector",
    "eval_collect",
    "eval_weights_bias",
    "eval_weights_bias_batch",
    "parse",
    "parse_expr",
    "pretty_expr",
    "pretty_print",
    "probe",
    "state_digest",
    "validate",
]
