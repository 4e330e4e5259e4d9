"""Tokenizer and recursive-descent parser for the expression language.

Grammar (LL, precedence low to high):

    program    := "weights" ":" expr "bias" ":" expr EOF
    expr       := additive (CMPOP additive)?          # comparisons do not chain
    additive   := multiplicative (("+" | "-") multiplicative)*
    multiplicative := unary (("*" | "/") unary)*
    unary      := "-" unary | primary
    primary    := NUMBER | state | veclit | call | "(" expr ")"
    state      := "s" "[" INT (":" INT)? "]"
    veclit     := "[" expr ("," expr)* "]"
    call       := FNNAME "(" expr ("," expr)* ")"

Comments run from ``#`` to end of line. Whitespace (including newlines) is
insignificant between tokens, so expressions may wrap across lines; the
``bias`` keyword terminates the weight expression.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .ast import (
    ALL_FNS,
    Binary,
    Call,
    CMP_OPS,
    Expr,
    Neg,
    Num,
    StateIndex,
    StateSlice,
    TfcafProgram,
    VecLit,
)
from .errors import ParseError

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[\s]+|\#[^\n]*)
  | (?P<number>(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|==|[+\-*/<>\[\](),:])
    """,
    re.VERBOSE,
)

_CALL_ARITY = {fn: 1 for fn in ALL_FNS}
_CALL_ARITY["select"] = 3
_CALL_ARITY["clamp"] = 3


@dataclass
class Token:
    kind: str  # "number" | "name" | "op" | "eof"
    text: str
    pos: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(Token("eof", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def cur(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        if self.cur.text != text:
            raise ParseError(
                f"got {self.cur.text!r}" if self.cur.kind != "eof" else "unexpected end of input",
                self.cur.pos,
                expected=(text,),
            )
        return self.advance()

    def expect_int(self) -> int:
        tok = self.cur
        if tok.kind != "number" or not re.fullmatch(r"\d+", tok.text):
            raise ParseError("state indices must be integer literals", tok.pos, expected=("integer",))
        self.advance()
        return int(tok.text)

    # --- grammar rules ---

    def program(self) -> TfcafProgram:
        w_kw = self.cur
        if not (w_kw.kind == "name" and w_kw.text == "weights"):
            raise ParseError("program must start with 'weights:'", w_kw.pos, expected=("weights",))
        self.advance()
        self.expect(":")
        weights = self.expr()
        b_kw = self.cur
        if not (b_kw.kind == "name" and b_kw.text == "bias"):
            raise ParseError(
                "got end of input" if b_kw.kind == "eof" else f"got {b_kw.text!r}",
                b_kw.pos,
                expected=("bias",),
            )
        self.advance()
        self.expect(":")
        bias = self.expr()
        if self.cur.kind != "eof":
            raise ParseError(f"trailing input {self.cur.text!r}", self.cur.pos, expected=("end of input",))
        return TfcafProgram(weights_expr=weights, bias_expr=bias)

    def expr(self) -> Expr:
        left = self.additive()
        if self.cur.kind == "op" and self.cur.text in CMP_OPS:
            op = self.advance()
            right = self.additive()
            return Binary(op.text, left, right, span=(left.span[0], right.span[1]))
        return left

    def additive(self) -> Expr:
        left = self.multiplicative()
        while self.cur.kind == "op" and self.cur.text in ("+", "-"):
            op = self.advance()
            right = self.multiplicative()
            left = Binary(op.text, left, right, span=(left.span[0], right.span[1]))
        return left

    def multiplicative(self) -> Expr:
        left = self.unary()
        while self.cur.kind == "op" and self.cur.text in ("*", "/"):
            op = self.advance()
            right = self.unary()
            left = Binary(op.text, left, right, span=(left.span[0], right.span[1]))
        return left

    def unary(self) -> Expr:
        if self.cur.kind == "op" and self.cur.text == "-":
            tok = self.advance()
            operand = self.unary()
            return Neg(operand, span=(tok.pos, operand.span[1]))
        return self.primary()

    def primary(self) -> Expr:
        tok = self.cur
        if tok.kind == "number":
            self.advance()
            return Num(float(tok.text), span=(tok.pos, tok.pos + len(tok.text)))
        if tok.kind == "name":
            if tok.text == "s":
                return self.state_access()
            if tok.text in _CALL_ARITY:
                return self.call()
            raise ParseError(f"unknown name {tok.text!r}", tok.pos, expected=("s", *sorted(ALL_FNS)))
        if tok.text == "(":
            self.advance()
            inner = self.expr()
            close = self.expect(")")
            inner.span = (tok.pos, close.pos + 1)
            return inner
        if tok.text == "[":
            return self.veclit()
        raise ParseError(
            "unexpected end of input" if tok.kind == "eof" else f"got {tok.text!r}",
            tok.pos,
            expected=("number", "s", "function", "(", "["),
        )

    def state_access(self) -> Expr:
        start_tok = self.advance()  # "s"
        self.expect("[")
        lo = self.expect_int()
        if self.cur.text == ":":
            self.advance()
            hi = self.expect_int()
            close = self.expect("]")
            return StateSlice(lo, hi, span=(start_tok.pos, close.pos + 1))
        close = self.expect("]")
        return StateIndex(lo, span=(start_tok.pos, close.pos + 1))

    def veclit(self) -> Expr:
        open_tok = self.expect("[")
        items = [self.expr()]
        while self.cur.text == ",":
            self.advance()
            items.append(self.expr())
        close = self.expect("]")
        return VecLit(items, span=(open_tok.pos, close.pos + 1))

    def call(self) -> Expr:
        name = self.advance()
        self.expect("(")
        args = [self.expr()]
        while self.cur.text == ",":
            self.advance()
            args.append(self.expr())
        close = self.expect(")")
        arity = _CALL_ARITY[name.text]
        if len(args) != arity:
            raise ParseError(
                f"{name.text} takes {arity} argument(s), got {len(args)}", name.pos
            )
        return Call(name.text, args, span=(name.pos, close.pos + 1))


def parse(source: str) -> TfcafProgram:
    """Parse program source into an AST. Raises :class:`ParseError`."""
    return _Parser(tokenize(source)).program()


def parse_expr(source: str) -> Expr:
    """Parse a single expression (test and tooling convenience)."""
    parser = _Parser(tokenize(source))
    e = parser.expr()
    if parser.cur.kind != "eof":
        raise ParseError(f"trailing input {parser.cur.text!r}", parser.cur.pos)
    return e
