"""Coefficient-function expressions: tokenizer, recursive-descent parser, unparser and vectorised evaluator.

Grammar (``^`` binds tightest and is right-associative, unary minus sits above ``*`` and ``/``)::

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := '-' unary | power
    power := atom ('^' unary)?
    atom  := number | 'x' | constant | function '(' expr ')' | '(' expr ')'
"""

from __future__ import annotations

import math
import re
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from retarded_spectrum.errors import EvalDomainError, ExprSyntaxError, UnknownIdentifierError

FloatArray = NDArray[np.float64]

_FUNCTIONS: dict[str, Callable[[FloatArray], FloatArray]] = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
}

_CONSTANTS = {"pi": math.pi, "e": math.e}

_TOKEN_RE = re.compile(
    r"(?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()])"
)


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str = "x"


@dataclass(frozen=True)
class NamedConst:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: Expr


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call:
    func: str
    arg: Expr


Expr = Const | Var | NamedConst | Neg | BinOp | Call


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(src: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(src):
        if src[pos].isspace():
            pos += 1
            continue
        match = _TOKEN_RE.match(src, pos)
        if match is None or match.lastgroup is None:
            msg = f"Unexpected character {src[pos]!r}"
            raise ExprSyntaxError(msg, pos, "number, identifier, operator or parenthesis")
        tokens.append(_Token(match.lastgroup, match.group(), pos))
        pos = match.end()
    tokens.append(_Token("end", "", len(src)))
    return tokens


def _describe(tok: _Token) -> str:
    return "end of input" if tok.kind == "end" else repr(tok.text)


class _Parser:
    def __init__(self, tokens: list[_Token]) -> None:
        self._tokens = tokens
        self._index = 0

    def _peek(self) -> _Token:
        return self._tokens[self._index]

    def _advance(self) -> _Token:
        tok = self._tokens[self._index]
        if tok.kind != "end":
            self._index += 1
        return tok

    def _at_op(self, *ops: str) -> bool:
        tok = self._peek()
        return tok.kind == "op" and tok.text in ops

    def _expect(self, text: str) -> None:
        tok = self._advance()
        if tok.kind != "op" or tok.text != text:
            msg = f"Unexpected {_describe(tok)}"
            raise ExprSyntaxError(msg, tok.pos, repr(text))

    def parse(self) -> Expr:
        node = self._expr()
        tok = self._peek()
        if tok.kind != "end":
            msg = f"Unexpected {_describe(tok)}"
            raise ExprSyntaxError(msg, tok.pos, "operator or end of input")
        return node

    def _expr(self) -> Expr:
        node = self._term()
        while self._at_op("+", "-"):
            op = self._advance().text
            node = BinOp(op, node, self._term())
        return node

    def _term(self) -> Expr:
        node = self._unary()
        while self._at_op("*", "/"):
            op = self._advance().text
            node = BinOp(op, node, self._unary())
        return node

    def _unary(self) -> Expr:
        if self._at_op("-"):
            self._advance()
            return Neg(self._unary())
        return self._power()

    def _power(self) -> Expr:
        base = self._atom()
        if self._at_op("^"):
            self._advance()
            return BinOp("^", base, self._unary())
        return base

    def _atom(self) -> Expr:
        tok = self._advance()
        if tok.kind == "number":
            value = float(tok.text)
            # unparse writes inf as a bare identifier, so an overflowing literal would not reparse
            if not math.isfinite(value):
                msg = f"Numeric literal {tok.text!r} is not finite"
                raise ExprSyntaxError(msg, tok.pos, "finite number")
            return Const(value)
        if tok.kind == "ident":
            if tok.text == "x":
                return Var()
            if tok.text in _CONSTANTS:
                return NamedConst(tok.text)
            if tok.text in _FUNCTIONS:
                self._expect("(")
                arg = self._expr()
                self._expect(")")
                return Call(tok.text, arg)
            raise UnknownIdentifierError(tok.text, tok.pos)
        if tok.kind == "op" and tok.text == "(":
            inner = self._expr()
            self._expect(")")
            return inner
        msg = f"Unexpected {_describe(tok)}"
        raise ExprSyntaxError(msg, tok.pos, "number, identifier or '('")


def parse_expr(src: str) -> Expr:
    """Parse an expression in the single real variable ``x``.

    Args:
        src: Expression text, e.g. ``"(x - pi/2)/2"``.

    Returns:
        The expression tree.

    Raises:
        ExprSyntaxError: Malformed input, with the offending position and what was expected.
        UnknownIdentifierError: A name outside the function/constant whitelist.
    """
    if not src.strip():
        msg = "Empty expression"
        raise ExprSyntaxError(msg, 0, "expression")
    return _Parser(_tokenize(src)).parse()


# Binding strength for unparse. A child is parenthesised when it binds looser than its parent,
# or binds equally loose on the side opposite the operator's associativity. That is the right
# operand of the left-associative operators and the left operand of ^.
_ADDITIVE, _MULTIPLICATIVE, _UNARY, _POWER, _ATOM = 1, 2, 3, 4, 5


def _precedence(node: Expr) -> int:
    if isinstance(node, BinOp):
        if node.op in ("+", "-"):
            return _ADDITIVE
        if node.op in ("*", "/"):
            return _MULTIPLICATIVE
        return _POWER
    if isinstance(node, Neg):
        return _UNARY
    # repr of a negative literal starts with "-", which reparses as Neg, so it is wrapped like one
    if isinstance(node, Const) and math.copysign(1.0, node.value) < 0:
        return _UNARY
    return _ATOM


def _wrap(node: Expr, parenthesise: bool) -> str:
    text = unparse(node)
    return f"({text})" if parenthesise else text


def unparse(e: Expr) -> str:
    """Render an expression so that parsing the text yields the same tree."""
    match e:
        case Const(value=value):
            return repr(value)
        case Var(name=name) | NamedConst(name=name):
            return name
        case Neg(operand=operand):
            return "-" + _wrap(operand, _precedence(operand) < _UNARY)
        case Call(func=func, arg=arg):
            return f"{func}({unparse(arg)})"
        case BinOp(op="^", left=left, right=right):
            return f"{_wrap(left, _precedence(left) <= _POWER)} ^ {_wrap(right, _precedence(right) < _POWER)}"
        case BinOp(op=op, left=left, right=right):
            prec = _precedence(e)
            return f"{_wrap(left, _precedence(left) < prec)} {op} {_wrap(right, _precedence(right) <= prec)}"
    msg = f"Not an expression node: {e!r}"
    raise TypeError(msg)


def is_zero_constant(e: Expr) -> bool:
    """True for a literal ``0`` (the q-identically-zero shortcut)."""
    return isinstance(e, Const) and e.value == 0.0


def depends_on_x(e: Expr) -> bool:
    match e:
        case Var():
            return True
        case Neg(operand=operand):
            return depends_on_x(operand)
        case Call(arg=arg):
            return depends_on_x(arg)
        case BinOp(left=left, right=right):
            return depends_on_x(left) or depends_on_x(right)
    return False


def _offending_x(mask: NDArray[np.bool_], xs: FloatArray) -> float:
    full_mask, full_x = np.broadcast_arrays(mask, xs)
    return float(full_x.flat[int(np.argmax(full_mask))])


def _check(mask: NDArray[np.bool_], xs: FloatArray, reason: str) -> None:
    if np.any(mask):
        raise EvalDomainError(reason, _offending_x(mask, xs))


def _evaluate(node: Expr, xs: FloatArray) -> FloatArray:
    match node:
        case Const(value=value):
            value_arr = np.asarray(value, dtype=np.float64)
        case Var():
            value_arr = xs
        case NamedConst(name=name):
            value_arr = np.asarray(_CONSTANTS[name], dtype=np.float64)
        case Neg(operand=operand):
            value_arr = -_evaluate(operand, xs)
        case Call(func=func, arg=arg):
            inner = _evaluate(arg, xs)
            if func == "log":
                _check(inner <= 0.0, xs, "log of non-positive value")
            elif func == "sqrt":
                _check(inner < 0.0, xs, "sqrt of negative value")
            value_arr = _FUNCTIONS[func](inner)
        case BinOp(op=op, left=left, right=right):
            lhs = _evaluate(left, xs)
            rhs = _evaluate(right, xs)
            if op == "+":
                value_arr = lhs + rhs
            elif op == "-":
                value_arr = lhs - rhs
            elif op == "*":
                value_arr = lhs * rhs
            elif op == "/":
                _check(rhs == 0.0, xs, "division by zero")
                value_arr = lhs / rhs
            else:
                # (-2)^3 is fine; (-2)^0.5 has no real value
                _check((lhs < 0.0) & (rhs != np.floor(rhs)), xs, "negative base with non-integer exponent")
                _check((lhs == 0.0) & (rhs < 0.0), xs, "division by zero")
                value_arr = np.power(lhs, rhs)
        case _:
            msg = f"Not an expression node: {node!r}"
            raise TypeError(msg)
    # overflow anywhere in the tree (exp(800), tan near pi/2) is caught at the node that produced it
    _check(~np.isfinite(value_arr), xs, "non-finite result")
    return value_arr


def eval_expr(e: Expr, x: ArrayLike) -> float | FloatArray:
    """Evaluate ``e`` at ``x`` (a scalar or an array of abscissae).

    Scalars give a Python float; arrays give an array of the same shape.

    Raises:
        EvalDomainError: Division by zero, log of a non-positive value, sqrt of a negative value,
            a negative base raised to a non-integer power, or any non-finite intermediate.
    """
    xs = np.asarray(x, dtype=np.float64)
    with np.errstate(all="ignore"):
        value = _evaluate(e, xs)
    out = np.broadcast_to(value, xs.shape)
    if xs.ndim == 0:
        return float(out)
    return np.array(out, dtype=np.float64)


def eval_array(e: Expr, x: ArrayLike) -> FloatArray:
    """Array-typed variant of :func:`eval_expr` for vectorised callers."""
    return np.asarray(eval_expr(e, np.atleast_1d(np.asarray(x, dtype=np.float64))), dtype=np.float64)
