"""
Expression grammar shared by the symbolic layer and scene files.

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | wedge
    wedge  := power ('^' ['-'] power)*
    power  := atom ['^' ['-'] INTEGER]
    atom   := INTEGER | COORD | 'd' COORD | '@' COORD | '(' expr ')'

``a ^ n`` with an integer literal ``n`` is a power (wedge power for graded
operands); any other ``^`` is the wedge product, where a scalar operand acts
by multiplication. Powers bind tighter than wedges and do not chain:
``x^2^3`` is rejected in favour of ``(x^2)^3`` or ``x^8``. Juxtaposition is
rejected.
"""
import logging
import re
from dataclasses import dataclass
from typing import List, Optional, Union

from app.core.exceptions import ExpressionSyntaxError, UnknownCoordinateError, ZeroFieldDivisionError
from app.models.graded import DifferentialForm, GradedField, MultiVectorField
from app.models.scalar import Chart, ScalarField

logger = logging.getLogger(__name__)

Value = Union[ScalarField, DifferentialForm, MultiVectorField]

_TOKEN = re.compile(r"\s*(?:(?P<int>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()@]))")


@dataclass(frozen=True)
class Token:
    kind: str  # int | ident | op | end
    text: str
    position: int


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        match = _TOKEN.match(text, pos)
        if not match:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExpressionSyntaxError(f"Unexpected character '{text[start]}'", start)
        kind = match.lastgroup
        tokens.append(Token(kind, match.group(kind), match.start(kind)))
        pos = match.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class ExpressionParser:
    """Recursive descent parser producing exact scalars, forms or multivectors."""

    def __init__(self, text: str, chart: Chart):
        self.text = text
        self.chart = chart
        self.tokens = tokenize(text)
        self.pos = 0

    # ---- token helpers ----

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def accept(self, op: str) -> Optional[Token]:
        if self.current.kind == "op" and self.current.text == op:
            return self.advance()
        return None

    def expect(self, op: str) -> Token:
        tok = self.accept(op)
        if tok is None:
            found = self.current.text or "end of input"
            raise ExpressionSyntaxError(f"Expected '{op}' but found '{found}'", self.current.position)
        return tok

    def coordinate(self, tok: Token) -> int:
        if tok.kind != "ident":
            raise ExpressionSyntaxError("Expected a coordinate name", tok.position)
        if tok.text not in self.chart.coords:
            raise UnknownCoordinateError(tok.text, self.chart.coords, tok.position)
        return self.chart.index(tok.text)

    # ---- grammar ----

    def parse(self) -> Value:
        if self.current.kind == "end":
            raise ExpressionSyntaxError("Empty expression", 0)
        value = self.expr()
        if self.current.kind != "end":
            raise ExpressionSyntaxError(
                f"Unexpected '{self.current.text}' (use explicit '*' or '^')", self.current.position
            )
        return value

    def expr(self) -> Value:
        value = self.term()
        while True:
            tok = self.accept("+") or self.accept("-")
            if tok is None:
                return value
            rhs = self.term()
            value = self._combine_additive(value, rhs, tok)

    def term(self) -> Value:
        value = self.unary()
        while True:
            tok = self.accept("*") or self.accept("/")
            if tok is None:
                return value
            rhs = self.unary()
            if tok.text == "*":
                value = self._multiply(value, rhs, tok)
            else:
                value = self._divide(value, rhs, tok)

    def unary(self) -> Value:
        if self.accept("-"):
            return -self.unary()
        if self.accept("+"):
            return self.unary()
        return self.wedge()

    def wedge(self) -> Value:
        value = self.power()
        while True:
            tok = self.accept("^")
            if tok is None:
                return value
            negative = self.accept("-") is not None
            rhs = self.power()
            if negative:
                rhs = -rhs
            value = self._wedge(value, rhs, tok)

    def power(self) -> Value:
        value = self.atom()
        if not self._exponent_follows():
            return value
        tok = self.advance()
        negative = self.accept("-") is not None
        exponent = int(self.advance().text)
        value = self._power(value, -exponent if negative else exponent, tok)
        if self._exponent_follows():
            raise ExpressionSyntaxError("Chained powers need parentheses", self.current.position)
        return value

    def _exponent_follows(self) -> bool:
        """'^' followed by an integer literal, possibly negated."""
        if not (self.current.kind == "op" and self.current.text == "^"):
            return False
        ahead = self.tokens[self.pos + 1]
        if ahead.kind == "op" and ahead.text == "-":
            ahead = self.tokens[self.pos + 2]
        return ahead.kind == "int"

    def atom(self) -> Value:
        tok = self.current
        if tok.kind == "int":
            self.advance()
            return ScalarField.constant(self.chart, int(tok.text))
        if tok.kind == "ident":
            self.advance()
            if tok.text == "d" and self.current.kind == "ident":
                i = self.coordinate(self.advance())
                return DifferentialForm.basis(self.chart, i)
            return ScalarField.coordinate(self.chart, self.coordinate(tok))
        if self.accept("@"):
            i = self.coordinate(self.advance())
            return MultiVectorField.basis(self.chart, i)
        if self.accept("("):
            value = self.expr()
            self.expect(")")
            return value
        found = tok.text or "end of input"
        raise ExpressionSyntaxError(f"Unexpected '{found}'", tok.position)

    # ---- semantics ----

    def _combine_additive(self, a: Value, b: Value, tok: Token) -> Value:
        a, b = self._align(a, b, tok)
        if isinstance(a, GradedField) and a.degree != b.degree:
            raise ExpressionSyntaxError(
                f"Cannot add degree {a.degree} and degree {b.degree} terms", tok.position
            )
        return a + b if tok.text == "+" else a - b

    def _align(self, a: Value, b: Value, tok: Token):
        """Promote a scalar to a degree-0 graded object next to a graded operand."""
        if isinstance(a, ScalarField) and isinstance(b, GradedField):
            a = type(b).scalar(a)
        elif isinstance(b, ScalarField) and isinstance(a, GradedField):
            b = type(a).scalar(b)
        if type(a) is not type(b):
            raise ExpressionSyntaxError("Cannot mix forms and multivector fields", tok.position)
        return a, b

    def _multiply(self, a: Value, b: Value, tok: Token) -> Value:
        if isinstance(a, ScalarField) and isinstance(b, ScalarField):
            return a * b
        if isinstance(a, ScalarField):
            return b.scale(a)
        if isinstance(b, ScalarField):
            return a.scale(b)
        raise ExpressionSyntaxError("Use '^' to multiply graded factors", tok.position)

    def _divide(self, a: Value, b: Value, tok: Token) -> Value:
        if isinstance(b, GradedField):
            if b.degree != 0:
                raise ExpressionSyntaxError("Division by a graded factor", tok.position)
            b = b.scalar_part()
        if b.is_zero():
            raise ZeroFieldDivisionError(f"Division by zero at position {tok.position}")
        if isinstance(a, ScalarField):
            return a / b
        return a.scale(1 / b)

    def _power(self, a: Value, n: int, tok: Token) -> Value:
        if isinstance(a, ScalarField):
            return a ** n
        if n < 0:
            raise ExpressionSyntaxError("Negative wedge power", tok.position)
        result = type(a).scalar(ScalarField.one(self.chart))
        for _ in range(n):
            result = result.wedge(a)
        return result

    def _wedge(self, a: Value, b: Value, tok: Token) -> Value:
        if isinstance(a, ScalarField) and isinstance(b, ScalarField):
            raise ExpressionSyntaxError("Exponent must be an integer literal", tok.position)
        if isinstance(a, ScalarField):
            return b.scale(a)
        if isinstance(b, ScalarField):
            return a.scale(b)
        if type(a) is not type(b):
            raise ExpressionSyntaxError("Cannot wedge a form with a multivector field", tok.position)
        return a.wedge(b)


# ============ ENTRY POINTS ============

def parse_expression(text: str, chart: Chart) -> Value:
    value = ExpressionParser(text, chart).parse()
    logger.debug(f"parsed {text!r} on {chart.coords}")
    return value


def parse_form(text: str, chart: Chart, degree: Optional[int] = None) -> DifferentialForm:
    return _as_graded(parse_expression(text, chart), DifferentialForm, chart, degree, text)


def parse_multivector(text: str, chart: Chart, degree: Optional[int] = None) -> MultiVectorField:
    return _as_graded(parse_expression(text, chart), MultiVectorField, chart, degree, text)


def _as_graded(value: Value, cls, chart: Chart, degree: Optional[int], text: str):
    if isinstance(value, ScalarField):
        if value.is_zero() and degree is not None:
            return cls.zero(chart, degree)
        value = cls.scalar(value)
    if not isinstance(value, cls):
        raise ExpressionSyntaxError(f"Expected a {cls.kind} expression in {text!r}", 0)
    if value.is_zero() and degree is not None:
        return cls.zero(chart, degree)
    if degree is not None and value.degree != degree:
        raise ExpressionSyntaxError(
            f"Expected degree {degree} but {text!r} has degree {value.degree}", 0
        )
    return value
