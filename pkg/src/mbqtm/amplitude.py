"""Exact-expression syntax for transition amplitudes.

Amplitudes are written as sums of terms built from rationals and square
roots of integers, optionally imaginary::

    ampl     := cterm (("+" | "-") cterm)*
    cterm    := ["-"] rterm ["i"]
    rterm    := "(" rterm ")"
              | rational
              | rational ["*"] "sqrt(" int ")"
              | rational "/sqrt(" int ")"
              | "sqrt(" int ")" ["/" int]
    rational := ["-"] int ["/" int]

The parenthesised form lets the imaginary unit follow a compound term, as in
``-1/2 + (sqrt(3)/2)i``.  Evaluation uses exact rationals and a single
correctly-rounded square root, so the result is within a few ulps.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ParseError

__all__ = ["Amplitude", "parse_amplitude"]

_TOKEN = re.compile(r"\s*(?:(?P<int>\d+)|(?P<sqrt>sqrt)|(?P<op>[-+*/()i]))")


@dataclass(frozen=True)
class Amplitude:
    value: complex
    text: str | None = field(default=None, compare=False)

    def __post_init__(self):
        v = complex(self.value)
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise ValueError(f"amplitude must be finite, got {v!r}")
        object.__setattr__(self, "value", v)

    def __str__(self):
        return self.text if self.text is not None else format_complex(self.value)


def format_complex(z: complex) -> str:
    if z.imag == 0:
        return repr(z.real)
    return f"{z.real!r}{z.imag:+.17g}i"


def _tokenize(text):
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        m = _TOKEN.match(text, i)
        if m is None or m.end() == i:
            raise ParseError(f"unexpected character {text[i]!r} in amplitude", pos=i)
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), start))
        i = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self, ahead=0):
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def is_op(self, ch, ahead=0):
        kind, val, _ = self.peek(ahead)
        return kind == "op" and val == ch

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, ch):
        kind, val, pos = self.take()
        if kind != "op" or val != ch:
            raise ParseError(f"expected {ch!r}, found {val or 'end of input'!r}", pos=pos)

    def integer(self):
        kind, val, pos = self.take()
        if kind != "int":
            raise ParseError(f"expected integer, found {val or 'end of input'!r}", pos=pos)
        return int(val), pos

    def sqrt_call(self):
        kind, val, pos = self.take()
        if kind != "sqrt":
            raise ParseError(f"expected 'sqrt', found {val or 'end of input'!r}", pos=pos)
        self.expect_op("(")
        radicand, _ = self.integer()
        self.expect_op(")")
        return radicand

    def rational(self):
        sign = 1
        if self.is_op("-"):
            self.take()
            sign = -1
        num, _ = self.integer()
        # "a/b" is a rational only when an integer follows; "a/sqrt(..)" is handled by rterm
        if self.is_op("/") and self.peek(1)[0] == "int":
            self.take()
            den, pos = self.integer()
            if den == 0:
                raise ParseError("division by zero", pos=pos)
            return Fraction(sign * num, den)
        return Fraction(sign * num)

    def rterm(self):
        """Returns (rational coefficient, radicand) meaning coef * sqrt(radicand)."""
        kind, val, pos = self.peek()
        if kind == "op" and val == "(":
            self.take()
            sign = -1 if self.is_op("-") else 1
            if sign < 0:
                self.take()
            coef, rad = self.rterm()
            self.expect_op(")")
            return sign * coef, rad
        if kind == "sqrt":
            rad = self.sqrt_call()
            coef = Fraction(1)
            if self.is_op("/"):
                self.take()
                den, dpos = self.integer()
                if den == 0:
                    raise ParseError("division by zero", pos=dpos)
                coef = Fraction(1, den)
            return coef, rad
        coef = self.rational()
        if self.is_op("*"):
            self.take()
            return coef, self.sqrt_call()
        if self.peek()[0] == "sqrt":
            return coef, self.sqrt_call()
        if self.is_op("/") and self.peek(1)[0] == "sqrt":
            self.take()
            spos = self.peek()[2]
            rad = self.sqrt_call()
            if rad == 0:
                raise ParseError("division by zero", pos=spos)
            return coef / rad, rad
        return coef, 1

    def cterm(self):
        sign = 1
        while self.is_op("-") and not (self.peek(1)[0] == "int"):
            self.take()
            sign = -sign
        coef, rad = self.rterm()
        imaginary = False
        if self.is_op("i"):
            self.take()
            imaginary = True
        return sign * coef, rad, imaginary

    def amplitude(self):
        terms = [self.cterm()]
        while self.is_op("+") or self.is_op("-"):
            _, op, _ = self.take()
            coef, rad, imag = self.cterm()
            terms.append((coef if op == "+" else -coef, rad, imag))
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {val!r} after amplitude", pos=pos)
        return terms


def _evaluate(terms):
    real = 0.0
    imag = 0.0
    for coef, rad, is_imag in terms:
        try:
            # coef * sqrt(rad) computed as sqrt(coef^2 * rad) keeps one rounding step
            mag = math.sqrt(float(coef * coef * rad)) if rad != 1 else abs(float(coef))
        except OverflowError as exc:
            raise ParseError("amplitude literal overflows double precision") from exc
        part = math.copysign(mag, float(coef.numerator))
        if not math.isfinite(part):
            raise ParseError("amplitude literal overflows double precision")
        if is_imag:
            imag += part
        else:
            real += part
    return complex(real, imag)


def parse_amplitude(text: str) -> Amplitude:
    """Parse and evaluate an amplitude expression.

    >>> parse_amplitude("1/sqrt(2)").value
    (0.7071067811865476+0j)
    >>> parse_amplitude("-1/2 + (sqrt(3)/2)i").value
    (-0.5+0.8660254037844386j)
    """
    if not text or not text.strip():
        raise ParseError("empty amplitude", pos=0)
    terms = _Parser(text).amplitude()
    return Amplitude(_evaluate(terms), text.strip())
