"""Exact-rational helpers for storage and display."""

from __future__ import annotations

from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction
from numbers import Rational

_PLACES = Decimal("0.0001")


def to_text(q: Rational) -> str:
    """Serialize as ``"numerator/denominator"`` so the value survives a round trip bit-exactly."""
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def from_text(text: str) -> Fraction:
    num, sep, den = text.partition("/")
    if not sep:
        raise ValueError(f"expected 'numerator/denominator', got {text!r}")
    return Fraction(int(num), int(den))


def decimal4(value: Rational | float) -> str:
    """Render with four decimal places. Display only; never fed back into computation."""
    if isinstance(value, float):
        return f"{value:.4f}"
    q = Fraction(value)
    with localcontext() as ctx:
        ctx.prec = 60
        d = Decimal(q.numerator) / Decimal(q.denominator)
        return str(d.quantize(_PLACES, rounding=ROUND_HALF_EVEN))


def parse_threshold(text: str) -> Fraction:
    """Accept ``"1"``, ``"0.75"`` or ``"3/4"``."""
    return Fraction(text.strip())
