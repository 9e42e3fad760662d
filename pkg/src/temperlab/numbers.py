"""Parsing and formatting of exact rationals ("p/q" strings)."""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Union

Number = Union[int, float, Fraction]


def parse_number(value, exact: bool = True) -> Number:
    """Parse an int, float, or "p/q" string.

    With ``exact`` the result is a Fraction (decimal strings are read
    exactly, so "0.1" becomes 1/10); otherwise a float.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, Fraction):
        return value if exact else float(value)
    if isinstance(value, int):
        return Fraction(value) if exact else float(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite entry {value!r}")
        return Fraction(value) if exact else value
    if isinstance(value, str):
        q = Fraction(value.strip())
        return q if exact else float(q)
    raise TypeError(f"cannot parse {value!r} as a number")


def format_fraction(q: Fraction) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def is_exact(x) -> bool:
    return isinstance(x, Rational)


def rationalize(x: float, max_den: int = 64, tol: float = 1e-9):
    """Closest fraction with denominator <= max_den if within tol, else None."""
    q = Fraction(x).limit_denominator(max_den)
    if abs(float(q) - x) <= tol:
        return q
    return None
