"""Exact rational time arithmetic and its JSON number encoding.

Times and works are `fractions.Fraction` throughout the library so that the
interval constructions (halving, thirds, landmark spacing) stay exact.  Only
energies, which involve a real power alpha, are floats.

JSON encoding: integers serialize as ints, other rationals as "p/q" strings.
Parsing additionally accepts floats, which are read via their shortest decimal
repr (so 0.1 means 1/10, not the binary float).
"""

from __future__ import annotations

from fractions import Fraction

Rat = Fraction


def to_fraction(value, path: str = "value") -> Fraction:
    """Convert a JSON number (int, float, "p/q" string) to an exact Fraction."""
    from .errors import ParseError

    if isinstance(value, bool):
        raise ParseError(path, "expected a number, got a boolean")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        try:
            return Fraction(repr(value))
        except (ValueError, ZeroDivisionError):
            raise ParseError(path, f"not a finite number: {value!r}") from None
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError):
            raise ParseError(path, f"not a rational literal: {value!r}") from None
    if isinstance(value, Fraction):
        return value
    raise ParseError(path, f"expected a number, got {type(value).__name__}")


def fraction_to_json(value: Fraction):
    """Canonical JSON form: int when integral, "p/q" string otherwise."""
    if value.denominator == 1:
        return int(value)
    return f"{value.numerator}/{value.denominator}"
