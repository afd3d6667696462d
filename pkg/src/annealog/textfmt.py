"""Exact-value text formatting shared by the QMASM-like emitters/parsers."""

from __future__ import annotations

from fractions import Fraction


def format_coeff(value: Fraction) -> str:
    """Dyadic rationals print as exact decimals ("0.5", "-1.0"), others as
    fractions ("1/3")."""
    value = Fraction(value)
    den = value.denominator
    if den & (den - 1) == 0:  # power of two -> finite decimal
        k = den.bit_length() - 1
        scaled = value.numerator * 5**k  # value = scaled / 10^k
        sign = "-" if scaled < 0 else ""
        digits = str(abs(scaled)).rjust(k + 1, "0")
        whole, frac = digits[: len(digits) - k], digits[len(digits) - k:]
        frac = frac.rstrip("0") or "0"
        return f"{sign}{whole}.{frac}"
    return f"{value.numerator}/{value.denominator}"


def parse_coeff(text: str) -> Fraction:
    """Parse decimals, fractions and plain integers exactly."""
    return Fraction(text)
