"""Small exact-arithmetic helpers shared by the certification modules."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

Rational = Union[int, str, float, Fraction]


def frac(x: Rational) -> Fraction:
    """Coerce to Fraction.  Strings parse exactly ("0.05" -> 1/20, "1/3" -> 1/3)."""
    if isinstance(x, Fraction):
        return x
    return Fraction(x)


def ceil_frac(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def exact_sqrt(x: Fraction) -> Fraction | None:
    """Square root of x when it is the square of a rational, else None."""
    if x < 0:
        raise ValueError("negative radicand")
    rn = math.isqrt(x.numerator)
    rd = math.isqrt(x.denominator)
    if rn * rn == x.numerator and rd * rd == x.denominator:
        return Fraction(rn, rd)
    return None


def sqrt_upper(x: Fraction, scale: int = 1 << 64) -> Fraction:
    """Smallest multiple of 1/scale that is >= sqrt(x); exact when possible."""
    ex = exact_sqrt(x)
    if ex is not None:
        return ex
    # want r/scale >= sqrt(p/q)  <=>  r^2 * q >= p * scale^2
    p, q = x.numerator, x.denominator
    target = p * scale * scale
    r = math.isqrt(target // q)
    while r * r * q < target:
        r += 1
    return Fraction(r, scale)
