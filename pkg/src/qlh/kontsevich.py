"""Classical oracle for rational plane curves (WDVV recursion) and P^2 products."""

from __future__ import annotations

from fractions import Fraction
from math import comb
from typing import Dict, List


def kontsevich_numbers(dmax: int) -> Dict[int, int]:
    """``N_d``: rational degree-d plane curves through ``3d - 1`` general points."""
    N = {1: 1}
    for d in range(2, dmax + 1):
        total = 0
        for da in range(1, d):
            db = d - da
            total += N[da] * N[db] * (
                da * da * db * db * comb(3 * d - 4, 3 * da - 2)
                - da ** 3 * db * comb(3 * d - 4, 3 * da - 1)
            )
        N[d] = total
    return {d: N[d] for d in range(1, dmax + 1)}


def p2_three_point(a: int, b: int, c: int, d: int, numbers: Dict[int, int]) -> Fraction:
    """``<h^a, h^b, h^c>_d`` on ``P^2`` from the N_d via the divisor and point axioms."""
    if any(x < 0 or x > 2 for x in (a, b, c)):
        return Fraction(0)
    if d == 0:
        return Fraction(1 if a + b + c == 2 else 0)
    if a + b + c != 2 + 3 * d:
        return Fraction(0)
    ins = (a, b, c)
    if 0 in ins:
        return Fraction(0)
    points = ins.count(2)
    divisors = ins.count(1)
    if points != 3 * d - 1:
        return Fraction(0)
    return Fraction(numbers[d] * d ** divisors)


def p2_small_product(a: int, b: int, dmax: int = 3) -> Dict[int, List[Fraction]]:
    """``h^a * h^b`` as ``{d: coefficients in 1, h, h^2}`` (dual of ``h^c`` is ``h^{2-c}``)."""
    numbers = kontsevich_numbers(max(dmax, 1))
    out = {}
    for d in range(dmax + 1):
        vec = [Fraction(0)] * 3
        for c in range(3):
            vec[2 - c] = p2_three_point(a, b, c, d, numbers)
        if any(vec):
            out[d] = vec
    return out
