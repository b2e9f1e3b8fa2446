"""Schubert calculus on G(2,5), used as an independent line-count oracle."""

from __future__ import annotations

from fractions import Fraction
from math import comb
from typing import Dict, Tuple

Partition = Tuple[int, int]
Cycle = Dict[Partition, Fraction]

ROWS, COLS = 2, 3  # partitions inside a 2 x 3 box


def _clean(c: Cycle) -> Cycle:
    return {k: v for k, v in c.items() if v}


def pieri_row(k: int, lam: Partition) -> Cycle:
    """sigma_k * sigma_lam: add k boxes, no two in one column."""
    a, b = lam
    out: Cycle = {}
    for m1 in range(a, COLS + 1):
        m2 = a + b + k - m1
        if b <= m2 <= a and m2 <= m1:
            out[(m1, m2)] = Fraction(1)
    return out


def pieri_col(k: int, lam: Partition) -> Cycle:
    """sigma_{1^k} * sigma_lam: add k boxes, no two in one row."""
    a, b = lam
    out: Cycle = {}
    for da in (0, 1):
        db = k - da
        if db not in (0, 1):
            continue
        m = (a + da, b + db)
        if m[0] <= COLS and m[1] <= m[0]:
            out[m] = Fraction(1)
    return out


def mul_special(kind: str, c: Cycle) -> Cycle:
    out: Cycle = {}
    for lam, v in c.items():
        prod = pieri_row(int(kind[1:]), lam) if kind[0] == "r" else pieri_col(int(kind[1:]), lam)
        for mu, w in prod.items():
            out[mu] = out.get(mu, Fraction(0)) + v * w
    return _clean(out)


def integrate(c: Cycle) -> Fraction:
    return c.get((COLS, COLS), Fraction(0))


def symmetric_to_elementary(poly: Dict[Tuple[int, int], int]) -> Dict[Tuple[int, int], int]:
    """Rewrite a symmetric polynomial in x1, x2 as ``{(i, j): c}`` meaning c*e1^i*e2^j."""
    poly = {k: v for k, v in poly.items() if v}
    out: Dict[Tuple[int, int], int] = {}
    while poly:
        a, b = max(poly)
        c = poly[(a, b)]
        if a < b:
            raise ValueError("polynomial is not symmetric")
        out[(a - b, b)] = out.get((a - b, b), 0) + c
        # subtract c * e1^(a-b) * e2^b = c * (x1+x2)^(a-b) * (x1 x2)^b
        n = a - b
        for i in range(n + 1):
            key = (b + n - i, b + i)
            poly[key] = poly.get(key, 0) - c * comb(n, i)
        poly = {k: v for k, v in poly.items() if v}
    return out


def sextic_chern_polynomial() -> Dict[Tuple[int, int], int]:
    """prod_{k=0}^{5} ((5-k) x1 + k x2) expanded."""
    poly = {(0, 0): 1}
    for k in range(6):
        new: Dict[Tuple[int, int], int] = {}
        for (i, j), c in poly.items():
            for (di, dj), w in (((1, 0), 5 - k), ((0, 1), k)):
                if w:
                    key = (i + di, j + dj)
                    new[key] = new.get(key, 0) + c * w
        poly = new
    return poly


def integrate_chern_monomials(elem: Dict[Tuple[int, int], int], c2: str = "sigma11") -> Fraction:
    """Integrate ``sum c e1^i e2^j`` with e1 = sigma_1 and e2 = the chosen codim-2 class."""
    kind2 = "c2" if c2 == "sigma11" else "r2"
    total = Fraction(0)
    for (i, j), c in elem.items():
        cyc: Cycle = {(0, 0): Fraction(1)}
        for _ in range(i):
            cyc = mul_special("r1", cyc)
        for _ in range(j):
            cyc = mul_special(kind2, cyc)
        total += c * integrate(cyc)
    return total


def sigma1_degree() -> Fraction:
    return integrate_chern_monomials({(6, 0): 1})


def grassmannian_g25_lines_oracle(c2: str = "sigma11") -> int:
    """Integral of c_6(Sym^5 S*) over G(2,5) via the splitting principle and Pieri.

    With the usual identification ``c(S*) = 1 + sigma_1 + sigma_{1,1}``;
    pass ``c2="sigma2"`` for the transposed labelling.
    """
    value = integrate_chern_monomials(symmetric_to_elementary(sextic_chern_polynomial()), c2)
    assert value.denominator == 1
    return int(value)
