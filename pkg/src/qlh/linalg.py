"""Dense and sparse exact linear algebra over the rationals.

Matrices are plain lists of row lists holding ``Fraction`` entries.  Nothing
here ever touches floating point.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Dict, List, Optional, Sequence

Matrix = List[List[Fraction]]

ZERO = Fraction(0)
ONE = Fraction(1)


def frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


def as_matrix(rows: Sequence[Sequence]) -> Matrix:
    return [[frac(x) for x in row] for row in rows]


def zeros(n: int, m: Optional[int] = None) -> Matrix:
    m = n if m is None else m
    return [[ZERO] * m for _ in range(n)]


def identity(n: int) -> Matrix:
    out = zeros(n)
    for i in range(n):
        out[i][i] = ONE
    return out


def copy(a: Matrix) -> Matrix:
    return [row[:] for row in a]


def transpose(a: Matrix) -> Matrix:
    return [list(col) for col in zip(*a)] if a else []


def matmul(a: Matrix, b: Matrix) -> Matrix:
    if not a:
        return []
    m = len(b[0]) if b else 0
    out = zeros(len(a), m)
    for i, row in enumerate(a):
        orow = out[i]
        for k, aik in enumerate(row):
            if aik:
                brow = b[k]
                for j in range(m):
                    bkj = brow[j]
                    if bkj:
                        orow[j] += aik * bkj
    return out


def matvec(a: Matrix, v: Sequence[Fraction]) -> List[Fraction]:
    return [sum((x * y for x, y in zip(row, v) if x and y), ZERO) for row in a]


def add(a: Matrix, b: Matrix) -> Matrix:
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def sub(a: Matrix, b: Matrix) -> Matrix:
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def scale(c, a: Matrix) -> Matrix:
    c = frac(c)
    return [[c * x for x in row] for row in a]


def is_zero(a: Matrix) -> bool:
    return all(not x for row in a for x in row)


def commutator(a: Matrix, b: Matrix) -> Matrix:
    return sub(matmul(a, b), matmul(b, a))


def rref(a: Matrix):
    """Reduced row echelon form; returns ``(R, pivot_columns)``."""
    r = copy(a)
    rows = len(r)
    cols = len(r[0]) if rows else 0
    pivots = []
    i = 0
    for j in range(cols):
        p = next((k for k in range(i, rows) if r[k][j]), None)
        if p is None:
            continue
        r[i], r[p] = r[p], r[i]
        inv = ONE / r[i][j]
        r[i] = [x * inv for x in r[i]]
        for k in range(rows):
            if k != i and r[k][j]:
                c = r[k][j]
                r[k] = [x - c * y for x, y in zip(r[k], r[i])]
        pivots.append(j)
        i += 1
        if i == rows:
            break
    return r, pivots


def rank(a: Matrix) -> int:
    if not a or not a[0]:
        return 0
    return len(rref(a)[1])


def inverse(a: Matrix) -> Matrix:
    n = len(a)
    aug = [list(row) + e for row, e in zip(a, identity(n))]
    r, piv = rref(aug)
    if piv[:n] != list(range(n)):
        raise ZeroDivisionError("singular matrix")
    return [row[n:] for row in r]


def det(a: Matrix) -> Fraction:
    r = copy(a)
    n = len(r)
    out = ONE
    for j in range(n):
        p = next((k for k in range(j, n) if r[k][j]), None)
        if p is None:
            return ZERO
        if p != j:
            r[j], r[p] = r[p], r[j]
            out = -out
        out *= r[j][j]
        for k in range(j + 1, n):
            if r[k][j]:
                c = r[k][j] / r[j][j]
                r[k] = [x - c * y for x, y in zip(r[k], r[j])]
    return out


def nullspace(a: Matrix, ncols: Optional[int] = None) -> List[List[Fraction]]:
    """Basis of ``{v : a v = 0}``, one vector per free column."""
    cols = len(a[0]) if a else (ncols or 0)
    if not a:
        return [[ONE if i == j else ZERO for i in range(cols)] for j in range(cols)]
    r, piv = rref(a)
    free = [j for j in range(cols) if j not in piv]
    basis = []
    for f in free:
        v = [ZERO] * cols
        v[f] = ONE
        for i, p in enumerate(piv):
            v[p] = -r[i][f]
        basis.append(v)
    return basis


def solve(a: Matrix, b: Sequence[Fraction]) -> Optional[List[Fraction]]:
    """One solution of ``a x = b`` (free variables set to zero), or None."""
    cols = len(a[0]) if a else 0
    aug = [list(row) + [frac(v)] for row, v in zip(a, b)]
    r, piv = rref(aug)
    if cols in piv:
        return None
    x = [ZERO] * cols
    for i, p in enumerate(piv):
        x[p] = r[i][cols]
    return x


def solve_sparse(rows: List[Dict[int, Fraction]], rhs: List[Fraction], nvars: int) -> Optional[Dict[int, Fraction]]:
    """Gauss-Jordan on dict rows; returns a sparse solution or None if inconsistent."""
    pivot_rows: Dict[int, tuple] = {}
    order = []
    for row, b in zip(rows, rhs):
        row = {k: v for k, v in row.items() if v}
        b = frac(b)
        # eliminate existing pivots
        changed = True
        while changed:
            changed = False
            for col in list(row):
                if col in pivot_rows and row.get(col):
                    prow, pb = pivot_rows[col]
                    c = row[col]
                    for k, v in prow.items():
                        nv = row.get(k, ZERO) - c * v
                        if nv:
                            row[k] = nv
                        else:
                            row.pop(k, None)
                    b -= c * pb
                    changed = True
        if not row:
            if b:
                return None
            continue
        col = min(row)
        c = row[col]
        row = {k: v / c for k, v in row.items()}
        b = b / c
        # back-substitute into earlier pivots to keep them reduced
        for pc in order:
            prow, pb = pivot_rows[pc]
            if col in prow:
                f = prow[col]
                nrow = dict(prow)
                for k, v in row.items():
                    nv = nrow.get(k, ZERO) - f * v
                    if nv:
                        nrow[k] = nv
                    else:
                        nrow.pop(k, None)
                pivot_rows[pc] = (nrow, pb - f * b)
        pivot_rows[col] = (row, b)
        order.append(col)
    sol = {}
    for col, (row, b) in pivot_rows.items():
        if b:
            sol[col] = b
    return sol


def integer_kernel_basis(a: Sequence[Sequence[int]]) -> List[List[int]]:
    """Saturated integer basis of ``{v in Z^n : a v = 0}``.

    Column-style Hermite reduction: unimodular column operations bring ``a``
    to echelon form; the columns of the accumulated transform that end up
    multiplying zero columns span the integer kernel.
    """
    m = len(a)
    n = len(a[0]) if m else 0
    work = [list(map(int, row)) for row in a]
    u = [[1 if i == j else 0 for j in range(n)] for i in range(n)]

    def colop(i, j, p, q, r, s):
        # (col_i, col_j) <- (p col_i + q col_j, r col_i + s col_j)
        for mat in (work, u):
            for row in mat:
                x, y = row[i], row[j]
                row[i], row[j] = p * x + q * y, r * x + s * y

    lead = 0
    for row_idx in range(m):
        if lead >= n:
            break
        for j in range(lead + 1, n):
            x, y = work[row_idx][lead], work[row_idx][j]
            if y == 0:
                continue
            g, s, t = _xgcd(x, y)
            colop(lead, j, s, t, -y // g, x // g)
        if work[row_idx][lead] != 0:
            lead += 1
    basis = []
    for j in range(lead, n):
        col = [u[i][j] for i in range(n)]
        g = 0
        for x in col:
            g = gcd(g, x)
        if g:
            col = [x // g for x in col]
        basis.append(col)
    return basis


def _xgcd(a: int, b: int):
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def fmt(x: Fraction) -> str:
    x = frac(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
