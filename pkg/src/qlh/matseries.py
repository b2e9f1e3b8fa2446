"""Matrix-valued truncated Novikov series with Laurent-in-z entries.

A value is ``{beta: {z exponent: dense matrix}}``; missing keys are zero.
"""

from __future__ import annotations

from typing import Dict, Optional

from .linalg import Matrix, add, identity, is_zero, matmul, scale, sub, zeros
from .series import Beta, CurveLattice, add_beta, sort_strata, sub_beta

MZ = Dict[int, Matrix]
MS = Dict[Beta, MZ]


def mz_clean(a: MZ) -> MZ:
    return {e: m for e, m in a.items() if not is_zero(m)}


def mz_add(a: MZ, b: MZ, sign: int = 1) -> MZ:
    out = dict(a)
    for e, m in b.items():
        if e in out:
            out[e] = add(out[e], m) if sign == 1 else sub(out[e], m)
        else:
            out[e] = m if sign == 1 else scale(-1, m)
    return mz_clean(out)


def mz_mul(a: MZ, b: MZ) -> MZ:
    out: MZ = {}
    for e1, m1 in a.items():
        for e2, m2 in b.items():
            p = matmul(m1, m2)
            out[e1 + e2] = add(out[e1 + e2], p) if e1 + e2 in out else p
    return mz_clean(out)


def mz_scale(c, a: MZ) -> MZ:
    return mz_clean({e: scale(c, m) for e, m in a.items()})


def mz_zshift(a: MZ, k: int) -> MZ:
    return {e + k: m for e, m in a.items()}


def ms_mul(x: MS, y: MS, lattice: CurveLattice, truncation: int) -> MS:
    out: MS = {}
    for b1, m1 in x.items():
        d1 = lattice.degree(b1)
        for b2, m2 in y.items():
            if d1 + lattice.degree(b2) > truncation:
                continue
            b = add_beta(b1, b2)
            out[b] = mz_add(out.get(b, {}), mz_mul(m1, m2))
    return {b: v for b, v in out.items() if v}


def ms_add(x: MS, y: MS, sign: int = 1) -> MS:
    out = dict(x)
    for b, v in y.items():
        out[b] = mz_add(out.get(b, {}), v, sign)
    return {b: v for b, v in out.items() if v}


def ms_identity(n: int, lattice: CurveLattice) -> MS:
    return {lattice.zero: {0: identity(n)}}


def ms_inverse_unipotent(b: MS, n: int, lattice: CurveLattice, truncation: int) -> MS:
    """Inverse of a series whose q^0 part is the identity."""
    zero = lattice.zero
    if b.get(zero) != {0: identity(n)}:
        raise ValueError("expected identity leading term")
    inv: MS = {zero: {0: identity(n)}}
    for beta in lattice.strata(truncation):
        if beta == zero:
            continue
        acc: MZ = {}
        for b1, m1 in b.items():
            if b1 == zero:
                continue
            rest = sub_beta(beta, b1)
            if rest in inv and all(c >= 0 for c in rest):
                acc = mz_add(acc, mz_mul(m1, inv[rest]))
        if acc:
            inv[beta] = mz_scale(-1, acc)
    return inv


def ms_at_z(x: MS, z_value) -> Dict[Beta, Matrix]:
    """Evaluate the z-dependence; ``z_value=0`` requires no negative powers."""
    out = {}
    for b, mz in x.items():
        n = len(next(iter(mz.values())))
        acc = zeros(n)
        for e, m in mz.items():
            if z_value == 0:
                if e < 0:
                    raise ValueError("negative z power at z = 0")
                if e == 0:
                    acc = add(acc, m)
            else:
                acc = add(acc, scale(z_value ** e, m))
        if not is_zero(acc):
            out[b] = acc
    return out


def ms_zfree(x: MS) -> Optional[Dict[Beta, Matrix]]:
    """The z^0 parts if no other powers occur, else None."""
    out = {}
    for b, mz in x.items():
        if set(mz) - {0}:
            return None
        out[b] = mz[0]
    return out


def ms_entry(x: Dict[Beta, Matrix], i: int, j: int) -> Dict[Beta, object]:
    return {b: m[i][j] for b, m in x.items() if m[i][j]}


def ms_truncate(x: MS, lattice: CurveLattice, degree: int) -> MS:
    return {b: v for b, v in x.items() if lattice.degree(b) <= degree}


def ordered(x, lattice: CurveLattice):
    return sort_strata(x, lattice)
