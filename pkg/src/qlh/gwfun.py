"""Factorial factors and hypergeometric I-functions.

All series are stored with the divisor exponential stripped (see
:mod:`qlh.series`).  For ``s = L.beta``

* ``s >= 0``: ``(L)_beta = prod_{m=1}^{s} (L + m z)``
* ``s < 0``: ``1/(L)_beta = prod_{m=s+1}^{0} (L + m z)``, which always
  contains the bare factor ``L``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

from .cohomring import BundleData, RingPresentation
from .errors import ExtendedModeRequired, NotInvertible
from .linalg import ZERO
from .series import (
    DEFAULT_TRUNCATION,
    HL,
    QSeries,
)


# ---------------------------------------------------------------------------
# factorial factors inside a ring


def linear_form(ring: RingPresentation, divisor: Sequence[int], m) -> HL:
    """The class ``D + m z``."""
    out: HL = {}
    d = ring.divisor_class(divisor)
    if any(d):
        out[0] = d
    if m:
        out[1] = tuple(Fraction(m) * x for x in ring.unit_vector())
    return out


def inverse_linear_form(ring: RingPresentation, divisor: Sequence[int], m: int) -> HL:
    """``1/(D + m z) = sum_j (-D)^j / (m z)^{j+1}`` for ``m != 0``; finite by nilpotency."""
    if not m:
        raise NotInvertible("the form D + 0z is nilpotent")
    d = ring.divisor_class(divisor)
    minus_d = tuple(-x for x in d)
    out: HL = {}
    power = ring.unit_vector()
    j = 0
    mf = Fraction(m)
    while any(power):
        out[-j - 1] = tuple(x / mf ** (j + 1) for x in power)
        power = ring.mul(power, minus_d)
        j += 1
    return out


def _product(ring: RingPresentation, factors: Iterable[HL]) -> HL:
    out: HL = {0: ring.unit_vector()}
    for f in factors:
        out = ring.hl_mul(out, f)
        if not out:
            break
    return out


def factorial_factor(divisor: Sequence[int], beta, ring: RingPresentation, reciprocal: bool = False) -> HL:
    """``(L)_beta`` or, with ``reciprocal=True``, ``1/(L)_beta``."""
    s = ring.lattice.pair(divisor, beta)
    if not reciprocal:
        if s < 0:
            raise ExtendedModeRequired(f"L.beta = {s} < 0 needs the reciprocal convention")
        return _product(ring, (linear_form(ring, divisor, m) for m in range(1, s + 1)))
    if s < 0:
        return _product(ring, (linear_form(ring, divisor, m) for m in range(s + 1, 1)))
    return _product(ring, (inverse_linear_form(ring, divisor, m) for m in range(1, s + 1)))


# ---------------------------------------------------------------------------
# I-functions


def j_point(truncation: int = DEFAULT_TRUNCATION, zwindow=None) -> QSeries:
    from .cohomring import build_point

    return QSeries.unit(build_point(), truncation, zwindow)


def pushforward(beta, base_rank: int):
    return tuple(beta[:base_rank])


def i_function_bundle(j_x: QSeries, b: BundleData, p_ring: RingPresentation,
                      truncation: Optional[int] = None, zwindow=None) -> QSeries:
    """Hypergeometric modification of a base J-function along a split bundle."""
    base = b.base
    if j_x.ring is not base:
        raise ValueError("J_X must live over the bundle's base ring")
    trunc = j_x.truncation if truncation is None else truncation
    lat = p_ring.lattice
    nb = base.lattice.rank
    fiber_forms = [tuple(l) + (1,) for l in b.line_bundles]
    terms: Dict[tuple, HL] = {}
    for beta in lat.strata(trunc):
        jb = j_x[pushforward(beta, nb)]
        if not jb:
            continue
        # pull back: base basis index j sits at position j of the a = 0 block
        val: HL = {e: tuple(v) + (ZERO,) * (p_ring.dim - base.dim) for e, v in jb.items()}
        for form in fiber_forms:
            val = p_ring.hl_mul(val, factorial_factor(form, beta, p_ring, reciprocal=True))
            if not val:
                break
        if val:
            terms[beta] = val
    return QSeries(p_ring, terms, trunc, zwindow)


def i_function_tower(ring: RingPresentation, truncation: int = DEFAULT_TRUNCATION, zwindow=None) -> QSeries:
    """I-function of a tower built from the point, one level at a time."""
    levels = list(ring.levels)
    rings = [lv.base for lv in levels] + [ring]
    cur = QSeries.unit(rings[0], truncation)
    for lv, nxt in zip(levels, rings[1:]):
        win = zwindow if nxt is ring else None
        cur = i_function_bundle(cur, lv, nxt, truncation, win)
    if not levels:
        cur = QSeries.unit(ring, truncation, zwindow)
    return cur


def i_function_complete_intersection(j_p: QSeries, bundles: Sequence[Sequence[int]]) -> QSeries:
    """Twist by ``prod_i (L_i)_beta``; bundles must pair nonnegatively with every stratum."""
    ring = j_p.ring
    terms = {}
    for beta, val in j_p.terms.items():
        for d in bundles:
            val = ring.hl_mul(val, factorial_factor(d, beta, ring))
        terms[beta] = val
    out = j_p.like(terms)
    return out


# ---------------------------------------------------------------------------
# symbolic factorial ratios (blow-up and determinantal factors)


@dataclass(frozen=True)
class SymDivisor:
    """A formal divisor with its intersection number against a fixed class."""

    coeffs: Tuple[Tuple[str, int], ...]
    degree: int

    @classmethod
    def named(cls, name: str, degree: int) -> "SymDivisor":
        return cls(((name, 1),), degree)

    @classmethod
    def zero(cls) -> "SymDivisor":
        return cls((), 0)

    def __add__(self, other: "SymDivisor") -> "SymDivisor":
        c = dict(self.coeffs)
        for k, v in other.coeffs:
            c[k] = c.get(k, 0) + v
        return SymDivisor(tuple(sorted((k, v) for k, v in c.items() if v)), self.degree + other.degree)

    def __neg__(self):
        return SymDivisor(tuple((k, -v) for k, v in self.coeffs), -self.degree)

    def __sub__(self, other):
        return self + (-other)


Form = Tuple[Tuple[Tuple[str, int], ...], int]  # (divisor coefficients, z coefficient)


def form_name(form: Form) -> str:
    coeffs, m = form
    parts = []
    for k, v in coeffs:
        if v == 1:
            parts.append(f"+{k}")
        elif v == -1:
            parts.append(f"-{k}")
        else:
            parts.append(f"{v:+d}*{k}")
    if m:
        parts.append("+z" if m == 1 else ("-z" if m == -1 else f"{m:+d}*z"))
    s = "".join(parts) or "0"
    return s[1:] if s.startswith("+") else s


@dataclass
class FactorialRatio:
    """Product of linear forms ``D + m z`` with integer exponents, fully cancelled.

    ``tag`` records a symbolic exponential prefactor that is never expanded.
    """

    factors: Dict[Form, int] = field(default_factory=dict)
    tag: Optional[Tuple[str, int]] = None

    def times(self, form: Form, k: int) -> "FactorialRatio":
        f = dict(self.factors)
        f[form] = f.get(form, 0) + k
        if not f[form]:
            del f[form]
        return FactorialRatio(f, self.tag)

    def __mul__(self, other: "FactorialRatio") -> "FactorialRatio":
        out = FactorialRatio(dict(self.factors), self.tag or other.tag)
        for form, k in other.factors.items():
            out = out.times(form, k)
        return out

    def inverse(self) -> "FactorialRatio":
        return FactorialRatio({f: -k for f, k in self.factors.items()}, self.tag)

    def power(self, n: int) -> "FactorialRatio":
        return FactorialRatio({f: k * n for f, k in self.factors.items() if k * n}, self.tag)

    def is_one(self) -> bool:
        return not self.factors

    def evaluate(self, ring: RingPresentation, assignment: Mapping[str, Sequence[int]]) -> HL:
        """Expand inside ``ring`` with each symbol mapped to a divisor vector."""
        pieces = []
        for (coeffs, m), k in sorted(self.factors.items()):
            vec = [0] * ring.ngens
            for name, c in coeffs:
                for a, x in enumerate(assignment[name]):
                    vec[a] += c * x
            base = linear_form(ring, vec, m) if k > 0 else inverse_linear_form(ring, vec, m)
            pieces.extend([base] * abs(k))
        return _product(ring, pieces)

    def __str__(self):
        num = [form_name(f) for f, k in sorted(self.factors.items()) for _ in range(max(k, 0))]
        den = [form_name(f) for f, k in sorted(self.factors.items()) for _ in range(max(-k, 0))]
        s = "*".join(f"({x})" for x in num) or "1"
        if den:
            s += "/(" + "*".join(f"({x})" for x in den) + ")"
        if self.tag and self.tag[1] is not None:
            s = f"exp[{self.tag[0]}]*" + s
        return s


def sym_factorial(d: SymDivisor) -> FactorialRatio:
    """``(D)_beta`` as a ratio of linear forms, using the reciprocal convention when negative."""
    out = FactorialRatio()
    s = d.degree
    if s >= 0:
        for m in range(1, s + 1):
            out = out.times((d.coeffs, m), 1)
    else:
        for m in range(s + 1, 1):
            out = out.times((d.coeffs, m), -1)
    return out


def blowup_relative_factor(D: Sequence[SymDivisor], E: SymDivisor, tag: str = "s") -> FactorialRatio:
    """``e^{s(E/z + E.beta)} prod_i (D_i)_b / ((D_i - E)_b (E)_b) * (E)_b^{r-1}``."""
    r = len(D)
    out = FactorialRatio()
    for d in D:
        out = out * sym_factorial(d) * sym_factorial(d - E).inverse() * sym_factorial(E).inverse()
    out = out * sym_factorial(E).power(r - 1)
    out.tag = (f"{tag}*({form_name((E.coeffs, 0))}/z{E.degree:+d})", E.degree) if E.coeffs else None
    return out


def determinantal_relative_factor(L: Sequence[SymDivisor], h: SymDivisor) -> FactorialRatio:
    """``prod_{i=0}^{n} (L_i + h)_b / ((h)_b^{n+1} (sum L_i)_b)``."""
    out = FactorialRatio()
    total = SymDivisor.zero()
    for li in L:
        out = out * sym_factorial(li + h)
        total = total + li
    out = out * sym_factorial(h).power(len(L)).inverse()
    out = out * sym_factorial(total).inverse()
    return out
