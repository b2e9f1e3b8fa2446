"""Truncated Novikov series with cohomology-valued Laurent-in-z coefficients.

A series stores ``f`` where the full generating function is
``exp((t0 + t1)/z) * f``; the exponential prefactor is never materialised.
Each Novikov stratum (a curve class, in cone coordinates) carries a
cohomology class with coefficients in Q[z, 1/z], held as a map
``z exponent -> coefficient vector in the ring basis``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .errors import (
    LaurentModeRequired,
    MalformedLeadingTerm,
    NotInvertible,
    RingMismatch,
    ZWindowOverflow,
)
from .linalg import ONE, ZERO, fmt, frac

Beta = Tuple[int, ...]
Vec = Tuple[Fraction, ...]
HL = Dict[int, Vec]  # z exponent -> class coefficients

NORMALIZATION = "divisor-exponential-stripped"
DEFAULT_TRUNCATION = 6


# ---------------------------------------------------------------------------
# curve classes


@dataclass(frozen=True)
class CurveLattice:
    """Curve classes in coordinates over a simplicial set of cone generators.

    ``pairing[a][g]`` is the intersection number of divisor generator ``a``
    with cone generator ``g``.  ``weights`` defines the positive degree
    functional used for truncation.
    """

    names: Tuple[str, ...]
    pairing: Tuple[Tuple[int, ...], ...]
    weights: Tuple[int, ...] = ()
    laurent: bool = False

    def __post_init__(self):
        if not self.weights:
            object.__setattr__(self, "weights", tuple(1 for _ in self.names))
        if any(w <= 0 for w in self.weights):
            raise ValueError("degree weights must be positive")

    @property
    def rank(self) -> int:
        return len(self.names)

    @property
    def zero(self) -> Beta:
        return (0,) * self.rank

    def degree(self, beta: Beta) -> int:
        return sum(w * c for w, c in zip(self.weights, beta))

    def pair(self, divisor: Sequence[int], beta: Beta) -> int:
        """Intersection number of a divisor (coefficients over generators) with beta."""
        return sum(
            d * sum(p * c for p, c in zip(row, beta))
            for d, row in zip(divisor, self.pairing)
            if d
        )

    def pairings(self, beta: Beta) -> Tuple[int, ...]:
        return tuple(sum(p * c for p, c in zip(row, beta)) for row in self.pairing)

    def is_effective(self, beta: Beta) -> bool:
        return all(c >= 0 for c in beta)

    def check(self, beta: Beta) -> Beta:
        if len(beta) != self.rank:
            raise ValueError(f"curve class {beta} has wrong rank (expected {self.rank})")
        if not self.laurent and not self.is_effective(beta):
            raise LaurentModeRequired(f"class {beta} leaves the effective cone")
        return beta

    def with_laurent(self, flag: bool = True) -> "CurveLattice":
        return replace(self, laurent=flag)

    def strata(self, degree: int) -> List[Beta]:
        """Effective classes of degree <= ``degree`` in induction order."""
        out: List[Beta] = []

        def rec(prefix, remaining):
            g = len(prefix)
            if g == self.rank:
                out.append(tuple(prefix))
                return
            w = self.weights[g]
            for c in range(remaining // w + 1):
                rec(prefix + [c], remaining - c * w)

        rec([], degree)
        return sort_strata(out, self)

    def monomial(self, beta: Beta) -> str:
        parts = []
        for name, c in zip(self.names, beta):
            if c == 1:
                parts.append(name)
            elif c:
                parts.append(f"{name}^{c}")
        return "*".join(parts) if parts else "1"


def sort_strata(betas: Iterable[Beta], lattice: CurveLattice, reverse_ties: bool = False) -> List[Beta]:
    """Mori-cone induction order: degree first, ties lexicographic on coordinates."""
    if reverse_ties:
        return sorted(betas, key=lambda b: (lattice.degree(b), tuple(-c for c in b)))
    return sorted(betas, key=lambda b: (lattice.degree(b), b))


def add_beta(a: Beta, b: Beta) -> Beta:
    return tuple(x + y for x, y in zip(a, b))


def sub_beta(a: Beta, b: Beta) -> Beta:
    return tuple(x - y for x, y in zip(a, b))


# ---------------------------------------------------------------------------
# scalar Laurent polynomials in z


class ZLaurent:
    """Finitely supported Laurent polynomial in z with rational coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping[int, object]] = None):
        self.terms: Dict[int, Fraction] = {}
        for e, c in (terms or {}).items():
            c = frac(c)
            if c:
                self.terms[int(e)] = c

    @classmethod
    def const(cls, c) -> "ZLaurent":
        return cls({0: c})

    @classmethod
    def monomial(cls, e: int, c=1) -> "ZLaurent":
        return cls({e: c})

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = ZLaurent.const(other)
        return isinstance(other, ZLaurent) and self.terms == other.terms

    def __hash__(self):
        return hash(tuple(sorted(self.terms.items())))

    def __add__(self, other):
        other = _zl(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, ZERO) + c
        return ZLaurent(out)

    __radd__ = __add__

    def __neg__(self):
        return ZLaurent({e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-_zl(other))

    def __rsub__(self, other):
        return _zl(other) - self

    def __mul__(self, other):
        other = _zl(other)
        out: Dict[int, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                out[e1 + e2] = out.get(e1 + e2, ZERO) + c1 * c2
        return ZLaurent(out)

    __rmul__ = __mul__

    def coeff(self, e: int) -> Fraction:
        return self.terms.get(e, ZERO)

    @property
    def min_exp(self) -> Optional[int]:
        return min(self.terms) if self.terms else None

    @property
    def max_exp(self) -> Optional[int]:
        return max(self.terms) if self.terms else None

    def subs_neg_z(self) -> "ZLaurent":
        return ZLaurent({e: (c if e % 2 == 0 else -c) for e, c in self.terms.items()})

    def check_window(self, window: Tuple[int, int]) -> "ZLaurent":
        lo, hi = window
        for e in self.terms:
            if e < lo or e > hi:
                raise ZWindowOverflow(f"z^{e} outside window [{lo}, {hi}]")
        return self

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms, reverse=True):
            c = fmt(self.terms[e])
            parts.append(c if e == 0 else f"{c}*z^{e}")
        return " + ".join(parts)


def _zl(x) -> ZLaurent:
    if isinstance(x, ZLaurent):
        return x
    return ZLaurent.const(x)


# ---------------------------------------------------------------------------
# cohomology-valued Laurent polynomials (plain dicts for speed)


def hl_zero() -> HL:
    return {}


def hl_const(vec: Sequence) -> HL:
    v = tuple(frac(x) for x in vec)
    return {0: v} if any(v) else {}


def hl_clean(a: HL) -> HL:
    return {e: v for e, v in a.items() if any(v)}


def hl_add(a: HL, b: HL, sign: int = 1) -> HL:
    out = dict(a)
    for e, v in b.items():
        if e in out:
            w = tuple(x + sign * y for x, y in zip(out[e], v))
            if any(w):
                out[e] = w
            else:
                del out[e]
        else:
            out[e] = v if sign == 1 else tuple(-y for y in v)
    return out


def hl_scale(c, a: HL) -> HL:
    c = frac(c)
    if not c:
        return {}
    return {e: tuple(c * x for x in v) for e, v in a.items()}


def hl_zshift(a: HL, k: int) -> HL:
    return {e + k: v for e, v in a.items()}


def hl_times_zlaurent(p: ZLaurent, a: HL) -> HL:
    out: HL = {}
    for e1, c in p.terms.items():
        out = hl_add(out, hl_zshift(hl_scale(c, a), e1))
    return out


def hl_apply(m, a: HL) -> HL:
    """Apply a (dense) matrix to every z-coefficient vector."""
    out: HL = {}
    for e, v in a.items():
        w = tuple(
            sum((x * y for x, y in zip(row, v) if x and y), ZERO) for row in m
        )
        if any(w):
            out[e] = w
    return out


def hl_component(a: HL, i: int) -> ZLaurent:
    return ZLaurent({e: v[i] for e, v in a.items()})


def hl_window(a: HL, window: Tuple[int, int]) -> HL:
    lo, hi = window
    for e in a:
        if e < lo or e > hi:
            raise ZWindowOverflow(f"z^{e} outside window [{lo}, {hi}]")
    return a


# ---------------------------------------------------------------------------
# the series type


def default_zwindow(truncation: int, max_rank: int) -> Tuple[int, int]:
    w = truncation * max_rank + 4
    return (-w, w)


class QSeries:
    """Immutable truncated series ``sum_beta q^beta f_beta(z)`` over a ring."""

    __slots__ = ("ring", "terms", "truncation", "zwindow")
    normalization = NORMALIZATION

    def __init__(self, ring, terms: Mapping[Beta, HL], truncation: int = DEFAULT_TRUNCATION,
                 zwindow: Optional[Tuple[int, int]] = None):
        self.ring = ring
        self.truncation = int(truncation)
        self.zwindow = zwindow or default_zwindow(self.truncation, getattr(ring, "max_rank", 1))
        lat = ring.lattice
        clean: Dict[Beta, HL] = {}
        for beta, val in terms.items():
            beta = tuple(beta)
            if lat.degree(beta) > self.truncation:
                continue
            lat.check(beta)
            val = hl_clean(val)
            if val:
                hl_window(val, self.zwindow)
                clean[beta] = val
        self.terms = clean

    # constructors -------------------------------------------------------
    @classmethod
    def zero(cls, ring, truncation=DEFAULT_TRUNCATION, zwindow=None):
        return cls(ring, {}, truncation, zwindow)

    @classmethod
    def unit(cls, ring, truncation=DEFAULT_TRUNCATION, zwindow=None):
        return cls.monomial(ring, ring.lattice.zero, ring.unit_vector(), 0, truncation, zwindow)

    @classmethod
    def monomial(cls, ring, beta, vec, z_exp=0, truncation=DEFAULT_TRUNCATION, zwindow=None):
        return cls(ring, {tuple(beta): {z_exp: tuple(frac(x) for x in vec)}}, truncation, zwindow)

    def like(self, terms) -> "QSeries":
        return QSeries(self.ring, terms, self.truncation, self.zwindow)

    # access ---------------------------------------------------------------
    def __getitem__(self, beta) -> HL:
        return self.terms.get(tuple(beta), {})

    def coefficient(self, beta, basis_index: int) -> ZLaurent:
        return hl_component(self[beta], basis_index)

    def support(self) -> List[Beta]:
        return sort_strata(self.terms, self.ring.lattice)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        return (
            isinstance(other, QSeries)
            and self.ring is other.ring
            and self.terms == other.terms
        )

    def equal_through(self, other: "QSeries", degree: int) -> bool:
        lat = self.ring.lattice
        keys = set(self.terms) | set(other.terms)
        return all(self[b] == other[b] for b in keys if lat.degree(b) <= degree)

    def truncate(self, degree: int) -> "QSeries":
        return QSeries(self.ring, self.terms, degree, self.zwindow)

    def is_scalar(self) -> bool:
        return all(
            set(v) <= {0} and all(not x for x in v[0][1:]) for v in self.terms.values()
        )

    def max_zexp(self) -> Optional[int]:
        exps = [e for v in self.terms.values() for e in v]
        return max(exps) if exps else None

    # arithmetic ------------------------------------------------------------
    def _compatible(self, other: "QSeries"):
        if self.ring is not other.ring:
            raise RingMismatch("series live over different rings")
        if self.truncation != other.truncation or self.zwindow != other.zwindow:
            raise RingMismatch("series have different truncation configurations")

    def __add__(self, other: "QSeries") -> "QSeries":
        self._compatible(other)
        out = dict(self.terms)
        for b, v in other.terms.items():
            out[b] = hl_add(out.get(b, {}), v)
        return self.like(out)

    def __neg__(self):
        return self.like({b: hl_scale(-1, v) for b, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, QSeries):
            return series_arith(self, other, "mul")
        if isinstance(other, ZLaurent):
            return series_arith(self, other, "scale")
        return self.like({b: hl_scale(other, v) for b, v in self.terms.items()})

    __rmul__ = __mul__

    def shift(self, beta: Beta) -> "QSeries":
        lat = self.ring.lattice
        return self.like({lat.check(add_beta(b, beta)): v for b, v in self.terms.items()})

    def apply_matrix(self, m) -> "QSeries":
        return self.like({b: hl_apply(m, v) for b, v in self.terms.items()})

    def __repr__(self):
        return f"QSeries({len(self.terms)} strata, truncation={self.truncation})"

    # serialization -----------------------------------------------------------
    def to_records(self) -> List[dict]:
        recs = []
        for beta in self.support():
            for e in sorted(self.terms[beta]):
                for i, c in enumerate(self.terms[beta][e]):
                    if c:
                        recs.append({"beta": list(beta), "basis_index": i, "z_exp": e, "coeff": fmt(c)})
        return recs

    @classmethod
    def from_records(cls, ring, records: Iterable[Mapping], truncation=DEFAULT_TRUNCATION, zwindow=None):
        terms: Dict[Beta, Dict[int, List[Fraction]]] = {}
        for r in records:
            beta = tuple(int(x) for x in r["beta"])
            e = int(r["z_exp"])
            vec = terms.setdefault(beta, {}).setdefault(e, [ZERO] * ring.dim)
            vec[int(r["basis_index"])] += Fraction(str(r["coeff"]))
        return cls(ring, {b: {e: tuple(v) for e, v in d.items()} for b, d in terms.items()}, truncation, zwindow)


def series_arith(a: QSeries, b, kind: str) -> QSeries:
    """``kind`` is ``add``, ``mul`` or ``scale`` (by a ZLaurent)."""
    if kind == "add":
        return a + b
    if kind == "scale":
        p = _zl(b)
        return a.like({beta: hl_times_zlaurent(p, v) for beta, v in a.terms.items()})
    if kind != "mul":
        raise ValueError(f"unknown kind {kind!r}")
    a._compatible(b)
    ring, lat = a.ring, a.ring.lattice
    out: Dict[Beta, HL] = {}
    lo, hi = a.zwindow
    for b1, v1 in a.terms.items():
        d1 = lat.degree(b1)
        for b2, v2 in b.terms.items():
            if d1 + lat.degree(b2) > a.truncation:
                continue
            prod = ring.hl_mul(v1, v2)
            for e in prod:
                if e < lo or e > hi:
                    raise ZWindowOverflow(f"product reaches z^{e}, outside [{lo}, {hi}]")
            beta = add_beta(b1, b2)
            out[beta] = hl_add(out.get(beta, {}), prod)
    return a.like(out)


def scalar_series_invert(a: QSeries) -> QSeries:
    """Inverse of a series whose coefficients are rational multiples of the unit."""
    if not a.is_scalar():
        raise ValueError("scalar_series_invert needs z-free multiples of the unit class")
    lat = a.ring.lattice
    zero = lat.zero
    c0 = a[zero].get(0, (ZERO,))[0]
    if not c0:
        raise NotInvertible("leading coefficient vanishes")
    coeffs = {b: v[0][0] for b, v in a.terms.items()}
    inv: Dict[Beta, Fraction] = {zero: ONE / c0}
    for beta in lat.strata(a.truncation):
        if beta == zero:
            continue
        s = ZERO
        for b1, c in coeffs.items():
            if b1 == zero:
                continue
            rest = sub_beta(beta, b1)
            if all(x >= 0 for x in rest) and rest in inv:
                s += c * inv[rest]
        if s:
            inv[beta] = -s / c0
    dim = a.ring.dim
    return a.like({b: {0: (c,) + (ZERO,) * (dim - 1)} for b, c in inv.items() if c})


# ---------------------------------------------------------------------------
# univariate truncated power series (lists indexed by degree)


def ps_mul(a: Sequence[Fraction], b: Sequence[Fraction], n: int) -> List[Fraction]:
    out = [ZERO] * (n + 1)
    for i, x in enumerate(a[: n + 1]):
        if x:
            for j, y in enumerate(b[: n + 1 - i]):
                if y:
                    out[i + j] += x * y
    return out


def ps_inv(a: Sequence[Fraction], n: int) -> List[Fraction]:
    if not a or not a[0]:
        raise NotInvertible("constant term vanishes")
    a = list(a) + [ZERO] * (n + 1 - len(a))
    out = [ONE / a[0]] + [ZERO] * n
    for k in range(1, n + 1):
        s = sum((a[j] * out[k - j] for j in range(1, k + 1)), ZERO)
        out[k] = -s / a[0]
    return out


def ps_exp(a: Sequence[Fraction], n: int) -> List[Fraction]:
    """exp of a series without constant term, via f' = a' f."""
    a = list(a) + [ZERO] * (n + 1 - len(a))
    if a[0]:
        raise ValueError("ps_exp needs zero constant term")
    out = [ONE] + [ZERO] * n
    for k in range(1, n + 1):
        out[k] = sum((j * a[j] * out[k - j] for j in range(1, k + 1)), ZERO) / k
    return out


def ps_log1p(a: Sequence[Fraction], n: int) -> List[Fraction]:
    """log of a series with constant term 1."""
    a = list(a) + [ZERO] * (n + 1 - len(a))
    if a[0] != 1:
        raise ValueError("ps_log1p needs constant term 1")
    # (log a)' = a'/a
    da = [(k + 1) * a[k + 1] for k in range(n)] + [ZERO]
    q = ps_mul(da, ps_inv(a, n), n)
    return [ZERO] + [q[k - 1] / k for k in range(1, n + 1)]


def ps_compose(a: Sequence[Fraction], b: Sequence[Fraction], n: int) -> List[Fraction]:
    """a(b(x)) for b without constant term."""
    b = list(b) + [ZERO] * (n + 1 - len(b))
    if b[0]:
        raise ValueError("inner series must have zero constant term")
    out = [ZERO] * (n + 1)
    power = [ONE] + [ZERO] * n
    for k, c in enumerate(a[: n + 1]):
        if c:
            out = [x + c * y for x, y in zip(out, power)]
        power = ps_mul(power, b, n)
    return out


def univariate_reversion(coeffs: Sequence, order: int, log_coefficient=1) -> List[Fraction]:
    """Invert ``T = log_coefficient*log q + sum_k coeffs[k] q^k`` for ``q``.

    ``coeffs[0]`` is the constant term and must vanish.  Returns ``r`` with
    ``q = sum_{k>=1} r[k] Q^k`` where ``Q = e^T``.
    """
    if frac(log_coefficient) != 1:
        raise MalformedLeadingTerm("coefficient of log q must be 1")
    g = [frac(c) for c in coeffs] + [ZERO] * (order + 1)
    g = g[: order + 1]
    if g[0]:
        raise MalformedLeadingTerm("constant term must vanish")
    # q = Q u(Q) with u = exp(-g(Q u)); each pass fixes one more order
    u = [ONE] + [ZERO] * order
    for _ in range(order + 1):
        inner = [ZERO] + u[:order]  # Q*u
        u = ps_exp([-x for x in ps_compose(g, inner, order)], order)
    return [ZERO] + u[:order]


def reversion_residual(coeffs: Sequence, q_of_Q: Sequence[Fraction], order: int) -> List[Fraction]:
    """``t(q(Q)) - log Q`` as a power series; all zeros when the reversion is right.

    ``q`` through ``Q^n`` fixes ``q/Q`` only through ``Q^(n-1)``, so the check
    stops there when ``q_of_Q`` is shorter than ``order + 2``.
    """
    order = min(order, len(q_of_Q) - 2)
    g = [frac(c) for c in coeffs] + [ZERO] * (order + 1)
    u = list(q_of_Q[1:]) + [ZERO] * (order + 1)  # q/Q
    log_u = ps_log1p(u[: order + 1], order)
    g_q = ps_compose(g[: order + 1], list(q_of_Q[: order + 1]), order)
    return [x + y for x, y in zip(log_u, g_q)]
