"""Differential operators in normal form and their action on series.

A term is ``c * q^beta * z^j * prod_a (z d_a)^{k_a}`` with functions to the
left of derivatives.  Divisor coordinates are folded into the Novikov
variables, so an exponential prefactor is just a stratum shift.  On stored
(normalized) series ``z d_a`` acts on the beta-stratum as
``D_a cup + z (D_a . beta)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple

from .cohomring import BundleData, RingPresentation, build_projective_bundle
from .errors import (
    MalformedLeadingTerm,
    NoLiftInSearchWindow,
    NotAdmissible,
    NotDivisorGenerated,
    SingularLeadingBlock,
)
from .linalg import ZERO, Matrix, fmt, inverse, is_zero, matmul, zeros
from .matseries import MS, MZ, mz_add, mz_mul
from .series import (
    HL,
    Beta,
    CurveLattice,
    QSeries,
    add_beta,
    hl_add,
    hl_apply,
    hl_scale,
    hl_zshift,
    sub_beta,
)

Key = Tuple[Beta, int, Tuple[int, ...]]


def _multi_binomial_expand(k: Tuple[int, ...], shifts: Sequence[int]):
    """Expand ``prod_a (zd_a + z*shift_a)^{k_a}`` as ``{(z power, multi-index): coeff}``."""
    out: Dict[Tuple[int, Tuple[int, ...]], int] = {(0, tuple(0 for _ in k)): 1}
    for a, (ka, s) in enumerate(zip(k, shifts)):
        if not ka:
            continue
        new: Dict[Tuple[int, Tuple[int, ...]], int] = {}
        for (zp, idx), c in out.items():
            for i in range(ka + 1):
                # choose i derivatives, (ka - i) shifts
                w = comb(ka, i) * (s ** (ka - i))
                if not w:
                    continue
                nidx = list(idx)
                nidx[a] += i
                key = (zp + ka - i, tuple(nidx))
                new[key] = new.get(key, 0) + c * w
        out = {kk: v for kk, v in new.items() if v}
    return out


class DiffOperator:
    """Element of the operator ring in normal form over a fixed curve lattice."""

    __slots__ = ("lattice", "ngens", "terms")

    def __init__(self, lattice: CurveLattice, ngens: int, terms: Optional[Dict[Key, object]] = None):
        self.lattice = lattice
        self.ngens = ngens
        self.terms: Dict[Key, Fraction] = {}
        for (beta, j, k), c in (terms or {}).items():
            c = Fraction(c)
            if c:
                key = (tuple(beta), int(j), tuple(k))
                self.terms[key] = self.terms.get(key, ZERO) + c
                if not self.terms[key]:
                    del self.terms[key]

    # constructors ------------------------------------------------------------
    @classmethod
    def for_ring(cls, ring: RingPresentation, terms=None) -> "DiffOperator":
        return cls(ring.lattice, ring.ngens, terms)

    def _zero_k(self):
        return (0,) * self.ngens

    def const(self, c) -> "DiffOperator":
        return DiffOperator(self.lattice, self.ngens, {(self.lattice.zero, 0, self._zero_k()): c})

    def one(self) -> "DiffOperator":
        return self.const(1)

    def z(self, power: int = 1) -> "DiffOperator":
        return DiffOperator(self.lattice, self.ngens, {(self.lattice.zero, power, self._zero_k()): 1})

    def q(self, beta: Beta) -> "DiffOperator":
        return DiffOperator(self.lattice, self.ngens, {(tuple(beta), 0, self._zero_k()): 1})

    def zd(self, divisor: Sequence[int]) -> "DiffOperator":
        """``z d_D`` for a divisor given by coefficients over the generators."""
        terms = {}
        for a, c in enumerate(divisor):
            if c:
                k = [0] * self.ngens
                k[a] = 1
                terms[(self.lattice.zero, 0, tuple(k))] = c
        return DiffOperator(self.lattice, self.ngens, terms)

    def like(self, terms) -> "DiffOperator":
        return DiffOperator(self.lattice, self.ngens, terms)

    # algebra -------------------------------------------------------------------
    def _check(self, other: "DiffOperator"):
        if other.ngens != self.ngens or other.lattice.pairing != self.lattice.pairing:
            raise ValueError("operators live over different geometries")

    def __add__(self, other):
        if not isinstance(other, DiffOperator):
            other = self.const(other)
        self._check(other)
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out.get(key, ZERO) + c
        return self.like(out)

    __radd__ = __add__

    def __neg__(self):
        return self.like({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other if isinstance(other, DiffOperator) else -Fraction(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, DiffOperator):
            return self.like({k: c * Fraction(other) for k, c in self.terms.items()})
        self._check(other)
        out: Dict[Key, Fraction] = {}
        for (b1, j1, k1), c1 in self.terms.items():
            for (b2, j2, k2), c2 in other.terms.items():
                shifts = self.lattice.pairings(b2)
                beta = add_beta(b1, b2)
                for (zp, idx), w in _multi_binomial_expand(k1, shifts).items():
                    key = (beta, j1 + j2 + zp, tuple(x + y for x, y in zip(idx, k2)))
                    out[key] = out.get(key, ZERO) + c1 * c2 * w
        return self.like(out)

    def __rmul__(self, other):
        return self.like({k: c * Fraction(other) for k, c in self.terms.items()})

    def __pow__(self, n: int):
        out = self.one()
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        return isinstance(other, DiffOperator) and self.terms == other.terms and self.ngens == other.ngens

    def __hash__(self):
        return hash(tuple(sorted(self.terms.items())))

    def is_zero(self) -> bool:
        return not self.terms

    def order(self) -> int:
        return max((sum(k) for _, _, k in self.terms), default=0)

    def strata(self) -> List[Beta]:
        return sorted({b for b, _, _ in self.terms})

    def subs_z(self, sign: int) -> "DiffOperator":
        """Replace z by sign*z (note z d_a also scales)."""
        return self.like({(b, j, k): c * (sign ** (j + sum(k))) for (b, j, k), c in self.terms.items()})

    def format(self, gen_names: Sequence[str], curve_names: Optional[Sequence[str]] = None) -> str:
        curve_names = curve_names or self.lattice.names
        parts = []
        for (beta, j, k), c in sorted(self.terms.items()):
            pieces = []
            if c != 1 or (not any(beta) and not j and not any(k)):
                pieces.append(fmt(c))
            for n, e in zip(curve_names, beta):
                if e:
                    pieces.append(f"q_{n}" + (f"^{e}" if e != 1 else ""))
            if j:
                pieces.append("z" + (f"^{j}" if j != 1 else ""))
            for n, e in zip(gen_names, k):
                if e:
                    pieces.append(f"(zd_{n})" + (f"^{e}" if e != 1 else ""))
            parts.append("*".join(pieces))
        return " + ".join(parts) if parts else "0"

    def __repr__(self):
        return f"DiffOperator({len(self.terms)} terms)"


# ---------------------------------------------------------------------------
# action on series


def z_derivative(s: QSeries, a: int) -> QSeries:
    """``z d_a`` on a normalized series."""
    ring = s.ring
    m = ring.gen_mats[a]
    lat = ring.lattice
    out = {}
    for beta, v in s.terms.items():
        val = hl_apply(m, v)
        d = sum(p * c for p, c in zip(lat.pairing[a], beta))
        if d:
            val = hl_add(val, hl_zshift(hl_scale(d, v), 1))
        out[beta] = val
    return s.like(out)


def apply_operator(op: DiffOperator, s: QSeries) -> QSeries:
    ring = s.ring
    if op.ngens != ring.ngens:
        raise ValueError("operator directions do not match the ring")
    cache: Dict[Tuple[int, ...], QSeries] = {(0,) * ring.ngens: s}

    def der(k):
        if k in cache:
            return cache[k]
        a = next(i for i, x in enumerate(k) if x)
        prev = list(k)
        prev[a] -= 1
        res = z_derivative(der(tuple(prev)), a)
        cache[k] = res
        return res

    lat = ring.lattice
    out: Dict[Beta, HL] = {}
    for (beta, j, k), c in sorted(op.terms.items()):
        d = der(k)
        for b, v in d.terms.items():
            nb = add_beta(b, beta)
            if lat.degree(nb) > s.truncation:
                continue
            lat.check(nb)
            out[nb] = hl_add(out.get(nb, {}), hl_zshift(hl_scale(c, v), j))
    return s.like(out)


# ---------------------------------------------------------------------------
# Picard-Fuchs operators and lifts


def _falling(op_zd: DiffOperator, n: int) -> DiffOperator:
    """prod_{m=0}^{n-1} (zd - m z)."""
    out = op_zd.one()
    for m in range(n):
        out = out * (op_zd - op_zd.z(1) * m)
    return out


def pf_operator(ring: RingPresentation, beta: Beta) -> DiffOperator:
    """Box operator of a curve class from the toric divisors of the tower."""
    lat = ring.lattice
    proto = DiffOperator.for_ring(ring)
    pos, neg = proto.one(), proto.one()
    for d in ring.toric_divisors:
        s = lat.pair(d, beta)
        if s > 0:
            pos = pos * _falling(proto.zd(d), s)
        elif s < 0:
            neg = neg * _falling(proto.zd(d), -s)
    return pos - proto.q(beta) * neg


def pf_operators_bundle(geometry) -> List[Tuple[str, DiffOperator]]:
    """One operator per primitive curve class (cone generator) of the tower."""
    ring = build_projective_bundle(geometry) if isinstance(geometry, BundleData) else geometry
    lat = ring.lattice
    out = []
    for g, name in enumerate(lat.names):
        beta = tuple(1 if i == g else 0 for i in range(lat.rank))
        out.append((name, pf_operator(ring, beta)))
    return out


def _fiber_forms(ring: RingPresentation) -> List[Tuple[int, ...]]:
    b = ring.levels[-1]
    return [tuple(l) + (1,) for l in b.line_bundles]


def admissible_lift(base_beta: Beta, ring: RingPresentation, window: int = 10) -> Beta:
    """Smallest effective lift with ``-(h + L_i).beta >= 0`` for the top fiber."""
    lat = ring.lattice
    forms = _fiber_forms(ring)
    base_beta = tuple(base_beta)
    for k in range(0, window + 1):
        cand = base_beta + (k,)
        if all(lat.pair(f, cand) <= 0 for f in forms):
            return cand
    raise NoLiftInSearchWindow(f"no admissible lift of {base_beta} with fiber coordinate in [0, {window}]")


def admissible_lifts(base_beta: Beta, ring: RingPresentation, window: int = 10) -> List[Beta]:
    """All admissible lifts with fiber coordinate in ``[-window, window]``."""
    lat = ring.lattice
    forms = _fiber_forms(ring)
    return [
        tuple(base_beta) + (k,)
        for k in range(-window, window + 1)
        if all(lat.pair(f, tuple(base_beta) + (k,)) <= 0 for f in forms)
    ]


def lifted_qde_dressing(beta_star: Beta, ring: RingPresentation) -> DiffOperator:
    lat = ring.lattice
    proto = DiffOperator.for_ring(ring)
    out = proto.one()
    for f in _fiber_forms(ring):
        s = -lat.pair(f, beta_star)
        if s < 0:
            raise NotAdmissible(f"(h+L).beta = {-s} > 0 for class {beta_star}")
        out = out * _falling(proto.zd(f), s)
    return out


def lifted_qde_operator(ring: RingPresentation, i: int, j: int,
                        base_products: Dict[Beta, Dict[int, object]],
                        lifts: Optional[Dict[Beta, Beta]] = None) -> DiffOperator:
    """``z d_i z d_j - sum q^{beta*} A^k_{ij,beta} D_{beta*} z d_k`` for base directions.

    ``base_products`` maps a base class to ``{k: coefficient}`` where ``k`` is
    ``-1`` for the unit direction or a divisor-generator index.
    """
    proto = DiffOperator.for_ring(ring)
    unit_i = [0] * ring.ngens
    unit_i[i] = 1
    unit_j = [0] * ring.ngens
    unit_j[j] = 1
    out = proto.zd(unit_i) * proto.zd(unit_j)
    for bbar, coeffs in base_products.items():
        star = (lifts or {}).get(tuple(bbar)) or admissible_lift(bbar, ring)
        dress = lifted_qde_dressing(star, ring)
        for k, c in coeffs.items():
            if k == -1:
                target = proto.one()
            else:
                vec = [0] * ring.ngens
                vec[k] = 1
                target = proto.zd(vec)
            out = out - proto.q(star) * dress * target * Fraction(c)
    return out


# ---------------------------------------------------------------------------
# frames and connection extraction


@dataclass
class Frame:
    entries: List[QSeries]
    recipes: List[DiffOperator]
    labels: List[str] = field(default_factory=list)

    @property
    def ring(self) -> RingPresentation:
        return self.entries[0].ring

    def leading_matrix(self) -> Matrix:
        """Columns are the q^0 z^0 classes of the entries."""
        ring = self.ring
        zero = ring.lattice.zero
        n = len(self.entries)
        m = zeros(ring.dim, n)
        for j, e in enumerate(self.entries):
            lead = e[zero]
            if set(lead) - {0}:
                raise MalformedLeadingTerm(f"entry {j} has z-dependence at q^0")
            vec = lead.get(0, ring.zero_vector())
            for i in range(ring.dim):
                m[i][j] = vec[i]
        return m


def frame_from_operators(i_series: QSeries, recipes: Sequence[DiffOperator], labels=None) -> Frame:
    entries = [apply_operator(op, i_series) for op in recipes]
    return Frame(entries, list(recipes), list(labels or [f"e{i + 1}" for i in range(len(recipes))]))


def naive_quantization_frame(ring: RingPresentation, i_series: QSeries, basis=None, labels=None) -> Frame:
    """Entries ``prod_a (z d_a)^{e_a} I`` for basis monomials ``prod_a D_a^{e_a}``.

    A basis entry may also be a polynomial ``{exponents: coefficient}``; it is
    quantized term by term.
    """
    exps = basis if basis is not None else ring.basis_exps
    proto = DiffOperator.for_ring(ring)
    recipes = []
    names = []
    for e in exps:
        poly = e if isinstance(e, dict) else {tuple(e): 1}
        op = DiffOperator.for_ring(ring)
        for mono, c in poly.items():
            if len(mono) != ring.ngens:
                raise NotDivisorGenerated(f"monomial {mono} is not a word in the divisor generators")
            term = proto.one() * Fraction(c)
            for a, p in enumerate(mono):
                vec = [0] * ring.ngens
                vec[a] = 1
                term = term * proto.zd(vec) ** p
            op = op + term
        recipes.append(op)
        key = next(iter(poly)) if len(poly) == 1 else None
        names.append(ring.basis_names[ring.basis_exps.index(tuple(key))]
                     if key is not None and tuple(key) in ring.basis_exps else str(e))
    return frame_from_operators(i_series, recipes, labels or names)


def frame_connection(frame: Frame, direction: Sequence[int]) -> MS:
    """``C`` with ``z d_D F_j = sum_i F_i C_ij`` solved stratum by stratum."""
    ring = frame.ring
    lat = ring.lattice
    n = len(frame.entries)
    if n != ring.dim:
        raise SingularLeadingBlock("frame size differs from the ring dimension")
    lead = frame.leading_matrix()
    try:
        lead_inv = inverse(lead)
    except ZeroDivisionError:
        raise SingularLeadingBlock("leading matrix of the frame is singular") from None
    dmat = ring.divisor_matrix(direction)
    trunc = frame.entries[0].truncation

    def phi(beta) -> MZ:
        cols: Dict[int, Matrix] = {}
        for j, e in enumerate(frame.entries):
            for zexp, vec in e[beta].items():
                m = cols.setdefault(zexp, zeros(n))
                for i in range(n):
                    m[i][j] = vec[i]
        return cols

    phis = {beta: phi(beta) for beta in lat.strata(trunc)}
    phis = {b: v for b, v in phis.items() if v}
    conn: MS = {}
    zero = lat.zero
    for beta in lat.strata(trunc):
        pb = phis.get(beta, {})
        d = lat.pair(direction, beta)
        rhs: MZ = {e: matmul(dmat, m) for e, m in pb.items()}
        if d:
            rhs = mz_add(rhs, {e + 1: [[d * x for x in row] for row in m] for e, m in pb.items()})
        for b1, m1 in phis.items():
            if b1 == zero:
                continue
            rest = sub_beta(beta, b1)
            if rest in conn:
                rhs = mz_add(rhs, mz_mul(m1, conn[rest]), -1)
        sol = {e: matmul(lead_inv, m) for e, m in rhs.items()}
        sol = {e: m for e, m in sol.items() if not is_zero(m)}
        if sol:
            conn[beta] = sol
    return conn
