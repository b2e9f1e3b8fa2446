"""Presented cohomology rings of split projective-bundle towers.

Every ring is built from the point by repeatedly adjoining a fiber divisor
``h`` subject to ``prod_i (h + L_i) = 0``.  Elements are coefficient vectors
in a monomial basis ``h^a * (base monomial)`` with ``a < r``; multiplication
is carried by the left-multiplication matrices of the divisor generators.
Matrices act on column vectors: column ``j`` of ``mult_matrix(x)`` holds
``x * basis_j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import ConfigError, DegeneratePairing, DegenerateRelation
from .linalg import (
    ONE,
    ZERO,
    Matrix,
    add,
    identity,
    inverse,
    matmul,
    matvec,
    scale,
    zeros,
)
from .series import HL, CurveLattice, hl_add

Vec = Tuple[Fraction, ...]


@dataclass(frozen=True)
class BundleData:
    """Split bundle ``V = L_1 + ... + L_r`` over ``base``.

    Each ``L_i`` is an integer combination of the base divisor generators.
    """

    base: "RingPresentation"
    fiber: str = "h"
    line_bundles: Tuple[Tuple[int, ...], ...] = ((),)
    curve_name: Optional[str] = None

    @property
    def rank(self) -> int:
        return len(self.line_bundles)


class RingPresentation:
    """Finite-dimensional graded commutative ring with integration.

    Attributes of interest: ``gen_names``, ``basis_names``, ``basis_exps``
    (exponents over the generators), ``degrees``, ``gen_mats``, ``top``
    (integration functional), ``pairing`` and ``dual``, ``lattice`` and
    ``toric_divisors``.
    """

    def __init__(self, name, gen_names, basis_exps, gen_mats, top, lattice,
                 toric_divisors, relations, max_rank, levels=()):
        self.name = name
        self.gen_names: Tuple[str, ...] = tuple(gen_names)
        self.basis_exps: List[Tuple[int, ...]] = [tuple(e) for e in basis_exps]
        self.dim = len(self.basis_exps)
        self.gen_mats: List[Matrix] = gen_mats
        self.top: List[Fraction] = list(top)
        self.lattice: CurveLattice = lattice
        self.toric_divisors: List[Tuple[int, ...]] = [tuple(d) for d in toric_divisors]
        self.relations = relations  # (fiber index, [L vectors]) per tower level
        self.max_rank = max_rank
        self.levels = levels  # BundleData per level, bottom first
        self.degrees = [sum(e) for e in self.basis_exps]
        self.basis_names = [monomial_name(self.gen_names, e) for e in self.basis_exps]
        self._mult = [self._basis_mult_matrix(e) for e in self.basis_exps]
        self.pairing = [[self.integrate(self.mul(self.unit_vector(i), self.unit_vector(j)))
                         for j in range(self.dim)] for i in range(self.dim)]
        self.dual = self._dual_basis()

    # ------------------------------------------------------------------
    @property
    def ngens(self) -> int:
        return len(self.gen_names)

    def unit_vector(self, i: int = 0) -> Vec:
        return tuple(ONE if k == i else ZERO for k in range(self.dim))

    def zero_vector(self) -> Vec:
        return (ZERO,) * self.dim

    def _basis_mult_matrix(self, exps) -> Matrix:
        m = identity(self.dim)
        for a, e in enumerate(exps):
            for _ in range(e):
                m = matmul(self.gen_mats[a], m)
        return m

    def mult_matrix(self, x: Sequence) -> Matrix:
        """Matrix of left multiplication by the element ``x``."""
        out = zeros(self.dim)
        for i, c in enumerate(x):
            if c:
                out = add(out, scale(c, self._mult[i]))
        return out

    def divisor_matrix(self, d: Sequence[int]) -> Matrix:
        out = zeros(self.dim)
        for a, c in enumerate(d):
            if c:
                out = add(out, scale(c, self.gen_mats[a]))
        return out

    def divisor_class(self, d: Sequence[int]) -> Vec:
        return tuple(row[0] for row in self.divisor_matrix(d))

    def gen_class(self, a: int) -> Vec:
        return tuple(row[0] for row in self.gen_mats[a])

    def mul(self, u: Sequence, v: Sequence) -> Vec:
        out = [ZERO] * self.dim
        for i, c in enumerate(u):
            if c:
                col = matvec(self._mult[i], v)
                for k, x in enumerate(col):
                    if x:
                        out[k] += c * x
        return tuple(out)

    def hl_mul(self, a: HL, b: HL) -> HL:
        out: HL = {}
        for e1, v1 in a.items():
            m = self.mult_matrix(v1)
            for e2, v2 in b.items():
                w = tuple(matvec(m, v2))
                if any(w):
                    out = hl_add(out, {e1 + e2: w})
        return out

    def integrate(self, v: Sequence) -> Fraction:
        return sum((x * t for x, t in zip(v, self.top) if x and t), ZERO)

    def pair(self, u: Sequence, v: Sequence) -> Fraction:
        return self.integrate(self.mul(u, v))

    def element(self, poly: Dict[Tuple[int, ...], object]) -> Vec:
        """Class of a polynomial given as ``{exponent tuple: coefficient}``."""
        out = [ZERO] * self.dim
        for exps, c in poly.items():
            col = self._basis_mult_matrix(exps)
            for k in range(self.dim):
                out[k] += Fraction(c) * col[k][0]
        return tuple(out)

    def monomial(self, *exps: int) -> Vec:
        exps = tuple(exps) + (0,) * (self.ngens - len(exps))
        return self.element({exps: 1})

    def _dual_basis(self) -> List[Vec]:
        try:
            ginv = inverse(self.pairing)
        except ZeroDivisionError:
            raise DegeneratePairing(f"pairing on {self.name} is degenerate") from None
        # T^j = sum_i (g^{-1})_{ij} T_i
        return [tuple(ginv[i][j] for i in range(self.dim)) for j in range(self.dim)]

    # checks -----------------------------------------------------------------
    def relation_residuals(self) -> List[Vec]:
        """Each tower relation evaluated on the unit; all must vanish."""
        out = []
        unit = self.unit_vector()
        for fib, ls in self.relations:
            m = identity(self.dim)
            for lvec in ls:
                full = list(lvec) + [0] * (self.ngens - len(lvec))
                full[fib] += 1
                m = matmul(self.divisor_matrix(full), m)
            out.append(tuple(matvec(m, unit)))
        return out

    def check(self) -> None:
        """Associativity, commutativity, relations and pairing symmetry."""
        basis = [self.unit_vector(i) for i in range(self.dim)]
        for i in range(self.dim):
            for j in range(self.dim):
                if self.mul(basis[i], basis[j]) != self.mul(basis[j], basis[i]):
                    raise AssertionError(f"not commutative at ({i},{j})")
                for k in range(self.dim):
                    lhs = self.mul(self.mul(basis[i], basis[j]), basis[k])
                    rhs = self.mul(basis[i], self.mul(basis[j], basis[k]))
                    if lhs != rhs:
                        raise AssertionError(f"not associative at ({i},{j},{k})")
        for r in self.relation_residuals():
            if any(r):
                raise AssertionError("relation does not vanish")
        for a in self.gen_mats:
            for b in self.gen_mats:
                if matmul(a, b) != matmul(b, a):
                    raise AssertionError("generator matrices do not commute")
        g = self.pairing
        if any(g[i][j] != g[j][i] for i in range(self.dim) for j in range(self.dim)):
            raise AssertionError("pairing not symmetric")

    def __repr__(self):
        return f"RingPresentation({self.name}, dim={self.dim})"


def monomial_name(names: Sequence[str], exps: Sequence[int]) -> str:
    parts = []
    for n, e in zip(names, exps):
        if e == 1:
            parts.append(n)
        elif e:
            parts.append(f"{n}^{e}")
    return "*".join(parts) if parts else "1"


def build_point() -> RingPresentation:
    lattice = CurveLattice(names=(), pairing=())
    return RingPresentation(
        name="pt", gen_names=(), basis_exps=[()], gen_mats=[], top=[ONE],
        lattice=lattice, toric_divisors=[], relations=[], max_rank=1,
    )


def build_projective_bundle(b: BundleData) -> RingPresentation:
    base = b.base
    r = b.rank
    if r < 1:
        raise DegenerateRelation("a projective bundle needs at least one summand")
    p = base.ngens
    for lvec in b.line_bundles:
        if len(lvec) != p:
            raise DegenerateRelation(
                f"line bundle {list(lvec)} does not match the {p} base divisor generators"
            )
    n = base.dim
    dim = r * n

    def idx(a, j):
        return a * n + j

    # Chern polynomial coefficients f(h) = sum_j c_j h^j as base classes
    coeffs: List[Vec] = [base.unit_vector()]
    for lvec in b.line_bundles:
        lcls = base.divisor_class(lvec)
        new = [base.zero_vector() for _ in range(len(coeffs) + 1)]
        for j, c in enumerate(coeffs):
            new[j + 1] = tuple(x + y for x, y in zip(new[j + 1], c))
            lc = base.mul(lcls, c)
            new[j] = tuple(x + y for x, y in zip(new[j], lc))
        coeffs = new
    if coeffs[r] != base.unit_vector():
        raise DegenerateRelation("relation is not monic in the fiber divisor")

    mh = zeros(dim)
    for a in range(r - 1):
        for j in range(n):
            mh[idx(a + 1, j)][idx(a, j)] = ONE
    for jdeg in range(r):
        cm = base.mult_matrix(coeffs[jdeg])
        for i in range(n):
            for j in range(n):
                if cm[i][j]:
                    mh[idx(jdeg, i)][idx(r - 1, j)] = -cm[i][j]
    gen_mats = []
    for bm in base.gen_mats:
        m = zeros(dim)
        for a in range(r):
            for i in range(n):
                for j in range(n):
                    if bm[i][j]:
                        m[idx(a, i)][idx(a, j)] = bm[i][j]
        gen_mats.append(m)
    gen_mats.append(mh)

    basis_exps = [tuple(e) + (a,) for a in range(r) for e in base.basis_exps]
    top = [base.top[j] if a == r - 1 else ZERO for a in range(r) for j in range(n)]

    # curve lattice: lifted base generators then the fiber line
    blat = base.lattice
    kfib = []
    for g in range(blat.rank):
        col = [sum(l * blat.pairing[a][g] for a, l in enumerate(lvec)) for lvec in b.line_bundles]
        kfib.append(-max(col))
    pairing = [tuple(row) + (0,) for row in blat.pairing]
    pairing.append(tuple(kfib) + (1,))
    level = len(base.levels) + 1
    cname = b.curve_name or ("l" if level == 1 else ("gamma" if level == 2 else f"gamma{level - 1}"))
    lattice = CurveLattice(
        names=blat.names + (cname,), pairing=tuple(pairing),
        weights=blat.weights + (1,), laurent=blat.laurent,
    )
    toric = [tuple(d) + (0,) for d in base.toric_divisors]
    toric += [tuple(lvec) + (1,) for lvec in b.line_bundles]
    relations = list(base.relations) + [(p, [tuple(l) for l in b.line_bundles])]
    gen_names = base.gen_names + (b.fiber,)
    if len(set(gen_names)) != len(gen_names):
        raise ConfigError(f"duplicate divisor name {b.fiber!r}")
    return RingPresentation(
        name=f"P({base.name})" if base.dim > 1 else f"P{r - 1}",
        gen_names=gen_names, basis_exps=basis_exps, gen_mats=gen_mats, top=top,
        lattice=lattice, toric_divisors=toric, relations=relations,
        max_rank=max(base.max_rank, r), levels=tuple(base.levels) + (b,),
    )


def projective_space(n: int, name: str = "h") -> RingPresentation:
    return build_projective_bundle(BundleData(build_point(), name, tuple(() for _ in range(n + 1))))


def poincare_dual_basis(ring: RingPresentation):
    """``(pairing matrix, dual basis)`` with ``g(T_i, T^j) = delta_ij``."""
    return ring.pairing, ring.dual


def tower(levels: Sequence[Tuple[str, Sequence[Sequence[int]]]]) -> RingPresentation:
    """Build a tower from ``[(fiber name, line bundles), ...]`` starting at the point."""
    ring = build_point()
    for fiber, lbs in levels:
        ring = build_projective_bundle(BundleData(ring, fiber, tuple(tuple(l) for l in lbs)))
    return ring


# ---------------------------------------------------------------------------
# geometry JSON


def parse_geometry(obj) -> Tuple[RingPresentation, List[Tuple[int, ...]]]:
    """Parse a geometry description; returns ``(ring, complete-intersection twists)``."""
    if not isinstance(obj, dict):
        raise ConfigError("geometry must be a JSON object")
    version = obj.get("schema_version", 1)
    if version != 1:
        raise ConfigError(f"unsupported schema_version {version}")
    ring = _parse_space(obj)
    twists = []
    for d in obj.get("complete_intersection", []):
        if not isinstance(d, list) or len(d) != ring.ngens:
            raise ConfigError(f"twist {d!r} must list {ring.ngens} divisor coefficients")
        twists.append(tuple(int(x) for x in d))
    return ring, twists


def _parse_space(obj) -> RingPresentation:
    if obj == "point":
        return build_point()
    if not isinstance(obj, dict):
        raise ConfigError(f"cannot read geometry {obj!r}")
    if "proj_space" in obj:
        n = obj["proj_space"]
        if not isinstance(n, int) or n < 0:
            raise ConfigError("proj_space must be a nonnegative integer")
        return projective_space(n, obj.get("divisor", "h"))
    if "base" not in obj:
        raise ConfigError("geometry object needs 'base' or 'proj_space'")
    base = _parse_space(obj["base"])
    if "bundle" not in obj:
        return base
    bd = obj["bundle"]
    try:
        fiber = bd.get("fiber_divisor", "h")
        lbs = tuple(tuple(int(x) for x in l) for l in bd["line_bundles"])
    except (AttributeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed bundle entry: {exc}") from None
    try:
        return build_projective_bundle(BundleData(base, fiber, lbs, bd.get("curve_name")))
    except DegenerateRelation as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# local models used throughout


def flip_source() -> RingPresentation:
    """``P_{P^2}(O(-1)^2 + O)`` with divisors h and xi."""
    return tower([("h", [(), (), ()]), ("xi", [(0,), (-1,), (-1,)])])


def flip_target() -> RingPresentation:
    """``P_{P^1}(O(-1)^3 + O)``."""
    return tower([("h", [(), ()]), ("xi", [(0,), (-1,), (-1,), (-1,)])])


def flop_source() -> RingPresentation:
    """Simple P^1-flop local model ``P_{P^1}(O(-1)^2 + O)``."""
    return tower([("h", [(), ()]), ("xi", [(0,), (-1,), (-1,)])])


def flop_target() -> RingPresentation:
    return flop_source()
