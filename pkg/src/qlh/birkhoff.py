"""Birkhoff factorization of frame connections and the generalized mirror map.

Writing the frame as ``F = G B`` with ``G`` governed by a z-free connection
``A`` gives, stratum by stratum,

    [B_beta, M_a] - z (D_a.beta) B_beta + R_{a,beta} - A_{a,beta} = 0,
    R_{a,beta} = C_{a,beta} + sum_{0<b<beta} (B_b C_{a,beta-b} - A_{a,beta-b} B_b),

where ``M_a = C_{a,0}``.  For a direction with ``D_a.beta != 0`` the z-powers
of ``B_beta`` are eliminated from the top down; the z^0 part then gives
``A_{a,beta}`` for every direction and the remaining powers are consistency
checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .errors import MirrorMapLeavesChart, NonTerminating, ObstructionNonzero
from .linalg import (
    ZERO,
    Matrix,
    add,
    commutator,
    identity,
    is_zero,
    matmul,
    scale,
    solve,
    sub,
    transpose,
    zeros,
)
from .matseries import MS, MZ, ms_inverse_unipotent, mz_add, mz_mul
from .series import (
    Beta,
    CurveLattice,
    QSeries,
    hl_scale,
    hl_zshift,
    ps_compose,
    ps_inv,
    ps_mul,
    sub_beta,
    univariate_reversion,
)


@dataclass
class ConnectionData:
    """Per-direction connection matrices over a curve lattice.

    ``C`` holds the pre-gauge matrices (``{beta: {z exp: matrix}}``), ``A``
    the z-free ones (``{beta: matrix}``) once known.
    """

    directions: List[Tuple[int, ...]]
    names: List[str]
    lattice: CurveLattice
    dim: int
    truncation: int
    C: List[MS] = field(default_factory=list)
    A: List[Dict[Beta, Matrix]] = field(default_factory=list)

    def a_matrix(self, idx: int) -> Dict[Beta, Matrix]:
        return self.A[idx]


def _max_exp(mz: MZ, default=0):
    return max(mz) if mz else default


def birkhoff_factorize(conn: ConnectionData, order: str = "lex", pivot: str = "first",
                       max_zdeg: Optional[int] = None) -> Tuple[MS, ConnectionData]:
    """Return ``(B, conn')`` where ``conn'.A`` are the z-free matrices.

    ``order`` chooses the tie-break among strata of equal degree (``lex`` or
    ``revlex``); ``pivot`` chooses which direction drives the elimination.
    """
    lat = conn.lattice
    n = conn.dim
    zero = lat.zero
    if max_zdeg is None:
        max_zdeg = 4 * (conn.truncation + 1) * (n + 1)
    ms = []
    for C in conn.C:
        c0 = C.get(zero, {})
        if set(c0) - {0}:
            raise ObstructionNonzero("classical part of the connection depends on z")
        ms.append(c0.get(0, zeros(n)))
    strata = lat.strata(conn.truncation)
    if order == "revlex":
        strata = sorted(strata, key=lambda b: (lat.degree(b), tuple(-c for c in b)))
    B: MS = {zero: {0: identity(n)}}
    A: List[Dict[Beta, Matrix]] = [{zero: m} if not is_zero(m) else {} for m in ms]
    for beta in strata:
        if beta == zero:
            continue
        R = []
        for a, C in enumerate(conn.C):
            r = dict(C.get(beta, {}))
            for b1, bz in B.items():
                if b1 == zero or b1 == beta:
                    continue
                rest = sub_beta(beta, b1)
                if any(c < 0 for c in rest):
                    continue
                r = mz_add(r, mz_mul(bz, C.get(rest, {})))
                if rest in A[a]:
                    r = mz_add(r, mz_mul({0: A[a][rest]}, bz), -1)
            R.append(r)
        pairs = [lat.pair(d, beta) for d in conn.directions]
        cands = [a for a, d in enumerate(pairs) if d]
        if not cands:
            raise ObstructionNonzero(f"no direction pairs nontrivially with {beta}")
        a0 = cands[0] if pivot == "first" else cands[-1]
        d0 = pairs[a0]
        top = _max_exp(R[a0])
        if top > max_zdeg:
            raise NonTerminating(f"z-degree {top} at stratum {beta} exceeds {max_zdeg}")
        bz: MZ = {}
        cur = zeros(n)
        for p in range(top, 0, -1):
            rp = R[a0].get(p, zeros(n))
            nxt = scale(Fraction(1, d0), add(commutator(cur, ms[a0]), rp))
            if not is_zero(nxt):
                bz[p - 1] = nxt
            cur = nxt
        if bz:
            B[beta] = bz
        lo = min([0] + [min(r) for r in R if r])
        hi = max([top] + [_max_exp(r) for r in R]) + 1
        for a in range(len(conn.C)):
            da = pairs[a]
            for p in range(lo, hi + 1):
                e = add(commutator(bz.get(p, zeros(n)), ms[a]), R[a].get(p, zeros(n)))
                if da and (p - 1) in bz:
                    e = sub(e, scale(da, bz[p - 1]))
                if p == 0:
                    if not is_zero(e):
                        A[a][beta] = e
                elif not is_zero(e):
                    raise ObstructionNonzero(
                        f"no z-free gauge at stratum {beta}, direction {conn.names[a]}, z^{p}"
                    )
    out = ConnectionData(conn.directions, conn.names, lat, n, conn.truncation, conn.C, A)
    return B, out


def gauge_residual(conn: ConnectionData, B: MS) -> List[MS]:
    """``B C_a - A_a B - z d_a B`` per direction; all empty when consistent."""
    lat = conn.lattice
    out = []
    strata = lat.strata(conn.truncation)
    for a, C in enumerate(conn.C):
        res: MS = {}
        for beta in strata:
            acc: MZ = {}
            for b1, bz in B.items():
                rest = sub_beta(beta, b1)
                if any(c < 0 for c in rest):
                    continue
                acc = mz_add(acc, mz_mul(bz, C.get(rest, {})))
                if rest in conn.A[a]:
                    acc = mz_add(acc, mz_mul({0: conn.A[a][rest]}, bz), -1)
            d = lat.pair(conn.directions[a], beta)
            if d and beta in B:
                acc = mz_add(acc, {e + 1: scale(d, m) for e, m in B[beta].items()}, -1)
            if acc:
                res[beta] = acc
        out.append(res)
    return out


# ---------------------------------------------------------------------------
# flatness and Frobenius checks on z-free matrices


def series_matmul(x: Dict[Beta, Matrix], y: Dict[Beta, Matrix], lat: CurveLattice, trunc: int):
    out: Dict[Beta, Matrix] = {}
    for b1, m1 in x.items():
        for b2, m2 in y.items():
            b = tuple(p + q for p, q in zip(b1, b2))
            if lat.degree(b) > trunc:
                continue
            p = matmul(m1, m2)
            out[b] = add(out[b], p) if b in out else p
    return {b: m for b, m in out.items() if not is_zero(m)}


def commutator_series(x, y, lat, trunc):
    xy = series_matmul(x, y, lat, trunc)
    yx = series_matmul(y, x, lat, trunc)
    keys = set(xy) | set(yx)
    n = len(next(iter((xy or yx or {None: [[0]]}).values())))
    out = {}
    for b in keys:
        m = sub(xy.get(b, zeros(n)), yx.get(b, zeros(n)))
        if not is_zero(m):
            out[b] = m
    return out


def is_flat(conn: ConnectionData) -> bool:
    for i in range(len(conn.A)):
        for j in range(i + 1, len(conn.A)):
            if commutator_series(conn.A[i], conn.A[j], conn.lattice, conn.truncation):
                return False
    return True


def is_self_adjoint(conn: ConnectionData, gram: Matrix) -> bool:
    """``g(A u, v) = g(u, A v)``, i.e. ``A^T g = g A`` stratum by stratum."""
    for a in conn.A:
        for m in a.values():
            if matmul(transpose(m), gram) != matmul(gram, m):
                return False
    return True


# ---------------------------------------------------------------------------
# mirror map


@dataclass
class MirrorMap:
    """``tau - t`` per stratum: unit coefficient and divisor-generator coefficients."""

    shifts: Dict[Beta, Tuple[Fraction, Tuple[Fraction, ...]]]
    J: QSeries

    def divisor_series(self, a: int) -> Dict[Beta, Fraction]:
        return {b: v[1][a] for b, v in self.shifts.items() if v[1][a]}

    def unit_series(self) -> Dict[Beta, Fraction]:
        return {b: v[0] for b, v in self.shifts.items() if v[0]}


def first_gauged_column(frame, B: MS) -> QSeries:
    """``sum_i F_i (B^{-1})_{i,1}``."""
    ring = frame.ring
    lat = ring.lattice
    trunc = frame.entries[0].truncation
    binv = ms_inverse_unipotent(B, len(frame.entries), lat, trunc)
    out = QSeries.zero(ring, trunc, frame.entries[0].zwindow)
    for beta, mz in binv.items():
        for e, m in mz.items():
            for i, entry in enumerate(frame.entries):
                c = m[i][0]
                if not c:
                    continue
                shifted = {}
                for b, v in entry.terms.items():
                    nb = tuple(x + y for x, y in zip(b, beta))
                    if lat.degree(nb) <= trunc:
                        shifted[nb] = hl_zshift(hl_scale(c, v), e)
                out = out + out.like(shifted)
    return out


def mirror_map_and_J(frame, B: MS) -> MirrorMap:
    ring = frame.ring
    zero = ring.lattice.zero
    g1 = first_gauged_column(frame, B)
    basis = [ring.unit_vector()] + [ring.gen_class(a) for a in range(ring.ngens)]
    cols = [[v[i] for v in basis] for i in range(ring.dim)]
    shifts = {}
    for beta, v in g1.terms.items():
        if any(e > 0 for e in v) or (beta != zero and 0 in v):
            raise ObstructionNonzero(f"gauged first column keeps z^>=0 terms at {beta}")
        if beta == zero:
            if v.get(0) != ring.unit_vector() or set(v) - {0}:
                raise ObstructionNonzero("classical part of the gauged column is not the unit")
            continue
        vec = v.get(-1)
        if vec is None:
            continue
        sol = solve(cols, vec)
        if sol is None:
            raise MirrorMapLeavesChart(f"1/z coefficient at {beta} leaves span(1, divisors): {list(map(str, vec))}")
        shifts[beta] = (sol[0], tuple(sol[1:]))
    return MirrorMap(shifts, g1)


# ---------------------------------------------------------------------------
# one-parameter Calabi-Yau: instanton numbers from the I-series


@dataclass
class YukawaData:
    I0: List[Fraction]
    mirror: List[Fraction]  # g(q) with tau = log q + g(q)
    q_of_Q: List[Fraction]
    coupling: List[Fraction]  # K(Q) coefficients; K_0 is the classical term
    N: Dict[int, Fraction]
    n: Dict[int, Fraction]


def _scalar(I: QSeries, d: int, power: int) -> Fraction:
    v = I[(d,)].get(-power)
    return v[power] if v else ZERO


def yukawa_from_mirror(I: QSeries, degree: Optional[int] = None, classical: Optional[Fraction] = None) -> YukawaData:
    """Instanton numbers of a one-parameter Calabi-Yau threefold from its I-series.

    ``I`` lives in the ambient ring (basis ``1, h, h^2, ...``).  The classical
    triple intersection defaults to the integral of ``h^3`` against the twist
    read off from ``I`` (degree of the hypersurface).
    """
    ring = I.ring
    if ring.lattice.rank != 1:
        raise ValueError("needs a one-dimensional curve lattice")
    N = I.truncation if degree is None else degree
    i0 = [_scalar(I, d, 0) for d in range(N + 1)]
    i1 = [_scalar(I, d, 1) for d in range(N + 1)]
    i2 = [_scalar(I, d, 2) for d in range(N + 1)]
    inv0 = ps_inv(i0, N)
    g = ps_mul(i1, inv0, N)
    w22 = ps_mul(i2, inv0, N)
    w = [x - y / 2 for x, y in zip(w22, ps_mul(g, g, N))]
    q_of_Q = univariate_reversion(g, N)
    w_Q = ps_compose(w, q_of_Q, N)
    if classical is None:
        classical = _classical_term(I)
    # classical * W = sum_d d N_d Q^d
    Nd = {d: classical * w_Q[d] / d for d in range(1, N + 1)}
    coupling = [classical] + [d ** 3 * Nd[d] for d in range(1, N + 1)]
    nd: Dict[int, Fraction] = {}
    for d in range(1, N + 1):
        s = d ** 3 * Nd[d] - sum((nd[k] * k ** 3 for k in range(1, d) if d % k == 0), ZERO)
        nd[d] = s / d ** 3
    return YukawaData(i0, g, q_of_Q, coupling, Nd, nd)


def _classical_term(I: QSeries) -> Fraction:
    # a degree-m hypersurface in P^4 has I_1 = m! at h^0 z^0; recover m from it
    c = _scalar(I, 1, 0)
    m, f = 1, 1
    while f < c:
        m += 1
        f *= m
    if f != c:
        raise ValueError("cannot infer the hypersurface degree from the I-series")
    return Fraction(m)


def yukawa_closed_form(data: YukawaData, degree: int, classical=5, conifold=3125) -> List[Fraction]:
    """``classical / ((1 - conifold q) I0^2 (q dtau/dq)^3)`` re-expanded in Q."""
    N = degree
    qd = [ZERO] + [k * data.mirror[k] for k in range(1, N + 1)]
    dtau = [Fraction(1) + qd[0]] + qd[1:]
    denom = ps_mul(ps_mul(data.I0, data.I0, N), ps_mul(dtau, ps_mul(dtau, dtau, N), N), N)
    denom = ps_mul(denom, [Fraction(1), Fraction(-conifold)], N)
    k_q = [Fraction(classical) * x for x in ps_inv(denom, N)]
    return ps_compose(k_q, data.q_of_Q, N)
