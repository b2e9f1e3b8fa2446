"""Linear algebra of conifold transitions.

``k`` nodes, ``A`` (k x mu) lists relations among the vanishing curves and
``B`` (k x rho) relations among the vanishing spheres.  The symbolic unit
``kappa`` stands for ``1/(2 pi i)`` and is never evaluated.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import ExactnessFailure, IndexOutOfRange, Mismatch
from .linalg import (
    ZERO,
    Matrix,
    fmt,
    identity,
    integer_kernel_basis,
    inverse,
    matmul,
    nullspace,
    rank,
    transpose,
    zeros,
)


def _cols(m: Sequence[Sequence], k: int, width: int) -> List[List[Fraction]]:
    return [[Fraction(m[i][j]) for i in range(k)] for j in range(width)]


@dataclass
class TransitionData:
    k: int
    mu: int
    rho: int
    A: List[List[int]]
    B: List[List[int]] = field(default_factory=list)

    @classmethod
    def from_matrices(cls, A: Sequence[Sequence[int]], B: Optional[Sequence[Sequence[int]]] = None,
                      k: Optional[int] = None) -> "TransitionData":
        """Build from ``A``; when ``B`` is missing it is a saturated integer basis of ``ker A^t``."""
        A = [list(map(int, row)) for row in A]
        k = len(A) if k is None else k
        mu = len(A[0]) if A and A[0] else 0
        if B is None:
            at = [[A[i][j] for i in range(k)] for j in range(mu)]
            basis = integer_kernel_basis(at) if mu else [[1 if i == j else 0 for i in range(k)] for j in range(k)]
            B = [[basis[j][i] for j in range(len(basis))] for i in range(k)]
        B = [list(map(int, row)) for row in B]
        rho = len(B[0]) if B and B[0] else 0
        return cls(k, mu, rho, A, B)

    def a_columns(self) -> List[List[Fraction]]:
        return _cols(self.A, self.k, self.mu)

    def b_columns(self) -> List[List[Fraction]]:
        return _cols(self.B, self.k, self.rho)


@dataclass
class TransitionCertificate:
    k: int
    mu: int
    rho: int
    rank_A: int
    rank_B: int
    basis_A: List[List[Fraction]]
    basis_B: List[List[Fraction]]

    def as_dict(self) -> dict:
        return {
            "k": self.k, "mu": self.mu, "rho": self.rho,
            "rank_A": self.rank_A, "rank_B": self.rank_B,
            "basis_A": [[fmt(x) for x in v] for v in self.basis_A],
            "basis_B": [[fmt(x) for x in v] for v in self.basis_B],
        }


def _rank_cols(cols: List[List[Fraction]], k: int) -> int:
    if not cols:
        return 0
    return rank([[c[i] for c in cols] for i in range(k)])


def validate_transition(d: TransitionData) -> TransitionCertificate:
    """Check counts, ranks, orthogonality and the orthogonal splitting of ``Q^k``."""
    if d.mu + d.rho != d.k:
        raise ExactnessFailure("count", witness={"mu": d.mu, "rho": d.rho, "k": d.k})
    for name, m, width in (("shape A", d.A, d.mu), ("shape B", d.B, d.rho)):
        if width and (len(m) != d.k or any(len(row) != width for row in m)):
            raise ExactnessFailure(name, witness={"rows": len(m), "expected": (d.k, width)})
    ca, cb = d.a_columns(), d.b_columns()
    ra, rb = _rank_cols(ca, d.k), _rank_cols(cb, d.k)
    if ra != d.mu:
        raise ExactnessFailure("rank A", witness=_kernel_witness(ca, d.k))
    if rb != d.rho:
        raise ExactnessFailure("rank B", witness=_kernel_witness(cb, d.k))
    for p, a in enumerate(ca):
        for s, b in enumerate(cb):
            dot = sum((x * y for x, y in zip(a, b)), ZERO)
            if dot:
                raise ExactnessFailure("A^t B = 0", witness={"column_A": p + 1, "column_B": s + 1, "value": str(dot)})
    if _rank_cols(ca + cb, d.k) != d.k:
        raise ExactnessFailure("orthogonal sum", witness=_kernel_witness(ca + cb, d.k))
    return TransitionCertificate(d.k, d.mu, d.rho, ra, rb, ca, cb)


def _kernel_witness(cols, k):
    if not cols:
        return []
    ns = nullspace([[c[i] for c in cols] for i in range(k)])
    return [str(x) for x in ns[0]] if ns else []


def euler_relation(chi_x: int, chi_y: int, k: int) -> Dict[str, int]:
    """``chi(Y) = chi(X) + 2k`` (a node trades an S^3 for an S^2)."""
    expected = chi_x + 2 * k
    if chi_y != expected:
        raise Mismatch(f"chi(Y) = {chi_y} but chi(X) + 2k = {expected}")
    return {"chi_X": chi_x, "chi_Y": chi_y, "k": k, "difference": chi_y - chi_x}


# ---------------------------------------------------------------------------
# discriminant arrangement and Yukawa log parts

LinearForm = Tuple[Fraction, ...]


def normalize_form(w: Sequence) -> Tuple[LinearForm, Fraction]:
    """``w = c * w0`` with the first nonzero entry of ``w0`` equal to 1."""
    w = tuple(Fraction(x) for x in w)
    lead = next((x for x in w if x), None)
    if lead is None:
        return w, ZERO
    return tuple(x / lead for x in w), lead


def form_str(w: Sequence, var: str = "r") -> str:
    parts = []
    for j, c in enumerate(w):
        if not c:
            continue
        s = f"{var}{j + 1}" if abs(c) == 1 else f"{fmt(abs(c))}*{var}{j + 1}"
        parts.append(("-" if c < 0 else "+") + s)
    if not parts:
        return "0"
    out = "".join(parts)
    return out[1:] if out.startswith("+") else out


@dataclass
class Arrangement:
    forms: List[LinearForm]
    hyperplanes: Dict[LinearForm, int]
    degenerate: List[int]

    def as_dict(self) -> dict:
        return {
            "forms": [form_str(w) for w in self.forms],
            "hyperplanes": [{"form": form_str(h), "multiplicity": m} for h, m in self.hyperplanes.items()],
            "degenerate_rows": [i + 1 for i in self.degenerate],
        }


def discriminant_arrangement(A: Sequence[Sequence[int]]) -> Arrangement:
    """``w_i(r) = sum_j a_ij r_j``; proportional forms define one hyperplane."""
    forms = [tuple(Fraction(x) for x in row) for row in A]
    hyper: Dict[LinearForm, int] = {}
    degenerate = []
    for i, w in enumerate(forms):
        h, c = normalize_form(w)
        if not c:
            degenerate.append(i)
            continue
        hyper[h] = hyper.get(h, 0) + 1
    return Arrangement(forms, hyper, degenerate)


@dataclass
class YukawaLogPart:
    """``kappa * sum_h c_h / h(r)`` over normalized hyperplanes ``h``."""

    terms: Dict[LinearForm, Fraction]

    def is_empty(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        return isinstance(other, YukawaLogPart) and self.terms == other.terms

    def __str__(self):
        if not self.terms:
            return "0"
        parts = [f"{fmt(c)}*kappa/({form_str(h)})" for h, c in sorted(self.terms.items())]
        return " + ".join(parts)


def yukawa_log_part(A: Sequence[Sequence[int]], p: int, m: int, n: int) -> YukawaLogPart:
    """Polar part of the third derivative ``u_pmn`` (1-based indices).

    Indices above ``mu`` give the empty sum; indices below 1 are rejected.
    """
    mu = len(A[0]) if A and A[0] else 0
    for idx in (p, m, n):
        if idx < 1:
            raise IndexOutOfRange(f"index {idx} < 1")
    if max(p, m, n) > mu:
        return YukawaLogPart({})
    terms: Dict[LinearForm, Fraction] = {}
    for row in A:
        num = Fraction(row[p - 1] * row[m - 1] * row[n - 1])
        h, c = normalize_form(row)
        if not num or not c:
            continue
        terms[h] = terms.get(h, ZERO) + num / c
        if not terms[h]:
            del terms[h]
    return YukawaLogPart(terms)


# ---------------------------------------------------------------------------
# the trivial logarithmic connection


@dataclass
class LogConnectionK:
    k: int
    residues: List[Matrix]

    @classmethod
    def build(cls, k: int) -> "LogConnectionK":
        res = []
        for i in range(k):
            r = zeros(k)
            r[i][i] = Fraction(1)
            res.append(r)
        return cls(k, res)

    def check(self) -> Dict[str, bool]:
        total = zeros(self.k)
        for r in self.residues:
            total = [[x + y for x, y in zip(a, b)] for a, b in zip(total, r)]
        idem = all(matmul(r, r) == r for r in self.residues)
        orth = all(
            matmul(ri, rj) == zeros(self.k)
            for i, ri in enumerate(self.residues) for j, rj in enumerate(self.residues) if i != j
        )
        return {"sum_identity": total == identity(self.k), "idempotent": idem, "orthogonal": orth}


def _compression(cols: List[List[Fraction]], k: int, r: Matrix):
    """``(C^t C)^{-1} C^t R C`` (R restricted to span C) and the ambient ``Pi R Pi``."""
    if not cols:
        return [], zeros(k)
    C = [[c[i] for c in cols] for i in range(k)]
    Ct = transpose(C)
    gram_inv = inverse(matmul(Ct, C))
    proj = matmul(matmul(C, gram_inv), Ct)
    local = matmul(matmul(gram_inv, Ct), matmul(r, C))
    return local, matmul(matmul(proj, r), proj)


@dataclass
class RestrictionReport:
    on_A: List[Matrix]
    on_B: List[Matrix]
    trace_A: Fraction
    trace_B: Fraction
    reassembles: bool
    residue_checks: Dict[str, bool]

    def as_dict(self) -> dict:
        return {
            "trace_A": fmt(self.trace_A),
            "trace_B": fmt(self.trace_B),
            "reassembles_identity": self.reassembles,
            "residues": self.residue_checks,
            "on_A": [[[fmt(x) for x in row] for row in m] for m in self.on_A],
            "on_B": [[[fmt(x) for x in row] for row in m] for m in self.on_B],
        }


def nabla_k_restrictions(d: TransitionData) -> RestrictionReport:
    """Compress each residue ``e_i (x) e_i^*`` to ``im A`` and ``im B``."""
    validate_transition(d)
    conn = LogConnectionK.build(d.k)
    ca, cb = d.a_columns(), d.b_columns()
    on_a, on_b = [], []
    total = zeros(d.k)
    ta = tb = ZERO
    for r in conn.residues:
        la, amb_a = _compression(ca, d.k, r)
        lb, amb_b = _compression(cb, d.k, r)
        on_a.append(la)
        on_b.append(lb)
        ta += sum((la[i][i] for i in range(len(la))), ZERO)
        tb += sum((lb[i][i] for i in range(len(lb))), ZERO)
        total = [[x + y + w for x, y, w in zip(a, b, c)] for a, b, c in zip(total, amb_a, amb_b)]
    return RestrictionReport(on_a, on_b, ta, tb, total == identity(d.k), conn.check())


# ---------------------------------------------------------------------------
# random instances


def random_transition(rng: random.Random, max_k: int = 6, entry: int = 3) -> TransitionData:
    """Random valid data: ``A`` of full column rank, ``B`` a saturated basis of ``ker A^t``."""
    k = rng.randint(1, max_k)
    mu = rng.randint(0, k)
    while True:
        A = [[rng.randint(-entry, entry) for _ in range(mu)] for _ in range(k)]
        if mu == 0 or rank([[Fraction(x) for x in row] for row in A]) == mu:
            break
    return TransitionData.from_matrices(A, None, k)
