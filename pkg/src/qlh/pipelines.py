"""End-to-end pipelines built from the lower layers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional

from .birkhoff import (
    ConnectionData,
    MirrorMap,
    YukawaData,
    birkhoff_factorize,
    gauge_residual,
    is_flat,
    is_self_adjoint,
    mirror_map_and_J,
    yukawa_from_mirror,
)
from .cohomring import RingPresentation, projective_space
from .dmod import Frame, apply_operator, frame_connection, naive_quantization_frame, pf_operators_bundle
from .gwfun import i_function_complete_intersection, i_function_tower
from .linalg import Matrix, matmul, transpose
from .series import DEFAULT_TRUNCATION, QSeries


@dataclass
class DubrovinResult:
    ring: RingPresentation
    I: QSeries
    frame: Frame
    B: dict
    conn: ConnectionData
    twists: tuple = ()

    def A(self, a: int = 0) -> Dict[tuple, Matrix]:
        return self.conn.A[a]

    def flat(self) -> bool:
        return is_flat(self.conn)

    def pairing(self) -> Matrix:
        """Poincare pairing in the frame basis, twisted by the Euler class of any complete-intersection bundles."""
        ring = self.ring
        euler = ring.unit_vector()
        for d in self.twists:
            euler = ring.mul(euler, ring.divisor_class(d))
        g = [[ring.integrate(ring.mul(ring.mul(ring.unit_vector(i), ring.unit_vector(j)), euler))
              for j in range(ring.dim)] for i in range(ring.dim)]
        lead = self.frame.leading_matrix()
        return matmul(matmul(transpose(lead), g), lead)

    def self_adjoint(self) -> bool:
        return is_self_adjoint(self.conn, self.pairing())

    def gauge_consistent(self) -> bool:
        return all(not r for r in gauge_residual(self.conn, self.B))

    def mirror(self) -> MirrorMap:
        return mirror_map_and_J(self.frame, self.B)


def generator_directions(ring: RingPresentation) -> List[tuple]:
    return [tuple(1 if i == a else 0 for i in range(ring.ngens)) for a in range(ring.ngens)]


def dubrovin(ring: RingPresentation, truncation: int = DEFAULT_TRUNCATION, I: Optional[QSeries] = None,
             basis=None, labels=None, twists: tuple = ()) -> DubrovinResult:
    """I-function, naive quantization frame, connections, Birkhoff factorization."""
    if I is None:
        I = i_function_tower(ring, truncation)
    frame = naive_quantization_frame(ring, I, basis, labels)
    dirs = generator_directions(ring)
    conns = [frame_connection(frame, d) for d in dirs]
    pre = ConnectionData(dirs, list(ring.gen_names), ring.lattice, ring.dim, I.truncation, conns)
    B, conn = birkhoff_factorize(pre)
    return DubrovinResult(ring, I, frame, B, conn, tuple(twists))


def pf_annihilates(ring: RingPresentation, I: QSeries) -> Dict[str, bool]:
    """Apply each cone-generator operator to ``I``; True when the result vanishes."""
    return {name: apply_operator(op, I).is_zero() for name, op in pf_operators_bundle(ring)}


@dataclass
class QuinticResult:
    yukawa: YukawaData
    ambient: DubrovinResult


def quintic(truncation: int = 4, degree: int = 5) -> QuinticResult:
    """Degree ``degree`` hypersurface in ``P^4`` (default: the quintic threefold)."""
    p4 = projective_space(4)
    I = i_function_complete_intersection(i_function_tower(p4, truncation), [(degree,)])
    y = yukawa_from_mirror(I)
    amb = dubrovin(p4, truncation, I=I, twists=((degree,),))
    return QuinticResult(y, amb)


def scalar_coefficients(s: QSeries, basis_index: int, zexp: int) -> List:
    """``[coefficient of q^d z^zexp T_basis_index]`` for a one-parameter series."""
    out = []
    for d in range(s.truncation + 1):
        v = s[(d,)].get(zexp)
        out.append(v[basis_index] if v else 0)
    return out


def power_series_matrix(mats: Dict[tuple, Matrix], power: int, lattice, truncation: int) -> Dict[tuple, Matrix]:
    from .birkhoff import series_matmul
    from .linalg import identity

    n = len(next(iter(mats.values())))
    out = {lattice.zero: identity(n)}
    for _ in range(power):
        out = series_matmul(out, mats, lattice, truncation)
    return out
