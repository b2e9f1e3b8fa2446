"""Acceptance criteria 1-9; the conftest hook prints one PASS/FAIL line per criterion."""

import random
from fractions import Fraction

from qlh import birational as br
from qlh.birkhoff import is_flat, is_self_adjoint
from qlh.cohomring import flip_source, flip_target, flop_source, projective_space, tower
from qlh.conifold import (
    LogConnectionK,
    TransitionData,
    nabla_k_restrictions,
    random_transition,
    validate_transition,
)
from qlh.dmod import apply_operator, pf_operators_bundle
from qlh.errors import ExactnessFailure
from qlh.grassmannian import grassmannian_g25_lines_oracle
from qlh.gwfun import SymDivisor, blowup_relative_factor, determinantal_relative_factor
from qlh.kontsevich import kontsevich_numbers, p2_small_product
from qlh.linalg import identity
from qlh.pipelines import dubrovin, power_series_matrix, quintic
from qlh.verify import p2_pipeline_products

import pytest

HALF = Fraction(1, 2)


def test_criterion_1_flip_matrices():
    fc = br.flip_connection(3)
    A1, A2 = br.series_to_entries(fc.A1), br.series_to_entries(fc.A2)
    assert A1 == br.load_reference("A1")
    assert A2 == br.load_reference("A2")
    # spot entries, 1-based (row, col) -> {(q1 exp, q2 exp): coeff}
    assert A1[(1, 0)] == {(0, 0): 1}
    assert A1[(0, 5)] == {(1, 1): 1}
    assert A1[(8, 8)] == {(1, 0): 1}
    assert {c: v for (r, c), v in A1.items() if r == 8} == {1: {(0, 0): 1}, 2: {(0, 0): -1}, 8: {(1, 0): 1}}
    assert A2[(0, 3)] == {(0, 1): -1}
    assert A2[(4, 1)] == {(0, 0): 1} and A2[(4, 2)] == {(0, 0): 1}
    assert A2[(8, 7)] == {(0, 1): 1}


def test_criterion_2_quintic():
    y = quintic(4).yukawa
    oracle = grassmannian_g25_lines_oracle()
    assert y.I0[:2] == [1, 120]
    assert y.mirror[1] == 770
    assert y.n[1] == 2875 == oracle


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_criterion_3_projective_spaces(n):
    r = dubrovin(projective_space(n), 5)
    power = power_series_matrix(r.A(0), n + 1, r.ring.lattice, 5)
    assert power == {(1,): identity(n + 1)}
    (_, op), = pf_operators_bundle(r.ring)
    assert apply_operator(op, r.I).is_zero()
    assert r.I.truncation == 5


@pytest.mark.parametrize("kind", ["flop", "flip"])
def test_criterion_4_pf_ideals(kind):
    c = br.local_model(kind)
    cert = br.pf_ideal_isomorphism_check(c, br.pf_operators(c.source), br.pf_operators(c.target), trials=20)
    assert cert.trials == 20
    assert cert.passed
    assert len(cert.entries) == 2


def test_criterion_5_block_diagonalization():
    r = br.flip_block_decomposition(4)
    bg = r.gauge
    assert bg.order == 4
    assert br.symmetry_defects(bg) == []
    assert all(br.cross_blocks(B) == [] for B in bg.B)
    assert r.Mx == br.reference_xdx_matrix()
    assert r.Mx[8][8] == {(-1, 0, 0): -1}
    assert r.Mx[8][1] == {(0, 0, 0): -HALF}
    assert r.Mx[8][2] == {(0, 0, 0): 1}
    assert r.Mx[8][7] == {(1, 1, 0): 1}
    # pairing admissibility, 1-based: (w_i, w_j) = delta_{9, i+j} for i, j < 9 and (w_9, w_i) = delta_{9, i}
    gram = br.frame_gram(br.flip_connection(4).frame)
    W = r.W
    wg = [[sum(W[a][i] * gram[a][b] * W[b][j] for a in range(9) for b in range(9)) for j in range(9)]
          for i in range(9)]
    expected = [[1 if (i + j == 7 and max(i, j) < 8) or i == j == 8 else 0 for j in range(9)] for i in range(9)]
    assert wg == expected


GEOMETRIES = {
    "P1": lambda: projective_space(1),
    "P2": lambda: projective_space(2),
    "P3": lambda: projective_space(3),
    "P4": lambda: projective_space(4),
    "P1xP1": lambda: tower([("h", [(), ()]), ("xi", [(0,), (0,)])]),
    "F1": lambda: tower([("h", [(), ()]), ("xi", [(-1,), (0,)])]),
    "flop": flop_source,
    "flip_source": flip_source,
    "flip_target": flip_target,
}


@pytest.mark.parametrize("name", sorted(GEOMETRIES))
def test_criterion_6_flatness(name):
    r = dubrovin(GEOMETRIES[name](), 4)
    assert r.flat()
    assert r.self_adjoint()


def test_criterion_6_flatness_twisted_and_flip_frame():
    q = quintic(4).ambient
    assert q.flat() and q.self_adjoint()
    fc = br.flip_connection(4)
    assert is_flat(fc.conn)
    assert is_self_adjoint(fc.conn, br.frame_gram(fc.frame))


def test_criterion_7_conifold():
    rng = random.Random(0)
    for _ in range(200):
        d = random_transition(rng)
        cert = validate_transition(d)
        assert cert.rank_A == d.mu and cert.rank_B == d.rho
        rep = nabla_k_restrictions(d)
        assert rep.reassembles
        assert rep.trace_A == d.mu and rep.trace_B == d.rho
        assert all(rep.residue_checks.values())
    assert all(LogConnectionK.build(3).check().values())
    good = TransitionData.from_matrices([[1], [-1]], [[1], [1]])
    validate_transition(good)
    assert nabla_k_restrictions(good).on_B[0] == [[HALF]]
    with pytest.raises(ExactnessFailure) as info:
        validate_transition(TransitionData.from_matrices([[1], [-1]], [[1], [0]]))
    assert info.value.invariant == "A^t B = 0"
    with pytest.raises(ExactnessFailure) as info:
        validate_transition(TransitionData(2, 1, 0, [[1], [-1]], [[], []]))
    assert info.value.invariant == "count"


def test_criterion_8_relative_factors():
    D1, D2 = SymDivisor.named("D1", 0), SymDivisor.named("D2", 0)
    assert blowup_relative_factor([D1, D2], SymDivisor.named("E", 0)).is_one()
    assert blowup_relative_factor([SymDivisor.named("D1", 2)], SymDivisor.zero()).is_one()
    L = [SymDivisor.named("L0", 0), SymDivisor.named("L1", 0)]
    assert determinantal_relative_factor(L, SymDivisor.named("h", 0)).is_one()
    assert determinantal_relative_factor([SymDivisor.zero()] * 2, SymDivisor.named("h", 1)).is_one()
    r2 = blowup_relative_factor([D1, D2], SymDivisor.named("E", -1))
    assert str(r2) == "exp[s*(E/z-1)]*(E)/((D1-E+z)*(D2-E+z))"


def test_criterion_9_oracles():
    N = kontsevich_numbers(3)
    assert N[2] == 1 and N[3] == 12
    pipe = p2_pipeline_products(3)
    assert pipe["h*h^2"] == {1: [1, 0, 0]}
    assert pipe["h^2*h^2"] == {1: [0, 1, 0]}
    assert pipe["h*h^2"] == p2_small_product(1, 2, 3)
    assert pipe["h^2*h^2"] == p2_small_product(2, 2, 3)
