
import pytest

from qlh import birational as br
from qlh.cohomring import flip_source, projective_space
from qlh.dmod import DiffOperator, apply_operator
from qlh.errors import LaurentModeRequired, ReductionFailed, SingularStep
from qlh.linalg import identity, inverse, matmul
from qlh.series import QSeries


@pytest.fixture(scope="module")
def flip_result():
    return br.flip_block_decomposition(4)


def test_correspondence_rules():
    c = br.local_model("flip")
    assert c.divisor((0, 1)) == (0, 1)
    assert c.divisor((1, 0)) == (-1, 1)
    assert c.curve((1, 0)) == (-1, 0)
    assert c.curve((0, 1)) == (1, 1)
    # q1 = q^l e^{t^h} goes to 1/q1'; q2 goes to q1' q2'
    assert c.coordinates((1, 0)) == (-1, 1)
    assert c.pairing_compatible()
    assert br.correspondence_apply(c, (1, 0), "curve") == (-1, 0)


def test_correspondence_on_operators():
    c = br.local_model("flop")
    proto = DiffOperator.for_ring(c.source)
    img = c.operator(proto.q((1, 0)) * proto.zd((1, 0)))
    tproto = DiffOperator(c.target.lattice.with_laurent(True), 2)
    assert img == tproto.q((-1, 0)) * tproto.zd((-1, 1))


def test_negative_class_needs_laurent_mode():
    ring = projective_space(1)
    proto = DiffOperator.for_ring(ring)
    with pytest.raises(LaurentModeRequired):
        apply_operator(proto.q((-1,)), QSeries.unit(ring))


def test_flop_pairing():
    rep = br.pairing_report(br.local_model("flop"))
    assert rep["isometry"] and rep["pairing_compatible"]
    assert rep["kernel"] == []


def test_flip_pairing_and_kernel():
    rep = br.pairing_report(br.local_model("flip"))
    assert rep["transpose_isometry"]
    assert rep["kernel_orthogonal"]
    assert rep["left_inverse"]
    (k,), = [rep["kernel"]]
    lead = next(x for x in k if x)
    # (xi - h)^2 on the basis 1, h, h^2, xi, h xi, h^2 xi, xi^2, h xi^2, h^2 xi^2
    assert [x / lead for x in k] == [0, 0, 1, 0, -2, 0, 1, 0, 0]
    X = flip_source()
    assert X.element({(0, 2): 1, (1, 1): -2, (2, 0): 1}) == tuple(x / lead for x in k)


def test_identity_correspondence_cofactor_one():
    ring = flip_source()
    c = br.identity_correspondence(ring)
    ops = br.pf_operators(ring)
    cert = br.pf_ideal_isomorphism_check(c, ops, ops, trials=3, seed=1)
    assert cert.passed
    for i, e in enumerate(cert.entries):
        assert e["cofactors"][i] == "1"
        assert all(x == "0" for j, x in enumerate(e["cofactors"]) if j != i)


@pytest.mark.parametrize("kind", ["flop", "flip"])
def test_pf_ideals_correspond(kind):
    c = br.local_model(kind)
    cert = br.pf_ideal_isomorphism_check(c, br.pf_operators(c.source), br.pf_operators(c.target), trials=4, seed=3)
    assert cert.passed and cert.trials == 4


def test_pf_check_reports_failures():
    c = br.local_model("flop")
    proto = DiffOperator.for_ring(c.source)
    with pytest.raises(ReductionFailed) as info:
        br.pf_ideal_isomorphism_check(c, [proto.zd((1, 0))], br.pf_operators(c.target), trials=2, seed=0)
    assert info.value.witness


def test_flip_matrices_match_reference():
    fc = br.flip_connection(3)
    assert br.series_to_entries(fc.A1) == br.load_reference("A1")
    assert br.series_to_entries(fc.A2) == br.load_reference("A2")
    # classical limit: cup product by h written in the v-frame
    L = fc.frame.leading_matrix()
    assert fc.A1[(0, 0)] == matmul(matmul(inverse(L), fc.ring.gen_mats[0]), L)
    row9 = {c: v for (r, c), v in br.load_reference("A1").items() if r == 8}
    assert row9 == {1: {(0, 0): 1}, 2: {(0, 0): -1}, 8: {(1, 0): 1}}


def test_w_basis_and_reference_matrix(flip_result):
    W = flip_result.W
    assert flip_result.family_dim == 0
    expected = identity(9)
    for i, j in ((2, 1), (4, 3), (6, 5)):
        expected[i][j] = expected[i][j] + type(expected[i][j])(1, 2)
    assert W == expected
    assert flip_result.matches_reference
    Mx = flip_result.Mx
    assert Mx[8][8] == {(-1, 0, 0): -1}
    assert Mx[8][1] == {(0, 0, 0): type(W[0][0])(-1, 2)}


def test_block_gauge(flip_result):
    bg = flip_result.gauge
    assert br.symmetry_defects(bg) == []
    assert all(not br.cross_blocks(B) for B in bg.B)
    other = br.block_diagonalize(flip_result.Mx, flip_result.My, 4, "iterate")
    assert (other.f, other.g) == (bg.f, bg.g)
    dec = br.decomposition_at_z0(bg, flip_result.W)
    assert dec["block_diagonal"] and dec["commute"]
    assert dec["pf_full_system"] and dec["pf_block"]


def test_block_gauge_order_zero(flip_result):
    bg = br.block_diagonalize(flip_result.Mx, flip_result.My, 0)
    assert all(not br.p_truncate(x, 0) for x in bg.f + bg.g)


def test_singular_step_without_pole():
    m = br.pm_const(identity(3))
    with pytest.raises(SingularStep):
        br.block_diagonalize(m, order=2)
