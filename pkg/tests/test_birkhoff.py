import pytest

from qlh.birkhoff import (
    ConnectionData,
    birkhoff_factorize,
    gauge_residual,
    yukawa_closed_form,
)
from qlh.cohomring import flop_source, projective_space, tower
from qlh.errors import MirrorMapLeavesChart, ObstructionNonzero
from qlh.grassmannian import grassmannian_g25_lines_oracle
from qlh.linalg import identity
from qlh.pipelines import dubrovin, quintic
from qlh.series import CurveLattice


def _one_dim(C, truncation=3, dim=2):
    lat = CurveLattice(("l",), ((1,),))
    return ConnectionData([(1,)], ["h"], lat, dim, truncation, [C])


def test_z_free_input_is_a_fixed_point():
    C = {(0,): {0: [[0, 0], [1, 0]]}, (1,): {0: [[0, 1], [0, 0]]}}
    B, conn = birkhoff_factorize(_one_dim(C))
    assert B == {(0,): {0: identity(2)}}
    assert conn.A[0] == {(0,): [[0, 0], [1, 0]], (1,): [[0, 1], [0, 0]]}


def test_classical_z_dependence_is_rejected():
    C = {(0,): {1: [[1, 0], [0, 1]]}}
    with pytest.raises(ObstructionNonzero):
        birkhoff_factorize(_one_dim(C))


def test_p1_small_product():
    r = dubrovin(projective_space(1), 4)
    assert r.A(0) == {(0,): [[0, 0], [1, 0]], (1,): [[0, 1], [0, 0]]}
    assert r.B == {(0,): {0: identity(2)}}


@pytest.mark.parametrize("ring", [
    projective_space(2),
    tower([("h", [(), ()]), ("xi", [(-1,), (0,)])]),
    flop_source(),
])
def test_gauge_round_trip(ring):
    r = dubrovin(ring, 4)
    assert r.gauge_consistent()
    assert all(not r for r in gauge_residual(r.conn, r.B))


def test_stratum_order_does_not_matter():
    ring = tower([("h", [(), ()]), ("xi", [(-1,), (0,)])])
    r = dubrovin(ring, 4)
    pre = r.conn
    B2, conn2 = birkhoff_factorize(pre, order="revlex", pivot="last")
    assert B2 == r.B
    assert conn2.A == r.conn.A


@pytest.mark.parametrize("n", [1, 2, 3])
def test_projective_mirror_map_is_trivial(n):
    m = dubrovin(projective_space(n), 4).mirror()
    assert m.shifts == {}


def test_quintic_numbers():
    y = quintic(4).yukawa
    assert y.I0[:3] == [1, 120, 113400]
    assert y.mirror[1] == 770
    assert y.coupling[0] == 5
    assert y.n[1] == grassmannian_g25_lines_oracle()
    assert [y.n[d] for d in (2, 3)] == [609250, 317206375]


def test_quintic_coupling_closed_form():
    y = quintic(4).yukawa
    assert yukawa_closed_form(y, 4) == y.coupling


def test_flip_target_leaves_chart():
    from qlh.cohomring import flip_target

    r = dubrovin(flip_target(), 3)
    assert r.flat()
    with pytest.raises(MirrorMapLeavesChart):
        r.mirror()
