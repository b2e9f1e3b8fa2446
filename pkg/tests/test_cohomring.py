from fractions import Fraction

import pytest

from qlh.cohomring import (
    build_point,
    flip_source,
    flip_target,
    flop_source,
    parse_geometry,
    poincare_dual_basis,
    projective_space,
    tower,
)
from qlh.errors import ConfigError


def test_point():
    pt = build_point()
    assert pt.dim == 1
    assert pt.integrate(pt.unit_vector()) == 1


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_projective_space(n):
    p = projective_space(n)
    p.check()
    assert p.dim == n + 1
    assert p.integrate(p.monomial(n)) == 1
    assert not any(p.mul(p.monomial(1), p.monomial(n)))
    assert p.lattice.pair((1,), (1,)) == 1


def test_flip_rings():
    src, tgt = flip_source(), flip_target()
    src.check()
    tgt.check()
    assert (src.dim, tgt.dim) == (9, 8)
    assert src.gen_names == tgt.gen_names == ("h", "xi")
    assert not any(r for res in src.relation_residuals() for r in res)


def test_flip_source_relation_by_hand():
    # xi (xi - h)^2 = 0 and h^3 = 0
    src = flip_source()
    rel = src.element({(0, 3): 1, (1, 2): -2, (2, 1): 1})
    assert not any(rel)
    assert not any(src.monomial(3, 0))
    assert src.integrate(src.monomial(2, 2)) == 1


def test_pairing_and_dual():
    for ring in (projective_space(3), flop_source(), flip_source()):
        g, dual = poincare_dual_basis(ring)
        for i in range(ring.dim):
            for j in range(ring.dim):
                assert ring.pair(ring.unit_vector(i), dual[j]) == (1 if i == j else 0)


def test_hirzebruch_intersection_numbers():
    f1 = tower([("h", [(), ()]), ("xi", [(-1,), (0,)])])
    f1.check()
    assert f1.integrate(f1.monomial(1, 1)) == 1
    assert f1.integrate(f1.monomial(0, 2)) == 1
    assert f1.integrate(f1.monomial(2, 0)) == 0


def test_parse_geometry_round_trip():
    ring, twists = parse_geometry({"schema_version": 1, "proj_space": 4, "complete_intersection": [[5]]})
    assert ring.dim == 5 and twists == [(5,)]
    ring, _ = parse_geometry({"base": {"proj_space": 1},
                              "bundle": {"fiber_divisor": "xi", "line_bundles": [[0], [-1], [-1]]}})
    assert ring.dim == flop_source().dim
    assert ring.pairing == flop_source().pairing


@pytest.mark.parametrize("bad", [
    [],
    {"schema_version": 2, "proj_space": 1},
    {"proj_space": -1},
    {"nothing": 1},
    {"base": {"proj_space": 1}, "bundle": {"line_bundles": [[0, 1]]}},
    {"base": {"proj_space": 1}, "bundle": {"fiber_divisor": "h", "line_bundles": [[0]]}},
    {"proj_space": 2, "complete_intersection": [[1, 2]]},
])
def test_parse_geometry_errors(bad):
    with pytest.raises(ConfigError):
        parse_geometry(bad)


def test_mult_matrix_matches_mul():
    ring = flip_source()
    x = ring.element({(1, 0): 2, (0, 1): Fraction(1, 3)})
    m = ring.mult_matrix(x)
    for i in range(ring.dim):
        col = tuple(m[k][i] for k in range(ring.dim))
        assert col == ring.mul(x, ring.unit_vector(i))
