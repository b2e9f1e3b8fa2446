
import pytest

from qlh.cohomring import flip_source, projective_space
from qlh.dmod import apply_operator, pf_operators_bundle
from qlh.errors import ExtendedModeRequired, NotInvertible
from qlh.gwfun import (
    SymDivisor,
    blowup_relative_factor,
    determinantal_relative_factor,
    factorial_factor,
    i_function_complete_intersection,
    i_function_tower,
    inverse_linear_form,
)
from qlh.pipelines import quintic, scalar_coefficients


def test_factorial_factor_modes():
    p1 = projective_space(1)
    assert factorial_factor((1,), (0,), p1) == {0: p1.unit_vector()}
    # (h)_1 = h + z
    assert factorial_factor((1,), (1,), p1) == {0: (0, 1), 1: (1, 0)}
    with pytest.raises(ExtendedModeRequired):
        factorial_factor((-1,), (1,), p1)
    # 1/(-h)_1 = -h, the bare m = 0 factor
    assert factorial_factor((-1,), (1,), p1, reciprocal=True) == {0: (0, -1)}
    with pytest.raises(NotInvertible):
        inverse_linear_form(p1, (1,), 0)


def test_p1_i_function():
    p1 = projective_space(1)
    I = i_function_tower(p1, 3)
    assert I[(0,)] == {0: (1, 0)}
    assert I[(1,)] == {-2: (1, 0), -3: (0, -2)}


def test_projective_space_pf_annihilation():
    for n in range(1, 5):
        p = projective_space(n)
        (name, op), = pf_operators_bundle(p)
        assert apply_operator(op, i_function_tower(p, 5)).is_zero()


def test_flip_source_annihilation():
    X = flip_source()
    I = i_function_tower(X, 5)
    for _, op in pf_operators_bundle(X):
        assert apply_operator(op, I).is_zero()


def test_empty_twist_is_identity():
    p = projective_space(2)
    I = i_function_tower(p, 3)
    assert i_function_complete_intersection(I, []) == I


def test_quintic_first_terms():
    p4 = projective_space(4)
    I = i_function_complete_intersection(i_function_tower(p4, 2), [(5,)])
    assert scalar_coefficients(I, 0, 0) == [1, 120, 113400]
    assert quintic(2).yukawa.mirror[1] == 770


def test_fano_twist_has_no_positive_z_powers():
    p4 = projective_space(4)
    for deg in (1, 2, 3, 4, 5):
        I = i_function_complete_intersection(i_function_tower(p4, 3), [(deg,)])
        assert all(e <= 0 for v in I.terms.values() for e in v)


def test_blowup_factor_cases():
    D1, D2 = SymDivisor.named("D1", 0), SymDivisor.named("D2", 0)
    assert blowup_relative_factor([D1, D2], SymDivisor.named("E", 0)).is_one()
    for k in range(-2, 4):
        assert blowup_relative_factor([SymDivisor.named("D1", k)], SymDivisor.zero()).is_one()
    r2 = blowup_relative_factor([D1, D2], SymDivisor.named("E", -1))
    assert str(r2) == "exp[s*(E/z-1)]*(E)/((D1-E+z)*(D2-E+z))"


def test_blowup_factor_evaluates_in_a_ring():
    # D1 = D2 = 0 and E = h on P^1: E / (-E + z)^2 expands to z^-2 h
    r2 = blowup_relative_factor([SymDivisor.named("D1", 0), SymDivisor.named("D2", 0)], SymDivisor.named("E", -1))
    p1 = projective_space(1)
    val = r2.evaluate(p1, {"D1": (0,), "D2": (0,), "E": (1,)})
    assert val == {-2: (0, 1)}


def test_determinantal_factor_cases():
    L = [SymDivisor.named("L0", 0), SymDivisor.named("L1", 0)]
    assert determinantal_relative_factor(L, SymDivisor.named("h", 0)).is_one()
    assert determinantal_relative_factor([SymDivisor.zero()] * 2, SymDivisor.named("h", 1)).is_one()
    assert determinantal_relative_factor([SymDivisor.zero()] * 3, SymDivisor.named("h", 2)).is_one()
    f = determinantal_relative_factor([SymDivisor.named("L0", 1), SymDivisor.zero()], SymDivisor.named("h", 0))
    assert not f.is_one()
