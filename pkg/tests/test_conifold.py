import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlh.conifold import (
    LogConnectionK,
    TransitionData,
    discriminant_arrangement,
    euler_relation,
    nabla_k_restrictions,
    random_transition,
    validate_transition,
    yukawa_log_part,
)
from qlh.errors import ExactnessFailure, IndexOutOfRange, Mismatch


def test_hand_example_valid():
    cert = validate_transition(TransitionData.from_matrices([[1], [-1]], [[1], [1]]))
    assert (cert.k, cert.mu, cert.rho, cert.rank_A, cert.rank_B) == (2, 1, 1, 1, 1)


@pytest.mark.parametrize("data,invariant", [
    (TransitionData.from_matrices([[1], [-1]], [[1], [0]]), "A^t B = 0"),
    (TransitionData(2, 1, 0, [[1], [-1]], [[], []]), "count"),
    (TransitionData.from_matrices([[1, 2], [2, 4], [0, 0]], [[0], [0], [1]]), "rank A"),
    (TransitionData(2, 1, 1, [[1], [-1]], [[1]]), "shape B"),
])
def test_exactness_failures(data, invariant):
    with pytest.raises(ExactnessFailure) as info:
        validate_transition(data)
    assert info.value.invariant == invariant


def test_b_from_kernel():
    d = TransitionData.from_matrices([[1], [-1]])
    assert d.B == [[1], [1]] or d.B == [[-1], [-1]]


def test_euler_relation():
    assert euler_relation(0, 4, 2)["difference"] == 4
    assert euler_relation(7, 7, 0)["k"] == 0
    with pytest.raises(Mismatch):
        euler_relation(0, 5, 2)


def test_arrangement():
    arr = discriminant_arrangement([[1], [-1]])
    assert arr.hyperplanes == {(Fraction(1),): 2}
    assert discriminant_arrangement([[1, 0], [0, 1]]).hyperplanes == {(1, 0): 1, (0, 1): 1}
    assert discriminant_arrangement([[1, 0], [0, 0]]).degenerate == [1]


def test_yukawa_log_parts():
    assert str(yukawa_log_part([[3]], 1, 1, 1)) == "9*kappa/(r1)"
    assert str(yukawa_log_part([[1], [-1]], 1, 1, 1)) == "2*kappa/(r1)"
    assert yukawa_log_part([[1], [-1]], 1, 1, 2).is_empty()
    with pytest.raises(IndexOutOfRange):
        yukawa_log_part([[1], [-1]], 0, 1, 1)


def test_log_connection():
    assert all(LogConnectionK.build(4).check().values())


def test_hand_compression():
    rep = nabla_k_restrictions(TransitionData.from_matrices([[1], [-1]], [[1], [1]]))
    assert rep.on_B[0] == [[Fraction(1, 2)]]
    assert rep.reassembles
    assert (rep.trace_A, rep.trace_B) == (1, 1)


@given(st.integers(0, 10_000))
def test_random_transitions(seed):
    d = random_transition(random.Random(seed))
    cert = validate_transition(d)
    assert cert.rank_A + cert.rank_B == d.k
    rep = nabla_k_restrictions(d)
    assert rep.trace_A == d.mu and rep.trace_B == d.rho and rep.reassembles


@given(st.integers(0, 10_000), st.permutations([0, 1, 2]))
def test_yukawa_symmetric(seed, perm):
    rng = random.Random(seed)
    d = random_transition(rng, max_k=5)
    if d.mu == 0:
        return
    idx = [rng.randint(1, d.mu) for _ in range(3)]
    assert yukawa_log_part(d.A, *idx) == yukawa_log_part(d.A, *[idx[p] for p in perm])
