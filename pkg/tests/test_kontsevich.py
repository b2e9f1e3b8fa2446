from qlh.kontsevich import kontsevich_numbers, p2_small_product, p2_three_point


def test_known_numbers():
    assert kontsevich_numbers(5) == {1: 1, 2: 1, 3: 12, 4: 620, 5: 87304}


def test_three_point_axioms():
    N = kontsevich_numbers(2)
    assert p2_three_point(0, 1, 1, 0, N) == 1
    assert p2_three_point(2, 2, 1, 1, N) == 1
    assert p2_three_point(2, 2, 0, 1, N) == 0


def test_small_products():
    assert p2_small_product(1, 1) == {0: [0, 0, 1]}
    assert p2_small_product(1, 2) == {1: [1, 0, 0]}
    assert p2_small_product(2, 2) == {1: [0, 1, 0]}
