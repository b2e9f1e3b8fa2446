from qlh.grassmannian import grassmannian_g25_lines_oracle, sigma1_degree


def test_degree_of_g25():
    assert sigma1_degree() == 5


def test_lines_on_the_quintic():
    assert grassmannian_g25_lines_oracle() == 2875


def test_other_labelling_differs():
    assert grassmannian_g25_lines_oracle("sigma2") != 2875
