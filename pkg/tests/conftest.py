import pytest

from effbc import laminate_tensor, make_field, make_rational_direction


@pytest.fixture(scope="session")
def laminate2():
    return laminate_tensor(2)


@pytest.fixture(scope="session")
def xi_e2():
    return make_rational_direction([0, 1])


@pytest.fixture(scope="session")
def xi_12():
    return make_rational_direction([1, 2])


@pytest.fixture(scope="session")
def data_cos1():
    # cos(2 pi y1)
    return make_field(2, terms=[(1.0, [1, 0], "cos")])


@pytest.fixture(scope="session")
def data_diag():
    # 1/3 + cos(2 pi (y1 + y2))
    return make_field(2, terms=[(1.0, [1, 1], "cos")], constant=1.0 / 3.0)
