import numpy as np
import pytest

from aperiodica.cutproject import generate_model_set, preset
from aperiodica.pointset import PointSet


def integer_sample(n, a=1.0):
    m = int(np.floor(n / a + 1e-12))
    return PointSet((a * np.arange(-m, m + 1))[:, None], n, label=f"lattice:{a}")


@pytest.fixture(scope="session")
def z100():
    return integer_sample(100)


@pytest.fixture(scope="session")
def fib_scheme():
    return preset("fibonacci")


@pytest.fixture(scope="session")
def fib1000(fib_scheme):
    cps, w = fib_scheme
    return generate_model_set(cps, w, 1000)


@pytest.fixture(scope="session")
def fib300(fib_scheme):
    cps, w = fib_scheme
    return generate_model_set(cps, w, 300)
