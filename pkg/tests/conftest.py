import numpy as np
import pytest

from leibenson import derive_constants


@pytest.fixture(scope="session")
def params231():
    return derive_constants(2, 3.0, 1.0)


@pytest.fixture(scope="session")
def params222():
    return derive_constants(2, 2.0, 2.0)


@pytest.fixture(scope="session")
def params332():
    return derive_constants(3, 3.0, 2.0)


@pytest.fixture(scope="session")
def params3183():
    return derive_constants(3, 1.8, 3.0)


@pytest.fixture(scope="session")
def param_quartet(params231, params222, params332, params3183):
    return [params231, params222, params332, params3183]


def random_valid_triples(rng: np.random.Generator, n: int):
    """Random (d, p, q) in the slow-diffusion regime with d in {1, 2, 3}."""
    out = []
    while len(out) < n:
        d = int(rng.integers(1, 4))
        p = float(rng.uniform(1.2, 4.0))
        q = float(rng.uniform(0.2, 4.0))
        if q * (p - 1.0) > 1.05:
            out.append((d, p, q))
    return out
