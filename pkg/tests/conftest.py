import numpy as np
import pytest

from stielap import measure


IDENTITY_W = {"name": "identity-w", "side": "cadlag", "knots": [[0.0, 0.0], [1.0, 1.0]], "atoms": []}
IDENTITY_V = {"name": "identity-v", "side": "caglad", "knots": [[0.0, 0.0], [1.0, 1.0]], "atoms": []}
ATOMIC_W = {"name": "atomic-w", "side": "cadlag",
            "knots": [[0.0, 0.0], [1.0, 0.5]], "atoms": [[0.5, 0.5]]}
ATOMIC_W2 = {"name": "atomic-w2", "side": "cadlag",
             "knots": [[0.0, 0.0], [1.0, 0.7]], "atoms": [[0.3, 0.2], [0.8, 0.1]]}
ATOMIC_V = {"name": "atomic-v", "side": "caglad",
            "knots": [[0.0, 0.0], [0.5, 0.2], [1.0, 0.6]], "atoms": [[0.25, 0.4]]}
ATOMIC_W3 = {"name": "atomic-w3", "side": "cadlag",
             "knots": [[0.0, 0.0], [1.0, 0.7]], "atoms": [[0.25, 0.3]]}


@pytest.fixture(scope="session")
def identity_pair():
    return measure.from_spec(IDENTITY_W), measure.from_spec(IDENTITY_V)


@pytest.fixture(scope="session")
def atomic_pair():
    return measure.from_spec(ATOMIC_W), measure.from_spec(IDENTITY_V)


@pytest.fixture(scope="session")
def atomic_pair2():
    return measure.from_spec(ATOMIC_W2), measure.from_spec(IDENTITY_V)


@pytest.fixture(scope="session")
def atomic_pair3():
    return measure.from_spec(ATOMIC_W), measure.from_spec(ATOMIC_V)


@pytest.fixture(scope="session")
def classical_grid(identity_pair):
    w, v = identity_pair
    return measure.build_grid(w, v, m=512)


@pytest.fixture(scope="session")
def atomic_grid(atomic_pair):
    w, v = atomic_pair
    return measure.build_grid(w, v, m=512)
