import numpy as np
import pytest

from qincompat import mub_qubit, sharp_observable


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def sharp_x():
    return sharp_observable(np.array([[1, 1], [1, -1]]) / np.sqrt(2))


@pytest.fixture
def sharp_z():
    return sharp_observable(np.eye(2))


@pytest.fixture
def mub3():
    return mub_qubit()


def rand_herm(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2
