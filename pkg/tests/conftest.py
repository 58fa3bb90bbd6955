import numpy as np
import pytest

from microtrap.geometry import initial_currents, reference_layout
from microtrap.trap import characterize

INITIAL_GUESS = (0.0, 0.0, 0.3e-3)


@pytest.fixture(scope="session")
def layout():
    return reference_layout()


@pytest.fixture(scope="session")
def currents():
    return initial_currents()


@pytest.fixture(scope="session")
def initial_metrics(layout, currents):
    return characterize(layout, currents, INITIAL_GUESS)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
