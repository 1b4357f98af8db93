import numpy as np
import pytest

from hybridjump.families import constant_rate_model, discrete_toy_model
from hybridjump.regimes import ThreeRegimeExample


@pytest.fixture
def toy_model():
    return discrete_toy_model()


@pytest.fixture
def const_model():
    return constant_rate_model()


@pytest.fixture
def example_001():
    return ThreeRegimeExample(epsilon=0.01)


@pytest.fixture
def x_grid():
    return [np.array([v]) for v in np.linspace(-2.0, 2.0, 9)]
