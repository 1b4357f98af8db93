import math

import numpy as np
import pytest

from hybridjump.derivatives import SpatialDerivatives, finite_difference
from hybridjump.errors import MissingDerivative


def test_first_order_fd_agreement_bound():
    # declared-step contract: |fd - oracle| <= 10 * step^2 on a smoke grid
    step = 1e-4
    f = lambda x: math.sin(float(x[0]))
    for v in np.linspace(-2, 2, 9):
        x = np.array([v])
        fd = finite_difference(f, x, (0,), step)
        assert abs(fd - math.cos(v)) <= 10 * step ** 2


def test_second_and_third_order_fd():
    f = lambda x: math.exp(0.5 * float(x[0]))
    x = np.array([0.3])
    d2 = finite_difference(f, x, (0, 0))
    d3 = finite_difference(f, x, (0, 0, 0))
    assert d2 == pytest.approx(0.25 * math.exp(0.15), rel=1e-5)
    assert d3 == pytest.approx(0.125 * math.exp(0.15), rel=1e-3)


def test_mixed_partials_2d():
    f = lambda x: float(x[0]) ** 2 * float(x[1]) ** 3
    x = np.array([1.2, 0.7])
    d = finite_difference(f, x, (0, 1))
    assert d == pytest.approx(2 * 1.2 * 3 * 0.7 ** 2, rel=1e-5)


def test_oracle_preferred_over_fd():
    calls = {"oracle": 0}

    def oracle(t, x):
        calls["oracle"] += 1
        return np.array([math.cos(float(x[0]))])

    der = SpatialDerivatives(lambda t, x: np.array([math.sin(float(x[0]))]),
                             {(0,): oracle}, q_max=1)
    v = der((0,), 0.0, np.array([0.4]))
    assert calls["oracle"] == 1
    assert float(v[0]) == pytest.approx(math.cos(0.4))


def test_missing_derivative_when_fd_disabled():
    der = SpatialDerivatives(lambda t, x: float(x[0]), allow_fd=False)
    with pytest.raises(MissingDerivative):
        der((0,), 0.0, np.array([0.0]))


def test_vector_valued_fd():
    der = SpatialDerivatives(lambda t, x: np.array([x[0] ** 2, x[0] * x[1]]))
    g = der((0,), 0.0, np.array([1.5, 2.0]))
    assert g == pytest.approx(np.array([3.0, 2.0]), rel=1e-6)
