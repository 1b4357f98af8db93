import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridjump.errors import DegenerateFit, EmptySample
from hybridjump.weakerr import (chisquare_poisson, fit_rate, ks_two_sample,
                                weak_error)


class TestWeakError:
    def test_identical_arrays(self):
        a = np.array([0.1, 0.9, 0.4])
        est, (lo, hi) = weak_error(a, a.copy())
        assert est == 0.0 and lo <= 0.0 <= hi

    def test_constant_arrays_zero_width(self):
        est, (lo, hi) = weak_error(np.ones(10), np.zeros(10))
        assert est == 1.0 and lo == hi == 1.0

    def test_same_law_covers_zero(self):
        gen = np.random.default_rng(0)
        hits = 0
        for _ in range(100):
            a = gen.normal(size=10_000)
            b = gen.normal(size=10_000)
            est, (lo, hi) = weak_error(a, b, level=0.99)
            hits += lo == 0.0  # CI reaches down to zero
        assert hits >= 95

    def test_symmetry(self):
        gen = np.random.default_rng(1)
        a, b = gen.normal(size=100), gen.normal(1.0, size=100)
        assert weak_error(a, b) == weak_error(b, a)

    def test_empty_raises(self):
        with pytest.raises(EmptySample):
            weak_error([], [1.0])


class TestFitRate:
    def test_exact_half_power(self):
        params = np.array([0.1, 0.2, 0.4, 0.8])
        slope, stderr, r2 = fit_rate(params, 3.0 * params ** 0.5)
        assert slope == pytest.approx(0.5, abs=1e-12)
        assert r2 == pytest.approx(1.0, abs=1e-12)

    def test_constant_errors_slope_zero(self):
        slope, _, _ = fit_rate([0.1, 0.2, 0.4], [2.0, 2.0, 2.0])
        assert slope == pytest.approx(0.0, abs=1e-12)

    def test_noisy_half_power(self):
        gen = np.random.default_rng(2)
        params = np.array([0.02, 0.01, 0.005, 0.0025, 0.00125])
        ok = 0
        for _ in range(100):
            noise = 1.0 + 0.05 * gen.standard_normal(len(params))
            slope, _, _ = fit_rate(params, 0.7 * params ** 0.5 * noise)
            ok += 0.45 <= slope <= 0.55
        assert ok >= 95

    def test_scale_invariance(self):
        params = [0.1, 0.2, 0.4]
        errors = np.array([1.0, 1.7, 2.2])
        s1, _, _ = fit_rate(params, errors)
        s2, _, _ = fit_rate(params, 13.7 * errors)
        assert s1 == pytest.approx(s2, rel=1e-12)

    def test_degenerate_inputs(self):
        with pytest.raises(DegenerateFit):
            fit_rate([0.1, 0.1, 0.2], [1, 2, 3])
        with pytest.raises(DegenerateFit):
            fit_rate([0.1, 0.2], [1, 2])
        with pytest.raises(DegenerateFit):
            fit_rate([0.1, 0.2, 0.3], [1.0, -1.0, 2.0])


class TestDistributionTests:
    def test_ks_identical(self):
        a = np.array([0.5, 1.5, 2.5])
        res = ks_two_sample(a, a.copy())
        assert res.statistic == 0.0 and res.pvalue == 1.0

    def test_poisson_true_lambda(self):
        gen = np.random.default_rng(3)
        hits = 0
        for _ in range(100):
            counts = gen.poisson(18.0, 10_000)
            hits += chisquare_poisson(counts, 18.0).pvalue > 0.01
        assert hits >= 95

    def test_poisson_wrong_lambda_power(self):
        gen = np.random.default_rng(4)
        rejects = 0
        for _ in range(100):
            counts = gen.poisson(18.0, 10_000)
            rejects += chisquare_poisson(counts, 25.0).pvalue < 0.01
        assert rejects >= 99

    def test_ks_detects_shift(self):
        gen = np.random.default_rng(5)
        a = gen.normal(size=5_000)
        b = gen.normal(0.2, size=5_000)
        assert ks_two_sample(a, b).pvalue < 0.01


@given(st.lists(st.floats(-10, 10), min_size=2, max_size=50),
       st.lists(st.floats(-10, 10), min_size=2, max_size=50))
@settings(max_examples=50, deadline=None)
def test_weak_error_symmetric_property(a, b):
    ea, ca = weak_error(a, b)
    eb, cb = weak_error(b, a)
    assert ea == eb and ca == cb


@given(st.floats(0.01, 100.0))
@settings(max_examples=30, deadline=None)
def test_fit_rate_multiplicative_invariance(scale):
    params = [0.1, 0.2, 0.4, 0.8]
    errors = np.array([0.9, 1.4, 1.9, 2.6])
    s1, _, r1 = fit_rate(params, errors)
    s2, _, r2 = fit_rate(params, scale * errors)
    assert s1 == pytest.approx(s2, rel=1e-9)
