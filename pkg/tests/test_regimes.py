import math

import numpy as np
import pytest

from hybridjump.bounds import make_grid
from hybridjump.errors import RegionMeasureMismatch
from hybridjump.measures import DensityMeasure, power_law_piece
from hybridjump.model import JumpModel, restrict
from hybridjump.regions import Region
from hybridjump.regimes import (ALPHA_BALANCE, BETA1_SQ, BETA2, RegimeSplit,
                                ThreeRegimeExample, build_hybrid,
                                coupled_localization_batch, delta_functionals,
                                limit_terminal_batch, source_terminal_batch,
                                three_regime_experiment)
from hybridjump.rng import RngStream
from hybridjump.simulate import SimConfig, terminal_samples
from hybridjump.weakerr import fit_rate, ks_two_sample


def xgrid(vals):
    return make_grid([0.0], [[v] for v in vals])


class TestStructuralIdentities:
    def test_balance_constants(self):
        assert ALPHA_BALANCE == pytest.approx(0.44302, abs=5e-6)
        assert math.sqrt(BETA1_SQ) == pytest.approx(0.73587, abs=5e-6)
        assert BETA2 == pytest.approx(0.28768, abs=5e-6)
        # beta1^2 via the defining combination (quoted 0.54151 rounds alpha first)
        assert BETA1_SQ == pytest.approx(
            (ALPHA_BALANCE ** 2 - 1.0) * math.log(2.0) + math.log(3.0), rel=1e-15)
        assert BETA1_SQ == pytest.approx(0.54151, abs=1e-5)

    def test_a_region_mean_zero(self, example_001):
        # the balanced sign flip makes the A-region drift vanish identically
        ex = example_001
        model = ex.source_model()
        co = model.coefficients
        for xv in np.linspace(-2, 2, 9):
            x = np.array([xv])
            val = model.measure.integrate(
                lambda z: float(co.jump_amplitude(0.0, z, x)[0]) * co.jump_rate(0.0, z, x),
                Region.interval(ex.epsilon, 3 * ex.epsilon))
            assert abs(val) < 1e-10

    def test_a_region_second_moment_is_beta1_sq(self, example_001):
        ex = example_001
        model = ex.source_model()
        co = model.coefficients
        for xv in (-1.0, 0.0, 0.7):
            x = np.array([xv])
            got = model.measure.integrate(
                lambda z: float(co.jump_amplitude(0.0, z, x)[0]) ** 2
                * co.jump_rate(0.0, z, x),
                Region.interval(0.0, 3 * ex.epsilon))
            want = BETA1_SQ * ex.c_fn(xv) ** 2 * ex.gamma_fn(xv)
            assert got == pytest.approx(want, rel=1e-8)

    def test_b_region_first_moment_is_beta2(self, example_001):
        ex = example_001
        model = ex.source_model()
        co = model.coefficients
        for xv in (-1.0, 0.0, 0.7):
            x = np.array([xv])
            got = model.measure.integrate(
                lambda z: float(co.jump_amplitude(0.0, z, x)[0]) * co.jump_rate(0.0, z, x),
                Region.interval(3 * ex.epsilon, 4 * ex.epsilon))
            want = BETA2 * ex.c_fn(xv) * ex.gamma_fn(xv)
            assert got == pytest.approx(want, rel=1e-8)

    def test_source_mass_closed_form(self, example_001):
        m = example_001.source_model()
        assert m.measure.mass() == pytest.approx(example_001.source_mass_closed_form(),
                                                 rel=1e-12)
        assert m.measure.mass() == pytest.approx(71.4326, abs=1e-3)


class TestSplit:
    def test_partition_check_passes(self, example_001):
        split = example_001.split()
        split.check_partition(example_001.source_model().measure)

    def test_overlapping_regions_rejected(self, example_001):
        m = example_001.source_model().measure
        bad = RegimeSplit(Region.interval(0.0, 0.5), Region.interval(0.4, 0.6),
                          Region.interval(0.6, 1.0))
        with pytest.raises(ValueError):
            bad.check_partition(m)

    def test_non_covering_rejected(self, example_001):
        m = example_001.source_model().measure
        bad = RegimeSplit(Region.interval(0.0, 0.03), Region.interval(0.03, 0.04),
                          Region.interval(0.04, 0.5))
        with pytest.raises(ValueError):
            bad.check_partition(m)


class TestBuildHybrid:
    def test_empty_a_b_reduces_to_restriction(self, example_001):
        ex = example_001
        source = ex.source_model()
        split = RegimeSplit(Region.empty(), Region.empty(),
                            source.measure.support())
        hybrid = build_hybrid(source, split)
        assert hybrid.measure.mass() == pytest.approx(source.measure.mass())
        x = np.array([0.4])
        assert np.allclose(hybrid.coefficients.drift(0.0, x),
                           source.coefficients.drift(0.0, x))
        cov = hybrid.coefficients.covariance(0.0, x)
        assert cov[0, 0] == pytest.approx(0.0, abs=1e-12)

    def test_quadrature_matches_closed_forms(self, example_001):
        ex = example_001
        hybrid = build_hybrid(ex.source_model(), ex.split())
        for xv in (-0.8, 0.0, 0.5):
            x = np.array([xv])
            a = hybrid.coefficients.covariance(0.0, x)[0, 0]
            b = hybrid.coefficients.drift(0.0, x)[0]
            assert a == pytest.approx(BETA1_SQ * ex.c_fn(xv) ** 2 * ex.gamma_fn(xv),
                                      rel=1e-8)
            assert b == pytest.approx(BETA2 * ex.c_fn(xv) * ex.gamma_fn(xv), rel=1e-8)
        assert hybrid.measure.mass() == pytest.approx(
            math.log(1.0 / (4 * ex.epsilon)), rel=1e-12)


class TestDeltaFunctionals:
    def test_source_equals_limit_gives_zero(self, example_001):
        ex = example_001
        limit = ex.limit_model()
        kept = restrict(limit, Region.interval(4 * ex.epsilon, 1.0))
        split = RegimeSplit(Region.empty(), Region.empty(),
                            kept.measure.support())
        rep = delta_functionals(kept, kept, split, xgrid([-1.0, 0.0, 1.0]))
        assert rep.delta_sigma == 0.0 and rep.delta_b == 0.0
        assert rep.delta_c_gamma == 0.0
        assert rep.delta_A == 0.0 and rep.delta_B == 0.0
        assert rep.total == rep.delta_C  # off-C mass of the kept model is zero
        assert rep.delta_C == 0.0

    def test_example_deltas(self, example_001):
        ex = example_001
        rep = delta_functionals(ex.source_model(), ex.limit_model(), ex.split(),
                                xgrid(np.linspace(-2, 2, 9)))
        assert rep.delta_sigma == pytest.approx(0.0, abs=1e-8)
        assert rep.delta_b == pytest.approx(0.0, abs=1e-8)
        assert rep.delta_c_gamma == pytest.approx(0.0, abs=1e-10)
        bound = 10 * math.sqrt(ex.epsilon)
        assert 0 < rep.delta_A < bound
        assert 0 < rep.delta_B < bound
        assert 0 < rep.delta_C < bound

    def test_delta_sqrt_eps_slope(self):
        eps_list = [0.02, 0.01, 0.005, 0.0025]
        totals = []
        for eps in eps_list:
            ex = ThreeRegimeExample(epsilon=eps)
            rep = delta_functionals(ex.source_model(), ex.limit_model(), ex.split(),
                                    xgrid([0.0, 0.5]))
            totals.append(rep.total)
        slope, _, r2 = fit_rate(eps_list, totals)
        assert 0.45 <= slope <= 0.55
        assert r2 > 0.99

    def test_measure_mismatch_detected(self, example_001):
        ex = example_001
        source = ex.source_model()
        wrong = JumpModel(ex.limit_model().coefficients,
                          DensityMeasure([power_law_piece(0.0, 1.0, -1.1)]),
                          ex.horizon)
        with pytest.raises(RegionMeasureMismatch):
            delta_functionals(source, wrong, ex.split(), xgrid([0.0]))


class TestBatchEngines:
    def test_source_batch_matches_perpath_law(self):
        # coarse epsilon keeps the per-path reference cheap
        ex = ThreeRegimeExample(epsilon=0.1)
        n = 4000
        batch = source_terminal_batch(ex, 0.5, 1.0, n, RngStream(1, 0).generator())
        cfg = SimConfig(horizon=1.0, flow_step=1.0, n_paths=n, seed=2)
        ref = terminal_samples(ex.source_model(), None, np.array([0.5]),
                               lambda x: float(x[0]), cfg)
        assert ks_two_sample(batch, ref).pvalue > 0.01

    def test_limit_batch_matches_perpath_law(self):
        ex = ThreeRegimeExample(epsilon=0.05, z_floor=0.02)
        n = 4000
        batch = limit_terminal_batch(ex, 0.5, 1.0, 0.01, n, RngStream(3, 0).generator())
        cfg = SimConfig(horizon=1.0, flow_step=0.01, n_paths=n, seed=4)
        ref = terminal_samples(ex.limit_model(truncated=True), None, np.array([0.5]),
                               lambda x: float(x[0]), cfg)
        assert ks_two_sample(batch, ref).pvalue > 0.01

    def test_coupled_localization_positive_and_small(self):
        ex = ThreeRegimeExample(epsilon=0.02)
        gap = coupled_localization_batch(ex, 4 * ex.epsilon, 0.5, 1.0, 0.01, 2000,
                                         RngStream(5, 0).generator())
        assert 0.0 < gap < 1.0


def test_three_regime_experiment_smoke():
    report = three_regime_experiment([0.04, 0.02, 0.01], np.sin, horizon=0.5,
                                     x0=0.5, n_paths=4000, flow_step=5e-3, seed=0)
    assert len(report.rows) == 3
    params = [r.param for r in report.rows]
    assert params == sorted(params, reverse=True)
    for row in report.rows:
        assert row.ci_low <= row.estimate <= row.ci_high
    assert report.meta["z_floor"] == 1e-8
