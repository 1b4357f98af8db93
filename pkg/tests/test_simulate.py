import json
import math

import numpy as np
import pytest

from hybridjump.errors import InfiniteMass, NonPSDCovariance
from hybridjump.families import brownian_model, constant_rate_model, discrete_toy_model
from hybridjump.measures import DensityMeasure, power_law_piece, uniform_piece
from hybridjump.model import CoefficientSet, JumpModel
from hybridjump.regions import Region
from hybridjump.rng import RngStream
from hybridjump.simulate import (PathRecord, SimConfig, collect_paths,
                                 dump_paths_jsonl, flow_segment, psd_sqrt,
                                 simulate_fictive, simulate_hybrid, simulate_real,
                                 terminal_samples, theta_no_jump)
from hybridjump.weakerr import chisquare_poisson, ks_two_sample, moments_agree


def pure_drift_model(b):
    coeffs = CoefficientSet(
        dim=1, drift=b, jump_amplitude=lambda t, z, x: np.zeros(1),
        jump_rate=lambda t, z, x: 0.0, rate_bound=1.0)
    return JumpModel(coeffs, DensityMeasure([uniform_piece(0, 1, 1)]), 2.0)


class TestFlowSegment:
    def test_frozen_flow_exact(self):
        m = pure_drift_model(lambda t, x: np.zeros(1))
        x = flow_segment(m, np.array([1.7]), 0.0, 1.0, 0.01, RngStream(0).generator())
        assert float(x[0]) == 1.7

    def test_exponential_decay_oracle(self):
        m = pure_drift_model(lambda t, x: -np.asarray(x, dtype=float))
        x0 = 2.0
        x = flow_segment(m, np.array([x0]), 0.0, 1.0, 1e-3, RngStream(0).generator())
        assert abs(float(x[0]) - x0 * math.exp(-1.0)) < 5e-3 * x0

    def test_brownian_terminal_variance(self):
        m = brownian_model(dim=1)
        n = 20_000
        gen = RngStream(1).generator()
        vals = np.array([float(flow_segment(m, np.zeros(1), 0.0, 0.7, 0.05, gen)[0])
                         for _ in range(n)])
        var = vals.var()
        se = 0.7 * math.sqrt(2.0 / n)
        assert abs(var - 0.7) < 3 * se

    def test_covariance_form_matches_sigma_form(self):
        cov = CoefficientSet(
            dim=2, drift=lambda t, x: np.zeros(2),
            jump_amplitude=lambda t, z, x: np.zeros(2),
            jump_rate=lambda t, z, x: 0.0, rate_bound=1.0,
            covariance=lambda t, x: np.array([[1.0, 0.3], [0.3, 0.5]]))
        m = JumpModel(cov, DensityMeasure([uniform_piece(0, 1, 1)]), 1.0)
        gen = RngStream(3).generator()
        vals = np.array([flow_segment(m, np.zeros(2), 0.0, 1.0, 0.1, gen)
                         for _ in range(20_000)])
        emp = np.cov(vals.T)
        assert np.allclose(emp, [[1.0, 0.3], [0.3, 0.5]], atol=0.05)

    def test_non_psd_covariance_raises(self):
        with pytest.raises(NonPSDCovariance):
            psd_sqrt(np.array([[1.0, 0.0], [0.0, -1e-6]]))


class TestFictive:
    def test_proposal_counts_poisson(self):
        # Gamma=3, mu(G)=2, T=1.5 -> Poisson(18)
        model = constant_rate_model(gamma0=1.0, rate_bound=3.0, mass=2.0, horizon=1.5)
        cfg = SimConfig(horizon=1.5, flow_step=0.5, n_paths=10_000, seed=0)
        recs = collect_paths(model, None, np.zeros(1), cfg)
        counts = np.array([r.proposal_count() for r in recs])
        assert abs(counts.mean() - 18.0) < 3 * math.sqrt(18.0 / len(counts))
        assert chisquare_poisson(counts, 18.0).pvalue > 0.01

    def test_accepted_fraction_half_when_gamma_equals_bound(self):
        model = constant_rate_model(gamma0=3.0, rate_bound=3.0, mass=2.0, horizon=1.5)
        cfg = SimConfig(horizon=1.5, flow_step=0.5, n_paths=4_000, seed=1)
        recs = collect_paths(model, None, np.zeros(1), cfg)
        props = sum(r.proposal_count() for r in recs)
        accs = sum(r.accepted_count() for r in recs)
        frac = accs / props
        assert abs(frac - 0.5) < 3 * math.sqrt(0.25 / props)

    def test_terminal_is_poisson_thinning_oracle(self):
        # gamma0 < Gamma, c = 1, b = sigma = 0, x0 = 0: X_T ~ Poisson(gamma0 mu T)
        model = constant_rate_model(gamma0=1.0, rate_bound=3.0, mass=2.0, horizon=1.5)
        cfg = SimConfig(horizon=1.5, flow_step=0.5, n_paths=10_000, seed=21)
        vals = terminal_samples(model, None, np.zeros(1), lambda x: float(x[0]), cfg)
        lam = 1.0 * 2.0 * 1.5
        n = len(vals)
        assert abs(vals.mean() - lam) < 3 * math.sqrt(lam / n)
        assert abs(vals.var() - lam) < 3 * lam * math.sqrt(2.0 / n)
        assert chisquare_poisson(vals.astype(int), lam).pvalue > 0.01

    def test_thinning_equivalence_inflated_bound(self):
        base = constant_rate_model(gamma0=1.0, rate_bound=3.0, mass=2.0, horizon=1.5)
        inflated = constant_rate_model(gamma0=1.0, rate_bound=5.0, mass=2.0, horizon=1.5)
        cfg_a = SimConfig(horizon=1.5, flow_step=0.5, n_paths=10_000, seed=3)
        cfg_b = SimConfig(horizon=1.5, flow_step=0.5, n_paths=10_000, seed=4)
        f = lambda x: float(x[0])
        sa = terminal_samples(base, None, np.zeros(1), f, cfg_a)
        sb = terminal_samples(inflated, None, np.zeros(1), f, cfg_b)
        assert ks_two_sample(sa, sb).pvalue > 0.01

    def test_fictive_invariants_on_records(self, toy_model):
        cfg = SimConfig(horizon=1.0, flow_step=0.05, n_paths=50, seed=5)
        for rec in collect_paths(toy_model, None, np.array([0.3]), cfg):
            times = rec.jump_times
            assert all(t1 < t2 for t1, t2 in zip(times, times[1:]))
            assert all(0.0 <= t <= 1.0 for t in times)
            for u, z, acc, xb in zip(rec.uniforms, rec.marks, rec.accepted,
                                     rec.states_before):
                gamma = toy_model.coefficients.jump_rate(0.0, z, xb)
                assert acc == (u <= gamma)

    def test_infinite_mass_rejected(self):
        co = constant_rate_model().coefficients
        m = JumpModel(co, DensityMeasure([power_law_piece(0.0, 1.0, -1.0)]), 1.0)
        with pytest.raises(InfiniteMass):
            simulate_fictive(m, None, np.zeros(1), 0.0,
                             SimConfig(horizon=1.0, n_paths=1), RngStream(0))


class TestReal:
    def test_theta_constant_rate_is_half(self):
        model = constant_rate_model(gamma0=3.0, rate_bound=3.0, mass=2.0)
        assert theta_no_jump(model, None, 0.0, np.zeros(1)) == pytest.approx(0.5, abs=1e-12)

    def test_kernel_normalization_grid(self, toy_model):
        for xv in np.linspace(-3, 3, 10):
            x = np.array([xv])
            for t in np.linspace(0, 1, 10):
                theta = theta_no_jump(toy_model, None, float(t), x)
                integral = toy_model.measure.integrate(
                    lambda z: toy_model.coefficients.jump_rate(float(t), z, x))
                mu = toy_model.measure.mass()
                total = theta + integral / (2 * toy_model.rate_bound * mu)
                assert abs(total - 1.0) < 1e-10

    def test_sentinel_marks_mean_no_jump(self, toy_model):
        cfg = SimConfig(horizon=1.0, flow_step=0.05, n_paths=40,
                        representation="real", seed=6)
        for rec in collect_paths(toy_model, None, np.array([0.0]), cfg):
            assert rec.uniforms == []
            for z, acc, xb, xa in zip(rec.marks, rec.accepted,
                                      rec.states_before, rec.states_after):
                if z is None:
                    assert not acc and np.array_equal(xb, xa)
                else:
                    assert acc

    def test_real_matches_fictive_in_law(self, toy_model):
        f = lambda x: float(x[0])
        x0 = np.array([0.3])
        passes = 0
        for s in range(5):
            ca = SimConfig(horizon=1.0, flow_step=0.05, n_paths=10_000,
                           representation="fictive", seed=100 + s)
            cb = SimConfig(horizon=1.0, flow_step=0.05, n_paths=10_000,
                           representation="real", seed=200 + s)
            sa = terminal_samples(toy_model, None, x0, f, ca)
            sb = terminal_samples(toy_model, None, x0, f, cb)
            passes += ks_two_sample(sa, sb).pvalue > 0.01
            if s == 0:
                assert moments_agree(sa, sb)
        assert passes >= 4


class TestHybrid:
    def test_empty_region_is_pure_diffusion(self):
        m = brownian_model(dim=1)
        cfg = SimConfig(horizon=1.0, flow_step=0.01, n_paths=1,
                        representation="hybrid", seed=7)
        rec = simulate_hybrid(m, Region.empty(), np.zeros(1), 0.0, cfg, RngStream(7, 0))
        assert rec.proposal_count() == 0
        direct = flow_segment(m, np.zeros(1), 0.0, 1.0, 0.01, RngStream(7, 0).generator())
        assert float(rec.terminal[0]) == pytest.approx(float(direct[0]))

    def test_degenerate_hybrid_equals_fictive_law(self):
        model = constant_rate_model(gamma0=1.0, rate_bound=2.0, mass=1.0, horizon=1.0)
        f = lambda x: float(x[0])
        ca = SimConfig(horizon=1.0, flow_step=0.5, n_paths=8_000,
                       representation="hybrid", seed=8)
        cb = SimConfig(horizon=1.0, flow_step=0.5, n_paths=8_000,
                       representation="fictive", seed=9)
        sa = terminal_samples(model, None, np.zeros(1), f, ca)
        sb = terminal_samples(model, None, np.zeros(1), f, cb)
        assert ks_two_sample(sa, sb).pvalue > 0.01


class TestTerminalSamples:
    def test_single_path_matches_direct_call(self, toy_model):
        cfg = SimConfig(horizon=1.0, flow_step=0.05, n_paths=1, seed=10)
        vals = terminal_samples(toy_model, None, np.array([0.2]),
                                lambda x: float(x[0]), cfg)
        rec = simulate_fictive(toy_model, None, np.array([0.2]), 0.0, cfg,
                               RngStream(10, 0))
        assert vals[0] == float(rec.terminal[0])

    def test_constant_function(self, toy_model):
        cfg = SimConfig(horizon=1.0, flow_step=0.05, n_paths=16, seed=11)
        vals = terminal_samples(toy_model, None, np.zeros(1), lambda x: 1.0, cfg)
        assert np.all(vals == 1.0)

    def test_worker_count_invariance(self, toy_model):
        cfg = SimConfig(horizon=1.0, flow_step=0.05, n_paths=64, seed=12)
        f = lambda x: float(x[0])
        x0 = np.array([0.1])
        one = terminal_samples(toy_model, None, x0, f, cfg, parallel_workers=1)
        eight = terminal_samples(toy_model, None, x0, f, cfg, parallel_workers=8)
        assert np.array_equal(one, eight)


def test_jsonl_dump_roundtrip(tmp_path, toy_model):
    cfg = SimConfig(horizon=1.0, flow_step=0.05, n_paths=5, seed=13,
                    representation="real")
    recs = collect_paths(toy_model, None, np.array([0.0]), cfg)
    out = tmp_path / "paths.jsonl"
    dump_paths_jsonl(recs, out)
    lines = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(lines) == 5
    for rec, line in zip(recs, lines):
        assert line["stream"] == rec.stream.index
        assert len(line["jump_times"]) == rec.proposal_count()
        assert all(m is None or isinstance(m, float) for m in line["marks"])
