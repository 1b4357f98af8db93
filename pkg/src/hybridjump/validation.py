"""Invariant battery behind the `validate` subcommand: quadrature oracles,
mass additivity, sampling correctness, kernel normalization, Poisson structure
of the proposal process, and fictive/real equality in law."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .families import constant_rate_model, discrete_toy_model
from .measures import DensityMeasure, power_law_piece, uniform_piece
from .regions import Region
from .rng import RngStream
from .simulate import SimConfig, collect_paths, terminal_samples, theta_no_jump
from .weakerr import chisquare_poisson, ks_two_sample, moments_agree

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


@dataclass(frozen=True)
class ValidationResult:
    name: str
    passed: bool
    detail: str


def _gl_integrate(f, a: float, b: float, n_panels: int = 8) -> float:
    total = 0.0
    edges = np.linspace(a, b, n_panels + 1)
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        total += half * float(np.sum(_GL_WEIGHTS * f(mid + half * _GL_NODES)))
    return total


def _reference_measures():
    return {
        "uniform": DensityMeasure([uniform_piece(0.0, 1.0, 2.0)]),
        "power-2": DensityMeasure([power_law_piece(0.01, 0.03, -2.0)]),
        "power-3/2": DensityMeasure([power_law_piece(0.03, 0.04, -1.5)]),
        "log": DensityMeasure([power_law_piece(0.04, 1.0, -1.0)]),
    }


def check_quadrature_oracles() -> ValidationResult:
    tests = [
        (lambda z: np.ones_like(z), lambda a, b: b - a, "1"),
        (lambda z: z, lambda a, b: (b * b - a * a) / 2, "z"),
        (np.sqrt, lambda a, b: 2 * (b ** 1.5 - a ** 1.5) / 3, "sqrt z"),
        (lambda z: 1.0 / z, lambda a, b: math.log(b / a), "1/z"),
    ]
    worst = 0.0
    measure = DensityMeasure([uniform_piece(0.25, 1.75, 1.0)])
    for f, anti, _name in tests:
        got = measure.integrate(lambda z: float(f(np.asarray(z))))
        want = anti(0.25, 1.75)
        worst = max(worst, abs(got - want) / abs(want))
    return ValidationResult("quadrature-oracles", worst < 1e-10, f"max rel err {worst:.2e}")


def check_mass_additivity() -> ValidationResult:
    worst = 0.0
    for name, m in _reference_measures().items():
        sup = m.support().intervals[0]
        mid = 0.5 * (sup[0] + sup[1])
        g1 = Region.interval(sup[0], mid)
        g2 = Region.interval(mid, sup[1])
        lhs = m.mass(g1.union(g2))
        rhs = m.mass(g1) + m.mass(g2)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))
    return ValidationResult("mass-additivity", worst < 1e-12, f"max rel err {worst:.2e}")


def check_sampling(seed: int = 0, n: int = 100_000, quick: bool = False) -> ValidationResult:
    if quick:
        n = 20_000
    from scipy import stats
    n_pass_needed = 4
    all_ok = True
    details = []
    for name, m in _reference_measures().items():
        sup = m.support().intervals[0]
        total = m.mass()

        def cdf(z):
            z = np.atleast_1d(z)
            return np.array([m.mass(Region.interval(sup[0], float(v))) / total for v in z])

        passes = 0
        for s in range(5):
            gen = RngStream(seed, s).generator()
            sample = m.sample(n, gen)
            p = stats.kstest(sample, cdf).pvalue
            passes += p > 0.01
        details.append(f"{name}:{passes}/5")
        all_ok &= passes >= n_pass_needed
    return ValidationResult("sampling-ks", all_ok, " ".join(details))


def check_kernel_normalization() -> ValidationResult:
    """Theta_G + (2 Gamma mu(G))^-1 int_G gamma dmu = 1, adaptive vs fixed-order."""
    worst = 0.0
    for model in (constant_rate_model(), discrete_toy_model()):
        region = None
        mu_g = model.measure.mass(region)
        co = model.coefficients
        grid_t = np.linspace(0.0, model.horizon, 10)
        grid_x = np.linspace(-3.0, 3.0, 10)
        for t in grid_t:
            for xv in grid_x:
                x = np.array([xv])
                theta = theta_no_jump(model, region, float(t), x)
                if model.measure.kind == "density":
                    integral = 0.0
                    for p in model.measure.pieces:
                        integral += _gl_integrate(
                            lambda zs: np.array([co.jump_rate(float(t), float(z), x)
                                                 * float(p.density(z)) for z in zs]),
                            p.lo, p.hi)
                else:
                    integral = model.measure.integrate(
                        lambda z: co.jump_rate(float(t), z, x), region)
                total = theta + integral / (2.0 * co.rate_bound * mu_g)
                worst = max(worst, abs(total - 1.0))
    return ValidationResult("kernel-normalization", worst < 1e-10, f"max |dev| {worst:.2e}")


def check_poisson_counts(seed: int = 0, n_paths: int = 10_000,
                         quick: bool = False) -> ValidationResult:
    if quick:
        n_paths = 2_000
    model = constant_rate_model(gamma0=1.0, rate_bound=3.0, mass=2.0, horizon=1.5)
    cfg = SimConfig(horizon=1.5, flow_step=0.5, n_paths=n_paths, seed=seed)
    recs = collect_paths(model, None, np.zeros(1), cfg)
    proposals = np.array([r.proposal_count() for r in recs])
    accepted = np.array([r.accepted_count() for r in recs])
    lam_prop = 2.0 * 3.0 * 2.0 * 1.5
    lam_acc = 1.0 * 2.0 * 1.5
    p1 = chisquare_poisson(proposals, lam_prop).pvalue
    p2 = chisquare_poisson(accepted, lam_acc).pvalue
    ok = p1 > 0.01 and p2 > 0.01
    return ValidationResult("poisson-counts", ok, f"p_prop={p1:.3f} p_acc={p2:.3f}")


def check_law_equality(seed: int = 0, n_paths: int = 10_000,
                       quick: bool = False) -> ValidationResult:
    if quick:
        n_paths = 2_000
    model = discrete_toy_model()
    x0 = np.array([0.3])
    passes = 0
    moments_ok = True
    for s in range(5):
        cfg_f = SimConfig(horizon=1.0, flow_step=0.05, n_paths=n_paths,
                          representation="fictive", seed=seed + 11 * s)
        cfg_r = SimConfig(horizon=1.0, flow_step=0.05, n_paths=n_paths,
                          representation="real", seed=seed + 11 * s + 5)
        fa = terminal_samples(model, None, x0, lambda xT: float(xT[0]), cfg_f)
        fb = terminal_samples(model, None, x0, lambda xT: float(xT[0]), cfg_r)
        passes += ks_two_sample(fa, fb).pvalue > 0.01
        if s == 0:
            moments_ok = moments_agree(fa, fb)
    ok = passes >= 4 and moments_ok
    return ValidationResult("law-equality", ok, f"ks {passes}/5 moments={moments_ok}")


def run_validation_suite(seed: int = 0, quick: bool = False) -> list[ValidationResult]:
    return [
        check_quadrature_oracles(),
        check_mass_additivity(),
        check_sampling(seed, quick=quick),
        check_kernel_normalization(),
        check_poisson_counts(seed, quick=quick),
        check_law_equality(seed, quick=quick),
    ]
