"""Three-regime hybridization: fast jumps become diffusion, intermediate jumps
become drift, rare jumps stay.  Includes the generic construction plus the
concrete worked example with its closed forms, and vectorized batch engines
for the large convergence experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import RegionMeasureMismatch
from .generator import covariance_field
from .measures import DensityMeasure, power_law_piece
from .model import CoefficientSet, JumpModel, restrict
from .regions import Region
from .rng import RngStream
from .weakerr import WeakErrorReport, weak_error_row

ALPHA_BALANCE = (math.sqrt(3) - math.sqrt(2)) / (math.sqrt(6) - math.sqrt(3))
BETA2 = math.log(4.0 / 3.0)
BETA1_SQ = (ALPHA_BALANCE ** 2 - 1.0) * math.log(2.0) + math.log(3.0)
BETA1 = math.sqrt(BETA1_SQ)


@dataclass(frozen=True)
class RegimeSplit:
    """Disjoint regions A (diffusive), B (drift), C (kept jumps) covering E."""

    region_a: Region
    region_b: Region
    region_c: Region

    def check_partition(self, measure, tol: float = 1e-12):
        ab = self.region_a.intersect(self.region_b)
        ac = self.region_a.intersect(self.region_c)
        bc = self.region_b.intersect(self.region_c)
        for inter in (ab, ac, bc):
            if measure.mass(inter) > tol:
                raise ValueError("regime regions overlap with positive mass")
        union = self.region_a.union(self.region_b).union(self.region_c)
        total = measure.mass(None)
        got = measure.mass(union)
        if math.isfinite(total) and abs(got - total) > tol * max(1.0, abs(total)):
            raise ValueError("regime regions do not cover the mark space")


@dataclass(frozen=True)
class DeltaReport:
    """The convergence functionals delta_*(eps); total is their sum."""

    delta_sigma: float
    delta_b: float
    delta_c_gamma: float
    delta_A: float
    delta_B: float
    delta_C: float

    @property
    def total(self) -> float:
        return (self.delta_sigma + self.delta_b + self.delta_c_gamma
                + self.delta_A + self.delta_B + self.delta_C)


def build_hybrid(source: JumpModel, split: RegimeSplit,
                 grid=None, tol: float = 1e-10) -> JumpModel:
    """Hybrid model: diffusion from the A-region second moment, drift from the
    B-region first moment, jumps restricted to C."""
    split.check_partition(source.measure, 1e-12)
    co = source.coefficients

    def cov(t, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        d = co.dim
        a = np.zeros((d, d))
        for i in range(d):
            for j in range(i, d):
                def integrand(z):
                    c = np.asarray(co.jump_amplitude(t, z, x), dtype=float)
                    return c[i] * c[j] * co.jump_rate(t, z, x)
                a[i, j] = a[j, i] = source.measure.integrate(integrand, split.region_a, tol)
        return a

    def drift(t, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        base = np.asarray(co.drift(t, x), dtype=float)
        extra = np.array([
            source.measure.integrate(
                lambda z, i=i: float(np.asarray(co.jump_amplitude(t, z, x))[i])
                * co.jump_rate(t, z, x),
                split.region_b, tol)
            for i in range(co.dim)
        ])
        return base + extra

    coeffs = CoefficientSet(
        dim=co.dim, drift=drift, jump_amplitude=co.jump_amplitude,
        jump_rate=co.jump_rate, rate_bound=co.rate_bound, covariance=cov,
        lipschitz_c=co.lipschitz_c, lipschitz_gamma=co.lipschitz_gamma,
    )
    restricted = source.measure.restrict(split.region_c)
    return JumpModel(coefficients=coeffs, measure=restricted, horizon=source.horizon)


def _check_measures_match(source: JumpModel, limit: JumpModel, region: Region,
                          tol: float = 1e-10, probes: int = 8):
    """H2: restrictions of the two measures to C must coincide."""
    for a, b in region.intervals:
        edges = np.linspace(a, b, probes + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            sub = Region.interval(lo, hi)
            ms = source.measure.mass(sub)
            ml = limit.measure.mass(sub)
            if abs(ms - ml) > tol * max(1.0, abs(ml)):
                raise RegionMeasureMismatch(
                    f"masses differ on ({lo}, {hi}]: {ms} vs {ml}")


def delta_functionals(source: JumpModel, limit: JumpModel, split: RegimeSplit,
                      grid, tol: float = 1e-10) -> DeltaReport:
    """Grid-sup evaluation of every delta functional of the hybrid limit."""
    _check_measures_match(source, limit, split.region_c, tol)
    sco, lco = source.coefficients, limit.coefficients

    d_sigma = d_b = d_cg = d_a = d_bb = d_c = 0.0
    kept = split.region_c
    off_c = limit.measure.support().difference(kept)
    for t, x in grid:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        # the source's own diffusion (zero for a pure-jump source) plus the
        # A-region second moment stand against the limit diffusion
        sig_eps_sq = float(np.trace(covariance_field(source, t, x)))
        sig_eps_sq += source.measure.integrate(
            lambda z: float(np.sum(np.asarray(sco.jump_amplitude(t, z, x)) ** 2))
            * sco.jump_rate(t, z, x), split.region_a, tol)
        sig_lim_sq = float(np.trace(covariance_field(limit, t, x)))
        d_sigma = max(d_sigma, abs(sig_eps_sq - sig_lim_sq))

        b_eff = np.asarray(sco.drift(t, x), dtype=float) + np.array([
            source.measure.integrate(
                lambda z, i=i: float(np.asarray(sco.jump_amplitude(t, z, x))[i])
                * sco.jump_rate(t, z, x), split.region_b, tol)
            for i in range(sco.dim)])
        d_b = max(d_b, float(np.linalg.norm(
            b_eff - np.asarray(lco.drift(t, x), dtype=float))))

        d_cg = max(d_cg, limit.measure.integrate(
            lambda z: float(np.linalg.norm(
                np.asarray(lco.jump_amplitude(t, z, x))
                - np.asarray(sco.jump_amplitude(t, z, x)))) * lco.jump_rate(t, z, x)
            + abs(lco.jump_rate(t, z, x) - sco.jump_rate(t, z, x)),
            kept, tol))

        d_a = max(d_a, source.measure.integrate(
            lambda z: float(np.linalg.norm(np.asarray(sco.jump_amplitude(t, z, x)))) ** 3
            * sco.jump_rate(t, z, x), split.region_a, tol))
        d_bb = max(d_bb, source.measure.integrate(
            lambda z: float(np.linalg.norm(np.asarray(sco.jump_amplitude(t, z, x)))) ** 2
            * sco.jump_rate(t, z, x), split.region_b, tol))
        d_c = max(d_c, limit.measure.integrate(
            lambda z: float(np.linalg.norm(np.asarray(lco.jump_amplitude(t, z, x))))
            * lco.jump_rate(t, z, x), off_c, tol))
    return DeltaReport(d_sigma, d_b, d_cg, d_a, d_bb, d_c)


# ---------------------------------------------------------------------------
# the worked example: mu_eps on (eps, 1] in three power-law pieces,
# amplitude c(x) sqrt(z) with the balanced sign flip on (eps, 2 eps]
# ---------------------------------------------------------------------------

def _default_c(x):
    return 1.0 / (1.0 + x * x)


def _default_dc(x):
    return -2.0 * x / (1.0 + x * x) ** 2


def _default_gamma(x):
    return 1.0 + 0.5 * np.exp(-x * x)


def _default_dgamma(x):
    return -x * np.exp(-x * x)


@dataclass(frozen=True)
class ThreeRegimeExample:
    """The concrete three-regime model: explicit measures and closed forms.

    ``c_fn``/``gamma_fn`` must be numpy-vectorized; the rate bound must
    dominate gamma everywhere.
    """

    epsilon: float
    horizon: float = 1.0
    c_fn: Callable = _default_c
    dc_fn: Callable = _default_dc
    gamma_fn: Callable = _default_gamma
    dgamma_fn: Callable = _default_dgamma
    rate_bound: float = 1.5
    z_floor: float = 1e-8      # truncation of the limit measure for simulation

    @property
    def alpha_balance(self) -> float:
        return ALPHA_BALANCE

    @property
    def beta1(self) -> float:
        return BETA1

    @property
    def beta2(self) -> float:
        return BETA2

    # -- measures -------------------------------------------------------
    def source_measure(self) -> DensityMeasure:
        e = self.epsilon
        return DensityMeasure([
            power_law_piece(e, 3 * e, -2.0),
            power_law_piece(3 * e, 4 * e, -1.5),
            power_law_piece(4 * e, 1.0, -1.0),
        ])

    def limit_measure(self) -> DensityMeasure:
        return DensityMeasure([power_law_piece(0.0, 1.0, -1.0)])

    def split(self) -> RegimeSplit:
        e = self.epsilon
        return RegimeSplit(Region.interval(0.0, 3 * e),
                           Region.interval(3 * e, 4 * e),
                           Region.interval(4 * e, 1.0))

    # -- vectorized coefficient fields -----------------------------------
    def amplitude_eps(self, z, x):
        """c_eps(z, x) = c(x) sqrt(z) (1_(2e,1] - alpha 1_(e,2e])."""
        return self.c_fn(x) * self.signed_sqrt(z)

    def amplitude_limit(self, z, x):
        return self.c_fn(x) * np.sqrt(np.asarray(z, dtype=float))

    def sigma_limit(self, x):
        return BETA1 * self.c_fn(x) * np.sqrt(self.gamma_fn(x))

    def drift_limit(self, x):
        return BETA2 * self.c_fn(x) * self.gamma_fn(x)

    # -- JumpModel views --------------------------------------------------
    def signed_sqrt(self, z):
        """sqrt(z) (1_(2e,1] - alpha 1_(e,2e]): the mark factor of c_eps."""
        e = self.epsilon
        z = np.asarray(z, dtype=float)
        sign = np.where(z > 2 * e, 1.0, np.where(z > e, -ALPHA_BALANCE, 0.0))
        return np.sqrt(z) * sign

    def source_model(self) -> JumpModel:
        ex = self

        def drift(t, x):
            return np.zeros(1)

        def amp(t, z, x):
            return np.array([float(ex.amplitude_eps(z, float(x[0])))])

        def rate(t, z, x):
            return float(ex.gamma_fn(float(x[0])))

        coeffs = CoefficientSet(
            dim=1, drift=drift, jump_amplitude=amp, jump_rate=rate,
            rate_bound=ex.rate_bound,
            lipschitz_c=lambda z: abs(math.sqrt(max(z, 0.0)))
            * max(1.0, ALPHA_BALANCE) * 0.6495190528383289,
            lipschitz_gamma=lambda z: 0.42888194248035344,
            derivative_oracles={
                "c": {(0,): lambda t, z, x: np.array([
                    float(ex.signed_sqrt(z) * ex.dc_fn(float(x[0])))])},
                "log_gamma": {(0,): lambda t, z, x: np.array(
                    float(ex.dgamma_fn(float(x[0])) / ex.gamma_fn(float(x[0]))))},
            }, q_max=1,
        )
        return JumpModel(coeffs, ex.source_measure(), ex.horizon)

    def limit_model(self, truncated: bool = False) -> JumpModel:
        ex = self

        def drift(t, x):
            return np.array([float(ex.drift_limit(float(x[0])))])

        def sigma(t, x):
            return np.array([float(ex.sigma_limit(float(x[0])))])

        def amp(t, z, x):
            return np.array([float(ex.amplitude_limit(z, float(x[0])))])

        def rate(t, z, x):
            return float(ex.gamma_fn(float(x[0])))

        coeffs = CoefficientSet(
            dim=1, drift=drift, jump_amplitude=amp, jump_rate=rate,
            rate_bound=ex.rate_bound, sigma_list=[sigma],
            lipschitz_c=lambda z: math.sqrt(max(z, 0.0)) * 0.6495190528383289,
            lipschitz_gamma=lambda z: 0.42888194248035344,
        )
        measure = ex.limit_measure()
        model = JumpModel(coeffs, measure, ex.horizon)
        if truncated:
            model = restrict(model, Region.interval(ex.z_floor, 1.0))
        return model

    def hybrid_limit_model(self) -> JumpModel:
        """The limit written as drift+diffusion+jumps on the kept region only."""
        return restrict(self.limit_model(), Region.interval(4 * self.epsilon, 1.0))

    # closed forms used by the structural tests
    def source_mass_closed_form(self) -> float:
        e = self.epsilon
        return 2.0 / (3.0 * e) + 2.0 * (1.0 / math.sqrt(3 * e) - 1.0 / math.sqrt(4 * e)) \
            + math.log(1.0 / (4.0 * e))


# ---------------------------------------------------------------------------
# vectorized batch engines (same law as the per-path simulators; used for the
# N ~ 1e5 convergence experiments)
# ---------------------------------------------------------------------------

def source_terminal_batch(example: ThreeRegimeExample, x0: float, horizon: float,
                          n_paths: int, gen: np.random.Generator) -> np.ndarray:
    """Terminal states of the pure-jump source chain, vectorized across paths.

    The chain is time-homogeneous with no continuous part, so only the order
    of the Poisson(2 Gamma mu_eps(E) T) many proposals matters.
    """
    e = example.epsilon
    gamma_bound = example.rate_bound
    m1 = 1.0 / e - 1.0 / (3 * e)
    m2 = 2.0 * (1.0 / math.sqrt(3 * e) - 1.0 / math.sqrt(4 * e))
    m3 = math.log(1.0 / (4 * e))
    total = m1 + m2 + m3
    lam = 2.0 * gamma_bound * total
    counts = gen.poisson(lam * horizon, size=n_paths)
    x = np.full(n_paths, float(x0))
    k_max = int(counts.max()) if n_paths else 0
    inv_e = 1.0 / e
    inv_3e = 1.0 / (3 * e)
    s3e = 1.0 / math.sqrt(3 * e)
    s4e = 1.0 / math.sqrt(4 * e)
    for k in range(k_max):
        active = counts > k
        u = gen.random(n_paths) * total
        # piecewise inverse CDF of mu_eps
        in1 = u < m1
        in2 = (~in1) & (u < m1 + m2)
        z1 = 1.0 / (inv_e - u * (inv_e - inv_3e) / m1)
        u2 = np.clip(u - m1, 0.0, m2)
        z2 = (s3e - u2 / 2.0) ** -2
        u3 = np.clip(u - m1 - m2, 0.0, m3)
        z3 = 4 * e * np.exp(u3)
        z = np.where(in1, z1, np.where(in2, z2, z3))
        uu = gen.random(n_paths) * 2.0 * gamma_bound
        accept = uu <= example.gamma_fn(x)
        jump = example.amplitude_eps(z, x)
        x = np.where(active & accept, x + jump, x)
    return x


def limit_terminal_batch(example: ThreeRegimeExample, x0: float, horizon: float,
                         flow_step: float, n_paths: int,
                         gen: np.random.Generator) -> np.ndarray:
    """Terminal states of the hybrid limit: Euler flow plus truncated jumps.

    Jump counts per substep are exact Poisson; jumps apply at substep ends
    (weak bias of the same O(h) order as the Euler flow itself).
    """
    z0 = example.z_floor
    gamma_bound = example.rate_bound
    mass = math.log(1.0 / z0)
    lam = 2.0 * gamma_bound * mass
    n_steps = max(1, round(horizon / flow_step))
    h = horizon / n_steps
    sqrt_h = math.sqrt(h)
    x = np.full(n_paths, float(x0))
    log_inv_z0 = math.log(1.0 / z0)
    for _ in range(n_steps):
        xi = gen.standard_normal(n_paths)
        x = x + example.drift_limit(x) * h + example.sigma_limit(x) * sqrt_h * xi
        counts = gen.poisson(lam * h, size=n_paths)
        idx = np.nonzero(counts > 0)[0]
        while idx.size:
            z = z0 * np.exp(gen.random(idx.size) * log_inv_z0)
            uu = gen.random(idx.size) * 2.0 * gamma_bound
            xs = x[idx]
            accept = uu <= example.gamma_fn(xs)
            x[idx] = np.where(accept, xs + example.amplitude_limit(z, xs), xs)
            counts[idx] -= 1
            idx = idx[counts[idx] > 0]
    return x


def coupled_localization_batch(example: ThreeRegimeExample, g1_low: float,
                               x0: float, horizon: float, flow_step: float,
                               n_paths: int, gen: np.random.Generator) -> float:
    """Mean over paths of the grid-supremum gap between the limit dynamics with
    jumps on (g1_low, 1] and on (z_floor, 1], under a synchronous coupling
    (shared Brownian increments, shared proposals and thinning uniforms)."""
    z0 = example.z_floor
    gamma_bound = example.rate_bound
    mass = math.log(1.0 / z0)
    lam = 2.0 * gamma_bound * mass
    n_steps = max(1, round(horizon / flow_step))
    h = horizon / n_steps
    sqrt_h = math.sqrt(h)
    x1 = np.full(n_paths, float(x0))
    x2 = np.full(n_paths, float(x0))
    sup_gap = np.zeros(n_paths)
    log_inv_z0 = math.log(1.0 / z0)
    for _ in range(n_steps):
        xi = gen.standard_normal(n_paths)
        x1 = x1 + example.drift_limit(x1) * h + example.sigma_limit(x1) * sqrt_h * xi
        x2 = x2 + example.drift_limit(x2) * h + example.sigma_limit(x2) * sqrt_h * xi
        counts = gen.poisson(lam * h, size=n_paths)
        idx = np.nonzero(counts > 0)[0]
        while idx.size:
            z = z0 * np.exp(gen.random(idx.size) * log_inv_z0)
            uu = gen.random(idx.size) * 2.0 * gamma_bound
            a1 = (uu <= example.gamma_fn(x1[idx])) & (z > g1_low)
            a2 = uu <= example.gamma_fn(x2[idx])
            x1[idx] = np.where(a1, x1[idx] + example.amplitude_limit(z, x1[idx]), x1[idx])
            x2[idx] = np.where(a2, x2[idx] + example.amplitude_limit(z, x2[idx]), x2[idx])
            counts[idx] -= 1
            idx = idx[counts[idx] > 0]
        np.maximum(sup_gap, np.abs(x1 - x2), out=sup_gap)
    return float(sup_gap.mean())


def three_regime_experiment(eps_list, f: Callable[[np.ndarray], np.ndarray],
                            horizon: float = 1.0, x0: float = 0.5,
                            n_paths: int = 200_000, flow_step: float = 1e-3,
                            seed: int = 0, level: float = 0.99,
                            example_kwargs: Optional[dict] = None) -> WeakErrorReport:
    """Weak errors |E f(X_T^eps) - E f(X_T)| across eps, with a rate fit.

    The source chains use the fictive-shock law; the limit uses the hybrid
    drift+diffusion+kept-jumps law with the small-z truncation recorded in
    the report metadata.
    """
    kwargs = dict(example_kwargs or {})
    base = ThreeRegimeExample(epsilon=min(eps_list), horizon=horizon, **kwargs)
    gen_limit = RngStream(seed, 0, 1).generator()
    limit_x = limit_terminal_batch(base, x0, horizon, flow_step, n_paths, gen_limit)
    limit_f = np.asarray(f(limit_x), dtype=float)
    report = WeakErrorReport(level=level, meta={
        "x0": x0, "horizon": horizon, "n_paths": n_paths, "flow_step": flow_step,
        "z_floor": base.z_floor, "seed": seed,
    })
    for i, eps in enumerate(sorted(eps_list, reverse=True)):
        ex = ThreeRegimeExample(epsilon=eps, horizon=horizon, **kwargs)
        gen = RngStream(seed, i + 1, 0).generator()
        src_x = source_terminal_batch(ex, x0, horizon, n_paths, gen)
        report.rows.append(weak_error_row(eps, f(src_x), limit_f, level))
    if len(report.rows) >= 3:
        report.fit()
    return report
