"""Coefficient and model abstractions for the hybrid jump-diffusion equation.

A model couples a coefficient set (drift b, diffusion sigma_l or covariance a,
jump amplitude c, jump rate gamma with bound Gamma) with a mark measure and a
horizon.  All objects are immutable after construction; operations are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .derivatives import SpatialDerivatives
from .errors import NonFiniteCoefficient, RateBoundViolated
from .measures import MarkMeasure
from .regions import Region

State = np.ndarray


@dataclass(frozen=True)
class CoefficientSet:
    """The quadruple (sigma or a, b, c, gamma) with rate bound Gamma.

    drift(t, x) -> (d,);  sigma_list[l](t, x) -> (d,);  covariance(t, x) -> (d, d);
    jump_amplitude(t, z, x) -> (d,);  jump_rate(t, z, x) -> float in [0, Gamma].
    ``lipschitz_c`` / ``lipschitz_gamma`` are the optional moduli l_c(z), l_gamma(z).
    ``derivatives`` holds optional oracles keyed by ("b"|"sigma_l"|"c"|"log_gamma", l?).
    """

    dim: int
    drift: Callable[[float, State], np.ndarray]
    jump_amplitude: Callable[[float, float, State], np.ndarray]
    jump_rate: Callable[[float, float, State], float]
    rate_bound: float
    sigma_list: Optional[Sequence[Callable[[float, State], np.ndarray]]] = None
    covariance: Optional[Callable[[float, State], np.ndarray]] = None
    lipschitz_c: Optional[Callable[[float], float]] = None
    lipschitz_gamma: Optional[Callable[[float], float]] = None
    derivative_oracles: dict = field(default_factory=dict)
    q_max: int = 0

    def __post_init__(self):
        if self.rate_bound <= 0:
            raise ValueError("rate_bound must be positive")
        if self.sigma_list is not None and self.covariance is not None:
            raise ValueError("give the diffusion as sigma_list or covariance, not both")

    # derivative accessors (oracle first, finite differences as fallback)
    def drift_deriv(self) -> SpatialDerivatives:
        return SpatialDerivatives(self.drift, self.derivative_oracles.get("b"), self.q_max)

    def sigma_deriv(self, l: int) -> SpatialDerivatives:
        oracles = self.derivative_oracles.get("sigma", {})
        return SpatialDerivatives(self.sigma_list[l], oracles.get(l), self.q_max)

    def amplitude_deriv(self) -> SpatialDerivatives:
        return SpatialDerivatives(self.jump_amplitude, self.derivative_oracles.get("c"), self.q_max)

    def log_rate_deriv(self) -> SpatialDerivatives:
        def log_gamma(t, z, x):
            return math.log(self.jump_rate(t, z, x))
        return SpatialDerivatives(log_gamma, self.derivative_oracles.get("log_gamma"), self.q_max)


@dataclass(frozen=True)
class JumpModel:
    coefficients: CoefficientSet
    measure: MarkMeasure
    horizon: float

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")

    @property
    def dim(self) -> int:
        return self.coefficients.dim

    @property
    def rate_bound(self) -> float:
        return self.coefficients.rate_bound

    def support(self) -> Region:
        return self.measure.support()


@dataclass(frozen=True)
class ValidationReport:
    rate_bound_excess: float          # sup over probes of max(0, gamma - Gamma)
    alpha: float                      # alpha(G) of the jump mechanism
    c_mu: float                       # C_mu(gamma, c), (estimated if moduli absent)
    c_mu_estimated: bool
    grid_size: int
    n_mark_probes: int


def restrict(model: JumpModel, region: Region) -> JumpModel:
    """Model with measure replaced by its restriction 1_G mu; coefficients unchanged."""
    return replace(model, measure=model.measure.restrict(region))


def _probe_marks(measure: MarkMeasure, region: Optional[Region], n: int = 64):
    """Deterministic mark probes in the (restricted) support, for sup-estimates."""
    if measure.kind == "discrete":
        sub = measure.restrict(region) if region is not None else measure
        return np.asarray(sub.atoms)
    sub = measure.restrict(region) if region is not None else measure
    zs = []
    for p in sub.pieces:
        k = max(4, n // max(1, len(sub.pieces)))
        lo = p.lo if not p.singular_lo else p.lo + 1e-12 * (p.hi - p.lo)
        zs.append(np.linspace(lo, p.hi, k + 1)[1:])
    return np.concatenate(zs) if zs else np.empty(0)


def alpha_of(model: JumpModel, region: Optional[Region], grid,
             tol: float = 1e-11, budget: int = 400) -> float:
    """sup over the (t, x) grid of  integral_G |c(t,z,x)| gamma(t,z,x) mu(dz)."""
    co = model.coefficients
    best = 0.0
    for t, x in grid:
        x = np.asarray(x, dtype=float)

        def f(z):
            return float(np.linalg.norm(co.jump_amplitude(t, z, x))) * co.jump_rate(t, z, x)

        best = max(best, model.measure.integrate(f, region, tol, budget))
    return best


def _c_mu(model: JumpModel, grid, tol: float, budget: int):
    """C_mu(gamma, c): uses declared moduli, else difference-quotient estimates."""
    co = model.coefficients
    estimated = co.lipschitz_c is None or co.lipschitz_gamma is None
    xs = [np.asarray(x, dtype=float) for _, x in grid]

    def est_modulus(fn, t, z):
        best = 0.0
        for x in xs:
            for dx in (1e-3, 0.1):
                y = x + dx
                num = np.linalg.norm(np.asarray(fn(t, z, y)) - np.asarray(fn(t, z, x)))
                best = max(best, float(num) / float(np.linalg.norm(y - x)))
        return best

    best = 0.0
    for t, x in grid:
        x = np.asarray(x, dtype=float)

        def f(z):
            lc = co.lipschitz_c(z) if co.lipschitz_c else est_modulus(co.jump_amplitude, t, z)
            lg = co.lipschitz_gamma(z) if co.lipschitz_gamma else est_modulus(co.jump_rate, t, z)
            return (lg * float(np.linalg.norm(co.jump_amplitude(t, z, x)))
                    + lc * co.jump_rate(t, z, x))

        best = max(best, model.measure.integrate(f, None, tol, budget))
    return best, estimated


def validate_model(model: JumpModel, grid, region: Optional[Region] = None,
                   tol: float = 1e-11, budget: int = 400) -> ValidationReport:
    """Numerical check of the standing assumptions on a finite (t, x) grid.

    Raises NonFiniteCoefficient on any NaN/inf evaluation and RateBoundViolated
    if gamma exceeds Gamma at a probe point.
    """
    if not grid:
        raise ValueError("grid must be nonempty")
    co = model.coefficients
    marks = _probe_marks(model.measure, region)
    excess = 0.0
    for t, x in grid:
        x = np.asarray(x, dtype=float)
        b = np.asarray(co.drift(t, x), dtype=float)
        vals = [b]
        if co.sigma_list is not None:
            vals += [np.asarray(s(t, x), dtype=float) for s in co.sigma_list]
        if co.covariance is not None:
            vals.append(np.asarray(co.covariance(t, x), dtype=float))
        for z in marks:
            g = co.jump_rate(t, float(z), x)
            c = np.asarray(co.jump_amplitude(t, float(z), x), dtype=float)
            vals += [np.asarray(g), c]
            if not math.isfinite(g):
                raise NonFiniteCoefficient(f"gamma({t}, {z}, {x}) is not finite")
            if g < 0:
                raise RateBoundViolated(f"gamma({t}, {z}, {x}) = {g} < 0")
            if g > co.rate_bound:
                raise RateBoundViolated(
                    f"gamma({t}, {z}, {x}) = {g} exceeds Gamma = {co.rate_bound}")
            excess = max(excess, g - co.rate_bound)
        for v in vals:
            if not np.all(np.isfinite(v)):
                raise NonFiniteCoefficient(f"non-finite coefficient at t={t}, x={x}")
    alpha = alpha_of(model, region, grid, tol, budget)
    c_mu, estimated = _c_mu(model, grid, tol, budget)
    return ValidationReport(max(0.0, excess), alpha, c_mu, estimated,
                            grid_size=len(grid), n_mark_probes=len(marks))
