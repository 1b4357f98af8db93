"""Infinitesimal operator evaluation and weighted generator distances.

The operator combines the second-order diffusion term (from the covariance
field a, or assembled from the sigma_l list), the drift term and the jump
integral with state-dependent rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .derivatives import finite_difference
from .model import JumpModel
from .regions import Region


@dataclass(frozen=True)
class TestFunction:
    """Smooth test function with gradient/Hessian, FD fallback when absent."""

    __test__ = False  # not a pytest collection target

    f: Callable[[np.ndarray], float]
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    norm_q_inf: Optional[dict] = None   # declared ||f||_{q,inf} per q <= 3
    name: str = "f"

    def __call__(self, x) -> float:
        return float(self.f(np.atleast_1d(np.asarray(x, dtype=float))))

    def grad(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.gradient is not None:
            return np.atleast_1d(np.asarray(self.gradient(x), dtype=float))
        return np.array([finite_difference(self.f, x, (i,)) for i in range(x.size)])

    def hess(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.hessian is not None:
            return np.atleast_2d(np.asarray(self.hessian(x), dtype=float))
        d = x.size
        return np.array([[finite_difference(self.f, x, (i, j)) for j in range(d)]
                         for i in range(d)])

    def norm_bound(self, q: int) -> Optional[float]:
        if self.norm_q_inf is None:
            return None
        return self.norm_q_inf.get(q)


def weight_psi(k: int) -> Callable[[np.ndarray], float]:
    """psi_k(x) = (1 + |x|^2)^(k/2); psi_0 is identically 1."""

    def psi(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return (1.0 + float(x @ x)) ** (k / 2.0)

    return psi


def covariance_field(model: JumpModel, t: float, x: np.ndarray) -> np.ndarray:
    co = model.coefficients
    d = co.dim
    if co.covariance is not None:
        return np.atleast_2d(np.asarray(co.covariance(t, x), dtype=float))
    a = np.zeros((d, d))
    if co.sigma_list:
        for sig in co.sigma_list:
            s = np.atleast_1d(np.asarray(sig(t, x), dtype=float))
            a += np.outer(s, s)
    return a


def apply_generator(model: JumpModel, f: TestFunction, t: float, x,
                    region: Optional[Region] = None, quad_tol: float = 1e-10) -> float:
    """(1/2) Tr[a d2f] + b . grad f + integral (f(x+c) - f(x)) gamma dmu."""
    co = model.coefficients
    x = np.atleast_1d(np.asarray(x, dtype=float))
    a = covariance_field(model, t, x)
    val = 0.5 * float(np.trace(a @ f.hess(x)))
    val += float(np.asarray(co.drift(t, x), dtype=float) @ f.grad(x))
    fx = f(x)

    def jump_integrand(z):
        c = np.asarray(co.jump_amplitude(t, z, x), dtype=float)
        return (f(x + c) - fx) * co.jump_rate(t, z, x)

    val += model.measure.integrate(jump_integrand, region, quad_tol)
    return val


class GeneratorAdapter:
    """Anything exposing apply(f, t, x) -> float can enter generator_distance."""

    def __init__(self, fn: Callable):
        self._fn = fn

    def apply(self, f: TestFunction, t: float, x) -> float:
        return float(self._fn(f, t, x))


def as_generator(obj) -> GeneratorAdapter:
    if isinstance(obj, JumpModel):
        return GeneratorAdapter(lambda f, t, x: apply_generator(obj, f, t, x))
    if hasattr(obj, "apply"):
        return obj
    return GeneratorAdapter(obj)


def generator_distance(gen_a, gen_b, f: TestFunction, grid, k: int = 0,
                       t: float = 0.0) -> float:
    """max over the grid of |L^A f(x) - L^B f(x)| / psi_k(x)."""
    ga, gb = as_generator(gen_a), as_generator(gen_b)
    psi = weight_psi(k)
    best = 0.0
    for x in grid:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        best = max(best, abs(ga.apply(f, t, x) - gb.apply(f, t, x)) / psi(x))
    return best


def h3_spot_check(model: JumpModel, f: TestFunction, k: int, grid, t: float = 0.0,
                  fd_step: float = 1e-5) -> float:
    """Observed sup over the grid of |grad L_t f| / psi_k, for the supplied f only.

    This is a spot check of the H3-type gradient condition, never a proof.
    """
    psi = weight_psi(k)
    best = 0.0
    for x in grid:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        g = np.array([
            (apply_generator(model, f, t, _shift(x, i, fd_step))
             - apply_generator(model, f, t, _shift(x, i, -fd_step))) / (2 * fd_step)
            for i in range(x.size)
        ])
        best = max(best, float(np.linalg.norm(g)) / psi(x))
    return best


def _shift(x: np.ndarray, i: int, h: float) -> np.ndarray:
    y = np.array(x, dtype=float)
    y[i] += h
    return y
