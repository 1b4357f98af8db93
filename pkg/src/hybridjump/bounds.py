"""Regularity and stability constants of the jump-diffusion semigroup,
evaluated as numeric functionals on declared (t, x) grids.

Universal constants are configurable inputs (default 1); suprema over time
and state are taken over the grids, which are part of the report.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Optional

import numpy as np

from .model import JumpModel, alpha_of, _c_mu
from .regions import Region


def multi_indices(dim: int, order: int):
    """Canonical multi-indices of exactly the given order."""
    return list(combinations_with_replacement(range(dim), order))


def multi_indices_range(dim: int, lo: int, hi: int):
    out = []
    for k in range(lo, hi + 1):
        out.extend(multi_indices(dim, k))
    return out


def make_grid(times, points):
    """Cartesian (t, x) grid from time values and state points."""
    return [(float(t), np.atleast_1d(np.asarray(x, dtype=float)))
            for t in times for x in points]


def harmonic(q: int) -> float:
    return sum(1.0 / n for n in range(1, q + 1))


# ---------------------------------------------------------------------------
# elementary norms
# ---------------------------------------------------------------------------

def sup_norm_field(deriv, alpha, grid) -> float:
    """sup over the grid of |d^alpha g(t, x)| for a state-coefficient field."""
    best = 0.0
    for t, x in grid:
        best = max(best, float(np.linalg.norm(deriv(alpha, t, x))))
    return best


def sup_norm_derivs(deriv, dim: int, lo: int, hi: int, grid) -> float:
    """||g||_{lo,hi,inf} = sum over lo <= |alpha| <= hi of sup |d^alpha g|."""
    return sum(sup_norm_field(deriv, a, grid) for a in multi_indices_range(dim, lo, hi))


def sigma_mu_norm(model: JumpModel, alpha, grid) -> float:
    """sup over the grid of the L2(mu) mark-norm of d^alpha sigma.

    For a sigma_l list this is the Parseval form sqrt(sum_l |d^alpha sigma_l|^2).
    """
    co = model.coefficients
    if not co.sigma_list:
        return 0.0
    ders = [co.sigma_deriv(l) for l in range(len(co.sigma_list))]
    best = 0.0
    for t, x in grid:
        total = sum(float(np.sum(np.asarray(d(alpha, t, x)) ** 2)) for d in ders)
        best = max(best, math.sqrt(total))
    return best


def sigma_mu_norm_range(model: JumpModel, lo: int, hi: int, grid) -> float:
    dim = model.dim
    return sum(sigma_mu_norm(model, a, grid) for a in multi_indices_range(dim, lo, hi))


def mark_field_norm(model: JumpModel, deriv, alpha, region: Optional[Region],
                    p: float, grid, tol: float = 1e-10) -> float:
    """|d^alpha g|_{G,p}: sup over the grid of (int_G |d^alpha g|^p gamma dmu)^(1/p)."""
    co = model.coefficients
    best = 0.0
    for t, x in grid:
        def integrand(z):
            v = float(np.linalg.norm(deriv(alpha, t, z, x)))
            return v ** p * co.jump_rate(t, z, x)
        val = model.measure.integrate(integrand, region, tol)
        best = max(best, val ** (1.0 / p))
    return best


def mark_field_bracket(model: JumpModel, deriv, alpha, region, p: float, grid,
                       tol: float = 1e-10) -> float:
    """[d^alpha g]_{G,p}: sup over integer p' <= p plus p itself of |g|_{G,p'}."""
    ps = sorted(set(list(range(1, int(math.floor(p)) + 1)) + [p]))
    return max(mark_field_norm(model, deriv, alpha, region, pp, grid, tol) for pp in ps)


def grad_norm_jump(model: JumpModel, deriv, region, p: float, grid, tol=1e-10) -> float:
    """[grad g]_{G,p} with the gradient taken as the stacked first-order indices."""
    co = model.coefficients
    dim = model.dim
    ps = sorted(set(list(range(1, int(math.floor(p)) + 1)) + [p]))
    best = 0.0
    for pp in ps:
        cur = 0.0
        for t, x in grid:
            def integrand(z):
                g2 = sum(float(np.sum(np.asarray(deriv((i,), t, z, x)) ** 2))
                         for i in range(dim))
                return g2 ** (pp / 2.0) * co.jump_rate(t, z, x)
            val = model.measure.integrate(integrand, region, tol)
            cur = max(cur, val ** (1.0 / pp))
        best = max(best, cur)
    return best


def grad_sigma_mu_norm(model: JumpModel, grid) -> float:
    dim = model.dim
    co = model.coefficients
    if not co.sigma_list:
        return 0.0
    ders = [co.sigma_deriv(l) for l in range(len(co.sigma_list))]
    best = 0.0
    for t, x in grid:
        total = 0.0
        for d in ders:
            for i in range(dim):
                total += float(np.sum(np.asarray(d((i,), t, x)) ** 2))
        best = max(best, math.sqrt(total))
    return best


def grad_drift_norm(model: JumpModel, grid) -> float:
    dim = model.dim
    deriv = model.coefficients.drift_deriv()
    best = 0.0
    for t, x in grid:
        total = sum(float(np.sum(np.asarray(deriv((i,), t, x)) ** 2)) for i in range(dim))
        best = max(best, math.sqrt(total))
    return best


# ---------------------------------------------------------------------------
# assembled functionals
# ---------------------------------------------------------------------------

def theta_qp(model: JumpModel, region, q: int, p: float, grid, tol=1e-10) -> float:
    """1 + ||sigma||_{2,q,(mu,inf)} + ||b||_{2,q,inf} + sum over 2<=|a|<=q of [d^a c]_{G,p}."""
    dim = model.dim
    val = 1.0
    if q >= 2:
        val += sigma_mu_norm_range(model, 2, q, grid)
        val += sup_norm_derivs(model.coefficients.drift_deriv(), dim, 2, q, grid)
        cder = model.coefficients.amplitude_deriv()
        for a in multi_indices_range(dim, 2, q):
            val += mark_field_bracket(model, cder, a, region, p, grid, tol)
    return val


def a_p(model: JumpModel, region, p: float, grid, tol=1e-10) -> float:
    """||grad sigma||^2 + ||grad b|| + [grad c]_{G,p}^p."""
    cder = model.coefficients.amplitude_deriv()
    gc = grad_norm_jump(model, cder, region, p, grid, tol)
    return (grad_sigma_mu_norm(model, grid) ** 2 + grad_drift_norm(model, grid)
            + gc ** p)


def log_alpha_qp_from_parts(theta: float, a_val: float, q: int, T: float,
                            c_universal: float) -> float:
    """ln alpha_{q,p}: C theta^(q H_q) exp(C T q H_q a_pq) evaluated in log space.

    The exponent routinely exceeds the double range (a_pq contains the pq-th
    power of a jump-gradient norm), so the log value is the primary quantity.
    """
    hq = harmonic(q)
    return math.log(c_universal) + q * hq * math.log(theta) \
        + c_universal * T * q * hq * a_val


def exp_or_inf(log_value: float) -> float:
    return math.exp(log_value) if log_value < 709.0 else math.inf


def alpha_qp_from_parts(theta: float, a_val: float, q: int, T: float,
                        c_universal: float) -> float:
    return exp_or_inf(log_alpha_qp_from_parts(theta, a_val, q, T, c_universal))


def alpha_qp(model: JumpModel, region, q: int, p: float, T: float,
             c_universal: float, grid, tol=1e-10) -> float:
    theta = theta_qp(model, region, q, p * q, grid, tol)
    a_val = a_p(model, region, p * q, grid, tol)
    return alpha_qp_from_parts(theta, a_val, q, T, c_universal)


def big_gamma_gq(model: JumpModel, region, q: int, grid, tol=1e-10) -> float:
    """sup over the grid of the nested log-derivative functional of the rate."""
    co = model.coefficients
    dim = model.dim
    lder = co.log_rate_deriv()
    best = 0.0
    for t, x in grid:
        total = 0.0
        for h in range(1, q + 1):
            for rho in multi_indices_range(dim, 1, h):
                expo = h / len(rho)

                def integrand(z):
                    v = abs(float(np.linalg.norm(lder(rho, t, z, x))))
                    return v ** expo * co.jump_rate(t, z, x)

                val = model.measure.integrate(integrand, region, tol)
                total += val ** (q / h)
        best = max(best, total)
    return best


@dataclass
class RegularityReport:
    q: int
    horizon: float
    c_universal: float
    region: dict
    grid_times: list
    grid_points: list
    sigma_norm_2q: float = 0.0
    b_norm_2q: float = 0.0
    c_brackets: dict = field(default_factory=dict)     # str(alpha) -> [d^a c]_{G, 4q^2}
    theta: float = 0.0                                  # theta_{q, 4q^2}
    grad_sigma_norm: float = 0.0
    grad_b_norm: float = 0.0
    grad_c_bracket: float = 0.0                         # [grad c]_{G, 4q^2}
    a_value: float = 0.0                                # a_{4q^2}
    log_alpha: float = 0.0                              # ln alpha_{q, 4q}
    alpha: float = 0.0                                  # alpha_{q, 4q} (inf if not representable)
    big_gamma: float = 0.0                              # Gamma_{G,q}(gamma)
    log_gamma_brackets: dict = field(default_factory=dict)  # str(beta) -> [d^b ln gamma]_{G,4q}
    log_q_constant: float = 0.0                         # ln Q_q(T, P)
    q_constant: float = 0.0                             # Q_q(T, P) (inf if not representable)

    def recompose_log_alpha(self) -> float:
        """ln alpha_{q,4q} rebuilt from the reported theta and a (exact identity)."""
        return log_alpha_qp_from_parts(self.theta, self.a_value, self.q,
                                       self.horizon, self.c_universal)

    def recompose_log_q(self) -> float:
        bracket_sum = sum(self.log_gamma_brackets.values())
        return (math.log(self.c_universal)
                + self.q * math.log(max(self.horizon, 1.0))
                + 2 * self.q * self.log_alpha
                + self.q * math.log(1.0 + self.big_gamma + bracket_sum))

    def to_json(self) -> str:
        payload = {
            "q": self.q, "horizon": self.horizon, "c_universal": self.c_universal,
            "region": self.region, "grid_times": self.grid_times,
            "grid_points": self.grid_points,
            "sigma_norm_2q": self.sigma_norm_2q, "b_norm_2q": self.b_norm_2q,
            "c_brackets": self.c_brackets, "theta": self.theta,
            "grad_sigma_norm": self.grad_sigma_norm, "grad_b_norm": self.grad_b_norm,
            "grad_c_bracket": self.grad_c_bracket, "a_value": self.a_value,
            "log_alpha": self.log_alpha, "alpha": str(self.alpha),
            "big_gamma": self.big_gamma,
            "log_gamma_brackets": self.log_gamma_brackets,
            "log_q_constant": self.log_q_constant, "q_constant": str(self.q_constant),
        }
        return json.dumps(payload, sort_keys=True)


def regularity_report(model: JumpModel, region: Optional[Region], q: int, T: float,
                      c_universal: float = 1.0, grid=None, tol: float = 1e-10) -> RegularityReport:
    """Evaluate every constant entering Q_q(T, P) on the declared grid."""
    if grid is None:
        raise ValueError("a (t, x) grid must be declared; suprema are grid-based")
    if model.coefficients.covariance is not None:
        raise ValueError("regularity_report needs the diffusion in sigma_l form")
    dim = model.dim
    co = model.coefficients
    p_inner = 4.0 * q * q     # theta_{q, pq} and a_{pq} at p = 4q
    rep = RegularityReport(
        q=q, horizon=T, c_universal=c_universal,
        region=region.describe() if region is not None else {"kind": "all"},
        grid_times=sorted({t for t, _ in grid}),
        grid_points=[list(map(float, np.atleast_1d(x))) for _, x in grid],
    )
    rep.sigma_norm_2q = sigma_mu_norm_range(model, 2, q, grid) if q >= 2 else 0.0
    rep.b_norm_2q = (sup_norm_derivs(co.drift_deriv(), dim, 2, q, grid) if q >= 2 else 0.0)
    cder = co.amplitude_deriv()
    theta = 1.0 + rep.sigma_norm_2q + rep.b_norm_2q
    for a in multi_indices_range(dim, 2, q):
        v = mark_field_bracket(model, cder, a, region, p_inner, grid, tol)
        rep.c_brackets[str(a)] = v
        theta += v
    rep.theta = theta
    rep.grad_sigma_norm = grad_sigma_mu_norm(model, grid)
    rep.grad_b_norm = grad_drift_norm(model, grid)
    rep.grad_c_bracket = grad_norm_jump(model, cder, region, p_inner, grid, tol)
    rep.a_value = (rep.grad_sigma_norm ** 2 + rep.grad_b_norm
                   + rep.grad_c_bracket ** p_inner)
    rep.log_alpha = log_alpha_qp_from_parts(rep.theta, rep.a_value, q, T, c_universal)
    rep.alpha = exp_or_inf(rep.log_alpha)
    rep.big_gamma = big_gamma_gq(model, region, q, grid, tol)
    lder = co.log_rate_deriv()
    for beta in multi_indices_range(dim, 1, q):
        rep.log_gamma_brackets[str(beta)] = mark_field_bracket(
            model, lder, beta, region, 4.0 * q, grid, tol)
    rep.log_q_constant = rep.recompose_log_q()
    rep.q_constant = exp_or_inf(rep.log_q_constant)
    return rep


@dataclass(frozen=True)
class LocalizationBound:
    value: float
    alpha_difference: float
    c_mu: float
    c_mu_estimated: bool
    exponent: float


def localization_bound(model: JumpModel, g1: Region, g2: Region, T: float,
                       c_universal: float = 1.0, x0_gap: float = 0.0,
                       grid=None) -> LocalizationBound:
    """(gap + T alpha(G2 \\ G1)) * exp(C T (||grad sigma|| + ||grad b|| + C_mu)^2 + 1)."""
    if not g1.is_subset(g2):
        raise ValueError("localization bound needs G1 contained in G2")
    if grid is None:
        raise ValueError("a (t, x) grid must be declared")
    diff = g2.difference(g1)
    alpha_diff = 0.0 if diff.is_empty() else alpha_of(model, diff, grid)
    c_mu, estimated = _c_mu(model, grid, 1e-10, 400)
    lip_sum = grad_sigma_mu_norm(model, grid) + grad_drift_norm(model, grid) + c_mu
    exponent = c_universal * T * lip_sum ** 2 + 1.0
    value = (x0_gap + T * alpha_diff) * math.exp(exponent)
    return LocalizationBound(value, alpha_diff, c_mu, estimated, exponent)


def calibrate_universal_constant(empirical: float, model: JumpModel, g1: Region,
                                 g2: Region, T: float, grid, x0_gap: float = 0.0) -> float:
    """Solve (gap + T alpha) exp(C T L^2 + 1) = empirical for C (floored at 0)."""
    diff = g2.difference(g1)
    alpha_diff = 0.0 if diff.is_empty() else alpha_of(model, diff, grid)
    base = x0_gap + T * alpha_diff
    if base <= 0 or empirical <= 0:
        return 0.0
    c_mu, _ = _c_mu(model, grid, 1e-10, 400)
    lip_sum = grad_sigma_mu_norm(model, grid) + grad_drift_norm(model, grid) + c_mu
    if lip_sum == 0 or T == 0:
        return 0.0
    c = (math.log(empirical / base) - 1.0) / (T * lip_sum ** 2)
    return max(0.0, c)
