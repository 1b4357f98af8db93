"""Two-dimensional Boltzmann cutoff dynamics and grazing-collision replacements.

An N-particle Nanbu system stands in for the nonlinear law: each particle
carries an independent Poisson clock, partners are drawn uniformly from the
ensemble, and the state-dependent collision rate phi_eps^kappa(|v - v*|) is
realized by thinning against 2 Gamma_eps^kappa.  Small angles |theta| <= delta
are replaced by a drift (order 1) or drift + diffusion (order 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate as _sint
from scipy.interpolate import CubicSpline

from .errors import ParameterConstraintViolated, QuadratureDivergence
from .rng import BlockDraws, RngStream
from .simulate import psd_sqrt
from .weakerr import WeakErrorReport, weak_error_row

PI_HALF = math.pi / 2.0


# ---------------------------------------------------------------------------
# mollifier and cutoff function
# ---------------------------------------------------------------------------

def _bump(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ui * ui))
    return out


def _bump_norm() -> float:
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        val, _ = _sint.quad(lambda u: math.exp(-1.0 / (1.0 - u * u)), -1.0, 1.0,
                            epsabs=1e-14, epsrel=1e-14, limit=300)
    return val


_BUMP_NORM = _bump_norm()
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def _gl_segment(fn, a: float, b: float) -> float:
    if b <= a:
        return 0.0
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * float(np.sum(_GL_WEIGHTS * fn(mid + half * _GL_NODES)))


class _UniformSpline:
    """Cubic spline on uniform knots with fast scalar Horner evaluation."""

    def __init__(self, lo: float, hi: float, values: np.ndarray):
        self.lo = lo
        self.hi = hi
        self.n = len(values) - 1
        self.dx = (hi - lo) / self.n
        xs = np.linspace(lo, hi, self.n + 1)
        self.coef = CubicSpline(xs, values).c  # (4, n)

    def scalar(self, x: float) -> float:
        i = int((x - self.lo) / self.dx)
        i = 0 if i < 0 else (self.n - 1 if i >= self.n else i)
        t = x - (self.lo + i * self.dx)
        c = self.coef
        return ((c[0, i] * t + c[1, i]) * t + c[2, i]) * t + c[3, i]

    def vector(self, x: np.ndarray) -> np.ndarray:
        i = np.clip(((x - self.lo) / self.dx).astype(int), 0, self.n - 1)
        t = x - (self.lo + i * self.dx)
        c = self.coef
        return ((c[0, i] * t + c[1, i]) * t + c[2, i]) * t + c[3, i]


class CutoffPhi:
    """The smooth rate clamp: mollified (x v 2 eps) ^ Gamma_eps.

    Exact in the flat and identity regions; the two transition windows are
    tabulated from 64-point Gauss-Legendre quadrature between the clamp
    breakpoints and interpolated by cubic splines (error budget 1e-8).
    """

    def __init__(self, epsilon: float, eta0: float, n_nodes: int = 257):
        if not 0.0 < epsilon <= 1.0:
            raise ParameterConstraintViolated("epsilon must lie in (0, 1]")
        self.epsilon = epsilon
        self.eta0 = eta0
        self.gamma_eps = math.log(1.0 / epsilon) ** eta0 if epsilon < 1.0 else 0.0
        e, g = self.epsilon, self.gamma_eps
        self.constant = g <= 2.0 * e
        self._win1 = self._win2 = self._win_mid = None
        if self.constant:
            return
        if g >= 4.0 * e:
            self._win1 = _UniformSpline(e, 3 * e, self._exact_vec(np.linspace(e, 3 * e, n_nodes)))
            self._win2 = _UniformSpline(g - e, g + e,
                                        self._exact_vec(np.linspace(g - e, g + e, n_nodes)))
        else:
            self._win_mid = _UniformSpline(e, g + e,
                                           self._exact_vec(np.linspace(e, g + e, 2 * n_nodes)))

    # exact quadrature of the defining integral
    def _exact(self, x: float) -> float:
        e, g = self.epsilon, self.gamma_eps

        def integrand(u):
            y = x - e * u
            return np.minimum(np.maximum(y, 2 * e), g) * _bump(u) / _BUMP_NORM

        cuts = [-1.0, 1.0]
        for y_star in (2 * e, g):
            u_star = (x - y_star) / e
            if -1.0 < u_star < 1.0:
                cuts.append(u_star)
        cuts.sort()
        return sum(_gl_segment(integrand, a, b) for a, b in zip(cuts[:-1], cuts[1:]))

    def _exact_vec(self, xs: np.ndarray) -> np.ndarray:
        return np.array([self._exact(float(x)) for x in xs])

    def __call__(self, x: float) -> float:
        e, g = self.epsilon, self.gamma_eps
        if self.constant:
            return g
        if x <= e:
            return 2.0 * e
        if x >= g + e:
            return g
        if self._win_mid is not None:
            return self._win_mid.scalar(x)
        if x < 3.0 * e:
            return self._win1.scalar(x)
        if x <= g - e:
            return x
        return self._win2.scalar(x)

    def vec(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        e, g = self.epsilon, self.gamma_eps
        if self.constant:
            return np.full(xs.shape, g)
        out = np.empty(xs.shape)
        lo = xs <= e
        hi = xs >= g + e
        out[lo] = 2.0 * e
        out[hi] = g
        mid = ~(lo | hi)
        xm = xs[mid]
        if self._win_mid is not None:
            out[mid] = self._win_mid.vector(xm)
        else:
            vm = np.where(xm < 3.0 * e, self._win1.vector(xm),
                          np.where(xm <= g - e, xm, self._win2.vector(np.clip(xm, g - e, g + e))))
            out[mid] = vm
        return out

    def pow_kappa(self, xs, kappa: float) -> np.ndarray:
        return self.vec(xs) ** kappa

    def pow_kappa_scalar(self, x: float, kappa: float) -> float:
        return self(x) ** kappa


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------

def default_rate_exponent(nu: float, kappa: float, order: int = 1) -> float:
    """The eps = delta^r coupling: r = (2-3nu)/(3+kappa) at first order."""
    if order == 1:
        return (2.0 - 3.0 * nu) / (3.0 + kappa)
    r_star = (3.0 - 4.0 * nu) / (4.0 + kappa)
    cap = min((1.0 - nu) / (2.0 - kappa), (1.0 - nu / 2.0) / (2.0 - kappa / 2.0))
    return min(r_star, 0.999 * cap)


def theoretical_exponent_order1(nu: float, kappa: float) -> float:
    return (2.0 - 3.0 * nu) * (1.0 + kappa) / (3.0 + kappa)


@dataclass(frozen=True)
class BoltzmannParams:
    nu: float
    kappa: float
    delta: float
    eta0: float = 0.75
    r: Optional[float] = None
    epsilon: Optional[float] = None
    theta_floor: float = 0.01
    order: int = 1

    def __post_init__(self):
        if not 0.0 < self.nu < 1.0:
            raise ParameterConstraintViolated("nu must lie in (0, 1)")
        if not 0.0 < self.kappa <= 1.0:
            raise ParameterConstraintViolated("kappa must lie in (0, 1]")
        if not 0.0 < self.delta <= PI_HALF:
            raise ParameterConstraintViolated("delta must lie in (0, pi/2]")
        if not 0.5 < self.eta0 < 1.0 / max(self.kappa, self.nu):
            raise ParameterConstraintViolated(
                "eta0 must lie in (1/2, 1/(kappa v nu))")
        if self.r is None:
            object.__setattr__(self, "r", default_rate_exponent(self.nu, self.kappa, self.order))
        if self.epsilon is None:
            object.__setattr__(self, "epsilon", self.delta ** self.r)
        if not 0.0 < self.epsilon <= 1.0:
            raise ParameterConstraintViolated("epsilon must lie in (0, 1]")
        if not 0.0 < self.theta_floor <= self.delta:
            raise ParameterConstraintViolated("need 0 < theta_floor <= delta")

    def validate_theorem(self):
        if self.order == 1:
            if not (self.kappa < 1.0 / 8.0 and self.nu < 0.5):
                raise ParameterConstraintViolated(
                    "first-order rate needs kappa < 1/8 and nu < 1/2")
        else:
            if self.kappa > 1.0 / 18.0:
                raise ParameterConstraintViolated("second-order rate needs kappa <= 1/18")
            cap = min((1.0 - self.nu) / (2.0 - self.kappa),
                      (1.0 - self.nu / 2.0) / (2.0 - self.kappa / 2.0),
                      (3.0 - 4.0 * self.nu) / (4.0 + self.kappa))
            if not self.r < cap + 1e-12:
                raise ParameterConstraintViolated(f"rate exponent r={self.r} violates r < {cap}")

    @property
    def gamma_eps(self) -> float:
        return math.log(1.0 / self.epsilon) ** self.eta0 if self.epsilon < 1.0 else 0.0

    def phi(self) -> CutoffPhi:
        return _phi_cached(self.epsilon, self.eta0)


_PHI_CACHE: dict = {}


def _phi_cached(epsilon: float, eta0: float) -> CutoffPhi:
    key = (epsilon, eta0)
    if key not in _PHI_CACHE:
        _PHI_CACHE[key] = CutoffPhi(epsilon, eta0)
    return _PHI_CACHE[key]


# ---------------------------------------------------------------------------
# angular measure
# ---------------------------------------------------------------------------

def theta_region_mass(nu: float, theta_min: float, theta_max: float) -> float:
    """Mass of |theta|^(-1-nu) dtheta on {theta_min < |theta| <= theta_max}."""
    if theta_min <= 0.0:
        return math.inf
    if theta_max <= theta_min:
        return 0.0
    return (2.0 / nu) * (theta_min ** -nu - theta_max ** -nu)


def sample_theta(nu: float, theta_min: float, theta_max: float,
                 gen: np.random.Generator, n: Optional[int] = None):
    """Signed draws with |theta| ~ |theta|^(-1-nu) restricted to [theta_min, theta_max]."""
    if theta_min <= 0.0:
        raise ValueError("theta_min must be positive (the measure is infinite at 0)")
    size = 1 if n is None else n
    if theta_max <= theta_min:
        mag = np.full(size, theta_min)
    else:
        u = gen.random(size)
        a, b = theta_min ** -nu, theta_max ** -nu
        mag = (a - u * (a - b)) ** (-1.0 / nu)
    sign = np.where(gen.random(size) < 0.5, -1.0, 1.0)
    out = sign * mag
    return float(out[0]) if n is None else out


def collision_jump(theta: float, v, v_star) -> np.ndarray:
    """A(theta)(v - v_star) with A = (R_theta - I)/2."""
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    dx, dy = v[0] - v_star[0], v[1] - v_star[1]
    c, s = math.cos(theta) - 1.0, math.sin(theta)
    return 0.5 * np.array([c * dx - s * dy, s * dx + c * dy])


def theta_moments(nu: float, delta: float) -> tuple[float, float, float]:
    """(I1, I2, I3): angular moments of the grazing region |theta| <= delta.

    I1 integrates cos(theta) - 1, I2 its square, I3 sin^2(theta), all against
    |theta|^(-1-nu) d theta.
    """
    if not 0.0 < delta <= PI_HALF:
        raise ValueError("need 0 < delta <= pi/2")

    def moment(g):
        val, err = _sint.quad(lambda t: 2.0 * g(t) * t ** (-1.0 - nu), 0.0, delta,
                              epsabs=1e-13, epsrel=1e-12, limit=200)
        if not math.isfinite(val):
            raise QuadratureDivergence("theta moment quadrature failed")
        return val

    i1 = moment(lambda t: math.cos(t) - 1.0)
    i2 = moment(lambda t: (math.cos(t) - 1.0) ** 2)
    i3 = moment(lambda t: math.sin(t) ** 2)
    return i1, i2, i3


# ---------------------------------------------------------------------------
# grazing-collision replacements
# ---------------------------------------------------------------------------

def drift_delta(params: BoltzmannParams, v, ensemble) -> np.ndarray:
    """First-order replacement drift b_delta(v) against the particle ensemble.

    The off-diagonal sin(theta) part of A integrates to zero by oddness, so
    b_delta = (I1/2) avg_w (v - w) phi^kappa(|v - w|).
    """
    v = np.asarray(v, dtype=float)
    ens = np.atleast_2d(np.asarray(ensemble, dtype=float))
    i1, _, _ = theta_moments(params.nu, params.delta)
    w = v[None, :] - ens
    norms = np.sqrt((w * w).sum(axis=1))
    gam = params.phi().pow_kappa(norms, params.kappa)
    return 0.5 * i1 * (w * gam[:, None]).mean(axis=0)


def diffusion_delta(params: BoltzmannParams, v, ensemble) -> tuple[np.ndarray, np.ndarray]:
    """Second-order covariance a_delta(v) and its symmetric PSD square root."""
    v = np.asarray(v, dtype=float)
    ens = np.atleast_2d(np.asarray(ensemble, dtype=float))
    _, i2, i3 = theta_moments(params.nu, params.delta)
    w = v[None, :] - ens
    norms = np.sqrt((w * w).sum(axis=1))
    gam = params.phi().pow_kappa(norms, params.kappa)
    w_perp = np.stack([-w[:, 1], w[:, 0]], axis=1)
    outer_w = np.einsum("ni,nj,n->ij", w, w, gam) / len(ens)
    outer_p = np.einsum("ni,nj,n->ij", w_perp, w_perp, gam) / len(ens)
    a = 0.25 * (i2 * outer_w + i3 * outer_p)
    return a, psd_sqrt(a)


# ---------------------------------------------------------------------------
# particle simulation
# ---------------------------------------------------------------------------

def gaussian_ensemble(n: int, gen: np.random.Generator, std: float = 1.0) -> np.ndarray:
    return gen.normal(0.0, std, size=(n, 2))


@dataclass
class ParticleRun:
    velocities: np.ndarray                 # (n, 2) final state
    times: list = field(default_factory=list)
    fourth_moments: list = field(default_factory=list)
    n_events: int = 0

    def max_fourth_moment(self) -> float:
        return max(self.fourth_moments) if self.fourth_moments else float("nan")


def _checkpoint(run: ParticleRun, t: float, vx, vy):
    x = np.asarray(vx)
    y = np.asarray(vy)
    run.times.append(t)
    run.fourth_moments.append(float(((x * x + y * y) ** 2).mean()))


def simulate_cutoff(params: BoltzmannParams, n_particles: int, horizon: float,
                    rng: RngStream, initial: Optional[np.ndarray] = None,
                    n_checkpoints: int = 10) -> ParticleRun:
    """Nanbu jump dynamics on {|theta| > theta_floor} with thinned collisions."""
    if n_particles < 2:
        raise ValueError("need at least two particles")
    if params.gamma_eps <= 0.0:
        raise ParameterConstraintViolated("Gamma_eps = 0: epsilon too large to simulate")
    gen = rng.child(1).generator()
    if initial is None:
        initial = gaussian_ensemble(n_particles, rng.child(0).generator())
    vx = [float(v) for v in initial[:, 0]]
    vy = [float(v) for v in initial[:, 1]]
    phi = params.phi()
    kappa = params.kappa
    bound = 2.0 * params.gamma_eps ** kappa
    mu_theta = theta_region_mass(params.nu, params.theta_floor, PI_HALF)
    lam_total = n_particles * bound * mu_theta
    run = ParticleRun(velocities=initial)
    draws = BlockDraws(gen)
    a_pow, b_pow = params.theta_floor ** -params.nu, PI_HALF ** -params.nu
    inv_nu = -1.0 / params.nu
    check_dt = horizon / n_checkpoints if n_checkpoints else math.inf
    next_check = check_dt
    _checkpoint(run, 0.0, vx, vy)
    t = 0.0
    while True:
        t += draws.exponential() / lam_total
        while t > next_check and next_check <= horizon:
            _checkpoint(run, next_check, vx, vy)
            next_check += check_dt
        if t > horizon:
            break
        i = draws.randint(n_particles)
        j = draws.randint(n_particles)
        mag = (a_pow - draws.uniform() * (a_pow - b_pow)) ** inv_nu
        theta = mag if draws.uniform() < 0.5 else -mag
        u = draws.uniform() * bound
        dx = vx[i] - vx[j]
        dy = vy[i] - vy[j]
        w = math.sqrt(dx * dx + dy * dy)
        run.n_events += 1
        if u <= phi.pow_kappa_scalar(w, kappa):
            c, s = math.cos(theta) - 1.0, math.sin(theta)
            vx[i] += 0.5 * (c * dx - s * dy)
            vy[i] += 0.5 * (s * dx + c * dy)
    run.velocities = np.stack([np.asarray(vx), np.asarray(vy)], axis=1)
    return run


def _mean_field_drift(params: BoltzmannParams, vel: np.ndarray, i1: float) -> np.ndarray:
    """b_delta for every particle at once; O(n) when phi is constant."""
    phi = params.phi()
    kappa = params.kappa
    n = len(vel)
    if phi.constant:
        gam = phi.gamma_eps ** kappa
        mean = vel.mean(axis=0)
        return 0.5 * i1 * gam * (vel - mean[None, :])
    out = np.empty_like(vel)
    chunk = max(1, 2 ** 22 // max(n, 1))
    for lo in range(0, n, chunk):
        sub = vel[lo:lo + chunk]
        w = sub[:, None, :] - vel[None, :, :]
        norms = np.sqrt((w * w).sum(axis=2))
        gam = phi.pow_kappa(norms, kappa)
        out[lo:lo + chunk] = 0.5 * i1 * (w * gam[:, :, None]).mean(axis=1)
    return out


def _mean_field_diffusion_roots(params: BoltzmannParams, vel: np.ndarray,
                                i2: float, i3: float) -> np.ndarray:
    """Per-particle 2x2 PSD roots of a_delta, vectorized via moment identities."""
    phi = params.phi()
    kappa = params.kappa
    n = len(vel)
    if phi.constant:
        gam = phi.gamma_eps ** kappa
        m = vel.mean(axis=0)
        s = np.einsum("ni,nj->ij", vel, vel) / n
        vvt = np.einsum("ni,nj->nij", vel, vel)
        cross = np.einsum("ni,j->nij", vel, m)
        cw = vvt - cross - cross.transpose(0, 2, 1) + s[None, :, :]
        j_mat = np.array([[0.0, -1.0], [1.0, 0.0]])
        cp = np.einsum("ik,nkl,jl->nij", j_mat, cw, j_mat)
        a = 0.25 * gam * (i2 * cw + i3 * cp)
    else:
        a = np.empty((n, 2, 2))
        chunk = max(1, 2 ** 21 // max(n, 1))
        for lo in range(0, n, chunk):
            sub = vel[lo:lo + chunk]
            w = sub[:, None, :] - vel[None, :, :]
            norms = np.sqrt((w * w).sum(axis=2))
            gam = phi.pow_kappa(norms, kappa)
            wp = np.stack([-w[:, :, 1], w[:, :, 0]], axis=2)
            ow = np.einsum("mni,mnj,mn->mij", w, w, gam) / n
            op = np.einsum("mni,mnj,mn->mij", wp, wp, gam) / n
            a[lo:lo + chunk] = 0.25 * (i2 * ow + i3 * op)
    # closed-form symmetric PSD roots, vectorized
    a11, a12, a22 = a[:, 0, 0], a[:, 0, 1], a[:, 1, 1]
    det = np.maximum(a11 * a22 - a12 * a12, 0.0)
    tr = a11 + a22
    s = np.sqrt(det)
    tval = np.sqrt(np.maximum(tr + 2.0 * s, 0.0))
    safe = tval > 0
    roots = np.zeros_like(a)
    roots[safe, 0, 0] = (a11[safe] + s[safe]) / tval[safe]
    roots[safe, 0, 1] = a12[safe] / tval[safe]
    roots[safe, 1, 0] = a12[safe] / tval[safe]
    roots[safe, 1, 1] = (a22[safe] + s[safe]) / tval[safe]
    return roots


def _simulate_hybrid(params: BoltzmannParams, n_particles: int, horizon: float,
                     rng: RngStream, order: int, initial: Optional[np.ndarray],
                     drift_step: float, n_checkpoints: int) -> ParticleRun:
    if n_particles < 2:
        raise ValueError("need at least two particles")
    if params.gamma_eps <= 0.0:
        raise ParameterConstraintViolated("Gamma_eps = 0: epsilon too large to simulate")
    gen = rng.child(1).generator()
    if initial is None:
        initial = gaussian_ensemble(n_particles, rng.child(0).generator())
    vel = np.array(initial, dtype=float)
    phi = params.phi()
    kappa = params.kappa
    i1, i2, i3 = theta_moments(params.nu, params.delta)
    bound = 2.0 * params.gamma_eps ** kappa
    mu_theta = theta_region_mass(params.nu, params.delta, PI_HALF)
    lam_total = n_particles * bound * mu_theta
    n_steps = max(1, round(horizon / drift_step))
    h = horizon / n_steps
    draws = BlockDraws(gen)
    a_pow, b_pow = params.delta ** -params.nu, PI_HALF ** -params.nu
    inv_nu = -1.0 / params.nu
    run = ParticleRun(velocities=vel)
    _checkpoint(run, 0.0, vel[:, 0], vel[:, 1])
    check_every = max(1, n_steps // n_checkpoints) if n_checkpoints else n_steps + 1
    t_next_event = (draws.exponential() / lam_total) if mu_theta > 0 else math.inf
    for step in range(n_steps):
        t0 = step * h
        vel += h * _mean_field_drift(params, vel, i1)
        if order == 2:
            roots = _mean_field_diffusion_roots(params, vel, i2, i3)
            xi = gen.normal(0.0, 1.0, size=(n_particles, 2))
            vel += math.sqrt(h) * np.einsum("nij,nj->ni", roots, xi)
        # kept jumps on |theta| > delta within (t0, t0 + h]
        while t_next_event <= t0 + h:
            i = draws.randint(n_particles)
            j = draws.randint(n_particles)
            mag = (a_pow - draws.uniform() * (a_pow - b_pow)) ** inv_nu
            theta = mag if draws.uniform() < 0.5 else -mag
            u = draws.uniform() * bound
            dx = vel[i, 0] - vel[j, 0]
            dy = vel[i, 1] - vel[j, 1]
            w = math.sqrt(dx * dx + dy * dy)
            run.n_events += 1
            if u <= phi.pow_kappa_scalar(w, kappa):
                c, s = math.cos(theta) - 1.0, math.sin(theta)
                vel[i, 0] += 0.5 * (c * dx - s * dy)
                vel[i, 1] += 0.5 * (s * dx + c * dy)
            t_next_event += draws.exponential() / lam_total
        if (step + 1) % check_every == 0 or step == n_steps - 1:
            _checkpoint(run, t0 + h, vel[:, 0], vel[:, 1])
    run.velocities = vel
    return run


def simulate_hybrid_order1(params: BoltzmannParams, n_particles: int, horizon: float,
                           rng: RngStream, initial: Optional[np.ndarray] = None,
                           drift_step: float = 0.02, n_checkpoints: int = 10) -> ParticleRun:
    """Grazing collisions replaced by the mean-field drift; jumps kept above delta."""
    return _simulate_hybrid(params, n_particles, horizon, rng, 1, initial,
                            drift_step, n_checkpoints)


def simulate_hybrid_order2(params: BoltzmannParams, n_particles: int, horizon: float,
                           rng: RngStream, initial: Optional[np.ndarray] = None,
                           drift_step: float = 0.02, n_checkpoints: int = 10) -> ParticleRun:
    """Drift plus Gaussian increments with the a_delta square root per step."""
    return _simulate_hybrid(params, n_particles, horizon, rng, 2, initial,
                            drift_step, n_checkpoints)


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def exp_neg_sq(v: np.ndarray) -> np.ndarray:
    """The default observable f(v) = exp(-|v|^2), vectorized over (n, 2)."""
    v = np.atleast_2d(np.asarray(v, dtype=float))
    return np.exp(-(v * v).sum(axis=1))


def boltzmann_experiment(delta_list, nu: float, kappa: float, order: int = 1,
                         n_particles: int = 2000, n_replicas: int = 200,
                         horizon: float = 0.5, seed: int = 0,
                         f: Callable = exp_neg_sq, eta0: float = 0.75,
                         theta_floor: float = 0.01, drift_step: float = 0.02,
                         level: float = 0.99) -> WeakErrorReport:
    """Hybrid-vs-cutoff weak error per delta, replica-paired for variance reduction.

    Replica k shares its initial ensemble between the cutoff and hybrid runs
    (streams (seed, k, 0/1) with the hybrid on an offset index); errors and
    CIs come from the replica-level means of f.
    """
    report = WeakErrorReport(level=level, meta={
        "order": order, "nu": nu, "kappa": kappa, "eta0": eta0,
        "theta_floor": theta_floor, "n_particles": n_particles,
        "n_replicas": n_replicas, "horizon": horizon, "seed": seed,
        "theoretical_exponent": theoretical_exponent_order1(nu, kappa),
    })
    moment_ratios = []
    simulate_hybrid = simulate_hybrid_order1 if order == 1 else simulate_hybrid_order2
    for d_idx, delta in enumerate(delta_list):
        params = BoltzmannParams(nu=nu, kappa=kappa, delta=float(delta), eta0=eta0,
                                 theta_floor=theta_floor, order=order)
        params.validate_theorem()
        cut_means = np.empty(n_replicas)
        hyb_means = np.empty(n_replicas)
        worst_ratio = 0.0
        for k in range(n_replicas):
            init = gaussian_ensemble(n_particles, RngStream(seed, k, 0).generator())
            cut = simulate_cutoff(params, n_particles, horizon,
                                  RngStream(seed, k + 1_000_000 * (2 * d_idx + 1), 0),
                                  initial=init, n_checkpoints=4)
            hyb = simulate_hybrid(params, n_particles, horizon,
                                  RngStream(seed, k + 1_000_000 * (2 * d_idx + 2), 0),
                                  initial=init, drift_step=drift_step, n_checkpoints=4)
            cut_means[k] = float(f(cut.velocities).mean())
            hyb_means[k] = float(f(hyb.velocities).mean())
            base = cut.fourth_moments[0]
            worst_ratio = max(worst_ratio, cut.max_fourth_moment() / base,
                              hyb.max_fourth_moment() / base)
        report.rows.append(weak_error_row(delta, cut_means, hyb_means, level))
        moment_ratios.append(worst_ratio)
    report.meta["max_fourth_moment_ratio"] = max(moment_ratios)
    if len(report.rows) >= 3:
        try:
            report.fit()
        except Exception:
            pass
    return report


def first_order_generator_gap(params: BoltzmannParams, v_grid, ensemble,
                              k_weight: int = 2, n_nodes: int = 64) -> float:
    """psi_k-weighted sup over the grid of |(L^eps - L-hat^delta) f(v)| for
    f(v) = exp(-|v|^2): the Taylor remainder of the grazing region.

    The angular integral is mapped by theta = delta * s^(1/(2-nu)) so the
    integrand is bounded at 0, then integrated by Gauss-Legendre.
    """
    nu, kappa, delta = params.nu, params.kappa, params.delta
    phi = params.phi()
    grid = np.atleast_2d(np.asarray(v_grid, dtype=float))
    ens = np.atleast_2d(np.asarray(ensemble, dtype=float))
    w = grid[:, None, :] - ens[None, :, :]          # (G, W, 2)
    norms = np.sqrt((w * w).sum(axis=2))
    gam = phi.pow_kappa(norms, kappa)               # (G, W)
    f_v = np.exp(-(grid * grid).sum(axis=1))        # (G,)
    grad_v = -2.0 * grid * f_v[:, None]             # (G, 2)

    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    s = 0.5 * (nodes + 1.0)
    ds_w = 0.5 * weights
    power = 1.0 / (2.0 - nu)
    theta = delta * s ** power
    jac = (delta ** -nu) / (2.0 - nu) * s ** (-2.0 * power)
    total = np.zeros(len(grid))
    for th, jc, dw in zip(theta, jac, ds_w):
        for sgn in (1.0, -1.0):
            t = sgn * th
            c, sn = math.cos(t) - 1.0, math.sin(t)
            cx = 0.5 * (c * w[:, :, 0] - sn * w[:, :, 1])
            cy = 0.5 * (sn * w[:, :, 0] + c * w[:, :, 1])
            vx = grid[:, None, 0] + cx
            vy = grid[:, None, 1] + cy
            f_new = np.exp(-(vx * vx + vy * vy))
            lin = grad_v[:, None, 0] * cx + grad_v[:, None, 1] * cy
            rem = (f_new - f_v[:, None] - lin) * gam
            total += dw * jc * rem.mean(axis=1)
    psi = (1.0 + (grid * grid).sum(axis=1)) ** (k_weight / 2.0)
    return float(np.max(np.abs(total) / psi))
