"""Trajectory simulation: fictive-shock, real-shock and hybrid representations.

Proposed jump times form a Poisson process of rate 2*Gamma*mu(G); the
state-dependent rate gamma is realized by thinning against a uniform on
[0, 2*Gamma].  Between jumps the continuous flow is advanced by Euler-Maruyama
steps of size at most h (last substep shortened).
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InfiniteMass, NonPSDCovariance
from .model import JumpModel
from .regions import Region
from .rng import RngStream

REPRESENTATIONS = ("fictive", "real", "hybrid")


@dataclass(frozen=True)
class SimConfig:
    horizon: float
    flow_step: float = 1e-3
    n_paths: int = 1
    representation: str = "fictive"
    seed: int = 0

    def __post_init__(self):
        if self.flow_step <= 0 or self.flow_step > self.horizon:
            raise ValueError("need 0 < flow_step <= horizon")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.representation not in REPRESENTATIONS:
            raise ValueError(f"representation must be one of {REPRESENTATIONS}")


@dataclass
class PathRecord:
    """One simulated trajectory.

    ``marks`` holds the sentinel None for real-shock no-jump draws; ``uniforms``
    is populated for the fictive representation only.
    """

    x0: np.ndarray
    t0: float
    horizon: float
    jump_times: list[float] = field(default_factory=list)
    marks: list = field(default_factory=list)
    uniforms: list = field(default_factory=list)
    accepted: list = field(default_factory=list)
    states_before: list = field(default_factory=list)
    states_after: list = field(default_factory=list)
    terminal: Optional[np.ndarray] = None
    stream: Optional[RngStream] = None

    def proposal_count(self) -> int:
        return len(self.jump_times)

    def accepted_count(self) -> int:
        return sum(bool(a) for a in self.accepted)

    def to_json_dict(self) -> dict:
        return {
            "seed": None if self.stream is None else self.stream.seed,
            "stream": None if self.stream is None else self.stream.index,
            "jump_times": [float(t) for t in self.jump_times],
            "marks": [None if m is None else float(m) for m in self.marks],
            "accepted": [bool(a) for a in self.accepted],
            "terminal": [float(v) for v in np.atleast_1d(self.terminal)],
        }


def psd_sqrt(a: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Symmetric PSD square root; closed form for d <= 2, Cholesky above."""
    a = np.asarray(a, dtype=float)
    if a.shape == (1, 1):
        if a[0, 0] < -tol:
            raise NonPSDCovariance(f"negative variance {a[0, 0]}")
        return np.array([[math.sqrt(max(a[0, 0], 0.0))]])
    if a.shape == (2, 2):
        det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
        tr = a[0, 0] + a[1, 1]
        disc = tr * tr / 4.0 - det
        lam_min = tr / 2.0 - math.sqrt(max(disc, 0.0))
        if lam_min < -tol:
            raise NonPSDCovariance(f"eigenvalue {lam_min} below -{tol}")
        s = math.sqrt(max(det, 0.0))
        t = math.sqrt(max(tr + 2.0 * s, 0.0))
        if t == 0.0:
            return np.zeros((2, 2))
        return (a + s * np.eye(2)) / t
    w = np.linalg.eigvalsh(a)
    if w[0] < -tol:
        raise NonPSDCovariance(f"eigenvalue {w[0]} below -{tol}")
    return np.linalg.cholesky(a + tol * np.eye(a.shape[0]))


def flow_segment(model: JumpModel, x: np.ndarray, t0: float, t1: float,
                 h: float, gen: np.random.Generator) -> np.ndarray:
    """Euler-Maruyama approximation of the continuous flow from t0 to t1."""
    co = model.coefficients
    x = np.array(x, dtype=float)
    if t1 <= t0:
        return x
    t = t0
    while t < t1 - 1e-15:
        dt = min(h, t1 - t)
        drift = np.asarray(co.drift(t, x), dtype=float)
        incr = drift * dt
        if co.sigma_list:
            dB = gen.normal(0.0, math.sqrt(dt), size=len(co.sigma_list))
            for l, sig in enumerate(co.sigma_list):
                incr = incr + np.asarray(sig(t, x), dtype=float) * dB[l]
        elif co.covariance is not None:
            root = psd_sqrt(np.atleast_2d(np.asarray(co.covariance(t, x), dtype=float)))
            xi = gen.normal(0.0, 1.0, size=root.shape[0])
            incr = incr + math.sqrt(dt) * (root @ xi)
        x = x + incr
        t += dt
    return x


def _finite_region_mass(model: JumpModel, region: Optional[Region]) -> float:
    m = model.measure.mass(region)
    if math.isinf(m):
        raise InfiniteMass("jump simulation needs mu(G) < infinity")
    return m


def _simulate(model: JumpModel, region: Optional[Region], x0, t0: float,
              cfg: SimConfig, rng: RngStream, real_shock: bool) -> PathRecord:
    co = model.coefficients
    mu_g = _finite_region_mass(model, region)
    lam = 2.0 * co.rate_bound * mu_g
    gen = rng.generator()
    x = np.atleast_1d(np.asarray(x0, dtype=float))
    rec = PathRecord(x0=x.copy(), t0=t0, horizon=cfg.horizon, stream=rng)
    t = t0
    while True:
        if lam > 0.0:
            wait = gen.exponential(1.0 / lam)
        else:
            wait = math.inf
        t_next = t + wait
        if t_next > cfg.horizon:
            x = flow_segment(model, x, t, cfg.horizon, cfg.flow_step, gen)
            break
        x = flow_segment(model, x, t, t_next, cfg.flow_step, gen)
        z = float(model.measure.sample(1, gen, region)[0])
        u = 2.0 * co.rate_bound * gen.random()
        accept = u <= co.jump_rate(t_next, z, x)
        rec.jump_times.append(t_next)
        rec.states_before.append(x.copy())
        if accept:
            x = x + np.asarray(co.jump_amplitude(t_next, z, x), dtype=float)
        if real_shock:
            rec.marks.append(z if accept else None)
        else:
            rec.marks.append(z)
            rec.uniforms.append(u)
        rec.accepted.append(bool(accept))
        rec.states_after.append(x.copy())
        t = t_next
    rec.terminal = x
    return rec


def simulate_fictive(model: JumpModel, region: Optional[Region], x0, t0: float,
                     cfg: SimConfig, rng: RngStream) -> PathRecord:
    """Fictive-shock representation: every proposal recorded with its thinning uniform."""
    return _simulate(model, region, x0, t0, cfg, rng, real_shock=False)


def simulate_real(model: JumpModel, region: Optional[Region], x0, t0: float,
                  cfg: SimConfig, rng: RngStream) -> PathRecord:
    """Real-shock representation: marks drawn from the normalized kernel q_G.

    The kernel places mass Theta_G on the no-jump sentinel; the draw is
    realized by the exact two-stage construction (mark from mu|_G, thinning
    uniform on [0, 2*Gamma]), which reproduces q_G for any gamma.
    """
    return _simulate(model, region, x0, t0, cfg, rng, real_shock=True)


def simulate_hybrid(model: JumpModel, region: Optional[Region], x0, t0: float,
                    cfg: SimConfig, rng: RngStream) -> PathRecord:
    """Drift + diffusion flow alternating with fictive-shock jumps on the region."""
    if region is not None and region.is_empty():
        gen = rng.generator()
        x = np.atleast_1d(np.asarray(x0, dtype=float))
        rec = PathRecord(x0=x.copy(), t0=t0, horizon=cfg.horizon, stream=rng)
        rec.terminal = flow_segment(model, x, t0, cfg.horizon, cfg.flow_step, gen)
        return rec
    return _simulate(model, region, x0, t0, cfg, rng, real_shock=False)


_SIMULATORS = {"fictive": simulate_fictive, "real": simulate_real, "hybrid": simulate_hybrid}


def theta_no_jump(model: JumpModel, region: Optional[Region], t: float, x,
                  tol: float = 1e-12) -> float:
    """Theta_G(t, x): residual kernel mass on the no-jump sentinel."""
    co = model.coefficients
    mu_g = _finite_region_mass(model, region)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    integral = model.measure.integrate(lambda z: co.jump_rate(t, z, x), region, tol)
    return 1.0 - integral / (2.0 * co.rate_bound * mu_g)


def terminal_samples(model: JumpModel, region: Optional[Region], x0,
                     f: Callable[[np.ndarray], float], cfg: SimConfig,
                     parallel_workers: Optional[int] = None) -> np.ndarray:
    """N evaluations of f at the terminal state, one independent stream per path.

    Stream i is (cfg.seed, i); results are index-addressed so the array is
    identical for any worker count.
    """
    simulate = _SIMULATORS[cfg.representation]
    _finite_region_mass(model, region)

    def one(i: int) -> float:
        rec = simulate(model, region, x0, 0.0, cfg, RngStream(cfg.seed, i))
        return float(f(rec.terminal))

    out = np.empty(cfg.n_paths)
    if parallel_workers is None or parallel_workers <= 1:
        for i in range(cfg.n_paths):
            out[i] = one(i)
        return out
    with ThreadPoolExecutor(max_workers=parallel_workers) as pool:
        for i, v in enumerate(pool.map(one, range(cfg.n_paths))):
            out[i] = v
    return out


def collect_paths(model: JumpModel, region: Optional[Region], x0, cfg: SimConfig,
                  indices=None) -> list[PathRecord]:
    simulate = _SIMULATORS[cfg.representation]
    idx = range(cfg.n_paths) if indices is None else indices
    return [simulate(model, region, x0, 0.0, cfg, RngStream(cfg.seed, i)) for i in idx]


def dump_paths_jsonl(records, path):
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json_dict()) + "\n")
