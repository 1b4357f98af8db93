"""Mark measures: finite discrete sets of atoms and densities on intervals.

Built-in power-law pieces carry closed-form antiderivatives and inverse CDFs
so that restriction masses and sampling are exact; arbitrary user densities
fall back to adaptive quadrature and numeric CDF inversion.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate as _sint

from .errors import InfiniteMass, QuadratureDivergence
from .regions import Region

DEFAULT_QUAD_TOL = 1e-11
DEFAULT_QUAD_BUDGET = 400


def adaptive_quad(f, a: float, b: float, tol: float = DEFAULT_QUAD_TOL,
                  budget: int = DEFAULT_QUAD_BUDGET) -> float:
    """scipy quad wrapped to raise QuadratureDivergence instead of warning."""
    if b <= a:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", _sint.IntegrationWarning)
        try:
            val, err = _sint.quad(f, a, b, epsabs=tol, epsrel=tol, limit=budget)
        except _sint.IntegrationWarning as exc:
            # retry once at a looser relative tolerance before giving up
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    val, err = _sint.quad(f, a, b, epsabs=tol * 100, epsrel=1e-9,
                                          limit=2 * budget)
            except Exception:
                raise QuadratureDivergence(str(exc)) from exc
            if not np.isfinite(val):
                raise QuadratureDivergence(str(exc)) from exc
    if not np.isfinite(val):
        raise QuadratureDivergence(f"non-finite quadrature value on ({a}, {b}]")
    return float(val)


@dataclass(frozen=True)
class DensityPiece:
    """Density rho(z) on the half-open interval (lo, hi].

    ``mass_between`` and ``inverse_cdf`` are optional exact-form hooks; when
    absent, adaptive quadrature / bisection are used.  ``singular_lo`` marks a
    non-integrable singularity at the left endpoint (mass infinite on any
    region touching lo).
    """

    lo: float
    hi: float
    density: Callable[[np.ndarray], np.ndarray]
    mass_between: Optional[Callable[[float, float], float]] = None
    inverse_cdf: Optional[Callable[[np.ndarray, float, float], np.ndarray]] = None
    singular_lo: bool = False

    def mass(self, a: float, b: float) -> float:
        a, b = max(a, self.lo), min(b, self.hi)
        if b <= a:
            return 0.0
        if self.singular_lo and a <= self.lo:
            return math.inf
        if self.mass_between is not None:
            return float(self.mass_between(a, b))
        return adaptive_quad(lambda z: float(self.density(z)), a, b)

    def sample(self, u: np.ndarray, a: float, b: float) -> np.ndarray:
        """Map uniforms u in [0,1) to samples of rho restricted to (a, b]."""
        a, b = max(a, self.lo), min(b, self.hi)
        if self.inverse_cdf is not None:
            return self.inverse_cdf(np.asarray(u, dtype=float), a, b)
        total = self.mass(a, b)
        out = np.empty(np.shape(u))
        for i, ui in enumerate(np.atleast_1d(u)):
            target = ui * total
            lo_, hi_ = a, b
            for _ in range(80):
                mid = 0.5 * (lo_ + hi_)
                if self.mass(a, mid) < target:
                    lo_ = mid
                else:
                    hi_ = mid
            out.flat[i] = 0.5 * (lo_ + hi_)
        return out


def power_law_piece(lo: float, hi: float, exponent: float, coef: float = 1.0) -> DensityPiece:
    """rho(z) = coef * z**exponent on (lo, hi], with closed forms."""
    p = float(exponent)
    c = float(coef)

    def density(z):
        return c * np.asarray(z, dtype=float) ** p

    if p == -1.0:
        def mass_between(a, b):
            if a <= 0.0:
                return math.inf
            return c * math.log(b / a)

        def inverse_cdf(u, a, b):
            return a * (b / a) ** np.asarray(u, dtype=float)
    else:
        q = p + 1.0

        def mass_between(a, b):
            if a <= 0.0 and q <= 0.0:
                return math.inf
            return c * (b ** q - a ** q) / q

        def inverse_cdf(u, a, b):
            u = np.asarray(u, dtype=float)
            return (a ** q + u * (b ** q - a ** q)) ** (1.0 / q)

    singular = lo == 0.0 and p <= -1.0
    return DensityPiece(lo, hi, density, mass_between, inverse_cdf, singular_lo=singular)


def uniform_piece(lo: float, hi: float, height: float = 1.0) -> DensityPiece:
    return power_law_piece(lo, hi, 0.0, height)


class MarkMeasure:
    """Common interface of the two measure kinds."""

    kind: str

    def support(self) -> Region:
        raise NotImplementedError

    def mass(self, region: Optional[Region] = None) -> float:
        raise NotImplementedError

    def integrate(self, f, region: Optional[Region] = None,
                  tol: float = DEFAULT_QUAD_TOL, budget: int = DEFAULT_QUAD_BUDGET) -> float:
        raise NotImplementedError

    def sample(self, n: int, gen: np.random.Generator,
               region: Optional[Region] = None) -> np.ndarray:
        raise NotImplementedError

    def restrict(self, region: Region) -> "MarkMeasure":
        raise NotImplementedError


class DiscreteMeasure(MarkMeasure):
    """Finite discrete measure sum_i w_i * delta_{z_i}."""

    kind = "discrete"

    def __init__(self, atoms, weights):
        self.atoms = np.asarray(atoms, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        if self.atoms.shape != self.weights.shape or self.atoms.ndim != 1:
            raise ValueError("atoms and weights must be equal-length 1-d arrays")
        if np.any(self.weights <= 0):
            raise ValueError("atom weights must be positive")

    def support(self) -> Region:
        return Region.from_atoms(range(len(self.atoms)))

    def _indices(self, region: Optional[Region]) -> np.ndarray:
        if region is None:
            return np.arange(len(self.atoms))
        if region.kind == "atoms":
            return np.array(sorted(i for i in region.atoms if i < len(self.atoms)), dtype=int)
        return np.nonzero(region.contains(self.atoms))[0]

    def mass(self, region: Optional[Region] = None) -> float:
        return float(self.weights[self._indices(region)].sum())

    def integrate(self, f, region=None, tol=DEFAULT_QUAD_TOL, budget=DEFAULT_QUAD_BUDGET) -> float:
        idx = self._indices(region)
        return float(sum(self.weights[i] * f(self.atoms[i]) for i in idx))

    def sample(self, n: int, gen: np.random.Generator, region=None) -> np.ndarray:
        idx = self._indices(region)
        if idx.size == 0:
            raise ValueError("sampling from a null region")
        w = self.weights[idx]
        picks = gen.choice(idx, size=n, p=w / w.sum())
        return self.atoms[picks]

    def restrict(self, region: Region) -> "DiscreteMeasure":
        idx = self._indices(region)
        return DiscreteMeasure(self.atoms[idx], self.weights[idx])


class DensityMeasure(MarkMeasure):
    """Measure with density given piecewise on disjoint intervals."""

    kind = "density"

    def __init__(self, pieces):
        self.pieces = sorted(pieces, key=lambda p: p.lo)
        for a, b in zip(self.pieces, self.pieces[1:]):
            if b.lo < a.hi:
                raise ValueError("density pieces must not overlap")

    def support(self) -> Region:
        return Region.from_intervals(*((p.lo, p.hi) for p in self.pieces))

    def _segments(self, region: Optional[Region]):
        """(piece, a, b) triples covering support ∩ region."""
        if region is None:
            return [(p, p.lo, p.hi) for p in self.pieces]
        if region.kind != "intervals":
            raise ValueError("density measures take interval regions")
        segs = []
        for p in self.pieces:
            for a, b in region.intervals:
                lo, hi = max(p.lo, a), min(p.hi, b)
                if hi > lo:
                    segs.append((p, lo, hi))
        return segs

    def mass(self, region: Optional[Region] = None) -> float:
        total = 0.0
        for p, a, b in self._segments(region):
            m = p.mass(a, b)
            if math.isinf(m):
                return math.inf
            total += m
        return total

    def integrate(self, f, region=None, tol=DEFAULT_QUAD_TOL, budget=DEFAULT_QUAD_BUDGET) -> float:
        total = 0.0
        for p, a, b in self._segments(region):
            total += adaptive_quad(lambda z: f(z) * float(p.density(z)), a, b, tol, budget)
        return total

    def sample(self, n: int, gen: np.random.Generator, region=None) -> np.ndarray:
        segs = self._segments(region)
        masses = np.array([p.mass(a, b) for p, a, b in segs])
        if not np.all(np.isfinite(masses)):
            raise InfiniteMass("cannot sample from an infinite-mass region")
        total = masses.sum()
        if total <= 0:
            raise ValueError("sampling from a null region")
        cum = np.cumsum(masses)
        u = gen.random(n) * total
        which = np.searchsorted(cum, u, side="right")
        which = np.minimum(which, len(segs) - 1)
        local = (u - (cum[which] - masses[which])) / masses[which]
        out = np.empty(n)
        for k, (p, a, b) in enumerate(segs):
            sel = which == k
            if np.any(sel):
                out[sel] = p.sample(local[sel], a, b)
        return out

    def restrict(self, region: Region) -> "DensityMeasure":
        segs = self._segments(region)
        return DensityMeasure([
            DensityPiece(a, b, p.density, p.mass_between, p.inverse_cdf,
                         singular_lo=p.singular_lo and a <= p.lo)
            for p, a, b in segs
        ])
