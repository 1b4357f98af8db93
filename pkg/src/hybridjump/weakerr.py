"""Statistical harness: weak-error estimates, rate fits, distribution tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .errors import DegenerateFit, EmptySample


@dataclass(frozen=True)
class WeakErrorRow:
    param: float
    estimate: float
    ci_low: float
    ci_high: float
    se: float
    n_a: int
    n_b: int


@dataclass
class WeakErrorReport:
    """Per-parameter weak errors plus a fitted log-log convergence rate."""

    rows: list[WeakErrorRow] = field(default_factory=list)
    slope: Optional[float] = None
    slope_stderr: Optional[float] = None
    r_squared: Optional[float] = None
    level: float = 0.99
    meta: dict = field(default_factory=dict)

    def fit(self):
        params = np.array([r.param for r in self.rows])
        errs = np.array([r.estimate for r in self.rows])
        keep = errs > 0
        self.slope, self.slope_stderr, self.r_squared = fit_rate(params[keep], errs[keep])
        return self

    def csv_rows(self):
        for r in self.rows:
            yield [r.param, r.estimate, r.ci_low, r.ci_high, r.n_a + r.n_b,
                   self.slope if self.slope is not None else float("nan")]


def weak_error(samples_a, samples_b, level: float = 0.99) -> tuple[float, tuple[float, float]]:
    """|mean(A) - mean(B)| with a normal-approximation CI at the given level.

    The CI is the two-sided interval for the absolute difference, clipped at 0,
    so it always contains the point estimate.
    """
    a = np.asarray(samples_a, dtype=float)
    b = np.asarray(samples_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise EmptySample("weak_error needs two nonempty sample arrays")
    diff = abs(float(a.mean()) - float(b.mean()))
    va = a.var(ddof=1) / a.size if a.size > 1 else 0.0
    vb = b.var(ddof=1) / b.size if b.size > 1 else 0.0
    se = math.sqrt(va + vb)
    z = stats.norm.ppf(0.5 + level / 2.0)
    return diff, (max(0.0, diff - z * se), diff + z * se)


def weak_error_row(param, samples_a, samples_b, level: float = 0.99) -> WeakErrorRow:
    est, (lo, hi) = weak_error(samples_a, samples_b, level)
    a = np.asarray(samples_a, dtype=float)
    b = np.asarray(samples_b, dtype=float)
    va = a.var(ddof=1) / a.size if a.size > 1 else 0.0
    vb = b.var(ddof=1) / b.size if b.size > 1 else 0.0
    return WeakErrorRow(float(param), est, lo, hi, math.sqrt(va + vb), a.size, b.size)


def fit_rate(params, errors) -> tuple[float, float, float]:
    """Least-squares slope of ln(error) on ln(param), with stderr and R^2."""
    p = np.asarray(params, dtype=float)
    e = np.asarray(errors, dtype=float)
    if p.size < 3:
        raise DegenerateFit("rate fit needs at least 3 points")
    if np.any(p <= 0) or np.any(e <= 0):
        raise DegenerateFit("rate fit needs positive params and errors")
    if np.unique(p).size < p.size:
        raise DegenerateFit("params must be distinct")
    lx, ly = np.log(p), np.log(e)
    n = lx.size
    mx, my = lx.mean(), ly.mean()
    sxx = float(((lx - mx) ** 2).sum())
    sxy = float(((lx - mx) * (ly - my)).sum())
    slope = sxy / sxx
    intercept = my - slope * mx
    resid = ly - (intercept + slope * lx)
    ss_res = float((resid ** 2).sum())
    ss_tot = float(((ly - my) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    stderr = math.sqrt(ss_res / (n - 2) / sxx) if n > 2 else 0.0
    return slope, stderr, r2


@dataclass(frozen=True)
class TestResult:
    name: str
    statistic: float
    pvalue: float


def ks_two_sample(samples_a, samples_b) -> TestResult:
    """Two-sample Kolmogorov-Smirnov with the asymptotic p-value."""
    a = np.asarray(samples_a, dtype=float)
    b = np.asarray(samples_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise EmptySample("KS test needs two nonempty sample arrays")
    if a.size == b.size and np.array_equal(np.sort(a), np.sort(b)):
        return TestResult("ks_two_sample", 0.0, 1.0)
    res = stats.ks_2samp(a, b, method="asymp")
    return TestResult("ks_two_sample", float(res.statistic), float(res.pvalue))


def chisquare_poisson(counts, lam: float, min_expected: float = 5.0) -> TestResult:
    """Chi-square goodness of fit of integer counts against Poisson(lam).

    Bins are single values with the two tails lumped so that every expected
    count is at least ``min_expected``.
    """
    counts = np.asarray(counts, dtype=int)
    if counts.size == 0:
        raise EmptySample("chi-square test needs counts")
    n = counts.size
    kmax = int(counts.max())
    ks = np.arange(kmax + 1)
    pk = stats.poisson.pmf(ks, lam)
    # lump from both ends until expected >= min_expected
    lo = 0
    while lo < kmax and n * pk[: lo + 1].sum() < min_expected:
        lo += 1
    hi = kmax
    while hi > lo and n * (1.0 - pk[:hi].sum()) < min_expected:
        hi -= 1
    edges = list(range(lo, hi + 1))
    obs, exp = [], []
    obs.append(int((counts <= lo).sum()))
    exp.append(n * pk[: lo + 1].sum())
    for k in edges[1:]:
        obs.append(int((counts == k).sum()))
        exp.append(n * pk[k])
    obs.append(int((counts > hi).sum()))
    exp.append(n * (1.0 - pk[: hi + 1].sum()))
    obs_a = np.array(obs, dtype=float)
    exp_a = np.array(exp, dtype=float)
    exp_a *= obs_a.sum() / exp_a.sum()
    res = stats.chisquare(obs_a, exp_a)
    return TestResult("chisquare_poisson", float(res.statistic), float(res.pvalue))


def moments_agree(samples_a, samples_b, orders=(1, 2, 3, 4), n_se: float = 3.0) -> bool:
    """True if raw moments up to order 4 match within n_se combined standard errors."""
    a = np.asarray(samples_a, dtype=float)
    b = np.asarray(samples_b, dtype=float)
    for k in orders:
        pa, pb = a ** k, b ** k
        se = math.sqrt(pa.var(ddof=1) / pa.size + pb.var(ddof=1) / pb.size)
        if abs(pa.mean() - pb.mean()) > n_se * se:
            return False
    return True
