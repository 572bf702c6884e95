"""Analytic reference distributions and the 3-sigma checks used on Monte Carlo output."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _st

SIGMAS = 3.0
# two-sided tail mass beyond 3 sigma of a normal
THREE_SIGMA_PVALUE = 2 * _st.norm.sf(SIGMAS)


@dataclass(frozen=True)
class Band:
    """Observed value against an expected value with tolerance ``tol``."""

    observed: float
    expected: float
    tol: float

    @property
    def passed(self) -> bool:
        return abs(self.observed - self.expected) <= self.tol

    def as_dict(self) -> dict:
        return {"observed": self.observed, "expected": self.expected,
                "tolerance": self.tol, "passed": self.passed}


def binomial_band(successes: int, n: int, p: float) -> Band:
    sigma = math.sqrt(p * (1 - p) / n)
    return Band(successes / n, p, SIGMAS * sigma)


def geometric_pmf(k: int, p: float) -> float:
    return (1 - p) ** (k - 1) * p


def geometric_mean_band(mean: float, n: int, p: float) -> Band:
    """Sample mean of ``n`` geometric(p) draws against ``1/p``."""
    sigma = math.sqrt(1 - p) / p / math.sqrt(n)
    return Band(mean, 1 / p, SIGMAS * sigma)


def chi_square_uniform(counts) -> float:
    """p-value of a chi-square goodness-of-fit test against uniform counts."""
    return float(_st.chisquare(np.asarray(counts, dtype=float)).pvalue)


def chi_square_independence(table) -> float:
    """p-value of a contingency test that rows share one distribution."""
    return float(_st.chi2_contingency(np.asarray(table, dtype=float))[1])


def linear_fit(xs, ys) -> tuple[float, float, float]:
    """Least-squares line; returns (slope, intercept, R^2)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2
