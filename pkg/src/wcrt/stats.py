"""Distribution quantiles, effect sizes, pooling and Fisher-z machinery.

Everything here is a pure function of its arguments. Standard deviations use
the n - 1 denominator throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Sequence

import numpy as np
from scipy.special import betainc

from .errors import DegenerateInputError, DomainError

_STD_NORMAL = NormalDist()

# Clamp used when ingesting correlations that were truncated to +-1.
CLAMP_EPS = 1e-12


@dataclass(frozen=True)
class SampleSummary:
    """Sufficient statistics (n, mean, sd) of a sample used in a mean test."""

    n: int
    mean: float
    sd: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"sample size must be an integer >= 2, got {self.n}")
        if not math.isfinite(self.mean):
            raise DomainError(f"mean must be finite, got {self.mean}")
        if not (self.sd > 0 and math.isfinite(self.sd)):
            raise DomainError(f"sd must be positive and finite, got {self.sd}")

    @classmethod
    def from_data(cls, values: Sequence[float]) -> "SampleSummary":
        x = np.asarray(values, dtype=float)
        if x.ndim != 1 or x.size < 2:
            raise DomainError("need a 1-d sample with at least 2 values")
        sd = float(np.std(x, ddof=1))
        if sd == 0:
            raise DegenerateInputError("sample has zero variance")
        return cls(int(x.size), float(np.mean(x)), sd)


@dataclass(frozen=True)
class EffectSize:
    kind: str  # "cohen_d" or "pearson_r"
    value: float

    def __post_init__(self):
        if self.kind not in ("cohen_d", "pearson_r"):
            raise DomainError(f"unknown effect size kind {self.kind!r}")
        if not math.isfinite(self.value):
            raise DomainError("effect size must be finite")
        if self.kind == "pearson_r" and not -1 < self.value < 1:
            raise DomainError(f"correlation effect size must lie in (-1, 1), got {self.value}")

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class FisherZ:
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise DomainError("Fisher z value must be finite")

    @property
    def r(self) -> float:
        return inverse_fisher_z(self.value)

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class CombinedSummary:
    mean_c: float
    sd_c: float
    n_total: int


# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------

def _check_probability(p):
    if not (0 < p < 1):
        raise DomainError(f"probability must lie in (0, 1), got {p}")


def normal_cdf(x: float) -> float:
    return _STD_NORMAL.cdf(x)


def normal_quantile(p: float) -> float:
    """Standard normal quantile (inverse CDF)."""
    _check_probability(p)
    return _STD_NORMAL.inv_cdf(p)


def _t_upper_tail(x: float, df: float) -> float:
    # P(T > x) for x >= 0, via the regularized incomplete beta function.
    return 0.5 * float(betainc(0.5 * df, 0.5, df / (df + x * x)))


def _t_pdf(x: float, df: float) -> float:
    log_c = (math.lgamma(0.5 * (df + 1)) - math.lgamma(0.5 * df)
             - 0.5 * math.log(df * math.pi))
    return math.exp(log_c - 0.5 * (df + 1) * math.log1p(x * x / df))


def student_t_cdf(x: float, df: float) -> float:
    if df <= 0:
        raise DomainError(f"degrees of freedom must be positive, got {df}")
    if x == 0:
        return 0.5
    tail = _t_upper_tail(abs(x), df)
    return 1.0 - tail if x > 0 else tail


def student_t_quantile(p: float, df: float) -> float:
    """Quantile of Student's t distribution.

    Inverts the incomplete-beta tail probability with Newton steps that fall
    back to bisection whenever a step leaves the current bracket.
    """
    _check_probability(p)
    if not df > 0 or math.isnan(df):
        raise DomainError(f"degrees of freedom must be positive, got {df}")
    if p == 0.5:
        return 0.0
    q = min(p, 1.0 - p)
    sign = 1.0 if p > 0.5 else -1.0
    if math.isinf(df):
        return sign * -normal_quantile(q)

    # Bracket [lo, hi] with tail(lo) >= q > tail(hi).
    lo, hi = 0.0, 1.0
    while _t_upper_tail(hi, df) >= q:
        lo, hi = hi, hi * 2.0
        if hi > 1e300:
            raise DomainError(f"t quantile overflow for p={p}, df={df}")

    # Normal start with a one-term Cornish-Fisher correction.
    z = -normal_quantile(q)
    x = z + (z ** 3 + z) / (4.0 * df)
    if not lo < x < hi:
        x = 0.5 * (lo + hi)

    for _ in range(200):
        f = _t_upper_tail(x, df) - q
        if f > 0:
            lo = x
        else:
            hi = x
        if f == 0:
            break
        step = f / _t_pdf(x, df)  # tail' = -pdf
        x_new = x + step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-15 * max(1.0, abs(x)):
            x = x_new
            break
        x = x_new
    return sign * x


# ---------------------------------------------------------------------------
# Mean-test algebra
# ---------------------------------------------------------------------------

def cohen_d(summary: SampleSummary, mu0: float) -> EffectSize:
    return EffectSize("cohen_d", (summary.mean - mu0) / summary.sd)


def t_statistic(summary: SampleSummary, mu0: float) -> float:
    return (summary.mean - mu0) / (summary.sd / math.sqrt(summary.n))


def nonresponse_mean(d2, s2: float, mu0: float) -> float:
    """Mean implied for nonrespondents with effect size ``d2`` and sd ``s2``."""
    if not s2 > 0:
        raise DomainError(f"nonresponse sd must be positive, got {s2}")
    return float(d2) * s2 + mu0


def pooled_stats(n1, mean1, sd1, n2, mean2, sd2):
    """Mean and sd of two concatenated samples given only their summaries.

    ``n2`` may be 1, in which case ``sd2`` does not contribute. The between-group
    term uses (mean1 - mean2)^2 and the total uses the n - 1 denominator, so the
    result is the exact sd of the concatenation.
    """
    n = n1 + n2
    mean_c = (n1 * mean1 + n2 * mean2) / n
    ss = ((n1 - 1) * sd1 ** 2 + (n2 - 1) * sd2 ** 2
          + n1 * n2 / n * (mean1 - mean2) ** 2)
    return mean_c, math.sqrt(max(ss, 0.0) / (n - 1))


def combine(sample1: SampleSummary, sample2: SampleSummary) -> CombinedSummary:
    mean_c, sd_c = pooled_stats(sample1.n, sample1.mean, sample1.sd,
                                sample2.n, sample2.mean, sample2.sd)
    return CombinedSummary(mean_c, sd_c, sample1.n + sample2.n)


# ---------------------------------------------------------------------------
# Correlations
# ---------------------------------------------------------------------------

def _check_r(r, clamp):
    r = float(r)
    if math.isnan(r):
        raise DomainError("correlation is NaN")
    if clamp:
        r = min(max(r, -1.0 + CLAMP_EPS), 1.0 - CLAMP_EPS)
    if not -1 < r < 1:
        raise DomainError(f"correlation must lie strictly inside (-1, 1), got {r}")
    return r


def fisher_z(r: float, clamp: bool = False) -> FisherZ:
    """Fisher's variance-stabilising transform atanh(r).

    With ``clamp=True`` values at or beyond +-1 are pulled in to
    +-(1 - 1e-12) instead of being rejected.
    """
    return FisherZ(math.atanh(_check_r(r, clamp)))


def inverse_fisher_z(z: float) -> float:
    return math.tanh(float(z))


def corr_z_statistic(r: float, n: int) -> float:
    if n < 4:
        raise DomainError(f"correlation test needs n >= 4, got {n}")
    return fisher_z(r).value * math.sqrt(n - 3)


def combined_fisher_z(zr1, n1: int, zr2, n2: int):
    """Inverse-variance weighted mean of two Fisher z values and its SE."""
    if n1 < 4 or n2 < 4:
        raise DomainError(f"both sample sizes must be >= 4, got {n1} and {n2}")
    total = n1 + n2 - 6
    zc = ((n1 - 3) * float(zr1) + (n2 - 3) * float(zr2)) / total
    return FisherZ(zc), math.sqrt(1.0 / total)


def pearson_r(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("x and y must be 1-d vectors of equal length")
    if x.size < 3:
        raise DomainError("need at least 3 paired observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise DegenerateInputError("correlation undefined for a zero-variance vector")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def cronbach_alpha(items) -> float:
    """Cronbach's alpha for a respondents x items matrix."""
    x = np.asarray(items, dtype=float)
    if x.ndim != 2:
        raise DomainError("items must be a 2-d array (respondents x items)")
    m, k = x.shape
    if k < 2 or m < 3:
        raise DomainError(f"need >= 2 items and >= 3 respondents, got {k} and {m}")
    total_var = float(np.var(x.sum(axis=1), ddof=1))
    if total_var == 0:
        raise DegenerateInputError("total score has zero variance")
    item_var = float(np.var(x, axis=0, ddof=1).sum())
    return k / (k - 1) * (1.0 - item_var / total_var)
