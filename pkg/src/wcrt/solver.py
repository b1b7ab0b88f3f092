"""Minimal nonrespondent counts that reverse a test result.

Two problem families are covered: the single-sample t-test on a mean and the
Fisher-z test of a correlation against zero. For each, the forward problem asks
for the smallest integer count ``n2`` of hypothetical nonrespondents with a
given effect size that flips the test decision, and the inverse problem (for
correlations) asks for the nonresponse effect size that sits exactly on the
decision boundary at a fixed ``n2``.

The continuous answer comes from a damped fixed-point iteration (t-test) or a
bisection over the combined Fisher z (correlation). Because the combined
statistic is not monotone in ``n2`` in general, the integer answer is then
certified by a pruned search that bounds the statistic on whole ranges of
``n2`` through the real roots of a polynomial level-set equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Optional, Union

import numpy as np
from numpy.polynomial import Polynomial

from .errors import DomainError
from .stats import (
    EffectSize,
    SampleSummary,
    corr_z_statistic,
    fisher_z,
    normal_quantile,
    nonresponse_mean,
    pooled_stats,
    student_t_quantile,
    t_statistic,
)

FAMILIES = ("mean_single_sample", "correlation")

_t_quantile = lru_cache(maxsize=1 << 16)(student_t_quantile)
TAILS = ("upper", "lower", "two")


@dataclass(frozen=True)
class TestSpec:
    """The hypothesis test being defended."""

    __test__ = False  # keep pytest from collecting this class

    family: str
    tail: str = "two"
    alpha: float = 0.05
    mu0: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown test family {self.family!r}")
        if self.tail not in TAILS:
            raise DomainError(f"tail must be one of {TAILS}, got {self.tail!r}")
        if not 0 < self.alpha <= 0.5:
            raise DomainError(f"alpha must lie in (0, 0.5], got {self.alpha}")

    def critical_value(self, df: Optional[float] = None) -> float:
        """Positive magnitude of the critical value (t* or z*)."""
        q = 1.0 - self.alpha / 2 if self.tail == "two" else 1.0 - self.alpha
        if self.family == "correlation":
            return normal_quantile(q)
        if df is None:
            raise DomainError("a t critical value needs degrees of freedom")
        return _t_quantile(q, df)


@dataclass(frozen=True)
class Scenario:
    id: int
    direction: str
    observed: str
    goal: str
    epsilon_sign: str
    bound_side: str


SCENARIOS = {
    1: Scenario(1, "upper", "significant", "make non-significant", ">= 0", "upper"),
    2: Scenario(2, "upper", "non-significant", "make significant", "< 0", "lower"),
    3: Scenario(3, "lower", "significant", "make non-significant", "<= 0", "lower"),
    4: Scenario(4, "lower", "non-significant", "make significant", "> 0", "upper"),
}


def _direction(spec: TestSpec, observed: float) -> str:
    if spec.tail != "two":
        return spec.tail
    if observed == 0:
        raise DomainError("observed statistic is exactly 0; direction of a two-tailed test is ambiguous")
    return "upper" if observed > 0 else "lower"


def is_significant(direction: str, stat: float, crit: float) -> bool:
    return stat > crit if direction == "upper" else stat < -crit


def classify_scenario(spec: TestSpec, observed_statistic: float, df: Optional[float] = None) -> Scenario:
    """Pick the row of the scenario table that applies to an observed result.

    ``df`` is required for the mean family (respondent-only degrees of freedom).
    """
    direction = _direction(spec, observed_statistic)
    crit = spec.critical_value(df)
    significant = is_significant(direction, observed_statistic, crit)
    if direction == "upper":
        return SCENARIOS[1 if significant else 2]
    return SCENARIOS[3 if significant else 4]


def goal_met(scenario: Scenario, stat: float, crit: float) -> bool:
    """Whether the combined statistic has reached the opposite decision."""
    if scenario.id == 1:
        return stat <= crit
    if scenario.id == 2:
        return stat > crit
    if scenario.id == 3:
        return stat >= -crit
    return stat < -crit


@dataclass(frozen=True)
class SolverConfig:
    delta: float = 1e-6
    max_iterations: int = 10_000
    theta: float = 0.0
    n2_cap: int = 10 ** 9

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError(f"delta must be positive, got {self.delta}")
        if not 0 <= self.theta <= 1:
            raise DomainError(f"theta must lie in [0, 1], got {self.theta}")
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be >= 1")
        if self.n2_cap < 1:
            raise DomainError("n2_cap must be >= 1")


# ---------------------------------------------------------------------------
# Problems
# ---------------------------------------------------------------------------

class _Problem:
    """Shared behaviour; subclasses define the statistic and its level set."""

    start = 1  # smallest admissible n2

    def statistic(self, n2: float) -> float:
        raise NotImplementedError

    def critical(self, n2: float) -> float:
        raise NotImplementedError

    def level_polynomial(self, level: float) -> Polynomial:
        """Polynomial in n2 whose real roots contain every n2 where |stat| == level."""
        raise NotImplementedError

    def holds(self, n2: int) -> bool:
        return goal_met(self.scenario, self.statistic(n2), self.critical(n2))


@dataclass(frozen=True)
class TTestProblem(_Problem):
    response: SampleSummary
    spec: TestSpec
    d2: float
    s2: float
    scenario: Scenario = field(init=False)

    start = 1

    def __post_init__(self):
        t1 = t_statistic(self.response, self.spec.mu0)
        object.__setattr__(self, "scenario", classify_scenario(self.spec, t1, self.response.n - 1))

    @property
    def mean2(self) -> float:
        return nonresponse_mean(self.d2, self.s2, self.spec.mu0)

    def statistic(self, n2):
        r = self.response
        if n2 == 0:
            return t_statistic(r, self.spec.mu0)
        mean_c, sd_c = pooled_stats(r.n, r.mean, r.sd, n2, self.mean2, self.s2)
        if sd_c == 0:
            return math.copysign(math.inf, mean_c - self.spec.mu0) if mean_c != self.spec.mu0 else 0.0
        return (mean_c - self.spec.mu0) / (sd_c / math.sqrt(r.n + n2))

    def critical(self, n2):
        return self.spec.critical_value(self.response.n + n2 - 1)

    def level_polynomial(self, level):
        # stat^2 = (N - 1) num^2 / D with N = n1 + x, so stat = +-level solves
        # (N - 1) num^2 - level^2 D = 0.
        r = self.response
        n1 = r.n
        a = r.mean - self.spec.mu0
        b = self.mean2 - self.spec.mu0
        num = Polynomial([n1 * a, b])
        n_minus_1 = Polynomial([n1 - 1, 1])
        d = (Polynomial([n1, 1]) * Polynomial([(n1 - 1) * r.sd ** 2 - self.s2 ** 2, self.s2 ** 2])
             + Polynomial([0.0, n1 * (a - b) ** 2]))
        return n_minus_1 * num ** 2 - level ** 2 * d


@dataclass(frozen=True)
class CorrProblem(_Problem):
    r1: float
    n1: int
    r2: float
    spec: TestSpec
    scenario: Scenario = field(init=False)

    start = 4

    def __post_init__(self):
        if self.n1 < 4:
            raise DomainError(f"correlation test needs n1 >= 4, got {self.n1}")
        fisher_z(self.r2)
        object.__setattr__(self, "scenario", classify_scenario(self.spec, corr_z_statistic(self.r1, self.n1)))

    @property
    def zr1(self) -> float:
        return math.atanh(self.r1)

    @property
    def zr2(self) -> float:
        return math.atanh(self.r2)

    def statistic(self, n2):
        # n2 == 3 gives the nonresponse block zero weight: the respondent-only statistic.
        total = self.n1 + n2 - 6
        return ((self.n1 - 3) * self.zr1 + (n2 - 3) * self.zr2) / math.sqrt(total)

    def critical(self, n2):
        return self.spec.critical_value()

    def level_polynomial(self, level):
        num = Polynomial([(self.n1 - 3) * self.zr1 - 3 * self.zr2, self.zr2])
        return num ** 2 - level ** 2 * Polynomial([self.n1 - 6, 1])

    def n2_from_combined_z(self, zc: float) -> float:
        """Continuous n2 at which the weighted Fisher z equals ``zc``."""
        n1, z1, z2 = self.n1, self.zr1, self.zr2
        return ((n1 - 3) * z1 - 3 * z2 - zc * (n1 - 6)) / (zc - z2)


Problem = Union[TTestProblem, CorrProblem]


@dataclass(frozen=True)
class WcrtResult:
    status: str  # "finite" | "infinite" | "non_converged"
    n2: Optional[int]
    stat_at_n2: Optional[float]
    stat_at_n2_minus_1: Optional[float]
    critical_value: float
    scenario: Scenario
    problem: Problem = field(repr=False, compare=False)
    continuous_n2: Optional[float] = None
    method: str = ""
    iterations: int = 0
    note: str = ""

    @property
    def finite(self) -> bool:
        return self.status == "finite"


# ---------------------------------------------------------------------------
# Integer search
# ---------------------------------------------------------------------------

class _BudgetExceeded(Exception):
    pass


class _Locator:
    """Finds the smallest integer n2 in a range at which the goal holds.

    Over a range [lo, hi] the critical value is bounded by its values at the
    end points (it is monotone in n2). Replacing it by the least favourable
    bound gives a necessary condition whose solution set on the reals is
    delimited by roots of ``level_polynomial``; ranges where even that relaxed
    condition fails are skipped whole.
    """

    LINEAR = 32

    def __init__(self, problem: _Problem, budget: int):
        self.problem = problem
        self.budget = budget
        self.steps = 0
        self.orient = 1.0 if problem.scenario.direction == "upper" else -1.0
        self.drop = problem.scenario.observed == "significant"

    def _tick(self, k=1):
        self.steps += k
        if self.steps > self.budget:
            raise _BudgetExceeded

    def _relaxed(self, x: float, level: float) -> bool:
        stat = self.orient * self.problem.statistic(x)
        return stat <= level if self.drop else stat > level

    def possible(self, lo: int, hi: int) -> bool:
        self._tick()
        c_lo, c_hi = self.problem.critical(lo), self.problem.critical(hi)
        if self.drop:
            level = max(c_lo, c_hi) * (1 + 1e-9) + 1e-12
        else:
            level = min(c_lo, c_hi) * (1 - 1e-9) - 1e-12
        points = {float(lo), float(hi)}
        roots = _real_roots(self.problem.level_polynomial(level), hi + 2)
        if roots is None:
            return True  # cannot prune; let the caller subdivide
        for x in roots:
            if lo - 2 <= x <= hi + 2:
                for k in (math.floor(x) - 1, math.floor(x), math.ceil(x), math.ceil(x) + 1):
                    if lo <= k <= hi:
                        points.add(float(k))
                if lo < x < hi:
                    points.add(x)
        ordered = sorted(points)
        probes = ordered + [0.5 * (u + v) for u, v in zip(ordered, ordered[1:])]
        return any(self._relaxed(x, level) for x in probes)

    def _scan(self, lo: int, hi: int) -> Optional[int]:
        if not self.possible(lo, hi):
            return None
        if hi - lo < self.LINEAR:
            for n in range(lo, hi + 1):
                self._tick()
                if self.problem.holds(n):
                    return n
            return None
        mid = (lo + hi) // 2
        found = self._scan(lo, mid)
        return found if found is not None else self._scan(mid + 1, hi)

    def first(self, lo: int, hi: int) -> Optional[int]:
        """Smallest n in [lo, hi] where the goal holds, scanning doubling blocks."""
        block_lo = lo
        while block_lo <= hi:
            block_hi = min(hi, max(2 * block_lo - 1, block_lo))
            found = self._scan(block_lo, block_hi)
            if found is not None:
                return found
            block_lo = block_hi + 1
        return None


def _real_roots(poly: Polynomial, reach: float):
    """Real roots of ``poly`` relevant on [0, reach], or None if they cannot be trusted.

    Terms whose size over that range is negligible next to the others are
    dropped first, so a vanishing leading coefficient does not send the
    companion-matrix eigenvalues to infinity.
    """
    coef = np.asarray(poly.coef, dtype=float)
    if not np.all(np.isfinite(coef)):
        return None
    scale = np.abs(coef) * np.maximum(reach, 1.0) ** np.arange(coef.size)
    if not scale.max() > 0:
        return []
    keep = np.flatnonzero(scale > 1e-13 * scale.max())
    coef = coef[: keep[-1] + 1]
    if coef.size < 2:
        return []
    try:
        with np.errstate(all="ignore"):
            roots = Polynomial(coef).roots()
    except np.linalg.LinAlgError:
        return None
    return [float(z.real) for z in roots
            if np.isfinite(z) and abs(z.imag) <= 1e-7 * (1 + abs(z.real))]


def _integer_candidates(n_float: float, start: int, cap: int):
    lo = math.floor(n_float)
    hi = math.ceil(n_float)
    cands = sorted({lo - 1, lo, hi, hi + 1})
    return [c for c in cands if start <= c <= cap]


def _finish(problem: _Problem, estimate: Optional[float], method: str, iterations: int,
            config: SolverConfig) -> WcrtResult:
    """Integerize a continuous estimate and certify that it is the minimal flip."""
    cap = config.n2_cap
    start = problem.start
    locator = _Locator(problem, config.max_iterations)
    candidate = None
    if estimate is not None and math.isfinite(estimate):
        for c in _integer_candidates(estimate, start, cap):
            if problem.holds(c) and not problem.holds(c - 1):
                candidate = c
                break
    try:
        if candidate is not None:
            earlier = locator.first(start, candidate - 1) if candidate > start else None
            if earlier is not None:
                candidate, method = earlier, "search"
        else:
            candidate = locator.first(start, cap)
            method = "search"
    except _BudgetExceeded:
        return WcrtResult("non_converged", None, None, None,
                          problem.critical(start - 1), problem.scenario, problem,
                          continuous_n2=estimate, method=method,
                          iterations=iterations + locator.steps,
                          note="iteration cap reached before the integer answer was certified")

    steps = iterations + locator.steps
    if candidate is None:
        return WcrtResult("infinite", None, None, None, problem.critical(start - 1),
                          problem.scenario, problem, continuous_n2=estimate, method=method,
                          iterations=steps, note=f"no reversal for n2 <= {cap}")
    return WcrtResult("finite", candidate, problem.statistic(candidate),
                      problem.statistic(candidate - 1), problem.critical(candidate),
                      problem.scenario, problem, continuous_n2=estimate, method=method,
                      iterations=steps)


# Fixed-point steps allowed without halving the best |nOpt - nCalc| gap.
STALL_LIMIT = 50


def _fixed_point_n2(problem: TTestProblem, config: SolverConfig):
    """Damped fixed-point iteration on the closed-form n2 of the t-test.

    Starts from n2 = n1, recomputes the pooled mean, pooled sd and t* at the
    current n2, and averages the current and recomputed n2 until they agree to
    within ``delta``. Returns (estimate or None, iterations).
    """
    r = problem.response
    mu0 = problem.spec.mu0
    m2 = problem.mean2
    n_opt = float(r.n)
    best_gap, since_best = math.inf, 0
    for it in range(1, config.max_iterations + 1):
        mean_c, sd_c = pooled_stats(r.n, r.mean, r.sd, n_opt, m2, problem.s2)
        diff = mean_c - mu0
        if diff == 0:
            return None, it
        t_crit = problem.critical(n_opt)
        n_calc = (sd_c * t_crit / diff) ** 2 - r.n
        gap = abs(n_opt - n_calc)
        if gap < config.delta:
            return n_calc, it
        if gap < 0.5 * best_gap:
            best_gap, since_best = gap, 0
        else:
            since_best += 1
            if since_best > STALL_LIMIT:
                return None, it
        n_opt = 0.5 * (n_opt + n_calc)
        if not (n_opt >= 1 and math.isfinite(n_opt)) or n_opt > 10 * config.n2_cap:
            return None, it
    return None, config.max_iterations


def _bisect_corr(problem: CorrProblem, config: SolverConfig):
    """Bisection over the combined Fisher z between zr1 and zr2.

    The combined z at n2 = 3 equals zr1 and tends to zr2 as n2 grows, so each
    candidate combined z maps to a unique continuous n2. The bracket is kept
    with the "decision unchanged" end on one side and the "decision reversed"
    end on the other. Returns (estimate or None, iterations).
    """
    z1, z2 = problem.zr1, problem.zr2
    if z1 == z2:
        return None, 0
    crit = problem.critical(0)

    def n2_at(zc):
        # Rounding can push zc onto or past zr2 when r1 and r2 nearly coincide.
        try:
            n2 = problem.n2_from_combined_z(zc)
        except ZeroDivisionError:
            return float(config.n2_cap)
        if not math.isfinite(n2) or n2 > config.n2_cap:
            return float(config.n2_cap)
        return max(n2, 3.0)

    def reversed_at(zc):
        return goal_met(problem.scenario, problem.statistic(n2_at(zc)), crit)

    near, far = z1, z2
    # Probe the far end at the largest admissible n2.
    far_probe = (problem.n1 - 3) * z1 + (config.n2_cap - 3) * z2
    far_probe /= problem.n1 + config.n2_cap - 6
    if not reversed_at(far_probe):
        return None, 0
    far = far_probe
    it = 0
    while abs(far - near) >= config.delta and it < config.max_iterations:
        it += 1
        mid = 0.5 * (near + far)
        if mid in (near, far):
            break
        if reversed_at(mid):
            far = mid
        else:
            near = mid
    return n2_at(far), it


# ---------------------------------------------------------------------------
# Public solvers
# ---------------------------------------------------------------------------

def _as_float_effect(effect, kind):
    if isinstance(effect, EffectSize):
        if effect.kind != kind:
            raise DomainError(f"expected a {kind} effect size, got {effect.kind}")
        return effect.value
    return float(effect)


def solve_ttest_n2(response: SampleSummary, spec: TestSpec, d2, s2: Optional[float] = None,
                   config: SolverConfig = SolverConfig()) -> WcrtResult:
    """Smallest number of nonrespondents with effect size ``d2`` that flips a one-sample t-test."""
    if spec.family != "mean_single_sample":
        raise DomainError("solve_ttest_n2 needs a mean_single_sample TestSpec")
    d2 = _as_float_effect(d2, "cohen_d")
    s1 = response.sd
    if s2 is None:
        s2 = s1
    lo, hi = (1 - config.theta) * s1, (1 + config.theta) * s1
    tol = 1e-12 * s1
    if not (s2 > 0 and lo - tol <= s2 <= hi + tol):
        raise DomainError(f"s2={s2} outside the allowed band [{lo}, {hi}] for theta={config.theta}")
    problem = TTestProblem(response, spec, d2, float(s2))
    estimate, iters = _fixed_point_n2(problem, config)
    return _finish(problem, estimate, "fixed_point", iters, config)


def solve_corr_n2(r1: float, n1: int, r2, spec: TestSpec,
                  config: SolverConfig = SolverConfig()) -> WcrtResult:
    """Smallest number of nonrespondents with correlation ``r2`` that flips a correlation test."""
    if spec.family != "correlation":
        raise DomainError("solve_corr_n2 needs a correlation TestSpec")
    r2 = _as_float_effect(r2, "pearson_r")
    problem = CorrProblem(float(r1), int(n1), float(r2), spec)
    estimate, iters = _bisect_corr(problem, config)
    return _finish(problem, estimate, "bisection", iters, config)


def verify_flip_boundary(result: WcrtResult, problem: Optional[Problem] = None) -> bool:
    """True iff the decision is reversed at ``result.n2`` but not at ``n2 - 1``."""
    problem = problem if problem is not None else result.problem
    if result.status != "finite" or result.n2 is None:
        return False
    n2 = result.n2
    if n2 < problem.start:
        return False
    return problem.holds(n2) and not problem.holds(n2 - 1)


class Threshold(NamedTuple):
    r: float
    zr: float
    saturated: bool
    scenario: Scenario


def inverse_corr_threshold(r1: float, n1: int, n2: int, spec: TestSpec) -> Threshold:
    """Nonresponse correlation at which the combined test sits exactly on its critical value.

    Any nonresponse correlation beyond this value (below it for a positive
    observed direction, above it for a negative one) reverses the decision at
    this ``n2``. ``saturated`` marks thresholds that fall outside (-1, 1).
    """
    if spec.family != "correlation":
        raise DomainError("inverse_corr_threshold needs a correlation TestSpec")
    if n1 < 4 or n2 < 4:
        raise DomainError(f"need n1 >= 4 and n2 >= 4, got {n1} and {n2}")
    zr1 = fisher_z(r1).value
    scenario = classify_scenario(spec, zr1 * math.sqrt(n1 - 3))
    sign = 1.0 if scenario.direction == "upper" else -1.0
    total = n1 + n2 - 6
    zc_star = sign * spec.critical_value() / math.sqrt(total)
    zr2 = (zc_star * total - (n1 - 3) * zr1) / (n2 - 3)
    r = math.tanh(zr2)
    saturated = abs(r) >= 1.0 - 1e-12
    if saturated:
        r = math.copysign(1.0, zr2)
    return Threshold(r, zr2, saturated, scenario)
