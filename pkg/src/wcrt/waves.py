"""Early/late response waves and linear extrapolation to a nonresponse wave."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from .errors import DegenerateInputError, DomainError
from .stats import pearson_r


@dataclass(frozen=True)
class WaveSplit:
    wave1: np.ndarray
    wave2: np.ndarray

    @property
    def n1(self) -> int:
        return len(self.wave1)

    @property
    def n2(self) -> int:
        return len(self.wave2)


@dataclass(frozen=True)
class M3Estimate:
    n3: float
    estimate: float
    truncated: bool
    raw: float


@dataclass(frozen=True)
class WaveEstimates:
    statistic_kind: str  # "mean" | "correlation"
    x1: float
    x2: float
    n1: float
    n2: float
    m1: float
    m2: float
    m3_by_n3: Tuple[M3Estimate, ...] = field(default_factory=tuple)
    m2_truncated: bool = False

    def m3(self, n3) -> M3Estimate:
        for e in self.m3_by_n3:
            if e.n3 == n3:
                return e
        raise KeyError(f"no M3 estimate for n3={n3}")


def split_waves(observations: Sequence, fraction: float = 0.5) -> WaveSplit:
    """Split ordered observations into an early and a late wave.

    The early wave takes the first ceil(fraction * n) observations, so odd
    counts put the extra observation in the early wave. Rows of a 2-d array are
    treated as observations.
    """
    obs = np.asarray(observations)
    n = len(obs)
    if n < 4:
        raise DomainError(f"need at least 4 observations to form waves, got {n}")
    if not 0 < fraction < 1:
        raise DomainError(f"fraction must lie in (0, 1), got {fraction}")
    k = math.ceil(fraction * n - 1e-9)
    k = min(max(k, 1), n - 1)
    return WaveSplit(obs[:k], obs[k:])


def wave_m1(x2: float) -> float:
    """Nonrespondents look like the late wave."""
    return x2


def wave_m2(x1: float, x2: float, n1: float, n2: float) -> float:
    """Trend through the wave midpoints, extended to the end of wave 2."""
    if n1 <= 0 or n2 <= 0:
        raise DomainError("wave sizes must be positive")
    return x2 + (x2 - x1) * n2 / (n1 + n2)


def wave_m3(x1: float, x2: float, n1: float, n2: float, n3: float, bounded: bool = False):
    """Trend extended to the midpoint of a nonresponse wave of size ``n3``.

    Returns ``(estimate, truncated)``. With ``bounded`` (correlations) the
    estimate is clipped to [-1, 1] and ``truncated`` reports the clipping.
    """
    if n1 <= 0 or n2 <= 0:
        raise DomainError("wave sizes must be positive")
    if n3 < 1:
        raise DomainError(f"n3 must be >= 1, got {n3}")
    raw = x2 + (x2 - x1) * (n2 + n3) / (n1 + n2)
    if bounded and abs(raw) > 1:
        return math.copysign(1.0, raw), True
    return raw, False


def wave_estimates(x1: float, x2: float, n1: float, n2: float, n3_scenarios: Iterable[float],
                   statistic_kind: str = "correlation") -> WaveEstimates:
    """M1/M2/M3 estimates from wave-level statistics."""
    if statistic_kind not in ("mean", "correlation"):
        raise DomainError(f"unknown statistic kind {statistic_kind!r}")
    bounded = statistic_kind == "correlation"
    m3s = []
    for n3 in n3_scenarios:
        raw = x2 + (x2 - x1) * (n2 + n3) / (n1 + n2)
        est, trunc = wave_m3(x1, x2, n1, n2, n3, bounded=bounded)
        m3s.append(M3Estimate(n3, est, trunc, raw))
    m2 = wave_m2(x1, x2, n1, n2)
    m2_truncated = bounded and abs(m2) > 1
    if m2_truncated:
        m2 = math.copysign(1.0, m2)
    return WaveEstimates(statistic_kind, x1, x2, n1, n2, wave_m1(x2), m2, tuple(m3s), m2_truncated)


def wave_correlations(scores: Mapping[str, Sequence[float]], pair: Tuple[str, str],
                      fraction: float = 0.5, n3_scenarios: Iterable[float] = (),
                      wave_sizes: Tuple[float, float] = None) -> WaveEstimates:
    """Wave analysis of the correlation between two ordered score vectors.

    ``wave_sizes`` overrides the sizes used in the extrapolation (the split
    itself always uses the ceiling rule); only their ratio matters.
    """
    a, b = pair
    xy = np.column_stack([np.asarray(scores[a], dtype=float), np.asarray(scores[b], dtype=float)])
    split = split_waves(xy, fraction)
    rs = []
    for label, wave in (("wave 1", split.wave1), ("wave 2", split.wave2)):
        try:
            rs.append(pearson_r(wave[:, 0], wave[:, 1]))
        except DegenerateInputError as exc:
            raise DegenerateInputError(f"{label} of pair {a}-{b}: {exc}") from None
    n1, n2 = wave_sizes if wave_sizes is not None else (split.n1, split.n2)
    return wave_estimates(rs[0], rs[1], n1, n2, n3_scenarios, "correlation")


def all_pair_waves(scores: Mapping[str, Sequence[float]], names: List[str], fraction: float = 0.5,
                   n3_scenarios: Iterable[float] = ()) -> dict:
    """Wave estimates for every unordered pair of ``names`` (in listed order)."""
    n3_scenarios = tuple(n3_scenarios)
    out = {}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            out[(a, b)] = wave_correlations(scores, (a, b), fraction, n3_scenarios)
    return out
