"""Survey ingestion, summated scales and descriptive checks."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, DataError, DegenerateInputError, DomainError
from .solver import TestSpec, is_significant
from .stats import corr_z_statistic, cronbach_alpha, normal_cdf, pearson_r

TIMESTAMP_COLUMN = "timestamp"


@dataclass
class SurveyTable:
    """Item responses in response order; blank cells are NaN."""

    items: List[str]
    values: np.ndarray  # respondents x items
    row_numbers: List[int]  # 1-based data-row numbers in the source file
    scale_points: int = 7

    @property
    def complete(self) -> np.ndarray:
        return ~np.isnan(self.values).any(axis=1)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.items.index(name)]
        except ValueError:
            raise ConfigError(f"item {name!r} not present in the data") from None

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class Scale:
    name: str
    items: Tuple[str, ...]
    reversed: Tuple[str, ...] = ()


@dataclass(frozen=True)
class ScaleConfig:
    scales: Tuple[Scale, ...]
    scale_points: int = 7

    def __post_init__(self):
        seen = set()
        for s in self.scales:
            for item in s.items:
                if item in seen:
                    raise ConfigError(f"item {item!r} listed more than once")
                seen.add(item)
            stray = set(s.reversed) - set(s.items)
            if stray:
                raise ConfigError(f"reverse-coded items {sorted(stray)} are not in scale {s.name!r}")
        if self.scale_points < 2:
            raise ConfigError("scale_points must be >= 2")

    @property
    def names(self) -> List[str]:
        return [s.name for s in self.scales]

    @classmethod
    def from_dict(cls, doc: dict) -> "ScaleConfig":
        try:
            scales = tuple(Scale(s["name"], tuple(s["items"]), tuple(s.get("reversed", ())))
                           for s in doc["scales"])
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed scale config: {exc}") from None
        return cls(scales, int(doc.get("scale_points", 7)))

    @classmethod
    def from_json(cls, path) -> "ScaleConfig":
        with open(path) as fh:
            try:
                return cls.from_dict(json.load(fh))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})") from None

    def to_dict(self) -> dict:
        return {"scale_points": self.scale_points,
                "scales": [{"name": s.name, "items": list(s.items), "reversed": list(s.reversed)}
                           for s in self.scales]}


def _parse_timestamp(text: str, row: int):
    try:
        stamp = datetime.fromisoformat(text.strip().replace("Z", "+00:00"))
    except ValueError:
        raise DataError(f"bad ISO-8601 timestamp {text!r}", row=row, column=TIMESTAMP_COLUMN) from None
    # Naive stamps are read as UTC so they compare with offset-aware ones.
    return stamp if stamp.tzinfo else stamp.replace(tzinfo=timezone.utc)


def load_csv(path, scale_points: Optional[int] = 7, id_columns: Sequence[str] = ()) -> SurveyTable:
    """Read a survey CSV: header of item names, one respondent per row.

    Blank cells become NaN and mark the row incomplete. ``scale_points=None``
    accepts any finite number (raw measurements rather than Likert items). A ``timestamp`` column,
    when present, reorders rows by response time (ties keep file order);
    otherwise file order is the response order.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise DataError(f"{path}: duplicate column names in header")
        skip = set(id_columns) | {TIMESTAMP_COLUMN}
        item_idx = [i for i, h in enumerate(header) if h not in skip]
        ts_idx = header.index(TIMESTAMP_COLUMN) if TIMESTAMP_COLUMN in header else None
        rows, stamps, numbers = [], [], []
        for line_no, rec in enumerate(reader, start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise DataError(f"expected {len(header)} fields, got {len(rec)}", row=line_no)
            vals = []
            for i in item_idx:
                cell = rec[i].strip()
                if cell == "":
                    vals.append(math.nan)
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(f"non-numeric value {cell!r}", row=line_no, column=header[i]) from None
                if not math.isfinite(v):
                    raise DataError(f"non-finite value {cell!r}", row=line_no, column=header[i])
                if scale_points is not None and not 1 <= v <= scale_points:
                    raise DataError(f"value {v:g} outside 1..{scale_points}", row=line_no, column=header[i])
                vals.append(v)
            rows.append(vals)
            numbers.append(line_no)
            if ts_idx is not None:
                stamps.append(_parse_timestamp(rec[ts_idx], line_no))
    values = np.array(rows, dtype=float).reshape(len(rows), len(item_idx))
    if ts_idx is not None:
        order = sorted(range(len(rows)), key=lambda k: stamps[k])
        values = values[order]
        numbers = [numbers[k] for k in order]
    return SurveyTable([header[i] for i in item_idx], values, numbers, scale_points)


def reverse_code(values, scale_points: int = 7):
    """Map x to (scale_points + 1 - x)."""
    return scale_points + 1 - np.asarray(values, dtype=float)


@dataclass
class ScaleScores:
    names: List[str]
    scores: np.ndarray  # respondents x scales
    row_numbers: List[int]

    def as_dict(self) -> Dict[str, np.ndarray]:
        return {n: self.scores[:, i] for i, n in enumerate(self.names)}

    def __len__(self):
        return len(self.scores)


def scale_items(table: SurveyTable, scale: Scale, scale_points: int) -> np.ndarray:
    cols = []
    for item in scale.items:
        col = table.column(item)
        cols.append(reverse_code(col, scale_points) if item in scale.reversed else col)
    return np.column_stack(cols)


def build_scales(table: SurveyTable, config: ScaleConfig, drop_incomplete: bool = True) -> ScaleScores:
    """Summated scale scores per respondent, in response order."""
    keep = table.complete if drop_incomplete else np.ones(len(table), dtype=bool)
    cols = [scale_items(table, s, config.scale_points)[keep].sum(axis=1) for s in config.scales]
    scores = np.column_stack(cols) if cols else np.empty((int(keep.sum()), 0))
    rows = [n for n, k in zip(table.row_numbers, keep) if k]
    return ScaleScores(config.names, scores, rows)


def scale_alphas(table: SurveyTable, config: ScaleConfig) -> Dict[str, float]:
    """Cronbach's alpha of each scale over complete respondents."""
    keep = table.complete
    return {s.name: cronbach_alpha(scale_items(table, s, config.scale_points)[keep]) for s in config.scales}


def significance_marker(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


@dataclass
class CorrelationMatrix:
    names: List[str]
    r: np.ndarray
    z: np.ndarray
    p: np.ndarray
    significant: np.ndarray
    n: int

    def marker(self, i: int, j: int) -> str:
        return "" if i == j else significance_marker(self.p[i, j])

    def pairs(self) -> List[Tuple[str, str, float]]:
        k = len(self.names)
        return [(self.names[i], self.names[j], float(self.r[i, j]))
                for i in range(k) for j in range(i + 1, k)]


def correlation_matrix(scores: ScaleScores, spec: TestSpec = TestSpec("correlation")) -> CorrelationMatrix:
    """Pairwise Pearson correlations with Fisher-z tests.

    p-values follow the tail of ``spec``; ``significant`` applies its alpha.
    """
    m, k = scores.scores.shape
    if m < 4:
        raise DomainError(f"need at least 4 complete respondents, got {m}")
    for i, name in enumerate(scores.names):
        if np.var(scores.scores[:, i]) == 0:
            raise DegenerateInputError(f"scale {name!r} has zero variance")
    r = np.eye(k)
    z = np.full((k, k), np.inf)
    p = np.zeros((k, k))
    sig = np.ones((k, k), dtype=bool)
    crit = spec.critical_value()
    for i in range(k):
        for j in range(i + 1, k):
            rij = pearson_r(scores.scores[:, i], scores.scores[:, j])
            if abs(rij) >= 1:
                zij = math.copysign(math.inf, rij)
            else:
                zij = corr_z_statistic(rij, m)
            if spec.tail == "two":
                pij = 2 * (1 - normal_cdf(abs(zij)))
                sij = abs(zij) > crit
            elif spec.tail == "upper":
                pij = 1 - normal_cdf(zij)
                sij = is_significant("upper", zij, crit)
            else:
                pij = normal_cdf(zij)
                sij = is_significant("lower", zij, crit)
            r[i, j] = r[j, i] = rij
            z[i, j] = z[j, i] = zij
            p[i, j] = p[j, i] = pij
            sig[i, j] = sig[j, i] = sij
    return CorrelationMatrix(list(scores.names), r, z, p, sig, m)
