"""Flag correlation tests whose wave-extrapolated nonresponse effect would reverse them."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .solver import TestSpec, inverse_corr_threshold
from .waves import WaveEstimates

METHODS = ("M1", "M2", "M3")


@dataclass
class FlagRow:
    pair: str
    r: float
    n1: int
    wave_m1: Optional[float] = None
    wave_m2: Optional[float] = None
    wave_m3: Optional[float] = None
    m3_truncated: bool = False
    thresholds: Dict[float, float] = field(default_factory=dict)
    saturated: Dict[float, bool] = field(default_factory=dict)
    scenarios: Dict[float, int] = field(default_factory=dict)
    flags: Dict[Tuple[float, str], bool] = field(default_factory=dict)
    extension: bool = False
    error: str = ""

    def flagged(self, alpha: float, method: str = "M3") -> bool:
        return self.flags.get((alpha, method), False)


@dataclass
class FlagReport:
    rows: List[FlagRow]
    n3: int
    alphas: Tuple[float, ...]
    tail: str = "two"


def _reverses(scenario_id: int, estimate: float, threshold: float) -> bool:
    # 1: significant positive; 3: significant negative (mirror);
    # 2/4: non-significant, the estimate would push it to significance.
    if scenario_id in (1, 4):
        return estimate < threshold
    return estimate > threshold


def build_flag_report(correlations: Sequence[Tuple[str, float, int]],
                      waves: Mapping[str, WaveEstimates], n3: int,
                      alphas: Iterable[float] = (0.05, 0.01), tail: str = "two") -> FlagReport:
    """Compare each wave estimate with the reversal threshold at ``n3`` nonrespondents.

    ``correlations`` holds (pair label, full-sample r, n1); ``waves`` maps the
    same labels to wave estimates that include an M3 entry for ``n3``. A pair
    with missing wave data yields a row carrying ``error`` instead of flags.
    """
    alphas = tuple(alphas)
    rows = []
    for pair, r, n1 in correlations:
        row = FlagRow(pair, float(r), int(n1))
        est = waves.get(pair)
        m3 = None
        if est is not None:
            try:
                m3 = est.m3(n3)
            except KeyError:
                m3 = None
        if est is None or m3 is None:
            row.error = f"no wave estimates for n3={n3}"
            rows.append(row)
            continue
        row.wave_m1, row.wave_m2, row.wave_m3 = est.m1, est.m2, m3.estimate
        row.m3_truncated = m3.truncated
        for alpha in alphas:
            spec = TestSpec("correlation", tail, alpha)
            thr = inverse_corr_threshold(r, n1, n3, spec)
            sid = thr.scenario.id
            row.thresholds[alpha] = thr.r
            row.saturated[alpha] = thr.saturated
            row.scenarios[alpha] = sid
            if sid != 1:
                row.extension = True
            for method, value in zip(METHODS, (est.m1, est.m2, m3.estimate)):
                row.flags[(alpha, method)] = _reverses(sid, value, thr.r)
        rows.append(row)
    return FlagReport(rows, n3, alphas, tail)


def summarize_flags(report: FlagReport) -> Dict[Tuple[float, str], int]:
    counts = {(a, m): 0 for a in report.alphas for m in METHODS}
    for row in report.rows:
        for key, flagged in row.flags.items():
            if flagged:
                counts[key] = counts.get(key, 0) + 1
    return counts


def flagged_pairs(report: FlagReport, alpha: float, method: str = "M3") -> List[str]:
    return [row.pair for row in report.rows if row.flagged(alpha, method)]


def _alpha_tag(alpha: float) -> str:
    return "a" + f"{alpha:.10g}".split(".")[-1]


def _flag_text(row: FlagRow, alphas) -> str:
    parts = [f"{_alpha_tag(a)}:{m}" for a in alphas for m in METHODS if row.flagged(a, m)]
    return ";".join(parts)


def _f3(v: Optional[float]) -> str:
    return "" if v is None else f"{v:.3f}"


def report_to_csv(report: FlagReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["pair", "r", "r3_m1", "r3_m2", "r3_m3"]
               + [f"threshold_{_alpha_tag(a)}" for a in report.alphas] + ["flags", "note"])
    for row in report.rows:
        note = row.error or ("extension" if row.extension else "")
        w.writerow([row.pair, _f3(row.r), _f3(row.wave_m1), _f3(row.wave_m2), _f3(row.wave_m3)]
                   + [_f3(row.thresholds.get(a)) for a in report.alphas]
                   + [_flag_text(row, report.alphas), note])
    return buf.getvalue()


def report_to_text(report: FlagReport) -> str:
    """Aligned table; "(1)" marks a threshold crossed by the M3 estimate."""
    head = ["pair", "r", "r3_m1", "r3_m2", "r3_m3"] + [f"threshold_{_alpha_tag(a)}" for a in report.alphas]
    body = []
    for row in report.rows:
        if row.error:
            body.append([row.pair, _f3(row.r), "-", "-", "-"] + ["-"] * len(report.alphas) + [row.error])
            continue
        cells = [row.pair, _f3(row.r), _f3(row.wave_m1), _f3(row.wave_m2), _f3(row.wave_m3)]
        for a in report.alphas:
            mark = " (1)" if row.flagged(a, "M3") else ""
            cells.append(_f3(row.thresholds[a]) + mark)
        cells.append("extension" if row.extension else "")
        body.append(cells)
    width = [max(len(str(r[i])) for r in [head] + body) for i in range(len(head))]
    lines = [f"nonresponse n3 = {report.n3}"]
    lines.append("  ".join(h.ljust(width[i]) for i, h in enumerate(head)).rstrip())
    for cells in body:
        parts = [str(c).ljust(width[i]) if i < len(width) else str(c) for i, c in enumerate(cells)]
        lines.append("  ".join(parts).rstrip())
    return "\n".join(lines) + "\n"
