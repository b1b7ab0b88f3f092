"""n-curves: required nonrespondent count as a function of nonresponse effect size."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .errors import DomainError
from .solver import (
    SolverConfig,
    TestSpec,
    WcrtResult,
    classify_scenario,
    solve_corr_n2,
    solve_ttest_n2,
)
from .stats import SampleSummary, corr_z_statistic, t_statistic

CSV_HEADER = ("effect_size", "n2", "status", "stat_at_n2", "critical_value")

# Cohen's conventional magnitudes plus the two extra anchors used for correlations.
CORR_ANCHORS = (0.1, 0.3, 0.5, 0.7, 0.9)
D_ANCHORS = (0.2, 0.5, 0.8)


@dataclass(frozen=True)
class EffectGrid:
    start: float = -0.99
    stop: float = -0.01
    step: float = 0.01
    kind: str = "pearson_r"

    def __post_init__(self):
        if self.kind not in ("pearson_r", "cohen_d"):
            raise DomainError(f"unknown grid kind {self.kind!r}")
        if not self.step > 0:
            raise DomainError("grid step must be positive")
        if not self.start < self.stop:
            raise DomainError("grid start must be below stop")

    def values(self) -> List[float]:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        vals = [round(self.start + i * self.step, 10) for i in range(count)]
        if self.kind == "pearson_r":
            vals = [v for v in vals if -1 < v < 1]
        return vals


@dataclass
class NCurve:
    points: List[Tuple[float, WcrtResult]]
    alpha: float
    kind: str
    problem: dict
    annotations: Dict[str, Tuple[float, Optional[int]]] = field(default_factory=dict)

    def finite_points(self):
        return [(e, r) for e, r in self.points if r.status == "finite"]


def _grid_values(grid) -> List[float]:
    if isinstance(grid, EffectGrid):
        return grid.values()
    return sorted(float(v) for v in grid)


def _anchor_signs(scenario) -> float:
    # Reversing a significant result needs effects of the opposite sign.
    sign = 1.0 if scenario.direction == "upper" else -1.0
    return -sign if scenario.observed == "significant" else sign


def sweep_corr(r1: float, n1: int, spec: TestSpec, grid: Union[EffectGrid, Iterable[float]] = EffectGrid(),
               config: SolverConfig = SolverConfig(), annotate: bool = True) -> NCurve:
    values = _grid_values(grid)
    points = [(r2, solve_corr_n2(r1, n1, r2, spec, config)) for r2 in values]
    curve = NCurve(points, spec.alpha, "pearson_r",
                   {"family": "correlation", "r1": r1, "n1": n1, "tail": spec.tail})
    if annotate:
        sign = _anchor_signs(classify_scenario(spec, corr_z_statistic(r1, n1)))
        for mag in CORR_ANCHORS:
            r2 = sign * mag
            res = solve_corr_n2(r1, n1, r2, spec, config)
            curve.annotations[f"r2={r2:+.1f}"] = (r2, res.n2)
    return curve


def sweep_ttest(response: SampleSummary, spec: TestSpec, grid: Union[EffectGrid, Iterable[float]],
                s2: Optional[float] = None, config: SolverConfig = SolverConfig(),
                annotate: bool = True) -> NCurve:
    """t-test analogue of :func:`sweep_corr`; ``s2`` defaults to the respondent sd."""
    values = _grid_values(grid)
    points = [(d2, solve_ttest_n2(response, spec, d2, s2, config)) for d2 in values]
    curve = NCurve(points, spec.alpha, "cohen_d",
                   {"family": "mean_single_sample", "n": response.n, "mean": response.mean,
                    "sd": response.sd, "mu0": spec.mu0, "tail": spec.tail})
    if annotate and values:
        scen = classify_scenario(spec, t_statistic(response, spec.mu0), response.n - 1)
        sign = _anchor_signs(scen)
        for mag in D_ANCHORS:
            d2 = sign * mag
            res = solve_ttest_n2(response, spec, d2, s2, config)
            curve.annotations[f"d2={d2:+.1f}"] = (d2, res.n2)
    return curve


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def _num(x) -> str:
    return "" if x is None else repr(float(x))


def to_csv(curve: NCurve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for effect, res in curve.points:
        if res.status == "finite":
            w.writerow([_num(effect), res.n2, res.status, _num(res.stat_at_n2), _num(res.critical_value)])
        else:
            w.writerow([_num(effect), "", res.status, "", ""])
    return buf.getvalue()


def parse_csv(text: str) -> List[dict]:
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for row in rows:
        out.append({
            "effect_size": float(row["effect_size"]),
            "n2": int(row["n2"]) if row["n2"] else None,
            "status": row["status"],
            "stat_at_n2": float(row["stat_at_n2"]) if row["stat_at_n2"] else None,
            "critical_value": float(row["critical_value"]) if row["critical_value"] else None,
        })
    return out


_W, _H = 720, 440
_ML, _MR, _MT, _MB = 70, 30, 40, 55


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def to_svg(curve: NCurve, title: str = "") -> str:
    """Self-contained SVG 1.1 plot of log10(n2) against effect size."""
    if not curve.points:
        raise DomainError("cannot draw an empty n-curve")
    finite = curve.finite_points()
    if not finite:
        raise DomainError("cannot draw an n-curve with no finite points")

    xs = [e for e, _ in curve.points]
    x_lo, x_hi = min(xs), max(xs)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.05, x_hi + 0.05
    logs = [math.log10(r.n2) for _, r in finite]
    y_lo = math.floor(min(logs))
    y_hi = max(math.ceil(max(logs)), y_lo + 1)
    pw, ph = _W - _ML - _MR, _H - _MT - _MB

    def px(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return _MT + (1 - (y - y_lo) / (y_hi - y_lo)) * ph

    sym = "r" if curve.kind == "pearson_r" else "d"
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{_W / 2:.2f}" y="22" text-anchor="middle" font-size="14">{_xml(title)}</text>')
    out.append(f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')

    for k in range(y_lo, y_hi + 1):
        y = py(k)
        out.append(f'<line x1="{_ML - 5}" y1="{_fmt(y)}" x2="{_ML + pw}" y2="{_fmt(y)}" stroke="#dddddd"/>')
        out.append(f'<text x="{_ML - 8}" y="{_fmt(y + 4)}" text-anchor="end">10^{k}</text>')
    for tick in _x_ticks(x_lo, x_hi):
        x = px(tick)
        out.append(f'<line x1="{_fmt(x)}" y1="{_MT + ph}" x2="{_fmt(x)}" y2="{_MT + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(x)}" y="{_MT + ph + 18}" text-anchor="middle">{tick:.1f}</text>')
    out.append(f'<text x="{_ML + pw / 2:.2f}" y="{_H - 12}" text-anchor="middle">nonresponse effect size {sym}2</text>')
    out.append(f'<text x="16" y="{_MT + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {_MT + ph / 2:.2f})">n2 (log scale)</text>')

    # Polyline segments over runs of finite points.
    run: List[str] = []
    for effect, res in curve.points:
        if res.status == "finite":
            run.append(f"{_fmt(px(effect))},{_fmt(py(math.log10(res.n2)))}")
        elif run:
            out.append(_polyline(run))
            run = []
    if run:
        out.append(_polyline(run))

    # Finite/infinite boundaries drawn as open-ended dashed verticals.
    for (e0, r0), (e1, r1) in zip(curve.points, curve.points[1:]):
        if (r0.status == "finite") != (r1.status == "finite"):
            x = px(0.5 * (e0 + e1))
            out.append(f'<line x1="{_fmt(x)}" y1="{_MT}" x2="{_fmt(x)}" y2="{_MT + ph}" '
                       'stroke="#b22222" stroke-dasharray="4,3"/>')
            out.append(f'<text x="{_fmt(x + 4)}" y="{_MT + 12}" fill="#b22222">n2 &#8594; &#8734;</text>')

    for label, (effect, n2) in curve.annotations.items():
        if n2 is None or not x_lo <= effect <= x_hi:
            continue
        x, y = px(effect), py(math.log10(n2))
        out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="3.5" fill="#1f4e9e"/>')
        out.append(f'<text x="{_fmt(x + 6)}" y="{_fmt(y - 6)}" class="annotation">{sym}2 = {effect:.1f}: n = {n2}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _polyline(points: Sequence[str]) -> str:
    return f'<polyline fill="none" stroke="black" stroke-width="1.5" points="{" ".join(points)}"/>'


def _x_ticks(lo: float, hi: float) -> List[float]:
    span = hi - lo
    step = 0.1 if span <= 1.2 else 0.2 if span <= 2.5 else 0.5 if span <= 6 else 1.0
    first = math.ceil(lo / step - 1e-9)
    last = math.floor(hi / step + 1e-9)
    return [round(k * step, 10) for k in range(first, last + 1)]


def _xml(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def render(curve: NCurve, format: str = "csv", title: str = "") -> str:
    if format == "csv":
        return to_csv(curve)
    if format == "svg":
        return to_svg(curve, title)
    raise DomainError(f"unknown n-curve format {format!r}")
