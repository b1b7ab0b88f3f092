"""Seeded synthetic survey resembling the reference study's design.

Used by tests and scripts; the real responses are not redistributed here.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from . import reference
from .dataset import ScaleConfig


@dataclass(frozen=True)
class SyntheticSurveyConfig:
    n_total: int = reference.N_TOTAL
    n_incomplete: int = reference.N_TOTAL - reference.N_COMPLETE
    seed: int = 20240101
    item_noise: float = 0.45
    # Late respondents' latent correlations are shrunk by up to this factor.
    drift: float = 0.3
    scale_points: int = 7


def _target_correlation(config: ScaleConfig) -> np.ndarray:
    names = config.names
    k = len(names)
    target = np.eye(k)
    for pair, r in reference.FULL_SAMPLE_R.items():
        a, b = pair.split(", ")
        if a in names and b in names:
            i, j = names.index(a), names.index(b)
            target[i, j] = target[j, i] = r
    # Clip to the nearest positive-definite matrix with unit diagonal.
    w, v = np.linalg.eigh(target)
    fixed = (v * np.maximum(w, 1e-3)) @ v.T
    d = np.sqrt(np.diag(fixed))
    return fixed / np.outer(d, d)


def generate(config: SyntheticSurveyConfig = SyntheticSurveyConfig(),
             scales: ScaleConfig = reference.SCALE_CONFIG) -> Dict[str, np.ndarray]:
    """Item responses in response order; NaN marks a skipped item."""
    rng = np.random.default_rng(config.seed)
    target = _target_correlation(scales)
    chol_full = np.linalg.cholesky(target)
    k = len(scales.scales)
    latent = np.empty((config.n_total, k))
    for t in range(config.n_total):
        shrink = 1 - config.drift * t / max(config.n_total - 1, 1)
        c = target * shrink + np.eye(k) * (1 - shrink)
        chol = np.linalg.cholesky(c) if shrink < 1 else chol_full
        latent[t] = chol @ rng.standard_normal(k)

    top = config.scale_points
    mid = (top + 1) / 2
    items: Dict[str, np.ndarray] = {}
    for s_idx, scale in enumerate(scales.scales):
        for item in scale.items:
            raw = mid + 1.4 * (latent[:, s_idx] + config.item_noise * rng.standard_normal(config.n_total))
            vals = np.clip(np.rint(raw), 1, top)
            if item in scale.reversed:
                vals = top + 1 - vals
            items[item] = vals

    names = list(items)
    holes = rng.choice(config.n_total, size=config.n_incomplete, replace=False)
    for row in holes:
        items[names[rng.integers(len(names))]][row] = np.nan
    return items


def write_csv(path, items: Dict[str, np.ndarray]) -> Path:
    path = Path(path)
    names = list(items)
    n = len(items[names[0]])
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for t in range(n):
            w.writerow(["" if np.isnan(items[c][t]) else str(int(items[c][t])) for c in names])
    return path


def write_survey(directory, config: SyntheticSurveyConfig = SyntheticSurveyConfig(),
                 scales: Optional[ScaleConfig] = None):
    """Write ``survey.csv`` and ``scales.json`` into ``directory``; returns both paths."""
    import json

    scales = scales or reference.SCALE_CONFIG
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    data = write_csv(directory / "survey.csv", generate(config, scales))
    cfg = directory / "scales.json"
    cfg.write_text(json.dumps(scales.to_dict(), indent=2) + "\n")
    return data, cfg
