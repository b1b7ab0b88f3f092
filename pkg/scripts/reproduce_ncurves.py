"""Regenerate the two published n-curves (strongest and weakest reference correlations)."""

import argparse
from pathlib import Path

from wcrt.ncurve import EffectGrid, render, sweep_corr
from wcrt.solver import TestSpec

PUBLISHED = {
    "strong_r": (0.94, (5670, 1175, 454)),
    "weak_r": (0.24, (427, 103, 43)),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--output-dir", default="results/ncurves")
    ap.add_argument("--n1", type=int, default=415)
    ap.add_argument("--alpha", type=float, default=0.05)
    args = ap.parse_args()
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = TestSpec("correlation", "two", args.alpha)

    for name, (r1, published) in PUBLISHED.items():
        curve = sweep_corr(r1, args.n1, spec, EffectGrid())
        (out / f"{name}.csv").write_text(render(curve, "csv"))
        (out / f"{name}.svg").write_text(render(curve, "svg", f"r1 = {r1}, n1 = {args.n1}, alpha = {args.alpha:g}"))
        got = [curve.annotations[f"r2={r2:+.1f}"][1] for r2 in (-0.1, -0.5, -0.9)]
        errs = ", ".join(f"{g} vs {p} ({(g - p) / p:+.1%})" for g, p in zip(got, published))
        print(f"{name}: r1={r1}: {errs}")
    print(f"wrote CSV and SVG to {out}")


if __name__ == "__main__":
    main()
