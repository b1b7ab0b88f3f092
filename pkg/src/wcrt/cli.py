"""Command-line entry point.

Exit codes: 0 success, 2 usage/configuration error, 3 data error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from . import __version__, reference
from .dataset import (
    ScaleConfig,
    build_scales,
    correlation_matrix,
    load_csv,
    scale_alphas,
)
from .errors import ConfigError, DataError, DegenerateInputError, DomainError
from .flagger import build_flag_report, report_to_csv, report_to_text, summarize_flags
from .ncurve import EffectGrid, render, sweep_corr, sweep_ttest
from .solver import SolverConfig, TestSpec, inverse_corr_threshold, solve_corr_n2, solve_ttest_n2
from .stats import SampleSummary
from .waves import all_pair_waves, wave_estimates

EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 2, 3, 4
DEFAULT_OUTPUT_DIR = "wcrt_output"


class NumericalFailure(Exception):
    pass


@dataclass
class RunConfig:
    """A fully resolved command invocation; serialising it reproduces the run."""

    command: str
    params: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"command": self.command, "params": dict(sorted(self.params.items()))}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read run config {path}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("run config must be a JSON object")
        params = doc.get("params", {k: v for k, v in doc.items() if k != "command"})
        return cls(doc.get("command", ""), params)


# ---------------------------------------------------------------------------
# argument types
# ---------------------------------------------------------------------------

def _theta(text):
    v = float(text)
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError(f"theta must lie in [0, 1], got {text}")
    return v


def _alpha(text):
    v = float(text)
    if not 0 < v <= 0.5:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 0.5], got {text}")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _add_test_opts(p, multi_alpha=False):
    p.add_argument("--tail", choices=("upper", "lower", "two"), default="two")
    if multi_alpha:
        p.add_argument("--alpha", type=_alpha, nargs="+", default=[0.05, 0.01])
    else:
        p.add_argument("--alpha", type=_alpha, default=0.05)


def _add_solver_opts(p):
    p.add_argument("--delta", type=float, default=1e-6)
    p.add_argument("--max-iterations", type=_positive_int, default=10_000)
    p.add_argument("--n2-cap", type=_positive_int, default=10 ** 9)


def _add_data_opts(p, required=False):
    p.add_argument("--data", required=required, help="survey CSV (header of item names)")
    p.add_argument("--scales", required=required, help="scale config JSON")
    p.add_argument("--keep-incomplete", action="store_true")


def _add_output_opts(p):
    p.add_argument("--output-dir", default=None,
                   help=f"defaults to $WCRT_OUTPUT_DIR or ./{DEFAULT_OUTPUT_DIR}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wcrt", description="Worst-case resistance testing for nonresponse bias.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ttest", help="nonrespondents needed to reverse a one-sample t-test")
    p.add_argument("--n", type=int)
    p.add_argument("--mean", type=float)
    p.add_argument("--sd", type=float)
    p.add_argument("--data", help="CSV file holding a raw column instead of --n/--mean/--sd")
    p.add_argument("--column")
    p.add_argument("--mu0", type=float, default=0.0)
    _add_test_opts(p)
    p.add_argument("--d2", type=float, nargs="+", required=True)
    p.add_argument("--s2", type=float)
    p.add_argument("--theta", type=_theta, default=0.0)
    _add_solver_opts(p)

    p = sub.add_parser("corr", help="nonrespondents needed to reverse a correlation test")
    p.add_argument("--r1", type=float, required=True)
    p.add_argument("--n1", type=int, required=True)
    p.add_argument("--r2", type=float, nargs="*", default=[])
    p.add_argument("--n3", type=int, nargs="*", default=[], help="also print reversal thresholds at these counts")
    _add_test_opts(p)
    _add_solver_opts(p)

    p = sub.add_parser("ncurve", help="n-curve over a grid of nonresponse effect sizes")
    p.add_argument("--family", choices=("correlation", "mean"), default="correlation")
    p.add_argument("--r1", type=float)
    p.add_argument("--n1", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--mean", type=float)
    p.add_argument("--sd", type=float)
    p.add_argument("--mu0", type=float, default=0.0)
    p.add_argument("--start", type=float, default=-0.99)
    p.add_argument("--stop", type=float, default=-0.01)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--format", nargs="+", choices=("csv", "svg"), default=["csv", "svg"])
    p.add_argument("--name", default="ncurve")
    _add_test_opts(p)
    _add_solver_opts(p)
    _add_output_opts(p)

    p = sub.add_parser("wave", help="wave analysis (M1/M2/M3)")
    _add_data_opts(p)
    p.add_argument("--x1", type=float)
    p.add_argument("--x2", type=float)
    p.add_argument("--wave-n1", type=float)
    p.add_argument("--wave-n2", type=float)
    p.add_argument("--kind", choices=("correlation", "mean"), default="correlation")
    p.add_argument("--fraction", type=float, default=0.5)
    p.add_argument("--n3", type=_positive_int, nargs="+", default=list(reference.NONRESPONSE_SCENARIOS))
    _add_output_opts(p)

    p = sub.add_parser("flags", help="flag tests reversed by wave-extrapolated nonresponse")
    _add_data_opts(p)
    p.add_argument("--reference", action="store_true",
                   help="use the bundled published survey summaries instead of --data")
    p.add_argument("--fraction", type=float, default=0.5)
    p.add_argument("--n3", type=_positive_int, nargs="+", default=list(reference.NONRESPONSE_SCENARIOS))
    _add_test_opts(p, multi_alpha=True)
    _add_output_opts(p)

    p = sub.add_parser("report", help="full pipeline: EDA, waves, thresholds, flags, n-curves")
    _add_data_opts(p)
    p.add_argument("--fraction", type=float, default=0.5)
    p.add_argument("--n3", type=_positive_int, nargs="+", default=list(reference.NONRESPONSE_SCENARIOS))
    p.add_argument("--start", type=float, default=-0.99)
    p.add_argument("--stop", type=float, default=-0.01)
    p.add_argument("--step", type=float, default=0.01)
    _add_test_opts(p, multi_alpha=True)
    _add_output_opts(p)

    p = sub.add_parser("alpha", help="Cronbach's alpha per scale")
    _add_data_opts(p, required=True)

    parser.set_defaults(config=None)
    for name, sp in sub.choices.items():
        sp.add_argument("--config", help="RunConfig JSON; its params become defaults")
    parser._wcrt_subparsers = sub.choices  # used to apply --config defaults
    return parser


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = RunConfig.from_json(args.config)
        if cfg.command and cfg.command != args.command:
            parser.error(f"config is for command {cfg.command!r}, not {args.command!r}")
        sp = parser._wcrt_subparsers[args.command]
        known = {a.dest for a in sp._actions}
        unknown = set(cfg.params) - known
        if unknown:
            parser.error(f"unknown keys in --config: {sorted(unknown)}")
        sp.set_defaults(**cfg.params)
        args = parser.parse_args(argv)
    return args


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _output_dir(args) -> Path:
    out = Path(args.output_dir or os.environ.get("WCRT_OUTPUT_DIR") or DEFAULT_OUTPUT_DIR)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _solver_config(args, theta=0.0) -> SolverConfig:
    return SolverConfig(delta=args.delta, max_iterations=args.max_iterations, theta=theta, n2_cap=args.n2_cap)


def _fmt(v, spec="{:.4f}"):
    if v is None:
        return "-"
    return spec.format(v)


def _table(head, rows) -> str:
    rows = [[str(c) for c in r] for r in rows]
    width = [max(len(x) for x in col) for col in zip(head, *rows)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(head, width))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, width)) for r in rows]
    return "\n".join(lines) + "\n"


def _slug(text: str) -> str:
    return "".join(ch if ch.isalnum() else "_" for ch in text).strip("_").replace("__", "_")


def _load_scores(args):
    if not args.data or not args.scales:
        raise ConfigError("--data and --scales are both required")
    cfg = ScaleConfig.from_json(args.scales)
    table = load_csv(args.data, scale_points=cfg.scale_points)
    scores = build_scales(table, cfg, drop_incomplete=not args.keep_incomplete)
    return cfg, table, scores


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_ttest(args) -> int:
    if args.data:
        if not args.column:
            raise ConfigError("--column is required with --data")
        table = load_csv(args.data, scale_points=None)
        col = table.column(args.column)
        summary = SampleSummary.from_data(col[~_isnan(col)])
    else:
        if args.n is None or args.mean is None or args.sd is None:
            raise ConfigError("give --n, --mean and --sd (or --data and --column)")
        summary = SampleSummary(args.n, args.mean, args.sd)
    spec = TestSpec("mean_single_sample", args.tail, args.alpha, args.mu0)
    config = _solver_config(args, args.theta)
    rows, failed = [], False
    for d2 in args.d2:
        res = solve_ttest_n2(summary, spec, d2, args.s2, config)
        failed |= res.status == "non_converged"
        rows.append([f"{d2:g}", res.status, res.n2 if res.n2 is not None else "-",
                     _fmt(res.stat_at_n2), _fmt(res.stat_at_n2_minus_1), _fmt(res.critical_value),
                     res.scenario.id])
    sys.stdout.write(f"n1={summary.n} mean={summary.mean:g} sd={summary.sd:g} mu0={args.mu0:g} "
                     f"tail={args.tail} alpha={args.alpha:g}\n")
    sys.stdout.write(_table(["d2", "status", "n2", "t_at_n2", "t_at_n2-1", "t_crit", "scenario"], rows))
    if failed:
        raise NumericalFailure("solver did not converge for at least one d2")
    return 0


def _isnan(a):
    import numpy as np

    return np.isnan(a)


def cmd_corr(args) -> int:
    spec = TestSpec("correlation", args.tail, args.alpha)
    config = _solver_config(args)
    if not args.r2 and not args.n3:
        raise ConfigError("give --r2 and/or --n3")
    failed = False
    if args.r2:
        rows = []
        for r2 in args.r2:
            res = solve_corr_n2(args.r1, args.n1, r2, spec, config)
            failed |= res.status == "non_converged"
            rows.append([f"{r2:g}", res.status, res.n2 if res.n2 is not None else "-",
                         _fmt(res.stat_at_n2), _fmt(res.stat_at_n2_minus_1), _fmt(res.critical_value),
                         res.scenario.id])
        sys.stdout.write(_table(["r2", "status", "n2", "z_at_n2", "z_at_n2-1", "z_crit", "scenario"], rows))
    if args.n3:
        rows = []
        for n3 in args.n3:
            thr = inverse_corr_threshold(args.r1, args.n1, n3, spec)
            rows.append([n3, f"{thr.r:.3f}", "yes" if thr.saturated else "no"])
        sys.stdout.write(_table(["n3", "threshold_r2", "saturated"], rows))
    if failed:
        raise NumericalFailure("solver did not converge for at least one r2")
    return 0


def cmd_ncurve(args, parser=None) -> int:
    kind = "pearson_r" if args.family == "correlation" else "cohen_d"
    try:
        grid = EffectGrid(args.start, args.stop, args.step, kind)
    except DomainError as exc:
        raise ConfigError(f"invalid grid: {exc}") from None
    if not grid.values():
        raise ConfigError("effect-size grid is empty")
    config = _solver_config(args)
    if args.family == "correlation":
        if args.r1 is None or args.n1 is None:
            raise ConfigError("--r1 and --n1 are required for a correlation n-curve")
        spec = TestSpec("correlation", args.tail, args.alpha)
        curve = sweep_corr(args.r1, args.n1, spec, grid, config)
        title = f"n-curve: r1 = {args.r1:g}, n1 = {args.n1}, alpha = {args.alpha:g}"
    else:
        if args.n is None or args.mean is None or args.sd is None:
            raise ConfigError("--n, --mean and --sd are required for a mean n-curve")
        spec = TestSpec("mean_single_sample", args.tail, args.alpha, args.mu0)
        curve = sweep_ttest(SampleSummary(args.n, args.mean, args.sd), spec, grid, None, config)
        title = f"n-curve: n = {args.n}, mean = {args.mean:g}, sd = {args.sd:g}, alpha = {args.alpha:g}"
    out = _output_dir(args)
    for fmt in args.format:
        path = _write(out / f"{args.name}.{fmt}", render(curve, fmt, title))
        sys.stdout.write(f"wrote {path}\n")
    rows = [[label, n2 if n2 is not None else "inf"] for label, (_e, n2) in curve.annotations.items()]
    sys.stdout.write(_table(["effect", "n2"], rows))
    if any(r.status == "non_converged" for _e, r in curve.points):
        raise NumericalFailure("solver did not converge at some grid points")
    return 0


def _waves_csv(waves: dict, n3s) -> str:
    head = ["pair", "x1", "x2_m1", "m2"] + [f"m3_{n3}" for n3 in n3s] + [f"m3_{n3}_truncated" for n3 in n3s]
    lines = [",".join(head)]
    for pair, est in waves.items():
        cells = [pair, f"{est.x1:.6f}", f"{est.m1:.6f}", f"{est.m2:.6f}"]
        cells += [f"{est.m3(n3).estimate:.6f}" for n3 in n3s]
        cells += [str(est.m3(n3).truncated).lower() for n3 in n3s]
        lines.append(",".join(f'"{c}"' if "," in c else c for c in cells))
    return "\n".join(lines) + "\n"


def _waves_text(waves: dict, n3s) -> str:
    rows = []
    for pair, est in waves.items():
        rows.append([pair, f"{est.x1:.3f}", f"{est.m1:.3f}", f"{est.m2:.3f}"]
                    + [f"{est.m3(n3).estimate:.3f}" + ("*" if est.m3(n3).truncated else "") for n3 in n3s])
    return _table(["pair", "x1", "x2 (M1)", "M2"] + [f"M3 {n3}" for n3 in n3s], rows)


def _data_waves(args, scores):
    named = scores.as_dict()
    raw = all_pair_waves(named, scores.names, args.fraction, args.n3)
    return {f"{a}, {b}": est for (a, b), est in raw.items()}


def cmd_wave(args) -> int:
    if args.data:
        _cfg, _table_, scores = _load_scores(args)
        waves = _data_waves(args, scores)
        out = _output_dir(args)
        path = _write(out / "waves.csv", _waves_csv(waves, args.n3))
        sys.stdout.write(_waves_text(waves, args.n3))
        sys.stdout.write(f"wrote {path}\n")
        return 0
    needed = (args.x1, args.x2, args.wave_n1, args.wave_n2)
    if any(v is None for v in needed):
        raise ConfigError("give --data/--scales, or --x1 --x2 --wave-n1 --wave-n2")
    est = wave_estimates(args.x1, args.x2, args.wave_n1, args.wave_n2, args.n3, args.kind)
    sys.stdout.write(_waves_text({"statistic": est}, args.n3))
    return 0


def _flag_inputs(args, scores=None):
    if getattr(args, "reference", False) or (scores is None and not args.data):
        return reference.correlations(), reference.published_waves()
    if scores is None:
        _cfg, _t, scores = _load_scores(args)
    waves = _data_waves(args, scores)
    mat = correlation_matrix(scores)
    corrs = [(f"{a}, {b}", r, mat.n) for a, b, r in mat.pairs()]
    return corrs, waves


def _write_flag_reports(args, corrs, waves, out: Path) -> List[Path]:
    written = []
    for n3 in args.n3:
        report = build_flag_report(corrs, waves, n3, args.alpha, args.tail)
        text = report_to_text(report)
        counts = summarize_flags(report)
        text += "flag counts: " + ", ".join(f"alpha={a:g} {m}={c}" for (a, m), c in counts.items()) + "\n"
        sys.stdout.write(text + "\n")
        written.append(_write(out / f"flags_n3_{n3}.csv", report_to_csv(report)))
        written.append(_write(out / f"flags_n3_{n3}.txt", text))
    return written


def cmd_flags(args) -> int:
    if not args.reference and not args.data:
        raise ConfigError("give --data and --scales, or --reference")
    corrs, waves = _flag_inputs(args)
    out = _output_dir(args)
    for path in _write_flag_reports(args, corrs, waves, out):
        sys.stdout.write(f"wrote {path}\n")
    return 0


def cmd_alpha(args) -> int:
    cfg, table, _scores = _load_scores(args)
    alphas = scale_alphas(table, cfg)
    rows = [[name, f"{a:.3f}"] for name, a in alphas.items()]
    sys.stdout.write(f"{int(table.complete.sum())} complete of {len(table)} respondents\n")
    sys.stdout.write(_table(["scale", "alpha"], rows))
    return 0


def cmd_report(args) -> int:
    out = _output_dir(args)
    written: List[Path] = []
    inputs: Dict[str, str] = {}
    if args.data:
        cfg, table, scores = _load_scores(args)
        inputs = {str(args.data): _sha256(args.data), str(args.scales): _sha256(args.scales)}
        alphas = scale_alphas(table, cfg)
        lines = ["scale,alpha"] + [f"{k},{v:.6f}" for k, v in alphas.items()]
        written.append(_write(out / "cronbach_alpha.csv", "\n".join(lines) + "\n"))
        mat = correlation_matrix(scores)
        lines = ["scale_a,scale_b,r,z,p,marker"]
        k = len(mat.names)
        for i in range(k):
            for j in range(i + 1, k):
                lines.append(f"{mat.names[i]},{mat.names[j]},{mat.r[i, j]:.6f},{mat.z[i, j]:.6f},"
                             f"{mat.p[i, j]:.6g},{mat.marker(i, j)}")
        written.append(_write(out / "correlations.csv", "\n".join(lines) + "\n"))
        corrs, waves = _flag_inputs(args, scores)
        n1 = mat.n
    else:
        corrs, waves = reference.correlations(), reference.published_waves()
        n1 = reference.N_COMPLETE
    written.append(_write(out / "waves.csv", _waves_csv(waves, args.n3)))
    written.extend(_write_flag_reports(args, corrs, waves, out))

    # n-curves for the strongest and weakest correlations.
    grid = EffectGrid(args.start, args.stop, args.step, "pearson_r")
    by_r = sorted(corrs, key=lambda c: abs(c[1]))
    chosen = [by_r[-1]] if len(by_r) == 1 else [by_r[-1], by_r[0]]
    spec = TestSpec("correlation", args.tail, args.alpha[0])
    for pair, r, n in chosen:
        curve = sweep_corr(r, n, spec, grid)
        stem = f"ncurve_{_slug(pair)}"
        written.append(_write(out / f"{stem}.csv", render(curve, "csv")))
        if curve.finite_points():
            title = f"n-curve for {pair}: alpha = {spec.alpha:g}"
            written.append(_write(out / f"{stem}.svg", render(curve, "svg", title)))

    run = RunConfig("report", {k: v for k, v in sorted(vars(args).items())
                               if k not in ("command", "config", "output_dir")})
    manifest = {
        "version": __version__,
        "config": run.to_dict(),
        "mode": "data" if args.data else "reference",
        "n1": n1,
        "inputs": inputs,
        "outputs": {p.name: _sha256(p) for p in sorted(written)},
    }
    mpath = _write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    sys.stdout.write(f"wrote {len(written)} files and {mpath}\n")
    return 0


COMMANDS = {
    "ttest": cmd_ttest,
    "corr": cmd_corr,
    "ncurve": cmd_ncurve,
    "wave": cmd_wave,
    "flags": cmd_flags,
    "report": cmd_report,
    "alpha": cmd_alpha,
}


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"wcrt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DomainError) as exc:
        print(f"wcrt {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DegenerateInputError, OSError) as exc:
        print(f"wcrt {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalFailure, ArithmeticError) as exc:
        print(f"wcrt {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
