"""Write a seeded synthetic survey (463 rows, 48 incomplete) plus its scale config."""

import argparse

from wcrt.synthetic import SyntheticSurveyConfig, write_survey


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--output-dir", default="results/synthetic")
    ap.add_argument("--seed", type=int, default=SyntheticSurveyConfig.seed)
    ap.add_argument("--drift", type=float, default=SyntheticSurveyConfig.drift,
                    help="how much late respondents' correlations shrink")
    args = ap.parse_args()
    data, cfg = write_survey(args.output_dir, SyntheticSurveyConfig(seed=args.seed, drift=args.drift))
    print(f"wrote {data} and {cfg}")
    print(f"try: wcrt report --data {data} --scales {cfg} --output-dir results/synthetic_report")


if __name__ == "__main__":
    main()
