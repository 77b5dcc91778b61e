"""plots CLI: metrics.csv (+ optional summary.json) -> chart image."""

import argparse
import sys

from .charts import KINDS, ChartSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots", description="render vnfmigsim result charts"
    )
    parser.add_argument("--kind", choices=KINDS, required=True)
    parser.add_argument("--in", dest="csv_path", required=True, metavar="metrics.csv")
    parser.add_argument("--out", dest="out_path", required=True, metavar="fig.png")
    parser.add_argument(
        "--summary",
        dest="summary_path",
        help="compare summary.json; switches energy/delay to the FG-count bucket view",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = ChartSpec(
        csv_path=args.csv_path,
        kind=args.kind,
        out_path=args.out_path,
        summary_path=args.summary_path,
    )
    try:
        out = render(spec)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
