"""Standalone plotting CLI over harness CSV files."""

from __future__ import annotations

import argparse
import sys

from .data import SchemaError
from .plots import PlotSpec, render_index_scatter, render_qps_recall


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fanns-report",
                                     description="Render benchmark figures from CSV")
    sub = parser.add_subparsers(dest="command", required=True)

    p_qr = sub.add_parser("qps-recall", help="QPS-recall panels with Pareto frontier")
    p_qr.add_argument("--in", dest="inputs", action="append", required=True)
    p_qr.add_argument("--out-dir", required=True)
    p_qr.add_argument("--group-by", default="dataset,scenario")
    p_qr.add_argument("--format", default="png", choices=["png", "svg"])

    p_ix = sub.add_parser("index-scatter", help="normalized build time vs size")
    p_ix.add_argument("--in", dest="input", required=True)
    p_ix.add_argument("--out-dir", required=True)
    p_ix.add_argument("--color-param", default=None)
    p_ix.add_argument("--format", default="png", choices=["png", "svg"])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "qps-recall":
            spec = PlotSpec(
                inputs=args.inputs,
                out_dir=args.out_dir,
                group_by=tuple(k.strip() for k in args.group_by.split(",") if k.strip()),
                fmt=args.format,
            )
            written = render_qps_recall(spec)
        else:
            written = render_index_scatter(
                args.input, args.out_dir, color_param=args.color_param, fmt=args.format
            )
        for path in written:
            print(path)
        return 0
    except (SchemaError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
