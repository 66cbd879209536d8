"""Flag-style entry point mirroring PlotSpec."""

from __future__ import annotations

import argparse
import json
import sys

from .plot import FIGURE_KINDS, PlotSpec, SchemaError, plot_summary


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regretplot", description="Render regret curves from summary CSVs"
    )
    parser.add_argument(
        "--summary",
        action="append",
        required=True,
        help="summary CSV path; repeat once per grid panel",
    )
    parser.add_argument("--kind", choices=FIGURE_KINDS, default="per_task_regret")
    parser.add_argument(
        "--output", required=True, help="output path stem; .png and .svg are written"
    )
    parser.add_argument(
        "--style",
        default=None,
        help="JSON object mapping agent names to colors",
    )
    parser.add_argument(
        "--panel-label",
        action="append",
        default=None,
        help="grid panel label; repeat once per input",
    )
    parser.add_argument("--title", default="")
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    style = {}
    if args.style:
        try:
            style = json.loads(args.style)
        except json.JSONDecodeError as exc:
            print(f"error: --style is not valid JSON: {exc}", file=sys.stderr)
            return 2
    try:
        spec = PlotSpec(
            inputs=tuple(args.summary),
            kind=args.kind,
            output=args.output,
            style=style,
            panel_labels=tuple(args.panel_label) if args.panel_label else (),
            title=args.title,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        written = plot_summary(spec)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
