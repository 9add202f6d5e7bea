"""``plots`` command line tool: render a simulator CSV into a PNG."""

from __future__ import annotations

import argparse
import sys

from .render import PlotSpec, SchemaError, render_curves, render_llr_hist


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plots", description=__doc__)
    parser.add_argument("--kind", required=True, choices=["air", "ber", "llr"])
    parser.add_argument("--in", dest="input_csv", required=True, help="input CSV path")
    parser.add_argument("--out", dest="output", required=True, help="output image path")
    parser.add_argument("--title", default=None)
    args = parser.parse_args(argv)
    spec = PlotSpec(input_csv=args.input_csv, kind=args.kind, output=args.output, title=args.title)
    try:
        if args.kind == "llr":
            render_llr_hist(spec)
        else:
            render_curves(spec)
    except (SchemaError, OSError) as exc:
        print(f"plots: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
