#!/usr/bin/env python3
"""Emit the four published stability-surface grids as CSV files."""

import argparse

from psilab.harness import emit_figure_grids


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="figures", help="destination directory")
    args = parser.parse_args()
    for path in emit_figure_grids(args.outdir):
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
