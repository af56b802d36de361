#!/usr/bin/env python3
"""Print the full stability-threshold table and save it as CSV."""

import argparse

from psilab.harness import run_boundary_suite, write_boundary_csv


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="thresholds.csv", help="CSV destination")
    parser.add_argument("--tol", type=float, default=None,
                        help="bisection bracket width (default: per scheme)")
    args = parser.parse_args()

    rows = run_boundary_suite(tol=args.tol)
    width = max(len(r.scheme) for r in rows)
    for row in rows:
        crit = row.result.critical_mu
        crit_text = crit if isinstance(crit, str) else f"{crit:.8f}"
        ref = row.reference
        ref_text = "" if ref is None else (ref if isinstance(ref, str) else f"{ref:.8f}")
        mark = "" if row.passed is None else ("  ok" if row.passed else "  MISMATCH")
        print(f"{row.scheme:<{width}s}  mu* = {crit_text:<14s} reference {ref_text}{mark}")
    write_boundary_csv(args.out, rows)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
