"""Command-line interface.

Subcommands: ``analyze`` (contour CSV of one scheme's stability surface),
``boundary`` (threshold table), ``simulate`` (norm history of a configured
run), ``verify`` (stepper vs closed-form oracle report), ``figures`` (the
four published surface grids).
"""

from __future__ import annotations

import argparse
import sys

from .amplification import contour_grid
from .harness import (
    BOUNDARY_SUITE,
    ConfigError,
    emit_figure_grids,
    parse_config,
    parse_scheme_name,
    run_boundary_suite,
    run_simulation,
    stability_verdict,
    verify_report,
    write_boundary_csv,
    write_contour_csv,
    write_history_csv,
)

_ORACLE_BOUND = 1e-10


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psilab",
        description="Low-rank integrator stability laboratory.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="contour CSV of a stability surface")
    analyze.add_argument("--scheme", required=True, help="public scheme name")
    analyze.add_argument("--out", required=True, help="output CSV path")
    analyze.add_argument("--y-points", type=int, default=401)
    analyze.add_argument("--mu-points", type=int, default=401)
    analyze.add_argument("--mu-max", type=float, default=None,
                         help="default: the scheme's documented plot range")

    boundary = sub.add_parser("boundary", help="stability threshold table")
    boundary.add_argument("--scheme", default=None,
                          help="single scheme (default: the full suite)")
    boundary.add_argument("--tol", type=float, default=None,
                          help="bisection bracket width (default: per scheme)")
    boundary.add_argument("--mu-cap", type=float, default=None,
                          help="search cap (default: per scheme)")
    boundary.add_argument("--out", required=True, help="output CSV path")

    simulate = sub.add_parser("simulate", help="run a configured experiment")
    simulate.add_argument("--config", required=True, help="experiment config file")
    simulate.add_argument("--out", required=True, help="norm-history CSV path")

    verify = sub.add_parser("verify", help="stepper vs closed-form oracle check")
    verify.add_argument("--scheme", default=None,
                        help="single scheme (default: every family)")

    figures = sub.add_parser("figures", help="emit the four surface grids")
    figures.add_argument("--outdir", required=True)

    return parser


def _cmd_analyze(args) -> int:
    info = parse_scheme_name(args.scheme)
    mu_max = args.mu_max if args.mu_max is not None else info.contour_mu_max
    table = contour_grid(info.surface, args.y_points, args.mu_points, mu_max)
    write_contour_csv(args.out, table)
    print(f"{args.scheme}: {table.shape[0]} rows "
          f"({args.y_points} x {args.mu_points}, mu <= {mu_max:g}) -> {args.out}")
    return 0


def _cmd_boundary(args) -> int:
    names = [args.scheme] if args.scheme else list(BOUNDARY_SUITE)
    rows = run_boundary_suite(names, tol=args.tol, mu_cap=args.mu_cap)
    write_boundary_csv(args.out, rows)
    for row in rows:
        crit = row.result.critical_mu
        crit_text = crit if isinstance(crit, str) else f"{crit:.6f}"
        if row.passed is None:
            status = "(no documented threshold)"
        else:
            expect = row.reference
            expect_text = expect if isinstance(expect, str) else f"{expect:.6f}"
            status = f"expected {expect_text}: {'PASS' if row.passed else 'FAIL'}"
        print(f"{row.scheme:<22s} critical_mu = {crit_text:<14s} {status}")
    print(f"wrote {args.out}")
    return 0


def _cmd_simulate(args) -> int:
    with open(args.config, "r", encoding="utf-8") as handle:
        cfg = parse_config(handle.read())
    records = run_simulation(cfg)
    write_history_csv(args.out, records)
    verdict = "stable" if stability_verdict(records) else "GROWING"
    print(
        f"{cfg.steps} steps: frobenius {records[0].frobenius:.6e} -> "
        f"{records[-1].frobenius:.6e} ({verdict}) -> {args.out}"
    )
    return 0


def _cmd_verify(args) -> int:
    names = (args.scheme,) if args.scheme else None
    lines, overall = verify_report(names)
    for line in lines:
        print(line)
    ok = overall <= _ORACLE_BOUND
    print(f"overall max discrepancy = {overall:.3e} "
          f"({'PASS' if ok else 'FAIL'}, bound {_ORACLE_BOUND:.0e})")
    return 0 if ok else 1


def _cmd_figures(args) -> int:
    for path in emit_figure_grids(args.outdir):
        print(f"wrote {path}")
    return 0


_COMMANDS = {
    "analyze": _cmd_analyze,
    "boundary": _cmd_boundary,
    "simulate": _cmd_simulate,
    "verify": _cmd_verify,
    "figures": _cmd_figures,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
