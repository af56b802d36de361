#!/usr/bin/env python3
"""Sweep the CFL number across a scheme's stability boundary.

Runs the worst Fourier mode for each requested cfl and prints the final and
peak norm ratios, which bracket the closed-form threshold empirically.
"""

import argparse

import numpy as np

from psilab.harness import (
    ExperimentConfig,
    parse_scheme_name,
    run_simulation,
    stability_verdict,
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scheme", default="hyp-dtp-lie-fe")
    parser.add_argument("--cfl", type=float, nargs="+", default=None,
                        help="explicit cfl values (default: around the documented threshold)")
    parser.add_argument("--steps", type=int, default=1000)
    parser.add_argument("--n-x", type=int, default=64)
    parser.add_argument("--n-v", type=int, default=4)
    parser.add_argument("--rank", type=int, default=None,
                        help="default: the probe's minimum faithful rank")
    args = parser.parse_args()

    info = parse_scheme_name(args.scheme)
    hyperbolic = info.spec.equation == "hyperbolic"
    cfls = args.cfl
    if cfls is None:
        ref = info.reference if isinstance(info.reference, float) else 1.0
        cfls = [round(ref + d, 4) for d in (-0.02, -0.01, 0.0, 0.01, 0.02)]

    print(f"{args.scheme}: worst-mode sweep, {args.steps} steps, N_x = {args.n_x}")
    for cfl in cfls:
        rank = args.rank if args.rank is not None else (2 if hyperbolic else 1)
        cfg = ExperimentConfig(
            scheme=info.spec,
            n_x=args.n_x, n_v=args.n_v, rank=rank, cfl=cfl, steps=args.steps,
            coefficient="linear" if hyperbolic else "square",
            initial_data="worst_mode",
        )
        records = run_simulation(cfg)
        initial = records[0].frobenius
        final = records[-1].frobenius / initial
        peak = max(r.frobenius for r in records) / initial
        verdict = "stable" if stability_verdict(records) else "GROWING"
        print(f"  cfl = {cfl:<8g} final/initial = {final:<12.6g} "
              f"peak/initial = {peak:<12.6g} {verdict}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
