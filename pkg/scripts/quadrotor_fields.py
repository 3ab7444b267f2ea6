"""Planar quadrotor under LQR: RFF and exact fields on a state slice, checked by Monte Carlo at probes."""

import numpy as np
from _common import dump, load, parser

from kernel_reach.experiments import Setup, run_estimator, run_oracle


def main():
    p = parser(__doc__, "runs/quadrotor")
    p.add_argument("--noise", choices=["gaussian", "beta"], nargs="+", default=["gaussian", "beta"])
    args = p.parse_args()
    summary = {}
    for kind in args.noise:
        setup = Setup.from_config(load(f"quadrotor_{kind}", args))
        sample = setup.sample()
        probes = setup.probes()
        ref = run_oracle(setup, "mc", probes)
        out = args.out / kind
        out.mkdir(parents=True, exist_ok=True)
        summary[kind] = {}
        for m in ("rff", "exact"):
            grid = run_estimator(setup, m, setup.points(), sample)
            grid.field.to_csv(out / f"field_{m}.csv")
            at = run_estimator(setup, m, probes, sample)
            err = np.abs(at.field.values - ref.field.values)
            summary[kind][m] = {"max_abs_error": float(err.max()), "mean_abs_error": float(err.mean()),
                                "grid_seconds": grid.times["total"]}
            print(f"{kind:>8} {m:>5}: max abs error vs MC {err.max():.4f}, grid {grid.times['total']:.1f}s")
    dump(args.out / "summary.json", summary)


if __name__ == "__main__":
    main()
