"""Empirical convergence: exact-estimator MSE against M and the RFF-to-exact gap against D."""

import argparse
import json
from pathlib import Path

from kernel_reach.experiments import exact_mse_trend, rff_gap_trend, strictly_decreasing


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", type=Path, default=Path("runs/convergence"))
    p.add_argument("--sizes", type=int, nargs="+", default=[250, 500, 1000, 2000])
    p.add_argument("--features", type=int, nargs="+", default=[100, 1000, 10_000])
    args = p.parse_args()
    mse = exact_mse_trend(sizes=tuple(args.sizes))
    gap = rff_gap_trend(features=tuple(args.features))
    for M, v in mse.items():
        print(f"M={M:>6}  median MSE {v:.5f}")
    for D, v in gap.items():
        print(f"D={D:>6}  median gap {v:.5f}")
    print(f"decreasing: mse={strictly_decreasing(mse.values())} gap={strictly_decreasing(gap.values())}")
    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "convergence.json", "w") as fh:
        json.dump({"mse_by_size": mse, "gap_by_features": gap}, fh, indent=2)


if __name__ == "__main__":
    main()
