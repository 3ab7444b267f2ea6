"""Double integrator with Gaussian noise: exact and RFF fields against the DP oracle."""

from _common import dump, load, parser

from kernel_reach.experiments import Setup, validate


def main():
    args = parser(__doc__, "runs/integrator").parse_args()
    setup = Setup.from_config(load("integrator_gaussian", args))
    res = validate(setup, ["exact", "rff"], "dp")
    args.out.mkdir(parents=True, exist_ok=True)
    res["oracle"].field.to_csv(args.out / "field_dp.csv")
    summary = {}
    for m, cmp in res["comparisons"].items():
        res["estimators"][m].field.to_csv(args.out / f"field_{m}.csv")
        cmp.to_csv(args.out / f"errors_{m}_vs_dp.csv")
        summary[m] = {**cmp.summary(), "times": res["estimators"][m].times}
        print(f"{m:>6}: max abs error {cmp.max_abs:.4f}, mean {cmp.mean_abs:.4f}, "
              f"{res['estimators'][m].times['total']:.1f}s")
    dump(args.out / "summary.json", summary)


if __name__ == "__main__":
    main()
