"""Repeated quadrotor timing sweep: exact against RFF as the number of copies grows."""

from _common import dump, load, parser

from kernel_reach.bench import BenchReport, environment, scaling_sweep
from kernel_reach.config import config_echo


def main():
    args = parser(__doc__, "runs/sweep").parse_args()
    cfg = load("repeated_quadrotor_bench", args)
    report = BenchReport("repeated_quadrotor", [], scaling_sweep(cfg), environment(), config_echo(cfg))
    print(report.table())
    dump(args.out / "sweep.json", report.to_dict())


if __name__ == "__main__":
    main()
