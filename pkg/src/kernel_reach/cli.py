"""``kernel-reach`` command line: sample, reach, validate, bench, dp, mc."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import config as C
from .bench import run_bench
from .core import DimensionError
from .experiments import Setup, run_estimator, run_oracle, validate, validation_points
from .kernels import ConditioningError
from .oracles import UnsupportedSystemError
from .reachability import _jsonable

log = logging.getLogger("kernel_reach")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
HUGE_DIM = 100_000


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # flags are accepted before or after the subcommand; the subcommand copy must not reset them
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--config", type=Path, help="TOML run configuration", **kw)
    g.add_argument("--seed", type=int, help="master seed (overrides the config)", **kw)
    g.add_argument("--threads", type=int, help="cap on BLAS worker threads", **kw)
    g.add_argument("--out", type=Path, help="output directory (overrides output.dir)", **kw)
    g.add_argument("--huge", action="store_true", help=f"allow state dimensions above {HUGE_DIM}", **kw)
    g.add_argument("--set", dest="overrides", action="append", metavar="KEY=VALUE",
                   help="override any config key, e.g. --set rff.features=2000", **kw)
    g.add_argument("-v", "--verbose", action="store_true", **kw)
    return g


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(suppress=True)
    p = argparse.ArgumentParser(prog="kernel-reach", parents=[_global_flags(suppress=False)],
                                description="Stochastic reachability from kernel embeddings of sampled transitions.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("sample", parents=[common], help="generate a transition sample CSV")
    r = sub.add_parser("reach", parents=[common], help="fit an embedding and compute a safety field")
    r.add_argument("--method", choices=C.ESTIMATORS)
    sub.add_parser("validate", parents=[common], help="compare estimators against an oracle")
    b = sub.add_parser("bench", parents=[common], help="time methods and the scaling sweep")
    b.add_argument("--no-sweep", action="store_true", help="skip the repeated-quadrotor sweep")
    sub.add_parser("dp", parents=[common], help="gridded dynamic programming oracle")
    sub.add_parser("mc", parents=[common], help="Monte Carlo oracle at the probes or grid")
    return p


def load_config(args) -> C.RunConfig:
    overrides: dict = {}
    for text in args.overrides or []:
        overrides = C.merge(overrides, C.parse_override(text))
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    if args.out is not None:
        overrides = C.merge(overrides, {"output": {"dir": str(args.out)}})
    if args.huge:
        overrides["huge"] = True
    if getattr(args, "method", None):
        overrides["method"] = args.method
    if args.config is not None:
        return C.RunConfig.load(args.config, overrides)
    return C.RunConfig.from_dict(overrides)


def memory_estimate(cfg: C.RunConfig) -> int:
    """Bytes for states and successors (8 M n each) plus inputs."""
    M, n, m = cfg.sampling.size, cfg.state_dim, cfg.input_dim
    return 8 * M * (2 * n + m)


def check_scale(cfg: C.RunConfig) -> None:
    est = memory_estimate(cfg)
    if cfg.state_dim > HUGE_DIM:
        print(f"state dimension {cfg.state_dim}, M={cfg.sampling.size}: "
              f"sample storage about {est / 2**30:.2f} GiB", file=sys.stderr)
        if not cfg.huge:
            raise C.ConfigError(f"state dimension {cfg.state_dim} exceeds {HUGE_DIM}; rerun with --huge")


def out_dir(cfg: C.RunConfig) -> Path:
    d = Path(cfg.output.dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def write_json(path: Path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(doc), fh, indent=2)


def cmd_sample(cfg: C.RunConfig) -> Path:
    setup = Setup.from_config(cfg)
    sample = setup.sample()
    path = out_dir(cfg) / "sample.csv"
    sample.to_csv(path)
    log.info("wrote %d transitions to %s", sample.size, path)
    return path


def _write_field(cfg, fld, name):
    d = out_dir(cfg)
    fld.to_json(d / f"field_{name}.json")
    fld.to_csv(d / f"field_{name}.csv")
    return d / f"field_{name}.json"


def cmd_reach(cfg: C.RunConfig) -> Path:
    est = [m for m in cfg.methods if m in C.ESTIMATORS]
    if len(est) != 1:
        raise C.ConfigError("reach needs exactly one estimator method (exact or rff); "
                            "use 'dp' or 'mc' for the oracles")
    setup = Setup.from_config(cfg)
    res = run_estimator(setup, est[0], setup.points())
    res.field.meta["times"] = res.times
    return _write_field(cfg, res.field, est[0])


def cmd_dp(cfg: C.RunConfig) -> Path:
    if cfg.system.name != "integrator":
        raise C.ConfigError("the DP oracle supports the integrator only; use 'mc' for the quadrotor")
    setup = Setup.from_config(cfg)
    res = run_oracle(setup, "dp", setup.points())
    return _write_field(cfg, res.field, "dp")


def cmd_mc(cfg: C.RunConfig) -> Path:
    setup = Setup.from_config(cfg)
    res = run_oracle(setup, "mc", setup.probes())
    return _write_field(cfg, res.field, "mc")


def cmd_validate(cfg: C.RunConfig) -> dict:
    est = [m for m in cfg.methods if m in C.ESTIMATORS]
    ora = [m for m in cfg.methods if m in C.ORACLES]
    if not est or len(ora) != 1:
        raise C.ConfigError("validate needs method = [<estimator>..., <oracle>] with exactly one oracle, "
                            "e.g. method = [\"exact\", \"rff\", \"dp\"]")
    setup = Setup.from_config(cfg)
    res = validate(setup, est, ora[0])
    d = out_dir(cfg)
    _write_field(cfg, res["oracle"].field, ora[0])
    report = {"config": C.config_echo(cfg), "oracle": ora[0],
              "points": int(validation_points(setup, ora[0]).shape[0]), "results": {}}
    for m, cmp in res["comparisons"].items():
        _write_field(cfg, res["estimators"][m].field, m)
        cmp.to_csv(d / f"errors_{m}_vs_{ora[0]}.csv")
        report["results"][m] = {**cmp.summary(), "times": res["estimators"][m].times}
        print(f"{m:>6} vs {ora[0]}: max abs error {cmp.max_abs:.4f}, mean abs error {cmp.mean_abs:.4f}")
    write_json(d / "validate.json", report)
    return report


def cmd_bench(cfg: C.RunConfig, sweep: bool = True):
    report = run_bench(cfg, sweep=sweep)
    report.to_json(out_dir(cfg) / "bench.json")
    print(report.table())
    return report


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
        check_scale(cfg)
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=cfg.threads or None):
            if args.command == "sample":
                cmd_sample(cfg)
            elif args.command == "reach":
                cmd_reach(cfg)
            elif args.command == "validate":
                cmd_validate(cfg)
            elif args.command == "bench":
                cmd_bench(cfg, sweep=not args.no_sweep)
            elif args.command == "dp":
                cmd_dp(cfg)
            else:
                cmd_mc(cfg)
    except (C.ConfigError, DimensionError, UnsupportedSystemError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConditioningError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
