"""Wall-clock benchmarks: per-phase medians and the repeated-quadrotor scaling sweep."""

from __future__ import annotations

import hashlib
import json
import os
import platform
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy

from . import config as C
from .experiments import Setup, run_estimator, run_oracle
from .reachability import _jsonable

PHASES = ("sample", "fit", "recursion", "total")


def environment() -> dict:
    from threadpoolctl import threadpool_info

    return {
        "python": platform.python_version(),
        "platform": platform.platform(),
        "machine": platform.machine(),
        "cpu_count": os.cpu_count(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "blas": [{k: p.get(k) for k in ("internal_api", "version", "num_threads")}
                 for p in threadpool_info()],
    }


def digest(values: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(values, dtype=float).tobytes()).hexdigest()[:16]


@dataclass
class MethodTiming:
    method: str
    dims: dict
    times: dict  # phase -> median seconds; None when the phase does not apply
    per_step: float
    runs: int
    deterministic: bool
    max_abs_error: dict = field(default_factory=dict)  # oracle -> error, only for oracles that ran


@dataclass
class SweepPoint:
    copies: int
    dim: int
    exact_total: float
    rff_total: float

    @property
    def ratio(self) -> float:
        return self.exact_total / self.rff_total


@dataclass
class BenchReport:
    system: str
    methods: list[MethodTiming]
    sweep: list[SweepPoint]
    environment: dict
    config: dict

    def to_dict(self) -> dict:
        doc = asdict(self)
        for p, s in zip(doc["sweep"], self.sweep):
            p["exact_over_rff"] = s.ratio
        doc["sweep_summary"] = sweep_summary(self.sweep)
        return _jsonable(doc)

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def table(self) -> str:
        rows = [f"{'method':<8}{'sample':>10}{'fit':>10}{'recursion':>11}{'total':>10}  max|err|"] if self.methods else []
        for m in self.methods:
            cells = [("-" if m.times[p] is None else f"{m.times[p]:.3f}") for p in PHASES]
            err = ", ".join(f"{k}={v:.4f}" for k, v in m.max_abs_error.items()) or "-"
            rows.append(f"{m.method:<8}{cells[0]:>10}{cells[1]:>10}{cells[2]:>11}{cells[3]:>10}  {err}")
        if self.sweep:
            if rows:
                rows.append("")
            rows.append(f"{'copies':>7}{'dim':>7}{'exact':>10}{'rff':>10}{'ratio':>8}")
            for s in self.sweep:
                rows.append(f"{s.copies:>7}{s.dim:>7}{s.exact_total:>10.3f}{s.rff_total:>10.3f}{s.ratio:>8.2f}")
        return "\n".join(rows)


def sweep_summary(sweep: list[SweepPoint]) -> dict:
    ratios = [s.ratio for s in sweep]
    return {
        "ratio_increasing": bool(all(b > a for a, b in zip(ratios, ratios[1:]))),
        "rff_faster_at_largest": bool(sweep and sweep[-1].rff_total < sweep[-1].exact_total),
    }


def _median_times(samples: list[dict]) -> dict:
    return {p: (float(np.median([s[p] for s in samples])) if p in samples[0] else None) for p in PHASES}


def time_method(setup: Setup, method: str, points, warmup: int, repeats: int):
    """Median phase times over ``repeats`` runs after ``warmup`` discarded runs."""
    runs, hashes, fld = [], set(), None
    for i in range(warmup + repeats):
        if method in C.ESTIMATORS:
            res = run_estimator(setup, method, points)
        else:
            res = run_oracle(setup, method, points)
        if i >= warmup:
            runs.append(res.times)
            hashes.add(digest(res.field.layers))
        fld = res.field
    return _median_times(runs), len(hashes) == 1, fld


def bench_methods(cfg: C.RunConfig) -> list[MethodTiming]:
    setup = Setup.from_config(cfg)
    pts = setup.points()
    out, fields = [], {}
    for m in cfg.bench.methods:
        times, det, fld = time_method(setup, m, pts, cfg.bench.warmup, cfg.bench.repeats)
        fields[m] = fld
        N = setup.problem.horizon
        dims = {"n": cfg.state_dim, "N": N, "grid": int(pts.shape[0])}
        if m in C.ESTIMATORS:
            dims["M"] = int(cfg.sampling.size)
        if m == "rff":
            dims["D"] = int(cfg.rff.features)
        out.append(MethodTiming(m, dims, times, times["recursion"] / max(N, 1), cfg.bench.repeats, det))
    for entry in out:
        for oracle in C.ORACLES:
            if oracle in fields and entry.method in C.ESTIMATORS:
                err = np.abs(fields[entry.method].values - fields[oracle].values)
                entry.max_abs_error[oracle] = float(err.max())
    return out


def sweep_config(cfg: C.RunConfig, copies: int) -> C.RunConfig:
    """Repeated quadrotor with ``copies`` copies at the bench sample/feature sizes, one evaluation point."""
    out = cfg.with_overrides({
        "method": ["exact", "rff"],
        "system": {"name": "repeated_quadrotor", "copies": copies},
        "disturbance": {"kind": "gaussian", "variance": [1e-3, 1e-5] * 3},
        "sampling": {"size": int(cfg.bench.size), "initial": "slice", "file": "",
                     "lower": None, "upper": None, "center": None},
        "rff": {"features": int(cfg.bench.features)},
        "problem": {"horizon": int(cfg.bench.horizon), "policy": "lqr"},
        "grid": {"kind": "points", "points": None, "lower": None, "upper": None, "fixed": {}},
        "oracle": {"probes": None},
    })
    out.grid.points = [C.reference_state(out).tolist()]
    return out


def scaling_sweep(cfg: C.RunConfig) -> list[SweepPoint]:
    out = []
    for copies in cfg.bench.copies:
        c = sweep_config(cfg, int(copies))
        setup = Setup.from_config(c)
        pts = setup.points()
        te, _, _ = time_method(setup, "exact", pts, c.bench.warmup, c.bench.repeats)
        tr, _, _ = time_method(setup, "rff", pts, c.bench.warmup, c.bench.repeats)
        out.append(SweepPoint(int(copies), c.state_dim, te["total"], tr["total"]))
    return out


def run_bench(cfg: C.RunConfig, sweep: bool = True) -> BenchReport:
    methods = bench_methods(cfg)
    points = scaling_sweep(cfg) if sweep and cfg.bench.copies else []
    return BenchReport(cfg.system.name, methods, points, environment(), C.config_echo(cfg))

