"""Run configuration: TOML sections -> validated dataclasses -> model objects."""

from __future__ import annotations

import copy
import sys
import zlib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import systems as S
from .core import HyperRectangle, SafetyProblem, TransitionSample, zero_policy
from .embedding import ExactEmbedding, RffEmbedding, fit_exact, fit_rff
from .kernels import GaussianKernel
from .oracles import DpGrid
from .reachability import grid_points
from .rff import joint_features
from .sampling import (FixedList, GaussianAround, SamplingPlan, UniformOverBox, UniformSlice,
                       generate_sample)

ESTIMATORS = ("exact", "rff")
ORACLES = ("dp", "mc")


class ConfigError(ValueError):
    pass


def derive_seed(master: int, name: str) -> int:
    """Stable 32-bit seed for the named stream under ``master``."""
    ss = np.random.SeedSequence([int(master), zlib.crc32(name.encode())])
    return int(ss.generate_state(1)[0])


@dataclass
class SystemConfig:
    name: str = "integrator"
    dt: float = 0.25
    copies: int = 1
    spacing: float = 2.0


@dataclass
class DisturbanceConfig:
    kind: str = "gaussian"
    variance: Any = 0.01
    alpha: float = 2.0
    beta: float = 0.5
    rate: float = 3.0
    scale: float = 0.1


@dataclass
class SamplingConfig:
    size: int = 2500
    initial: str = "uniform"
    lower: list | None = None
    upper: list | None = None
    center: list | None = None
    variance: Any = 0.25
    slice_axes: list = field(default_factory=lambda: [0, 2])
    slice_lower: list = field(default_factory=lambda: [-1.1, -0.1])
    slice_upper: list = field(default_factory=lambda: [1.1, 1.0])
    sd: float = 0.1
    points: list | None = None
    file: str = ""


@dataclass
class KernelConfig:
    sigma_x: float = 0.1
    sigma_u: float = 0.1
    lam: float = 1.0
    ridge_scaling: str = "none"


@dataclass
class RffConfig:
    features: int = 15000
    mode: str = "concatenated"
    solver: str = "auto"
    input_features: int = 0


@dataclass
class ProblemConfig:
    horizon: int = 5
    policy: str = "zero"
    clamp: bool = True


@dataclass
class GridConfig:
    kind: str = "cells"
    lower: list | None = None
    upper: list | None = None
    resolution: Any = 100
    fixed: dict = field(default_factory=dict)
    points: list | None = None


@dataclass
class OracleConfig:
    dp_resolution: int = 100
    dp_lookup: str = "linear"
    mc_trials: int = 100_000
    probes: list | None = None


@dataclass
class BenchConfig:
    warmup: int = 1
    repeats: int = 3
    copies: list = field(default_factory=lambda: [10, 100, 1000])
    size: int = 1000
    features: int = 2000
    horizon: int = 1
    methods: list = field(default_factory=lambda: ["exact", "rff", "dp"])


@dataclass
class OutputConfig:
    dir: str = "out"


_SECTIONS = {
    "system": SystemConfig, "disturbance": DisturbanceConfig, "sampling": SamplingConfig,
    "kernel": KernelConfig, "rff": RffConfig, "problem": ProblemConfig, "grid": GridConfig,
    "oracle": OracleConfig, "bench": BenchConfig, "output": OutputConfig,
}


@dataclass
class RunConfig:
    seed: int = 0
    method: Any = "exact"
    threads: int = 0
    huge: bool = False
    system: SystemConfig = field(default_factory=SystemConfig)
    disturbance: DisturbanceConfig = field(default_factory=DisturbanceConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    kernel: KernelConfig = field(default_factory=KernelConfig)
    rff: RffConfig = field(default_factory=RffConfig)
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    bench: BenchConfig = field(default_factory=BenchConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    # ------------------------------------------------------------------ loading
    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        doc = copy.deepcopy(doc)
        cfg = cls()
        top = {f.name for f in fields(cls)} - set(_SECTIONS)
        for key, val in doc.items():
            if key in _SECTIONS:
                if not isinstance(val, dict):
                    raise ConfigError(f"[{key}] must be a table")
                section = getattr(cfg, key)
                known = {f.name for f in fields(section)}
                for k, v in val.items():
                    if k not in known:
                        raise ConfigError(f"unknown key {key}.{k}")
                    setattr(section, k, v)
            elif key in top:
                setattr(cfg, key, val)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path, overrides: dict | None = None) -> "RunConfig":
        try:
            with open(path, "rb") as fh:
                doc = tomllib.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file {path} not found") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(merge(doc, overrides or {}))

    def to_dict(self) -> dict:
        return asdict(self)

    def with_overrides(self, overrides: dict) -> "RunConfig":
        return RunConfig.from_dict(merge(self.to_dict(), overrides))

    # --------------------------------------------------------------- validation
    @property
    def methods(self) -> list[str]:
        m = self.method if isinstance(self.method, list) else [self.method]
        return [str(x) for x in m]

    @property
    def state_dim(self) -> int:
        base = 2 if self.system.name == "integrator" else 6
        return base * self.copies

    @property
    def input_dim(self) -> int:
        base = 1 if self.system.name == "integrator" else 2
        return base * self.copies

    @property
    def copies(self) -> int:
        return int(self.system.copies) if self.system.name == "repeated_quadrotor" else 1

    def validate(self) -> None:
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.system.name in ("integrator", "quadrotor", "repeated_quadrotor"),
             f"unknown system {self.system.name!r}")
        need(int(self.system.copies) >= 1, "system.copies must be >= 1")
        need(self.system.dt > 0, "system.dt must be positive")
        for m in self.methods:
            need(m in ESTIMATORS + ORACLES, f"unknown method {m!r}")
        need(self.disturbance.kind in ("gaussian", "beta", "exponential", "none"),
             f"unknown disturbance {self.disturbance.kind!r}")
        need(isinstance(self.sampling.size, int) and self.sampling.size >= 1,
             "sampling.size must be a positive integer")
        need(self.sampling.initial in ("uniform", "gaussian", "slice", "list"),
             f"unknown initial distribution {self.sampling.initial!r}")
        need(self.kernel.sigma_x > 0 and self.kernel.sigma_u > 0, "kernel bandwidths must be positive")
        need(self.kernel.lam > 0, "kernel.lam must be positive")
        need(self.kernel.ridge_scaling in ("none", "sample_size"), "unknown ridge_scaling")
        need(int(self.rff.features) >= 1, "rff.features must be >= 1")
        need(self.rff.mode in ("concatenated", "tensor"), f"unknown rff.mode {self.rff.mode!r}")
        need(self.rff.solver in ("auto", "primal", "dual"), "unknown rff.solver")
        need(int(self.problem.horizon) >= 0, "problem.horizon must be >= 0")
        need(self.problem.policy in ("zero", "lqr"), f"unknown policy {self.problem.policy!r}")
        need(not (self.problem.policy == "lqr" and self.system.name == "integrator"),
             "the LQR policy is defined for the quadrotor only")
        need(self.grid.kind in ("cells", "lattice", "points"), f"unknown grid kind {self.grid.kind!r}")
        need(self.oracle.dp_lookup in ("linear", "backup"), "oracle.dp_lookup must be linear or backup")
        need(self.oracle.mc_trials >= 1, "oracle.mc_trials must be >= 1")
        need(self.bench.repeats >= 3 and self.bench.warmup >= 1,
             "bench needs >= 1 warm-up and >= 3 measured iterations")

        n = self.state_dim
        d = self.disturbance
        if d.kind == "gaussian":
            var = np.atleast_1d(np.asarray(d.variance, dtype=float))
            base_n = n // self.copies
            need(var.size in (1, base_n, n), f"disturbance.variance needs 1, {base_n} or {n} entries")
            need(np.all(var >= 0), "disturbance variances must be nonnegative")
        s = self.sampling
        for name in ("lower", "upper", "center"):
            val = getattr(s, name)
            if val is not None:
                need(len(val) == n, f"sampling.{name} has {len(val)} entries, system has {n}")
        if s.initial == "list":
            need(s.points is not None and len(s.points) > 0, "sampling.points required for a list")
            need(all(len(p) == n for p in s.points), "sampling.points have the wrong dimension")
        if s.initial == "slice":
            need(len(s.slice_axes) == len(s.slice_lower) == len(s.slice_upper),
                 "slice axes and bounds differ in length")
            need(all(0 <= a < n for a in s.slice_axes), "slice axis out of range")
        g = self.grid
        for name in ("lower", "upper"):
            val = getattr(g, name)
            if val is not None:
                need(len(val) == n, f"grid.{name} has {len(val)} entries, system has {n}")
        if g.points is not None:
            need(all(len(p) == n for p in g.points), "grid.points have the wrong dimension")
        if g.kind == "points" and g.points is not None:
            need(len(g.points) > 0, "grid.points is empty")
        for key in g.fixed:
            need(0 <= int(key) < n, f"grid.fixed axis {key} out of range")
        if self.oracle.probes is not None:
            need(all(len(p) == n for p in self.oracle.probes), "oracle.probes have the wrong dimension")
        if "dp" in self.methods:
            need(self.system.name == "integrator",
                 "the DP oracle supports the affine integrator only; use method 'mc' instead")
            need(d.kind in ("gaussian", "none"),
                 "the DP oracle needs Gaussian (diagonal) noise; use method 'mc' instead")


def merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = v
    return out


def parse_override(text: str) -> dict:
    """``section.key=value`` (value in TOML syntax, bare words as strings) -> nested dict."""
    key, sep, val = text.partition("=")
    if not sep:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    try:
        parsed = tomllib.loads(f"v = {val}")["v"]
    except tomllib.TOMLDecodeError:
        parsed = val
    out: dict = {}
    cur = out
    parts = key.strip().split(".")
    for p in parts[:-1]:
        cur = cur.setdefault(p, {})
    cur[parts[-1]] = parsed
    return out


# ---------------------------------------------------------------------- builders


def build_disturbance(cfg: RunConfig) -> S.Disturbance:
    d = cfg.disturbance
    base_n = cfg.state_dim // cfg.copies
    if d.kind == "gaussian":
        var = np.atleast_1d(np.asarray(d.variance, dtype=float))
        if var.size == 1:
            var = np.full(base_n, var[0])
        dist = S.gaussian(var)
        return dist.tile(cfg.copies) if var.size == base_n else dist
    if d.kind == "beta":
        return S.scaled_beta(d.alpha, d.beta, d.scale, cfg.state_dim)
    if d.kind == "exponential":
        return S.scaled_exponential(d.rate, d.scale, cfg.state_dim)
    return S.Disturbance("none", cfg.state_dim)


def build_system(cfg: RunConfig) -> S.SystemModel:
    dist = build_disturbance(cfg)
    if cfg.system.name == "integrator":
        return S.integrator(dist, cfg.system.dt)
    params = S.QuadrotorParams(dt=cfg.system.dt)
    if cfg.system.name == "quadrotor":
        return S.quadrotor(dist, params)
    base = S.quadrotor(S.Disturbance("none", 6), params)
    return S.repeated_system(base, cfg.copies).with_disturbance(dist)


def build_policy(cfg: RunConfig):
    if cfg.problem.policy == "zero":
        return zero_policy(cfg.state_dim, cfg.input_dim)
    params = S.QuadrotorParams(dt=cfg.system.dt)
    return S.hover_lqr_policy(params, copies=cfg.copies, spacing=cfg.system.spacing)


def build_problem(cfg: RunConfig) -> SafetyProblem:
    if cfg.system.name == "integrator":
        K, T = S.integrator_sets()
    elif cfg.system.name == "quadrotor":
        K, T = S.quadrotor_sets()
    else:
        K, T = S.repeated_quadrotor_sets(cfg.copies, cfg.system.spacing)
    return SafetyProblem(int(cfg.problem.horizon), K, T, build_policy(cfg))


def reference_state(cfg: RunConfig) -> np.ndarray:
    if cfg.system.name == "integrator":
        return np.zeros(2)
    ref = np.tile(S.HOVER_REFERENCE, cfg.copies)
    ref[0::6] += cfg.system.spacing * np.arange(cfg.copies)
    return ref


def build_initial(cfg: RunConfig, problem: SafetyProblem):
    s = cfg.sampling
    n = cfg.state_dim
    if s.initial == "uniform":
        if s.lower is not None and s.upper is not None:
            box = HyperRectangle(s.lower, s.upper)
        else:
            box = problem.safe_set
            if not isinstance(box, HyperRectangle) or not np.all(box.bounded):
                raise ConfigError("uniform sampling over an unbounded safe set; give sampling.lower/upper")
        return UniformOverBox(HyperRectangle(box.lower, box.upper))
    if s.initial == "gaussian":
        center = reference_state(cfg) if s.center is None else np.asarray(s.center, dtype=float)
        var = np.asarray(s.variance, dtype=float)
        return GaussianAround(center, np.broadcast_to(var, (n,)) if var.ndim == 0 else var)
    if s.initial == "slice":
        center = reference_state(cfg) if s.center is None else np.asarray(s.center, dtype=float)
        # slice bounds are given for the first copy; later copies shift with the reference
        base = n // cfg.copies
        ref = reference_state(cfg)
        axes, lo, hi = [], [], []
        for c in range(cfg.copies):
            for a, l, h in zip(s.slice_axes, s.slice_lower, s.slice_upper):
                j = c * base + int(a)
                shift = ref[j] - ref[int(a)]
                axes.append(j)
                lo.append(l + shift)
                hi.append(h + shift)
        return UniformSlice(np.array(axes), np.array(lo), np.array(hi), center, float(s.sd))
    return FixedList(np.asarray(s.points, dtype=float))


def build_sample(cfg: RunConfig, system: S.SystemModel, problem: SafetyProblem) -> TransitionSample:
    if cfg.sampling.file:
        sample = TransitionSample.from_csv(cfg.sampling.file)
        if sample.state_dim != cfg.state_dim or sample.input_dim != cfg.input_dim:
            raise ConfigError("sample file dimensions do not match the configured system")
        return sample
    plan = SamplingPlan(build_initial(cfg, problem), cfg.sampling.size, problem.policy,
                        derive_seed(cfg.seed, "sample"))
    return generate_sample(system, plan)


def build_embedding(cfg: RunConfig, sample: TransitionSample, method: str) -> ExactEmbedding | RffEmbedding:
    k = cfg.kernel
    if method == "exact":
        return fit_exact(sample, GaussianKernel(k.sigma_x), GaussianKernel(k.sigma_u), k.lam,
                         k.ridge_scaling)
    if method == "rff":
        feats = joint_features(cfg.rff.mode, sample.state_dim, sample.input_dim, int(cfg.rff.features),
                               k.sigma_x, k.sigma_u, derive_seed(cfg.seed, "rff"),
                               D_u=int(cfg.rff.input_features) or None)
        return fit_rff(sample, feats, k.lam, k.ridge_scaling, cfg.rff.solver)
    raise ConfigError(f"{method!r} is not an estimator")


def dp_grid(cfg: RunConfig) -> DpGrid:
    K, _ = S.integrator_sets()
    return DpGrid.over(K, int(cfg.oracle.dp_resolution))


def eval_points(cfg: RunConfig, problem: SafetyProblem) -> np.ndarray:
    g = cfg.grid
    if g.kind == "points":
        if not g.points:
            raise ConfigError("grid.points required for kind='points'")
        return np.asarray(g.points, dtype=float)
    K = problem.safe_set
    if g.lower is not None and g.upper is not None:
        box = HyperRectangle(g.lower, g.upper)
    elif isinstance(K, HyperRectangle):
        box = HyperRectangle(K.lower, K.upper)
    else:
        raise ConfigError("grid.lower/upper required for product safe sets")
    if g.kind == "cells":
        if np.any(~box.bounded):
            raise ConfigError("cell grids need a bounded box")
        return DpGrid(box.lower, box.upper, g.resolution).points
    fixed = {int(k): float(v) for k, v in g.fixed.items()}
    return grid_points(box, g.resolution, fixed)


def probe_points(cfg: RunConfig) -> np.ndarray | None:
    if cfg.oracle.probes is None:
        return None
    return np.asarray(cfg.oracle.probes, dtype=float)


def config_echo(cfg: RunConfig) -> dict[str, Any]:
    out = cfg.to_dict()
    out["derived_seeds"] = {name: derive_seed(cfg.seed, name) for name in ("sample", "rff", "mc")}
    return out


def load_default(name: str) -> Path:
    """Path of a configuration shipped in the repository's ``configs/`` directory."""
    return Path(__file__).resolve().parents[2] / "configs" / f"{name}.toml"
