"""Config-driven runs shared by the CLI, the scripts and the acceptance suite."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import config as C
from .core import SafetyProblem, TransitionSample
from .embedding import ExactEmbedding, RffEmbedding, fit_exact, fit_rff
from .kernels import GaussianKernel
from .oracles import dp_lookup, dp_solve, hoeffding_radius, mc_field
from .reachability import SafetyField, backward_recursion
from .rff import joint_features
from .systems import SystemModel, gaussian, integrator


@dataclass
class Setup:
    cfg: C.RunConfig
    system: SystemModel
    problem: SafetyProblem

    @classmethod
    def from_config(cls, cfg: C.RunConfig) -> "Setup":
        return cls(cfg, C.build_system(cfg), C.build_problem(cfg))

    def sample(self) -> TransitionSample:
        return C.build_sample(self.cfg, self.system, self.problem)

    def points(self) -> np.ndarray:
        return C.eval_points(self.cfg, self.problem)

    def probes(self) -> np.ndarray:
        p = C.probe_points(self.cfg)
        return self.points() if p is None else p


@dataclass
class Timed:
    field: SafetyField
    times: dict[str, float]


def run_estimator(setup: Setup, method: str, points, sample: TransitionSample | None = None) -> Timed:
    """Fit ``method`` and run the backward recursion at ``points`` with phase timings."""
    t0 = time.perf_counter()
    if sample is None:
        sample = setup.sample()
    t1 = time.perf_counter()
    emb = C.build_embedding(setup.cfg, sample, method)
    t2 = time.perf_counter()
    meta = {"config": C.config_echo(setup.cfg)}
    fld = backward_recursion(setup.problem, emb, points, clamp=setup.cfg.problem.clamp, meta=meta)
    t3 = time.perf_counter()
    times = {"sample": t1 - t0, "fit": t2 - t1, "recursion": t3 - t2, "total": t3 - t0}
    return Timed(fld, times)


def run_oracle(setup: Setup, oracle: str, points) -> Timed:
    """DP (exact on its grid, one exact backup elsewhere) or Monte Carlo values at ``points``."""
    t0 = time.perf_counter()
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if oracle == "dp":
        grid = C.dp_grid(setup.cfg)
        sol = dp_solve(setup.problem, setup.system, grid)
        if pts.shape == sol.points.shape and np.array_equal(pts, sol.points):
            fld = sol
        else:
            how = setup.cfg.oracle.dp_lookup
            N = setup.problem.horizon
            last = setup.problem.masks(pts)[0].astype(float)
            layers = np.stack([dp_lookup(sol, grid, pts, setup.problem, setup.system, how, k)
                               for k in range(N)] + [last])
            fld = SafetyField(pts, layers, {**sol.meta, "lookup": how})
    elif oracle == "mc":
        fld = mc_field(setup.problem, setup.system, pts, int(setup.cfg.oracle.mc_trials),
                       C.derive_seed(setup.cfg.seed, "mc"))
    else:
        raise C.ConfigError(f"{oracle!r} is not an oracle")
    fld.meta["config"] = C.config_echo(setup.cfg)
    dt = time.perf_counter() - t0
    return Timed(fld, {"recursion": dt, "total": dt})


@dataclass
class Comparison:
    estimator: str
    oracle: str
    points: np.ndarray
    estimate: np.ndarray
    reference: np.ndarray
    allowance: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def abs_error(self) -> np.ndarray:
        return np.abs(self.estimate - self.reference)

    @property
    def max_abs(self) -> float:
        return float(self.abs_error.max())

    @property
    def mean_abs(self) -> float:
        return float(self.abs_error.mean())

    def to_csv(self, path) -> None:
        cols = [f"x{i + 1}" for i in range(self.points.shape[1])]
        cols += [self.estimator, self.oracle, "abs_error"]
        np.savetxt(path, np.column_stack([self.points, self.estimate, self.reference, self.abs_error]),
                   delimiter=",", header=",".join(cols), comments="", fmt="%.17g")

    def summary(self) -> dict:
        return {"estimator": self.estimator, "oracle": self.oracle, "points": int(self.points.shape[0]),
                "max_abs_error": self.max_abs, "mean_abs_error": self.mean_abs,
                "oracle_allowance": self.allowance}


def compare(a: SafetyField, b: SafetyField, name_a: str, name_b: str) -> Comparison:
    if a.points.shape != b.points.shape or not np.allclose(a.points, b.points):
        raise ValueError("fields are evaluated on different points")
    allowance = float(b.meta.get("radius99", 0.0))
    return Comparison(name_a, name_b, a.points, a.values, b.values, allowance)


def validation_points(setup: Setup, oracle: str) -> np.ndarray:
    """MC oracles are run at the probes; DP oracles on the full evaluation grid."""
    return setup.probes() if oracle == "mc" else setup.points()


def validate(setup: Setup, estimators, oracle: str) -> dict:
    """Estimators and one oracle on the same points, sharing one transition sample."""
    pts = validation_points(setup, oracle)
    ref = run_oracle(setup, oracle, pts)
    sample = setup.sample()
    out = {"oracle": ref, "estimators": {}, "comparisons": {}}
    for m in estimators:
        est = run_estimator(setup, m, pts, sample)
        out["estimators"][m] = est
        out["comparisons"][m] = compare(est.field, ref.field, m, oracle)
    return out


# ------------------------------------------------------------------ convergence trends


def affine_gaussian_problem(M: int, seed: int, variance: float = 0.01, dt: float = 0.25):
    """Integrator transitions with random states and inputs, plus held-out query pairs."""
    sys = integrator(gaussian(variance, 2), dt)
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, (M, 2))
    u = rng.uniform(-1.0, 1.0, (M, 1))
    y = sys.step_fn(x, u, sys.disturbance.draw(rng, M))
    return sys, TransitionSample(x, u, y, {"system": sys.name, "seed": seed})


def cosine_test_function(freq=(2.0, 3.0)):
    """``f(y) = cos(a . y)`` and its exact mean under ``y ~ N(mu, s2 I)``."""
    a = np.asarray(freq, dtype=float)

    def f(y):
        return np.cos(np.asarray(y) @ a)

    def mean(mu, s2):
        return np.cos(np.asarray(mu) @ a) * np.exp(-0.5 * s2 * (a @ a))

    return f, mean


def exact_mse_trend(sizes=(250, 500, 1000, 2000), seeds=range(10), queries: int = 200,
                    sigma: float = 0.1, lam: float = 1.0, ridge_scaling: str = "none",
                    variance: float = 0.01) -> dict:
    """Median over seeds of the MSE of ``f^T beta`` against the closed-form conditional mean."""
    f, mean = cosine_test_function()
    qrng = np.random.default_rng(12345)
    xq = qrng.uniform(-0.8, 0.8, (queries, 2))
    uq = qrng.uniform(-0.8, 0.8, (queries, 1))
    out = {}
    for M in sizes:
        mses = []
        for s in seeds:
            sys, sample = affine_gaussian_problem(M, s, variance)
            A, B = sys.affine
            truth = mean(xq @ A.T + uq @ B.T, variance)
            emb = fit_exact(sample, GaussianKernel(sigma), GaussianKernel(sigma), lam, ridge_scaling)
            est = emb.operator(xq, uq)(f(sample.successors))
            mses.append(float(np.mean((est - truth) ** 2)))
        out[M] = float(np.median(mses))
    return out


def rff_gap_trend(features=(100, 1000, 10000), seeds=range(5), M: int = 500, queries: int = 100,
                  sigma: float = 0.1, lam: float = 1.0, ridge_scaling: str = "none") -> dict:
    """Median ``|f^T gamma - f^T beta|`` at held-out pairs as the feature count grows."""
    f, _ = cosine_test_function()
    qrng = np.random.default_rng(54321)
    xq = qrng.uniform(-0.8, 0.8, (queries, 2))
    uq = qrng.uniform(-0.8, 0.8, (queries, 1))
    out = {}
    for D in features:
        gaps = []
        for s in seeds:
            _, sample = affine_gaussian_problem(M, s)
            fy = f(sample.successors)
            exact = fit_exact(sample, GaussianKernel(sigma), GaussianKernel(sigma), lam, ridge_scaling)
            feats = joint_features("concatenated", 2, 1, D, sigma, sigma, seed=1000 + s)
            approx = fit_rff(sample, feats, lam, ridge_scaling)
            gaps.append(np.abs(approx.operator(xq, uq)(fy) - exact.operator(xq, uq)(fy)))
        out[D] = float(np.median(np.concatenate(gaps)))
    return out


def strictly_decreasing(values) -> bool:
    v = list(values)
    return all(b < a for a, b in zip(v, v[1:]))


def mc_allowance(trials: int, dp_allowance: float = 0.02) -> float:
    return dp_allowance + hoeffding_radius(trials)


__all__ = ["Setup", "Timed", "run_estimator", "run_oracle", "Comparison", "compare", "validate",
           "validation_points", "exact_mse_trend", "rff_gap_trend", "strictly_decreasing",
           "mc_allowance", "ExactEmbedding", "RffEmbedding"]
