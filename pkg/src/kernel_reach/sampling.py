"""Drawing transition samples from a simulator under a fixed policy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DimensionError, HyperRectangle, MarkovPolicy, TransitionSample
from .systems import SystemModel


@dataclass(frozen=True, eq=False)
class UniformOverBox:
    box: HyperRectangle

    def __post_init__(self):
        if not np.all(self.box.bounded):
            raise ValueError("uniform sampling needs a bounded box")

    @property
    def dim(self):
        return self.box.dim

    def draw(self, rng, size):
        return rng.uniform(self.box.lower, self.box.upper, (size, self.box.dim))

    def describe(self):
        return f"uniform{self.box.lower.tolist()}..{self.box.upper.tolist()}"


@dataclass(frozen=True, eq=False)
class FixedList:
    points: np.ndarray

    @property
    def dim(self):
        return np.atleast_2d(self.points).shape[1]

    def draw(self, rng, size):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        return pts[np.arange(size) % pts.shape[0]]

    def describe(self):
        return f"list({np.atleast_2d(self.points).shape[0]})"


@dataclass(frozen=True, eq=False)
class GaussianAround:
    center: np.ndarray
    cov: np.ndarray

    @property
    def dim(self):
        return np.asarray(self.center).size

    def draw(self, rng, size):
        center = np.asarray(self.center, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim <= 1:
            return center + rng.standard_normal((size, center.size)) * np.sqrt(cov)
        return rng.multivariate_normal(center, cov, size)

    def describe(self):
        return "gaussian-around"


@dataclass(frozen=True, eq=False)
class UniformSlice:
    """Uniform over ``[lower, upper]`` on ``axes``; Gaussian about ``center`` elsewhere.

    Concentrates samples around a two-dimensional slice of a larger state.
    """

    axes: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    center: np.ndarray
    sd: float | np.ndarray

    def __post_init__(self):
        if not (len(self.axes) == len(self.lower) == len(self.upper)):
            raise ValueError("slice axes and bounds differ in length")
        if np.any(np.asarray(self.upper) < np.asarray(self.lower)):
            raise ValueError("slice bounds need upper >= lower")

    @property
    def dim(self):
        return np.asarray(self.center).size

    def draw(self, rng, size):
        center = np.asarray(self.center, dtype=float)
        x = center + np.asarray(self.sd) * rng.standard_normal((size, center.size))
        x[:, np.asarray(self.axes)] = rng.uniform(self.lower, self.upper, (size, len(self.axes)))
        return x

    def describe(self):
        return f"slice(axes={np.asarray(self.axes).tolist()})"


@dataclass(frozen=True, eq=False)
class SamplingPlan:
    initial: UniformOverBox | FixedList | GaussianAround | UniformSlice
    size: int
    policy: MarkovPolicy
    seed: int | None = 0

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 1:
            raise ValueError("sample size must be a positive integer")


def generate_sample(system: SystemModel, plan: SamplingPlan) -> TransitionSample:
    """One transition per independently drawn initial state.

    Initial states and disturbances use separate streams derived from the
    plan seed, so changing the disturbance does not move the initial states.
    """
    if plan.initial.dim != system.state_dim:
        raise DimensionError("initial-state distribution does not match the system dimension")
    if plan.policy.state_dim != system.state_dim or plan.policy.input_dim != system.input_dim:
        raise DimensionError("policy does not match the system dimensions")
    s_init, s_dist = np.random.SeedSequence(plan.seed).spawn(2)
    x = plan.initial.draw(np.random.default_rng(s_init), plan.size)
    u = plan.policy(0, x)
    w = system.disturbance.draw(np.random.default_rng(s_dist), plan.size)
    y = system.step_fn(x, u, w)
    meta = {"system": system.name, "seed": plan.seed, "disturbance": system.disturbance.name,
            "policy": plan.policy.name, "initial": plan.initial.describe()}
    return TransitionSample(x, u, y, meta)
