"""Ground-truth oracles: gridded dynamic programming and Monte Carlo."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.special import ndtr

from .core import SafetyProblem, as_points
from .reachability import SafetyField
from .systems import SystemModel


class UnsupportedSystemError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DpGrid:
    """Uniform cells tiling the box ``[lower, upper]``."""

    lower: np.ndarray
    upper: np.ndarray
    resolution: tuple[int, ...]

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).ravel()
        hi = np.asarray(self.upper, dtype=float).ravel()
        res = tuple(int(r) for r in np.broadcast_to(self.resolution, lo.shape))
        if np.any(hi <= lo) or min(res) < 1:
            raise ValueError("grid needs upper > lower and at least one cell per axis")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "resolution", res)

    @classmethod
    def over(cls, rect, resolution=100) -> "DpGrid":
        return cls(rect.lower, rect.upper, resolution)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def edges(self) -> list[np.ndarray]:
        return [np.linspace(lo, hi, r + 1) for lo, hi, r in zip(self.lower, self.upper, self.resolution)]

    @property
    def centers(self) -> list[np.ndarray]:
        return [(e[:-1] + e[1:]) / 2.0 for e in self.edges]

    @property
    def points(self) -> np.ndarray:
        """Cell centers, row-major (last axis fastest)."""
        mesh = np.meshgrid(*self.centers, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


def _check_dp_system(system: SystemModel):
    if system.affine is None:
        raise UnsupportedSystemError(f"DP oracle needs an affine system; {system.name} is not")
    d = system.disturbance
    if d.kind == "none":
        return
    if not (d.kind == "gaussian" and d.diagonal):
        raise UnsupportedSystemError("DP oracle supports only diagonal Gaussian disturbances")
    if system.state_dim > 3:
        raise UnsupportedSystemError("DP oracle is limited to at most 3 state dimensions")


def _axis_probs(edges: np.ndarray, mean: np.ndarray, sd: float) -> np.ndarray:
    """P(successor coordinate lands in each cell); rows may sum to < 1."""
    if sd == 0:
        idx = np.searchsorted(edges, mean, side="right") - 1
        out = np.zeros((mean.size, edges.size - 1))
        ok = (idx >= 0) & (idx < edges.size - 1)
        out[np.flatnonzero(ok), idx[ok]] = 1.0
        return out
    cdf = ndtr((edges[None, :] - mean[:, None]) / sd)
    return np.diff(cdf, axis=1)


def _expect_next(system: SystemModel, grid: DpGrid, x: np.ndarray, u: np.ndarray,
                 V: np.ndarray) -> np.ndarray:
    """``sum_cells P(cell | x, u) V(cell)`` with per-axis independent Gaussian noise."""
    A, B = system.affine
    mean = x @ A.T + u @ B.T
    d = system.disturbance
    sds = np.sqrt(np.diag(d.cov)) if d.kind == "gaussian" else np.zeros(grid.dim)
    probs = [_axis_probs(e, mean[:, i], sds[i]) for i, e in enumerate(grid.edges)]
    Vg = V.reshape(grid.resolution)
    if grid.dim == 1:
        return probs[0] @ Vg
    if grid.dim == 2:
        return np.einsum("qj,qj->q", probs[0] @ Vg, probs[1])
    out = np.empty(x.shape[0])
    for s in range(0, x.shape[0], 256):
        t = np.einsum("qi,ijk->qjk", probs[0][s:s + 256], Vg)
        t = np.einsum("qjk,qj->qk", t, probs[1][s:s + 256])
        out[s:s + 256] = np.einsum("qk,qk->q", t, probs[2][s:s + 256])
    return out


def dp_solve(problem: SafetyProblem, system: SystemModel, grid: DpGrid) -> SafetyField:
    """Gridded value iteration; cell values sit at cell centers and mass leaving the grid is lost.

    The grid should cover the safe set, with the target boundary on cell edges.
    """
    _check_dp_system(system)
    if grid.dim != problem.dim:
        raise ValueError("grid and problem differ in dimension")
    c = grid.points
    in_t, in_kt = problem.masks(c)
    base = in_t.astype(float)
    N = problem.horizon
    layers = np.empty((N + 1, c.shape[0]))
    layers[N] = base
    act = np.flatnonzero(in_kt)
    for k in range(N - 1, -1, -1):
        V = base.copy()
        if act.size:
            ca = c[act]
            V[act] += _expect_next(system, grid, ca, problem.policy(k, ca), layers[k + 1])
        layers[k] = V
    meta = {"method": "dp", "N": N, "grid_resolution": list(grid.resolution),
            "grid_lower": grid.lower.tolist(), "grid_upper": grid.upper.tolist(),
            "system": system.name, "disturbance": system.disturbance.name}
    return SafetyField(c, layers, meta)


def dp_lookup(field: SafetyField, grid: DpGrid, points, problem: SafetyProblem | None = None,
              system: SystemModel | None = None, how: str = "linear", k: int = 0) -> np.ndarray:
    """Values of a DP solution away from cell centers.

    ``how='linear'`` interpolates layer ``k`` multilinearly between centers
    (clamped to the outermost centers).  ``how='backup'`` applies one exact
    Bellman step to layer ``k+1``, which respects the set indicators at the
    query point and avoids smearing the jump at the target boundary.
    """
    pts, _ = as_points(points, grid.dim)
    if how == "linear":
        vals = field.layers[k].reshape(grid.resolution)
        centers = grid.centers
        clipped = np.column_stack([np.clip(pts[:, i], c[0], c[-1]) for i, c in enumerate(centers)])
        return RegularGridInterpolator(centers, vals)(clipped)
    if how != "backup":
        raise ValueError(f"unknown lookup {how!r}")
    if problem is None or system is None:
        raise ValueError("backup lookup needs the problem and system")
    in_t, in_kt = problem.masks(pts)
    out = in_t.astype(float)
    if k < problem.horizon and np.any(in_kt):
        idx = np.flatnonzero(in_kt)
        out[idx] += _expect_next(system, grid, pts[idx], problem.policy(k, pts[idx]),
                                 field.layers[k + 1])
    return out


# --------------------------------------------------------------------- Monte Carlo


def hoeffding_radius(trials: int, level: float = 0.99) -> float:
    """Two-sided Hoeffding confidence radius for a mean of [0, 1] variables."""
    return float(np.sqrt(np.log(2.0 / (1.0 - level)) / (2.0 * trials)))


@dataclass(frozen=True)
class McEstimate:
    p: float
    trials: int
    radius: float


def first_hit_times(problem: SafetyProblem, system: SystemModel, x0, trials: int,
                    rng: np.random.Generator, chunk: int = 50_000) -> np.ndarray:
    """First step at which each trajectory is in T having stayed in K∖T before; N+1 if never."""
    x0 = np.asarray(x0, dtype=float).ravel()
    N = problem.horizon
    out = np.empty(trials, dtype=np.int64)
    for s in range(0, trials, chunk):
        r = min(chunk, trials - s)
        x = np.tile(x0, (r, 1))
        hit = np.full(r, N + 1)
        alive = np.ones(r, bool)
        for k in range(N + 1):
            in_t, in_kt = problem.masks(x)
            newly = alive & in_t
            hit[newly] = k
            alive &= in_kt
            if k == N or not alive.any():
                break
            u = problem.policy(k, x)
            x = system.step_fn(x, u, system.disturbance.draw(rng, r))
        out[s:s + r] = hit
    return out


def mc_estimate(problem: SafetyProblem, system: SystemModel, x0, trials: int,
                rng: np.random.Generator, level: float = 0.99) -> McEstimate:
    if trials < 1:
        raise ValueError("need at least one trial")
    hits = first_hit_times(problem, system, x0, trials, rng)
    return McEstimate(float(np.mean(hits <= problem.horizon)), trials, hoeffding_radius(trials, level))


def mc_field(problem: SafetyProblem, system: SystemModel, points, trials: int,
             seed=None) -> SafetyField:
    """Monte Carlo estimates of every layer; ``V_k`` is P(first hit within N-k steps).

    Each point gets its own stream derived from ``seed``.
    """
    pts, _ = as_points(points, problem.dim)
    N = problem.horizon
    if not problem.policy.stationary:
        raise ValueError("layered MC estimates need a stationary policy")
    streams = np.random.SeedSequence(seed).spawn(pts.shape[0])
    layers = np.empty((N + 1, pts.shape[0]))
    for i, (p, ss) in enumerate(zip(pts, streams)):
        hits = first_hit_times(problem, system, p, trials, np.random.default_rng(ss))
        counts = np.bincount(np.minimum(hits, N + 1), minlength=N + 2)[:N + 1]
        cum = np.cumsum(counts) / trials
        layers[:, i] = cum[N - np.arange(N + 1)]
    meta = {"method": "mc", "N": N, "trials": trials, "seed": seed,
            "radius99": hoeffding_radius(trials), "system": system.name,
            "disturbance": system.disturbance.name}
    return SafetyField(pts, layers, meta)
