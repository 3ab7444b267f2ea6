"""First-hitting-time backward recursion on learned embeddings."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import HyperRectangle, SafetyProblem, as_points
from .embedding import DESIGN_BUDGET, ExactEmbedding, RffEmbedding


@dataclass(eq=False)
class SafetyField:
    """Value layers ``V_0 ... V_N`` at a fixed set of evaluation points."""

    points: np.ndarray  # (Q, n)
    layers: np.ndarray  # (N+1, Q); layers[k] is V_k
    meta: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return self.layers.shape[0] - 1

    @property
    def values(self) -> np.ndarray:
        """``V_0`` at every evaluation point."""
        return self.layers[0]

    def to_json(self, path) -> None:
        doc = {"meta": _jsonable(self.meta), "points": self.points.tolist(),
               "layers": self.layers.tolist()}
        with open(path, "w") as fh:
            json.dump(doc, fh)

    @classmethod
    def from_json(cls, path) -> "SafetyField":
        with open(path) as fh:
            doc = json.load(fh)
        pts = np.asarray(doc["points"], dtype=float)
        layers = np.asarray(doc["layers"], dtype=float)
        if layers.ndim != 2 or layers.shape[1] != pts.shape[0]:
            raise ValueError("layers do not match the number of points")
        return cls(pts, layers, doc.get("meta", {}))

    def to_csv(self, path, values=None, name: str = "V0") -> None:
        vals = self.values if values is None else np.asarray(values)
        cols = [f"x{i + 1}" for i in range(self.points.shape[1])] + [name]
        np.savetxt(path, np.column_stack([self.points, vals]), delimiter=",",
                   header=",".join(cols), comments="", fmt="%.17g")


def _jsonable(obj):
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj
    return str(obj)


def backward_recursion(problem: SafetyProblem, embedding: ExactEmbedding | RffEmbedding,
                       eval_points, clamp: bool = True, budget: int = DESIGN_BUDGET,
                       meta: dict | None = None) -> SafetyField:
    """Approximate value functions by the learned backward recursion.

    ``V_N = 1_T``; for ``k = N-1 .. 0`` every point ``p`` (sample successors
    and evaluation points) gets ``1_T(p) + 1_{K\\T}(p) * Y^T coeff(p, pi_k(p))``
    where ``Y`` holds ``V_{k+1}`` at the successors.  With ``clamp`` the
    estimated expectation is clipped into [0, 1] before it is stored.
    """
    pts, _ = as_points(eval_points, problem.dim)
    problem.check_points(pts)
    sample = embedding.sample
    if sample.state_dim != problem.dim:
        raise ValueError("embedding and problem differ in state dimension")
    M, N = sample.size, problem.horizon

    queries = np.vstack([sample.successors, pts])
    in_t, in_kt = problem.masks(queries)
    # only points in K\T need an expectation
    active = np.flatnonzero(in_kt)
    active_eval = active[active >= M]
    base = in_t.astype(float)

    layers = np.empty((N + 1, pts.shape[0]))
    layers[N] = base[M:]
    values = base.copy()

    policy = problem.policy
    ops = {}

    def operator(k, idx):
        key = (0 if policy.stationary else k, idx.size)
        if key not in ops:
            q = queries[idx]
            ops.clear()
            ops[key] = embedding.operator(q, policy(k, q), budget=budget)
        return ops[key]

    for k in range(N - 1, -1, -1):
        Y = values[:M]
        # successor values at layer k are only needed when another step follows
        idx = active if k > 0 else active_eval
        new = base.copy()
        if idx.size:
            est = operator(k, idx)(Y)
            if clamp:
                np.clip(est, 0.0, 1.0, out=est)
            new[idx] += est
        values = new
        layers[k] = values[M:]

    info = {"method": "exact" if isinstance(embedding, ExactEmbedding) else "rff",
            "M": M, "N": N, "lambda": embedding.lam, "ridge": embedding.ridge,
            "ridge_scaling": embedding.ridge_scaling, "clamp": clamp}
    if isinstance(embedding, ExactEmbedding):
        info["sigma_x"] = embedding.kernel.kx.sigma
        info["sigma_u"] = embedding.kernel.ku.sigma
    else:
        info["D"] = embedding.features.size
        info["mode"] = embedding.features.mode.value
        info["solver"] = embedding.solver
    info.update(sample.meta)
    info.update(meta or {})
    return SafetyField(pts, layers, info)


def safety_probability(field: SafetyField, index: int) -> float:
    if not -field.points.shape[0] <= index < field.points.shape[0]:
        raise IndexError(f"point index {index} out of range for {field.points.shape[0]} points")
    return float(field.layers[0, index])


def grid_points(rect: HyperRectangle, resolution: int | Sequence[int],
                fixed: Mapping[int, float] | None = None) -> np.ndarray:
    """Regular lattice over ``rect`` including both endpoints, row-major.

    Axes listed in ``fixed`` are held at the given value (slicing a
    high-dimensional box); every other axis must be bounded.
    """
    fixed = dict(fixed or {})
    n = rect.dim
    free = [i for i in range(n) if i not in fixed]
    res = np.broadcast_to(np.asarray(resolution, dtype=int), (len(free),))
    axes = []
    for i, r in zip(free, res):
        if not (np.isfinite(rect.lower[i]) and np.isfinite(rect.upper[i])):
            raise ValueError(f"axis {i} is unbounded; give it a fixed slice value")
        if r < 2:
            raise ValueError("resolution must be at least 2 per axis")
        axes.append(np.linspace(rect.lower[i], rect.upper[i], int(r)))
    mesh = np.meshgrid(*axes, indexing="ij") if axes else []
    count = int(np.prod([a.size for a in axes])) if axes else 1
    out = np.empty((count, n))
    for j, i in enumerate(free):
        out[:, i] = mesh[j].ravel()
    for i, v in fixed.items():
        out[:, i] = v
    return out
