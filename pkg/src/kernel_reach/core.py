"""Problem-domain types: sets, policies, transition samples and safety problems."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np


class DimensionError(ValueError):
    """Raised when a vector does not have the dimension its owner declares."""


def as_points(x, dim: int | None = None) -> tuple[np.ndarray, bool]:
    """Return ``x`` as a 2-D float array and whether the input was a single vector."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise DimensionError(f"expected a vector or a 2-D array of vectors, got shape {arr.shape}")
    if dim is not None and arr.shape[1] != dim:
        raise DimensionError(f"expected dimension {dim}, got {arr.shape[1]}")
    return arr, single


# --------------------------------------------------------------------------- sets


@dataclass(frozen=True, eq=False)
class HyperRectangle:
    """Axis-aligned box with per-axis open/closed ends.

    Infinite bounds mark an axis as unbounded on that side; such ends always
    pass the membership test.
    """

    lower: np.ndarray
    upper: np.ndarray
    lower_closed: np.ndarray = None
    upper_closed: np.ndarray = None

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).ravel()
        hi = np.asarray(self.upper, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise DimensionError("lower and upper bounds differ in length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ValueError("bounds must not be NaN")
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")
        lc = np.ones(lo.shape, bool) if self.lower_closed is None else np.broadcast_to(
            np.asarray(self.lower_closed, bool), lo.shape).copy()
        uc = np.ones(lo.shape, bool) if self.upper_closed is None else np.broadcast_to(
            np.asarray(self.upper_closed, bool), lo.shape).copy()
        for name, val in (("lower", lo), ("upper", hi), ("lower_closed", lc), ("upper_closed", uc)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @classmethod
    def cube(cls, half_width: float, dim: int) -> "HyperRectangle":
        return cls(-half_width * np.ones(dim), half_width * np.ones(dim))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def bounded(self) -> np.ndarray:
        return np.isfinite(self.lower) & np.isfinite(self.upper)

    def contains(self, x):
        pts, single = as_points(x, self.dim)
        lo_ok = np.where(self.lower_closed, pts >= self.lower, pts > self.lower)
        hi_ok = np.where(self.upper_closed, pts <= self.upper, pts < self.upper)
        out = np.all(lo_ok & hi_ok, axis=1)
        return bool(out[0]) if single else out

    def translated(self, offset) -> "HyperRectangle":
        offset = np.asarray(offset, dtype=float)
        return HyperRectangle(self.lower + offset, self.upper + offset,
                              self.lower_closed, self.upper_closed)

    def issubset(self, other: "HyperRectangle") -> bool:
        """Exact containment test for two rectangles of equal dimension."""
        if other.dim != self.dim:
            raise DimensionError("rectangles differ in dimension")
        for i in range(self.dim):
            lo, hi = self.lower[i], self.upper[i]
            if lo == hi and not (self.lower_closed[i] and self.upper_closed[i]):
                return True  # empty interval on this axis: empty set
            olo, ohi = other.lower[i], other.upper[i]
            if lo < olo or (lo == olo and self.lower_closed[i] and not other.lower_closed[i]
                            and np.isfinite(lo)):
                return False
            if hi > ohi or (hi == ohi and self.upper_closed[i] and not other.upper_closed[i]
                            and np.isfinite(hi)):
                return False
        return True

    def __repr__(self):
        return f"HyperRectangle(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


@dataclass(frozen=True, eq=False)
class ProductSet:
    """Cartesian product of rectangles over disjoint coordinate blocks."""

    blocks: tuple[tuple[np.ndarray, HyperRectangle], ...]
    dim: int

    def __post_init__(self):
        seen = np.zeros(self.dim, bool)
        blocks = []
        for idx, rect in self.blocks:
            idx = np.asarray(idx, dtype=int)
            if idx.size != rect.dim:
                raise DimensionError("block index count does not match its rectangle")
            if np.any(seen[idx]):
                raise ValueError("product blocks must cover disjoint coordinates")
            seen[idx] = True
            blocks.append((idx, rect))
        object.__setattr__(self, "blocks", tuple(blocks))

    @classmethod
    def repeated(cls, rects: Sequence[HyperRectangle]) -> "ProductSet":
        """Product of consecutive blocks, block ``c`` occupying coordinates of copy ``c``."""
        blocks, start = [], 0
        for r in rects:
            blocks.append((np.arange(start, start + r.dim), r))
            start += r.dim
        return cls(tuple(blocks), start)

    def as_rectangle(self) -> HyperRectangle:
        """Single rectangle equal to the product (free coordinates unbounded)."""
        lo = np.full(self.dim, -np.inf)
        hi = np.full(self.dim, np.inf)
        lc = np.ones(self.dim, bool)
        uc = np.ones(self.dim, bool)
        for idx, r in self.blocks:
            lo[idx], hi[idx], lc[idx], uc[idx] = r.lower, r.upper, r.lower_closed, r.upper_closed
        return HyperRectangle(lo, hi, lc, uc)

    def contains(self, x):
        pts, single = as_points(x, self.dim)
        out = np.ones(pts.shape[0], bool)
        for idx, rect in self.blocks:
            out &= rect.contains(pts[:, idx])
        return bool(out[0]) if single else out


@dataclass(frozen=True, eq=False)
class PredicateSet:
    """Arbitrary set given by a vectorised membership function ``(Q, n) -> (Q,) bool``."""

    fn: Callable[[np.ndarray], np.ndarray]
    dim: int
    name: str = "predicate"

    def contains(self, x):
        pts, single = as_points(x, self.dim)
        out = np.asarray(self.fn(pts), bool).reshape(-1)
        return bool(out[0]) if single else out


SetPredicate = Union[HyperRectangle, ProductSet, PredicateSet]


def indicator(s: SetPredicate, x):
    """1 where ``x`` lies in ``s`` and 0 elsewhere; accepts a vector or a batch."""
    res = s.contains(x)
    if isinstance(res, (bool, np.bool_)):
        return int(res)
    return res.astype(np.int8)


# ----------------------------------------------------------------------- policies


@dataclass(frozen=True, eq=False)
class MarkovPolicy:
    """Deterministic Markov policy.

    ``maps`` holds one vectorised map ``(Q, n) -> (Q, m)`` per time step; a
    single map is reused at every step (stationary policy).
    """

    maps: tuple[Callable[[np.ndarray], np.ndarray], ...]
    state_dim: int
    input_dim: int
    name: str = "policy"

    @property
    def stationary(self) -> bool:
        return len(self.maps) == 1

    def __call__(self, k: int, x):
        pts, single = as_points(x, self.state_dim)
        fn = self.maps[0] if self.stationary else self.maps[k]
        u = np.asarray(fn(pts), dtype=float).reshape(pts.shape[0], self.input_dim)
        return u[0] if single else u


def zero_policy(state_dim: int, input_dim: int) -> MarkovPolicy:
    return MarkovPolicy((lambda x: np.zeros((x.shape[0], input_dim)),), state_dim, input_dim, "zero")


def constant_policy(u, state_dim: int, name: str = "constant") -> MarkovPolicy:
    u = np.asarray(u, dtype=float).ravel()
    return MarkovPolicy((lambda x: np.tile(u, (x.shape[0], 1)),), state_dim, u.size, name)


# ------------------------------------------------------------------------ samples

_SAMPLE_MAGIC = "kernel-reach sample v1"


def _parse_header(line: str, magic: str) -> dict[str, str]:
    line = line.strip()
    if not line.startswith("#"):
        raise ValueError("missing header line")
    parts = [p.strip() for p in line[1:].split(";")]
    if parts[0] != magic:
        raise ValueError(f"unexpected header tag {parts[0]!r}, expected {magic!r}")
    out = {}
    for p in parts[1:]:
        if not p:
            continue
        key, _, val = p.partition("=")
        out[key.strip()] = val.strip()
    return out


@dataclass(frozen=True, eq=False)
class TransitionSample:
    """M observed transitions ``(x_i, u_i, y_i)`` with ``y_i ~ Q(. | x_i, u_i)``."""

    states: np.ndarray
    inputs: np.ndarray
    successors: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.states, dtype=float))
        u = np.asarray(self.inputs, dtype=float)
        if u.ndim == 1:
            u = u[:, None]
        y = np.atleast_2d(np.asarray(self.successors, dtype=float))
        if x.shape[0] < 1:
            raise ValueError("a sample needs at least one transition")
        if not (x.shape[0] == u.shape[0] == y.shape[0]):
            raise DimensionError("states, inputs and successors differ in length")
        if x.shape[1] != y.shape[1]:
            raise DimensionError("states and successors differ in dimension")
        for a in (x, u, y):
            if not np.all(np.isfinite(a)):
                raise ValueError("sample contains non-finite entries")
            a.setflags(write=False)
        object.__setattr__(self, "states", x)
        object.__setattr__(self, "inputs", u)
        object.__setattr__(self, "successors", y)

    @property
    def size(self) -> int:
        return self.states.shape[0]

    @property
    def state_dim(self) -> int:
        return self.states.shape[1]

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[1]

    def to_csv(self, path) -> None:
        n, m, M = self.state_dim, self.input_dim, self.size
        header = (f"# {_SAMPLE_MAGIC}; n={n}; m={m}; M={M}; "
                  f"seed={self.meta.get('seed', '')}; system={self.meta.get('system', '')}")
        for key in ("disturbance", "policy"):
            if key in self.meta:
                header += f"; {key}={self.meta[key]}"
        data = np.hstack([self.states, self.inputs, self.successors])
        with open(path, "w") as fh:
            fh.write(header + "\n")
            np.savetxt(fh, data, delimiter=",", fmt="%.17g")

    @classmethod
    def from_csv(cls, path) -> "TransitionSample":
        path = Path(path)
        with open(path) as fh:
            head = _parse_header(fh.readline(), _SAMPLE_MAGIC)
            try:
                n, m, M = int(head["n"]), int(head["m"]), int(head["M"])
            except (KeyError, ValueError) as exc:
                raise ValueError(f"malformed sample header in {path}") from exc
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        if data.shape != (M, 2 * n + m):
            raise ValueError(f"{path}: header declares M={M}, n={n}, m={m} "
                             f"but rows have shape {data.shape}")
        meta = {k: v for k, v in head.items() if k not in ("n", "m", "M")}
        return cls(data[:, :n], data[:, n:n + m], data[:, n + m:], meta)


# ----------------------------------------------------------------------- problems


class FirstHit(enum.Enum):
    TARGET = "target"
    SAFE_NOT_TARGET = "safe_not_target"
    UNSAFE = "unsafe"


def _exact_subset(inner: SetPredicate, outer: SetPredicate) -> bool | None:
    """Exact ``inner ⊆ outer`` for rectangle/product pairs; None when undecidable here."""
    rect = (HyperRectangle, ProductSet)
    if isinstance(inner, rect) and isinstance(outer, rect):
        a = inner.as_rectangle() if isinstance(inner, ProductSet) else inner
        b = outer.as_rectangle() if isinstance(outer, ProductSet) else outer
        return a.issubset(b)
    return None


@dataclass(frozen=True, eq=False)
class SafetyProblem:
    """First-hitting problem: reach ``target_set`` within ``horizon`` steps while inside ``safe_set``."""

    horizon: int
    safe_set: SetPredicate
    target_set: SetPredicate
    policy: MarkovPolicy
    spot_checks: int = 1000

    def __post_init__(self):
        if self.horizon < 0 or int(self.horizon) != self.horizon:
            raise ValueError("horizon must be a nonnegative integer")
        if self.safe_set.dim != self.target_set.dim:
            raise DimensionError("safe and target sets differ in dimension")
        if self.policy.state_dim != self.safe_set.dim:
            raise DimensionError("policy state dimension does not match the sets")
        if not self.policy.stationary and len(self.policy.maps) < self.horizon:
            raise ValueError("time-varying policy shorter than the horizon")
        exact = _exact_subset(self.target_set, self.safe_set)
        if exact is False:
            raise ValueError("target set must be contained in the safe set")
        if exact is None and self.spot_checks:
            rng = np.random.default_rng(0)
            pts = rng.standard_normal((self.spot_checks, self.dim)) * 2.0
            self.check_points(pts)

    @property
    def dim(self) -> int:
        return self.safe_set.dim

    def check_points(self, x) -> None:
        """Reject points in T that are not in K."""
        pts, _ = as_points(x, self.dim)
        bad = self.target_set.contains(pts) & ~self.safe_set.contains(pts)
        if np.any(bad):
            raise ValueError(f"{int(bad.sum())} point(s) lie in the target set but outside the safe set")

    def masks(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Boolean masks (in T, in K∖T) for a batch of points."""
        pts, _ = as_points(x, self.dim)
        in_t = self.target_set.contains(pts)
        in_k = self.safe_set.contains(pts)
        return in_t, in_k & ~in_t


def first_hit_label(problem: SafetyProblem, x) -> FirstHit:
    pts, _ = as_points(x, problem.dim)
    in_t, in_kt = problem.masks(pts)
    if in_t[0]:
        return FirstHit.TARGET
    if in_kt[0]:
        return FirstHit.SAFE_NOT_TARGET
    return FirstHit.UNSAFE
