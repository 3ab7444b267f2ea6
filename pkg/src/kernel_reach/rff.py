"""Random Fourier features for the Gaussian kernel.

The Gaussian kernel with bandwidth ``sigma`` has spectral measure
N(0, sigma^-2 I).  A basis of ``D`` frequencies and uniform phases gives the
feature map ``z_i(x) = sqrt(2) cos(w_i . x + b_i)`` with
``<z(x), z(x')> / D`` an unbiased estimate of ``k(x, x')``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import DimensionError, _parse_header
from .kernels import stack_pair

SQRT2 = np.sqrt(2.0)
_BASIS_MAGIC = "kernel-reach rff-basis v1"


class JointMode(str, enum.Enum):
    TENSOR = "tensor"
    CONCATENATED = "concatenated"


@dataclass(frozen=True, eq=False)
class RffBasis:
    frequencies: np.ndarray  # (D, dim)
    phases: np.ndarray  # (D,)
    sigma: float | np.ndarray
    seed: int | None = None

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.frequencies, dtype=float))
        b = np.asarray(self.phases, dtype=float).ravel()
        if w.shape[0] != b.size or b.size < 1:
            raise ValueError("need one phase per frequency and at least one frequency")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "frequencies", w)
        object.__setattr__(self, "phases", b)

    @property
    def size(self) -> int:
        return self.phases.size

    @property
    def dim(self) -> int:
        return self.frequencies.shape[1]

    def save(self, path) -> None:
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.size != 1:
            raise ValueError("only scalar-bandwidth bases can be serialised")
        header = (f"# {_BASIS_MAGIC}; D={self.size}; dim={self.dim}; "
                  f"sigma={float(sigma):.17g}; seed={'' if self.seed is None else self.seed}")
        with open(path, "w") as fh:
            fh.write(header + "\n")
            np.savetxt(fh, np.hstack([self.frequencies, self.phases[:, None]]),
                       delimiter=",", fmt="%.17g")

    @classmethod
    def load(cls, path) -> "RffBasis":
        with open(path) as fh:
            head = _parse_header(fh.readline(), _BASIS_MAGIC)
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        D, dim = int(head["D"]), int(head["dim"])
        if data.shape != (D, dim + 1):
            raise ValueError(f"{path}: header declares D={D}, dim={dim} but rows have shape {data.shape}")
        seed = int(head["seed"]) if head.get("seed") else None
        return cls(data[:, :dim], data[:, dim], float(head["sigma"]), seed)


def sample_basis(D: int, dim: int, sigma, seed=None) -> RffBasis:
    """Draw ``D`` frequencies from N(0, diag(sigma^-2)) and phases from U[0, 2pi).

    ``sigma`` may be a scalar or one bandwidth per coordinate (the latter gives
    the spectral measure of a product of Gaussian kernels).
    """
    if D < 1:
        raise ValueError("need at least one feature")
    s = np.broadcast_to(np.asarray(sigma, dtype=float), (dim,))
    if np.any(s <= 0):
        raise ValueError("bandwidth must be positive")
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((D, dim)) / s
    b = rng.uniform(0.0, 2.0 * np.pi, D)
    return RffBasis(w, b, sigma if np.ndim(sigma) == 0 else s.copy(), seed)


def feature_map(basis: RffBasis, x, chunk: int = 4096) -> np.ndarray:
    """``sqrt(2) cos(W x + b)`` for a vector (returns ``(D,)``) or a batch (``(Q, D)``)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    if pts.shape[1] != basis.dim:
        raise DimensionError(f"basis has dimension {basis.dim}, got {pts.shape[1]}")
    out = np.empty((pts.shape[0], basis.size))
    wt = basis.frequencies.T
    for i in range(0, pts.shape[0], chunk):
        blk = out[i:i + chunk]
        np.matmul(pts[i:i + chunk], wt, out=blk)
        blk += basis.phases
        np.cos(blk, out=blk)
        blk *= SQRT2
    return out[0] if single else out


def kernel_estimate(basis: RffBasis, x, x2) -> float:
    return float(feature_map(basis, x) @ feature_map(basis, x2)) / basis.size


@dataclass(frozen=True, eq=False)
class JointFeatures:
    """Feature map on (state, input) pairs.

    Concatenated mode applies one basis to ``[x; u]``; tensor mode takes the
    row-major outer product of separate state and input features.
    """

    mode: JointMode
    basis: RffBasis | None = None
    basis_x: RffBasis | None = None
    basis_u: RffBasis | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", JointMode(self.mode))
        if self.mode is JointMode.CONCATENATED:
            if self.basis is None or self.basis_x is not None or self.basis_u is not None:
                raise ValueError("concatenated mode takes exactly one joint basis")
        elif self.basis_x is None or self.basis_u is None or self.basis is not None:
            raise ValueError("tensor mode takes a state basis and an input basis")

    @property
    def size(self) -> int:
        if self.mode is JointMode.CONCATENATED:
            return self.basis.size
        return self.basis_x.size * self.basis_u.size

    def __call__(self, x, u, chunk: int = 2048) -> np.ndarray:
        single = np.asarray(x).ndim == 1
        x, u = stack_pair(x, u)
        if self.mode is JointMode.CONCATENATED:
            out = feature_map(self.basis, np.hstack([x, u]), chunk)
        else:
            zx = feature_map(self.basis_x, x, chunk)
            zu = feature_map(self.basis_u, u, chunk)
            out = (zx[:, :, None] * zu[:, None, :]).reshape(x.shape[0], -1)
        return out[0] if single else out


def joint_features(mode, n: int, m: int, D: int, sigma_x: float, sigma_u: float, seed=None,
                   D_u: int | None = None) -> JointFeatures:
    """Build a joint feature map.

    Concatenated: one basis of size ``D`` on dimension ``n + m`` with
    per-block bandwidths.  Tensor: ``D`` state features times ``D_u`` input
    features (``D_u`` defaults to ``D``), drawn from two derived seeds.
    """
    mode = JointMode(mode)
    if mode is JointMode.CONCATENATED:
        sig = sigma_x if sigma_x == sigma_u else np.r_[np.full(n, sigma_x), np.full(m, sigma_u)]
        return JointFeatures(mode, basis=sample_basis(D, n + m, sig, seed))
    ss = np.random.SeedSequence(seed)
    sx, su = ss.spawn(2)
    return JointFeatures(mode, basis_x=sample_basis(D, n, sigma_x, sx),
                         basis_u=sample_basis(D_u or D, m, sigma_u, su))


def joint_feature(mode, x, u, basis: RffBasis | None = None, basis_x: RffBasis | None = None,
                  basis_u: RffBasis | None = None) -> np.ndarray:
    return JointFeatures(mode, basis, basis_x, basis_u)(x, u)
