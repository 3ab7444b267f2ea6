"""Gaussian kernels, Gram assembly and the regularised SPD solve."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.linalg.blas import dsyrk

from .core import DimensionError

DEFAULT_SIGMA = 0.1
DEFAULT_LAMBDA = 1.0
# entries this far below the diagonal cannot change a float64 solve, but their products underflow
# into subnormals inside LAPACK and slow the factorisation by more than an order of magnitude
FLUSH_RATIO = 1e-100


class ConditioningError(np.linalg.LinAlgError):
    """The regularised Gram matrix could not be factorised."""


@dataclass(frozen=True)
class GaussianKernel:
    """k(x, x') = exp(-|x - x'|^2 / (2 sigma^2))."""

    sigma: float = DEFAULT_SIGMA

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("kernel bandwidth must be positive")

    def __call__(self, x, x2) -> float:
        x = np.asarray(x, dtype=float).ravel()
        x2 = np.asarray(x2, dtype=float).ravel()
        if x.shape != x2.shape:
            raise DimensionError(f"cannot compare vectors of length {x.size} and {x2.size}")
        d = x - x2
        return float(np.exp(-(d @ d) / (2.0 * self.sigma ** 2)))

    eval = __call__


@dataclass(frozen=True)
class ProductKernel:
    """Tensor product kernel on (state, input) pairs.

    Equal to a single unit-bandwidth Gaussian kernel on the stacked vector
    ``[x / sigma_x, u / sigma_u]``; :meth:`embed` returns that stacking.
    """

    kx: GaussianKernel
    ku: GaussianKernel

    def embed(self, x, u) -> np.ndarray:
        x, u = stack_pair(x, u)
        return np.hstack([x / self.kx.sigma, u / self.ku.sigma])


def stack_pair(x, u) -> tuple[np.ndarray, np.ndarray]:
    """Normalise a (state, input) query to 2-D batches of equal length."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.ndim == 1:
        x, u = x[None, :], u.reshape(1, -1)
    elif u.ndim == 1:
        u = u[:, None]
    if x.shape[0] != u.shape[0]:
        raise DimensionError("state and input batches differ in length")
    return x, u


def joint_eval(kx: GaussianKernel, ku: GaussianKernel, xu, xu2) -> float:
    (x, u), (x2, u2) = xu, xu2
    return kx(x, x2) * ku(u, u2)


def sq_dists(a: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """Pairwise squared Euclidean distances.

    With ``b`` omitted only the lower triangle is computed (BLAS syrk) and then
    mirrored.
    """
    a = np.ascontiguousarray(a, dtype=float)
    na = np.einsum("ij,ij->i", a, a)
    if b is None:
        # syrk with trans=0 computes alpha * A A^T into the lower triangle
        inner = dsyrk(1.0, a, lower=1)
        inner = np.tril(inner) + np.tril(inner, -1).T
        d = na[:, None] + na[None, :] - 2.0 * inner
        np.fill_diagonal(d, 0.0)
    else:
        b = np.ascontiguousarray(b, dtype=float)
        if a.shape[1] != b.shape[1]:
            raise DimensionError(f"row dimension {a.shape[1]} != column dimension {b.shape[1]}")
        nb = np.einsum("ij,ij->i", b, b)
        d = na[:, None] + nb[None, :] - 2.0 * (a @ b.T)
    return np.maximum(d, 0.0, out=d)


def _as_rows(kernel, pts):
    if isinstance(kernel, ProductKernel):
        x, u = pts
        return kernel.embed(x, u)
    arr = np.atleast_2d(np.asarray(pts, dtype=float)) / kernel.sigma
    return arr


def gram(kernel, rows, cols=None) -> np.ndarray:
    """Kernel matrix between ``rows`` and ``cols`` (``cols=None`` means ``rows``).

    For a :class:`ProductKernel` the arguments are ``(X, U)`` pairs of batches.
    """
    a = _as_rows(kernel, rows)
    if a.shape[0] == 0:
        raise ValueError("empty row set")
    if cols is None:
        d = sq_dists(a)
    else:
        b = _as_rows(kernel, cols)
        if b.shape[0] == 0:
            raise ValueError("empty column set")
        d = sq_dists(a, b)
    np.multiply(d, -0.5, out=d)
    return np.exp(d, out=d)


def factor_regularized(G: np.ndarray, shift: float):
    """Cholesky factor of ``G + shift * I`` with one jittered retry."""
    if not shift > 0:
        raise ValueError("regularisation must be positive")
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise DimensionError("Gram matrix must be square")
    A = G.copy()
    A[np.diag_indices_from(A)] += shift
    A[np.abs(A) < FLUSH_RATIO * np.abs(np.diag(A)).max()] = 0.0
    try:
        return sla.cho_factor(A, lower=True, check_finite=True)
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-10 * max(np.trace(A), 1.0) / A.shape[0]
    A[np.diag_indices_from(A)] += jitter
    try:
        return sla.cho_factor(A, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(
            f"G + {shift:g} I is not numerically positive definite even after adding "
            f"jitter {jitter:.3g}; the Gram matrix is badly conditioned or not symmetric"
        ) from exc


def regularized_spd_solve(G, lam: float, M: int, rhs) -> np.ndarray:
    """Solve ``(G + lam * M * I) X = rhs``."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    cf = factor_regularized(G, lam * M)
    return sla.cho_solve(cf, np.asarray(rhs, dtype=float))


def median_heuristic(points) -> float:
    """Median pairwise distance; a common bandwidth guess (not used by default)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = np.sqrt(sq_dists(pts))
    iu = np.triu_indices(pts.shape[0], 1)
    return float(np.median(d[iu])) if iu[0].size else 1.0
