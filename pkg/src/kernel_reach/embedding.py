"""Conditional distribution embedding estimators.

Both estimators turn a transition sample into a linear map from successor
values ``f = [f(y_1), ..., f(y_M)]`` to estimates of ``E[f(y) | x, u]``:

* exact:  ``f^T beta(x, u)``  with ``beta = (G + c I)^-1 k((x, u), .)``
* RFF:    ``f^T gamma(x, u)`` with ``gamma = Z (Z^T Z + c I)^-1 z(x, u)``

where ``c`` is the ridge (``lam`` or ``lam * M``, see ``ridge_scaling``).
Feature rows of ``Z`` are divided by ``sqrt(D)`` so that ``Z Z^T`` estimates
the Gram matrix ``G``.
"""

from __future__ import annotations

from typing import Literal

import numpy as np
import scipy.linalg as sla

from .core import DimensionError, TransitionSample
from .kernels import (DEFAULT_LAMBDA, GaussianKernel, ProductKernel, factor_regularized,
                      gram, sq_dists, stack_pair)
from .rff import JointFeatures

RidgeScaling = Literal["none", "sample_size"]

# bytes of cached query design allowed per expectation operator
DESIGN_BUDGET = 512 * 2 ** 20


def ridge_value(lam: float, M: int, scaling: RidgeScaling) -> float:
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if scaling == "sample_size":
        return lam * M
    if scaling == "none":
        return lam
    raise ValueError(f"unknown ridge scaling {scaling!r}")


def theory_lambda(M: int, scale: float = 1.0) -> float:
    """Regularisation decaying as M^-1/2, the rate used by the convergence results."""
    return scale / np.sqrt(M)


class _Embedding:
    sample: TransitionSample
    ridge: float

    @property
    def size(self) -> int:
        return self.sample.size

    def _check(self, x, u):
        x, u = stack_pair(x, u)
        if x.shape[1] != self.sample.state_dim or u.shape[1] != self.sample.input_dim:
            raise DimensionError(
                f"query has dimensions ({x.shape[1]}, {u.shape[1]}), embedding was fitted on "
                f"({self.sample.state_dim}, {self.sample.input_dim})")
        return x, u

    def expectation(self, f, x, u) -> np.ndarray:
        """Estimate ``E[f(y) | x, u]`` for every query, given ``f`` at the sample successors."""
        return ExpectationOperator(self, x, u, budget=0)(f)

    def operator(self, x, u, budget: int = DESIGN_BUDGET) -> "ExpectationOperator":
        return ExpectationOperator(self, x, u, budget)


class ExactEmbedding(_Embedding):
    """Gram-matrix estimator; fitting costs O(M^2 (n+m)) plus an O(M^3) factorisation."""

    def __init__(self, sample: TransitionSample, kernel: ProductKernel,
                 lam: float = DEFAULT_LAMBDA, ridge_scaling: RidgeScaling = "none"):
        self.sample = sample
        self.kernel = kernel
        self.lam = lam
        self.ridge_scaling = ridge_scaling
        self.ridge = ridge_value(lam, sample.size, ridge_scaling)
        self._rows = kernel.embed(sample.states, sample.inputs)
        G = sq_dists(self._rows)
        np.multiply(G, -0.5, out=G)
        np.exp(G, out=G)
        self._factor = factor_regularized(G, self.ridge)

    def solve(self, rhs) -> np.ndarray:
        """Apply ``(G + c I)^-1``."""
        return sla.cho_solve(self._factor, np.asarray(rhs, dtype=float))

    def cross_kernel(self, x, u) -> np.ndarray:
        x, u = self._check(x, u)
        d = sq_dists(self._rows, self.kernel.embed(x, u))
        np.multiply(d, -0.5, out=d)
        return np.exp(d, out=d)

    def coefficients(self, x, u) -> np.ndarray:
        """``(M, Q)`` matrix whose columns are ``beta`` at each query."""
        return self.solve(self.cross_kernel(x, u))

    def beta(self, x, u) -> np.ndarray:
        c = self.coefficients(x, u)
        return c[:, 0] if np.asarray(x).ndim == 1 else c

    # expectation-operator protocol
    def _weights(self, f):
        return self.solve(f)

    def _design(self, x, u):
        return self.cross_kernel(x, u)

    @staticmethod
    def _apply(design, w):
        return design.T @ w

    def _design_bytes(self, q: int) -> int:
        return 8 * q * self.size


class RffEmbedding(_Embedding):
    """Random-feature estimator.

    ``solver='primal'`` factors the ``D x D`` matrix ``Z^T Z + c I``;
    ``'dual'`` factors the ``M x M`` matrix ``Z Z^T + c I``.  The two give the
    same coefficients (push-through identity); ``'auto'`` picks the smaller.
    """

    def __init__(self, sample: TransitionSample, features: JointFeatures,
                 lam: float = DEFAULT_LAMBDA, ridge_scaling: RidgeScaling = "none",
                 solver: Literal["auto", "primal", "dual"] = "auto"):
        self.sample = sample
        self.features = features
        self.lam = lam
        self.ridge_scaling = ridge_scaling
        self.ridge = ridge_value(lam, sample.size, ridge_scaling)
        self._scale = 1.0 / np.sqrt(features.size)
        Z = features(sample.states, sample.inputs)
        Z *= self._scale
        self.Z = Z
        if solver == "auto":
            solver = "primal" if features.size <= sample.size else "dual"
        if solver not in ("primal", "dual"):
            raise ValueError(f"unknown solver {solver!r}")
        self.solver = solver
        if solver == "primal":
            self._factor = factor_regularized(Z.T @ Z, self.ridge)
        else:
            self._factor = factor_regularized(Z @ Z.T, self.ridge)
        self._W = None

    @property
    def H(self) -> np.ndarray:
        """Normalised feature covariance ``Z^T Z`` (``D x D``)."""
        return self.Z.T @ self.Z

    def scaled_features(self, x, u) -> np.ndarray:
        x, u = self._check(x, u)
        return self.features(x, u) * self._scale

    @property
    def W(self) -> np.ndarray:
        """``Z (Z^T Z + c I)^-1`` (``M x D``), computed on first use."""
        if self._W is None:
            if self.solver == "primal":
                self._W = sla.cho_solve(self._factor, self.Z.T).T
            else:
                self._W = sla.cho_solve(self._factor, self.Z)
        return self._W

    def coefficients(self, x, u) -> np.ndarray:
        """``(M, Q)`` matrix whose columns are ``gamma`` at each query."""
        zq = self.scaled_features(x, u)
        if self._W is not None or zq.shape[0] > 1:
            return self.W @ zq.T
        if self.solver == "primal":
            return self.Z @ sla.cho_solve(self._factor, zq.T)
        return sla.cho_solve(self._factor, self.Z @ zq.T)

    def gamma(self, x, u) -> np.ndarray:
        c = self.coefficients(x, u)
        return c[:, 0] if np.asarray(x).ndim == 1 else c

    def _weights(self, f):
        f = np.asarray(f, dtype=float)
        if self.solver == "primal":
            return sla.cho_solve(self._factor, self.Z.T @ f)
        return self.Z.T @ sla.cho_solve(self._factor, f)

    def _design(self, x, u):
        return self.scaled_features(x, u)

    @staticmethod
    def _apply(design, w):
        return design @ w

    def _design_bytes(self, q: int) -> int:
        return 8 * q * self.features.size


class ExpectationOperator:
    """Expectation estimates at a fixed batch of queries for varying ``f``.

    The per-query design (cross-kernel or feature matrix) is cached when it
    fits in ``budget`` bytes, otherwise recomputed in chunks on each call.
    """

    def __init__(self, embedding: _Embedding, x, u, budget: int = DESIGN_BUDGET,
                 chunk_bytes: int = 64 * 2 ** 20):
        self.embedding = embedding
        self.x, self.u = embedding._check(x, u)
        q = self.x.shape[0]
        per_row = max(embedding._design_bytes(1), 1)
        self.chunk = max(1, chunk_bytes // per_row)
        self._design = None
        if q and embedding._design_bytes(q) <= budget:
            self._design = embedding._design(self.x, self.u)

    def __len__(self):
        return self.x.shape[0]

    def __call__(self, f) -> np.ndarray:
        emb = self.embedding
        f = np.asarray(f, dtype=float)
        if f.shape[0] != emb.size:
            raise DimensionError(f"need {emb.size} successor values, got {f.shape[0]}")
        w = emb._weights(f)
        if self._design is not None:
            return emb._apply(self._design, w)
        out = np.empty((len(self),) + f.shape[1:])
        for i in range(0, len(self), self.chunk):
            sl = slice(i, i + self.chunk)
            out[sl] = emb._apply(emb._design(self.x[sl], self.u[sl]), w)
        return out


def fit_exact(sample: TransitionSample, kx: GaussianKernel | None = None,
              ku: GaussianKernel | None = None, lam: float = DEFAULT_LAMBDA,
              ridge_scaling: RidgeScaling = "none") -> ExactEmbedding:
    return ExactEmbedding(sample, ProductKernel(kx or GaussianKernel(), ku or GaussianKernel()),
                          lam, ridge_scaling)


def fit_rff(sample: TransitionSample, features: JointFeatures, lam: float = DEFAULT_LAMBDA,
            ridge_scaling: RidgeScaling = "none", solver="auto") -> RffEmbedding:
    return RffEmbedding(sample, features, lam, ridge_scaling, solver)


def batched_coefficients(embedding: _Embedding, x, u) -> np.ndarray:
    """``(M, Q)`` coefficient matrix, one column per query pair."""
    return embedding.coefficients(x, u)


def exact_gram(sample: TransitionSample, kernel: ProductKernel) -> np.ndarray:
    """Unregularised Gram matrix of the sample's (state, input) pairs."""
    return gram(kernel, (sample.states, sample.inputs))
