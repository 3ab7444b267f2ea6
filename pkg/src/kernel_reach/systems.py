"""Benchmark systems: double integrator, planar quadrotor and its repeated swarm."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .core import HyperRectangle, MarkovPolicy, ProductSet, as_points

# --------------------------------------------------------------------- disturbances


@dataclass(frozen=True, eq=False)
class Disturbance:
    """Additive i.i.d. disturbance.

    kind ``gaussian``: N(0, cov); ``beta``: scale * Beta(alpha, beta) per
    coordinate; ``exponential``: scale * Exp(rate) per coordinate;
    ``none``: identically zero.
    """

    kind: str
    dim: int
    cov: np.ndarray | None = None
    alpha: float = 0.0
    beta: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind == "gaussian":
            cov = np.asarray(self.cov, dtype=float)
            if cov.ndim == 1:
                cov = np.diag(cov)
            if cov.shape != (self.dim, self.dim) or not np.allclose(cov, cov.T):
                raise ValueError("Gaussian covariance must be a symmetric dim x dim matrix")
            if np.linalg.eigvalsh(cov).min() < -1e-12:
                raise ValueError("Gaussian covariance must be positive semidefinite")
            object.__setattr__(self, "cov", cov)
        elif self.kind == "beta":
            if not (self.alpha > 0 and self.beta > 0):
                raise ValueError("beta shape parameters must be positive")
        elif self.kind == "exponential":
            if not self.alpha > 0:
                raise ValueError("exponential rate must be positive")
        elif self.kind != "none":
            raise ValueError(f"unknown disturbance kind {self.kind!r}")

    @property
    def diagonal(self) -> bool:
        return self.kind == "gaussian" and np.count_nonzero(self.cov - np.diag(np.diag(self.cov))) == 0

    @property
    def name(self) -> str:
        if self.kind == "gaussian":
            d = np.diag(self.cov)
            return f"gaussian(var={d[0]:g})" if np.all(d == d[0]) and self.diagonal else "gaussian"
        if self.kind == "beta":
            return f"{self.scale:g}*beta({self.alpha:g},{self.beta:g})"
        if self.kind == "exponential":
            return f"{self.scale:g}*exp({self.alpha:g})"
        return "none"

    def mean(self) -> np.ndarray:
        if self.kind == "beta":
            return np.full(self.dim, self.scale * self.alpha / (self.alpha + self.beta))
        if self.kind == "exponential":
            return np.full(self.dim, self.scale / self.alpha)
        return np.zeros(self.dim)

    def draw(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        shape = (self.dim,) if size is None else (size, self.dim)
        if self.kind == "gaussian":
            if self.diagonal:
                return rng.standard_normal(shape) * np.sqrt(np.diag(self.cov))
            L = _psd_factor(self.cov)
            return rng.standard_normal(shape) @ L.T
        if self.kind == "beta":
            return self.scale * rng.beta(self.alpha, self.beta, shape)
        if self.kind == "exponential":
            return self.scale * rng.exponential(1.0 / self.alpha, shape)
        return np.zeros(shape)

    def tile(self, copies: int) -> "Disturbance":
        """Independent copies stacked into one disturbance of dimension ``copies * dim``."""
        if self.kind == "gaussian":
            if self.diagonal:
                return replace(self, dim=self.dim * copies, cov=np.tile(np.diag(self.cov), copies))
            return replace(self, dim=self.dim * copies, cov=sla.block_diag(*[self.cov] * copies))
        return replace(self, dim=self.dim * copies)


def _psd_factor(cov):
    w, v = np.linalg.eigh(cov)
    return v * np.sqrt(np.clip(w, 0.0, None))


def gaussian(variance, dim: int | None = None) -> Disturbance:
    var = np.asarray(variance, dtype=float)
    if var.ndim == 0:
        var = np.full(dim, float(var))
    return Disturbance("gaussian", var.shape[0], cov=var)


def scaled_beta(alpha: float, beta: float, scale: float, dim: int) -> Disturbance:
    return Disturbance("beta", dim, alpha=alpha, beta=beta, scale=scale)


def scaled_exponential(rate: float, scale: float, dim: int) -> Disturbance:
    return Disturbance("exponential", dim, alpha=rate, scale=scale)


def draw_disturbance(d: Disturbance, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    return d.draw(rng, size)


# --------------------------------------------------------------------------- models


@dataclass(frozen=True, eq=False)
class SystemModel:
    """Discrete-time system ``x+ = step(x, u, w)`` with vectorised ``step``.

    ``affine`` holds ``(A, B)`` when ``step(x, u, w) = A x + B u + w``.
    """

    name: str
    state_dim: int
    input_dim: int
    step_fn: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    disturbance: Disturbance
    dt: float
    affine: tuple[np.ndarray, np.ndarray] | None = None
    params: dict = field(default_factory=dict)

    def step(self, x, u, w) -> np.ndarray:
        x, single = as_points(x, self.state_dim)
        u = np.asarray(u, dtype=float).reshape(x.shape[0], self.input_dim)
        w = np.asarray(w, dtype=float).reshape(x.shape[0], self.state_dim)
        out = self.step_fn(x, u, w)
        return out[0] if single else out

    def with_disturbance(self, d: Disturbance) -> "SystemModel":
        if d.dim != self.state_dim:
            raise ValueError("disturbance dimension must equal the state dimension")
        return replace(self, disturbance=d)


def integrator_matrices(dt: float = 0.25) -> tuple[np.ndarray, np.ndarray]:
    A = np.array([[1.0, dt], [0.0, 1.0]])
    B = np.array([[dt ** 2 / 2.0], [dt]])
    return A, B


def integrator_step(x, u, w, dt: float = 0.25) -> np.ndarray:
    A, B = integrator_matrices(dt)
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    return x @ A.T + np.reshape(u, x.shape[:-1] + (1,)) @ B.T + np.asarray(w, dtype=float)


def integrator(disturbance: Disturbance | None = None, dt: float = 0.25) -> SystemModel:
    """2-D chain of integrators; Gaussian N(0, 0.01 I) disturbance by default."""
    A, B = integrator_matrices(dt)
    d = disturbance or gaussian(0.01, 2)
    return SystemModel("integrator", 2, 1, lambda x, u, w: x @ A.T + u @ B.T + w,
                       d, dt, affine=(A, B), params={"dt": dt})


@dataclass(frozen=True)
class QuadrotorParams:
    inertia: float = 2.0
    arm: float = 2.0
    mass: float = 5.0
    gravity: float = 9.8
    dt: float = 0.25

    def __post_init__(self):
        if min(self.inertia, self.arm, self.mass, self.gravity, self.dt) <= 0:
            raise ValueError("quadrotor parameters must be positive")

    @property
    def hover_thrust(self) -> float:
        return self.mass * self.gravity / 2.0


QUADROTOR_GAUSSIAN_VARIANCE = np.array([1e-3, 1e-5, 1e-3, 1e-5, 1e-3, 1e-5])


def quadrotor_step(z, u, w, params: QuadrotorParams = QuadrotorParams()) -> np.ndarray:
    """Forward-Euler step of the planar quadrotor, then ``+ w``.

    State ``[x, xdot, y, ydot, theta, thetadot]``, input ``[u1, u2]``.
    """
    z = np.asarray(z, dtype=float)
    u = np.asarray(u, dtype=float)
    p = params
    thrust = u[..., 0] + u[..., 1]
    theta = z[..., 4]
    dz = np.stack([
        z[..., 1],
        -thrust * np.sin(theta) / p.mass,
        z[..., 3],
        (thrust * np.cos(theta) - p.mass * p.gravity) / p.mass,
        z[..., 5],
        p.arm * (u[..., 0] - u[..., 1]) / p.inertia,
    ], axis=-1)
    return z + p.dt * dz + np.asarray(w, dtype=float)


def quadrotor(disturbance: Disturbance | None = None,
              params: QuadrotorParams = QuadrotorParams()) -> SystemModel:
    d = disturbance or gaussian(QUADROTOR_GAUSSIAN_VARIANCE)
    return SystemModel("quadrotor", 6, 2, lambda z, u, w: quadrotor_step(z, u, w, params),
                       d, params.dt, params={"params": params})


def quadrotor_linearization(params: QuadrotorParams = QuadrotorParams()):
    """Continuous-time Jacobians at hover (z = 0, u1 = u2 = m g / 2)."""
    p = params
    Ac = np.zeros((6, 6))
    Ac[0, 1] = Ac[2, 3] = Ac[4, 5] = 1.0
    Ac[1, 4] = -p.gravity
    Bc = np.zeros((6, 2))
    Bc[3] = 1.0 / p.mass
    Bc[5] = [p.arm / p.inertia, -p.arm / p.inertia]
    return Ac, Bc


HOVER_REFERENCE = np.array([0.0, 0.0, 1.0, 0.0, 0.0, 0.0])


class LqrPolicy:
    """``u = u_hover + K (z_ref - z)``, applied block-wise for repeated copies.

    ``reference`` is ``(6,)`` or ``(C, 6)`` for ``C`` copies.
    """

    def __init__(self, gain: np.ndarray, u_hover: np.ndarray, reference: np.ndarray):
        self.gain = gain
        self.u_hover = u_hover
        self.reference = np.atleast_2d(reference)

    @property
    def copies(self) -> int:
        return self.reference.shape[0]

    def __call__(self, z: np.ndarray) -> np.ndarray:
        c = self.copies
        zz = z.reshape(z.shape[0], c, 6)
        u = self.u_hover + (self.reference[None] - zz) @ self.gain.T
        return u.reshape(z.shape[0], 2 * c)

    def as_markov(self, name: str = "lqr") -> MarkovPolicy:
        return MarkovPolicy((self,), 6 * self.copies, 2 * self.copies, name)


def lqr_gain(params: QuadrotorParams = QuadrotorParams(), Q=None, R=None) -> np.ndarray:
    Ac, Bc = quadrotor_linearization(params)
    A = np.eye(6) + params.dt * Ac
    B = params.dt * Bc
    Q = np.eye(6) if Q is None else np.asarray(Q, dtype=float)
    R = 0.1 * np.eye(2) if R is None else np.asarray(R, dtype=float)
    try:
        P = sla.solve_discrete_are(A, B, Q, R)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ValueError("LQR weights give no stabilising solution") from exc
    K = np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
    if np.max(np.abs(np.linalg.eigvals(A - B @ K))) >= 1.0:
        raise ValueError("LQR gain does not stabilise the linearised system")
    return K


def hover_lqr_policy(params: QuadrotorParams = QuadrotorParams(), Q=None, R=None,
                     reference=None, copies: int = 1, spacing: float = 2.0) -> MarkovPolicy:
    """Reference-tracking LQR about hover; default reference (0, 0, 1, 0, 0, 0).

    For ``copies > 1`` copy ``c`` tracks the reference shifted by ``c * spacing``
    along the lateral axis.
    """
    K = lqr_gain(params, Q, R)
    ref = HOVER_REFERENCE if reference is None else np.asarray(reference, dtype=float)
    refs = np.tile(ref, (copies, 1))
    refs[:, 0] += spacing * np.arange(copies)
    pol = LqrPolicy(K, np.full(2, params.hover_thrust), refs)
    return pol.as_markov("lqr" if copies == 1 else f"lqr-x{copies}")


def repeated_system(base: SystemModel, copies: int) -> SystemModel:
    """Block-diagonal composition of ``copies`` decoupled copies of ``base``."""
    if copies < 1:
        raise ValueError("need at least one copy")
    if copies == 1:
        return base
    n, m = base.state_dim, base.input_dim

    def step(x, u, w):
        q = x.shape[0]
        out = base.step_fn(x.reshape(q * copies, n), u.reshape(q * copies, m),
                           w.reshape(q * copies, n))
        return out.reshape(q, copies * n)

    affine = None
    if base.affine is not None:
        A, B = base.affine
        affine = (sla.block_diag(*[A] * copies), sla.block_diag(*[B] * copies))
    return SystemModel(f"{base.name}-x{copies}", n * copies, m * copies, step,
                       base.disturbance.tile(copies), base.dt, affine,
                       {**base.params, "copies": copies})


# ----------------------------------------------------------------------- problem sets


def integrator_sets() -> tuple[HyperRectangle, HyperRectangle]:
    """Safe set [-1, 1]^2 and target set [-0.5, 0.5]^2."""
    return HyperRectangle.cube(1.0, 2), HyperRectangle.cube(0.5, 2)


def quadrotor_sets(offset: float = 0.0) -> tuple[HyperRectangle, HyperRectangle]:
    """Tube sets for one quadrotor.

    Target ``{|x - offset| < 1, y >= 0.8}``.  The safe set returned is
    ``{|x - offset| < 1, y >= 0}`` so that it contains the target and its
    difference with the target is the altitude band ``0 <= y < 0.8``.
    """
    inf = np.inf
    lo = np.array([offset - 1.0, -inf, 0.0, -inf, -inf, -inf])
    hi = np.array([offset + 1.0, inf, inf, inf, inf, inf])
    open_lat = np.array([False, True, True, True, True, True])
    K = HyperRectangle(lo, hi, lower_closed=open_lat, upper_closed=open_lat)
    lo_t = lo.copy()
    lo_t[2] = 0.8
    T = HyperRectangle(lo_t, hi, lower_closed=open_lat, upper_closed=open_lat)
    return K, T


def repeated_quadrotor_sets(copies: int, spacing: float = 2.0):
    Ks, Ts = zip(*(quadrotor_sets(spacing * c) for c in range(copies)))
    return ProductSet.repeated(Ks), ProductSet.repeated(Ts)


# ------------------------------------------------------------------------ simulation


def simulate(system: SystemModel, policy: MarkovPolicy, x0, steps: int,
             rng: np.random.Generator) -> np.ndarray:
    """Trajectory ``x_0 ... x_steps``; shape ``(steps+1, n)`` or ``(steps+1, R, n)`` for a batch."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    x, single = as_points(x0, system.state_dim)
    traj = np.empty((steps + 1,) + x.shape)
    traj[0] = x
    for k in range(steps):
        u = policy(k, traj[k])
        w = system.disturbance.draw(rng, x.shape[0])
        traj[k + 1] = system.step_fn(traj[k], u, w)
    return traj[:, 0] if single else traj
