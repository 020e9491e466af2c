"""Discrete-time stochastic LTI systems and their stacked-horizon form.

A system ``x_{k+1} = A x_k + B u_k + w_k`` with IID disturbance ``w_k`` and
compact input box is collapsed over a horizon N into the affine map
``X = A_bar x0 + H_bar U + G_bar W`` where X, U, W stack the states, inputs,
and disturbances of steps 1..N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .geometry import Box
from .mvn import GaussianVector

__all__ = [
    "GaussianDisturbance",
    "SamplerDisturbance",
    "DisturbanceModel",
    "LtiSystem",
    "ConcatenatedDynamics",
    "ReachAvoidQuery",
    "OpenLoopPolicy",
    "build_concatenated",
    "build_chain_of_integrators",
    "mean_covariance_of_X",
    "simulate",
]


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype).copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GaussianDisturbance:
    """IID Gaussian disturbance ``w ~ N(mean, covariance)``, SPD covariance."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1).copy()
        cov = np.asarray(self.covariance, dtype=float)
        if cov.ndim == 0:
            cov = cov.reshape(1, 1)
        if cov.shape != (mean.size, mean.size):
            raise ValueError("covariance shape does not match mean length")
        if np.max(np.abs(cov - cov.T)) > 1e-12 * max(1.0, float(np.max(np.abs(cov)))):
            raise ValueError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        eigmin = float(np.linalg.eigvalsh(cov)[0])
        if eigmin <= 0.0:
            raise ValueError(f"covariance must be positive definite (min eig {eigmin:g})")
        chol = np.linalg.cholesky(cov)
        mean.setflags(write=False)
        cov.setflags(write=False)
        chol.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "_chol", chol)

    @property
    def dim(self) -> int:
        return self.mean.size

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        z = rng.standard_normal((size, self.dim))
        return self.mean + z @ self._chol.T

    def cf(self, alpha) -> complex:
        """Characteristic function ``E[exp(j alpha' w)]``."""
        alpha = np.asarray(alpha, dtype=float).reshape(-1)
        return complex(
            np.exp(1j * float(alpha @ self.mean) - 0.5 * float(alpha @ self.covariance @ alpha))
        )


@dataclass(frozen=True)
class SamplerDisturbance:
    """Disturbance given by a seeded sampling procedure.

    `sampler(rng, size)` must return draws of shape ``(size, dim)``.  An
    optional characteristic-function evaluator enables the CF-based paths.
    """

    dim: int
    sampler: Callable[[np.random.Generator, int], np.ndarray]
    cf: Optional[Callable[[np.ndarray], complex]] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("disturbance dimension must be positive")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        draws = np.asarray(self.sampler(rng, size), dtype=float)
        if draws.shape != (size, self.dim):
            raise ValueError(
                f"sampler returned shape {draws.shape}, expected {(size, self.dim)}"
            )
        return draws


DisturbanceModel = Union[GaussianDisturbance, SamplerDisturbance]


@dataclass(frozen=True)
class LtiSystem:
    """The tuple (A, B, disturbance, input box) of one time step.

    `disturbance` may be None for a partially specified system (e.g. a
    freshly built benchmark plant); operations that need it raise.
    """

    A: np.ndarray
    B: np.ndarray
    disturbance: Optional[DisturbanceModel]
    input_box: Box

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float)).copy()
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        B = B.copy()
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise ValueError(f"B has {B.shape[0]} rows but A is {A.shape[0]}x{A.shape[1]}")
        if self.disturbance is not None and self.disturbance.dim != A.shape[0]:
            raise ValueError("disturbance dimension does not match state dimension")
        if self.input_box.dim != B.shape[1]:
            raise ValueError("input box dimension does not match B column count")
        if self.input_box.is_empty:
            raise ValueError("input box must be nonempty")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def input_dim(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class ConcatenatedDynamics:
    """Stacked matrices of ``X = A_bar x0 + H_bar U + G_bar W`` over N steps.

    Row-block k (k = 1..N) holds the state at step k: A_bar block k is A^k,
    H_bar block (k, j) is ``A^(k-1-j) B`` for j < k and zero otherwise, and
    G_bar carries the same structure with B replaced by the identity, so its
    diagonal blocks are identities.
    """

    A_bar: np.ndarray
    H_bar: np.ndarray
    G_bar: np.ndarray
    horizon: int

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        object.__setattr__(self, "A_bar", _frozen_array(self.A_bar))
        object.__setattr__(self, "H_bar", _frozen_array(self.H_bar))
        object.__setattr__(self, "G_bar", _frozen_array(self.G_bar))

    @property
    def state_dim(self) -> int:
        return self.A_bar.shape[1]

    @property
    def input_dim(self) -> int:
        return self.H_bar.shape[1] // self.horizon

    @property
    def stacked_dim(self) -> int:
        return self.A_bar.shape[0]


@dataclass(frozen=True)
class ReachAvoidQuery:
    """Stay in `safe` at steps 0..N-1 and hit `target` at step N, from `x0`."""

    system: LtiSystem
    safe: Box
    target: Box
    horizon: int
    x0: np.ndarray

    def __post_init__(self):
        n = self.system.state_dim
        if self.safe.dim != n or self.target.dim != n:
            raise ValueError("safe/target box dimension does not match the system")
        x0 = np.asarray(self.x0, dtype=float).reshape(-1).copy()
        if x0.size != n:
            raise ValueError(f"x0 has length {x0.size}, expected {n}")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)


@dataclass(frozen=True)
class OpenLoopPolicy:
    """A stacked input sequence ``U = [u_0; ...; u_{N-1}]``."""

    U: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "U", _frozen_array(np.asarray(self.U, dtype=float).reshape(-1)))

    def inputs(self, input_dim: int) -> np.ndarray:
        """The sequence reshaped to ``(N, m)``."""
        if self.U.size % input_dim:
            raise ValueError("policy length is not a multiple of the input dimension")
        return self.U.reshape(-1, input_dim)


def build_concatenated(system: LtiSystem, horizon: int) -> ConcatenatedDynamics:
    """Stack `horizon` steps of the system into one affine-Gaussian map."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    n, m = system.state_dim, system.input_dim
    N = horizon
    powers = [np.eye(n)]
    for _ in range(N):
        powers.append(powers[-1] @ system.A)

    A_bar = np.vstack(powers[1:])
    H_bar = np.zeros((n * N, m * N))
    G_bar = np.zeros((n * N, n * N))
    for k in range(1, N + 1):
        rows = slice((k - 1) * n, k * n)
        for j in range(k):
            H_bar[rows, j * m : (j + 1) * m] = powers[k - 1 - j] @ system.B
            G_bar[rows, j * n : (j + 1) * n] = powers[k - 1 - j]
    return ConcatenatedDynamics(A_bar, H_bar, G_bar, N)


def build_chain_of_integrators(
    n: int,
    sampling_time: float,
    disturbance: Optional[DisturbanceModel] = None,
    input_box: Optional[Box] = None,
) -> LtiSystem:
    """Discretized chain of n integrators driven through the last state.

    With sampling time T the state map is upper-triangular Toeplitz,
    ``A[i, j] = T^(j-i) / (j-i)!`` for ``j >= i``, and the input enters as
    ``B[i] = T^(n-i) / (n-i)!`` (0-indexed), i.e. ``[T^n/n!, ..., T^2/2, T]``.
    The disturbance is left to the caller; the input box defaults to [-1, 1].
    """
    if n < 1:
        raise ValueError("state dimension must be at least 1")
    if sampling_time <= 0:
        raise ValueError("sampling time must be positive")
    T = float(sampling_time)
    A = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            A[i, j] = T ** (j - i) / math.factorial(j - i)
    B = np.array([T ** (n - i) / math.factorial(n - i) for i in range(n)]).reshape(n, 1)
    if input_box is None:
        input_box = Box([-1.0], [1.0])
    return LtiSystem(A=A, B=B, disturbance=disturbance, input_box=input_box)


def mean_covariance_of_X(
    concat: ConcatenatedDynamics,
    system: LtiSystem,
    x0,
    policy: OpenLoopPolicy,
) -> GaussianVector:
    """Mean and covariance of the stacked state under a Gaussian disturbance.

    ``mean = G_bar (1 kron w_mean) + A_bar x0 + H_bar U`` and
    ``cov = G_bar (I kron w_cov) G_bar'``.
    """
    dist = system.disturbance
    if not isinstance(dist, GaussianDisturbance):
        raise ValueError("stacked state is Gaussian only for a Gaussian disturbance")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    N = concat.horizon
    stacked_w_mean = np.tile(dist.mean, N)
    mean = concat.G_bar @ stacked_w_mean + concat.A_bar @ x0 + concat.H_bar @ policy.U
    gw = concat.G_bar @ np.kron(np.eye(N), dist.covariance)
    cov = gw @ concat.G_bar.T
    cov = 0.5 * (cov + cov.T)
    return GaussianVector(mean, cov)


def simulate(system: LtiSystem, x0, policy: OpenLoopPolicy, W) -> np.ndarray:
    """Stepwise rollout; returns the stacked state trajectory.

    `W` holds disturbances ``w_0..w_{N-1}`` stacked as a vector of length
    ``n*N`` or as a batch ``(batch, n*N)``; the result has matching shape
    with states ``x_1..x_N`` stacked.
    """
    n, m = system.state_dim, system.input_dim
    U = policy.inputs(m)
    N = U.shape[0]
    W = np.asarray(W, dtype=float)
    squeeze = W.ndim == 1
    W = np.atleast_2d(W)
    if W.shape[1] != n * N:
        raise ValueError(f"W has {W.shape[1]} columns, expected {n * N}")
    x = np.broadcast_to(np.asarray(x0, dtype=float).reshape(-1), (W.shape[0], n)).copy()
    out = np.empty_like(W)
    for k in range(N):
        x = x @ system.A.T + system.B @ U[k] + W[:, k * n : (k + 1) * n]
        out[:, k * n : (k + 1) * n] = x
    return out[0] if squeeze else out
