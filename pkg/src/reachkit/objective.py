"""The open-loop reach-avoid probability for a fixed input sequence.

For a Gaussian disturbance the probability that the trajectory stays in the
safe box through step N-1 and lands in the target box at step N is a
rectangle probability of the stacked Gaussian state, evaluated by lattice
quadrature.  A Monte-Carlo path covers arbitrary disturbance samplers, and
the characteristic function of the stacked state is available for checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Box
from .mvn import GaussianVector, QuadConfig, QuadResult, mvn_box_probability
from .systems import (
    ConcatenatedDynamics,
    GaussianDisturbance,
    LtiSystem,
    OpenLoopPolicy,
    ReachAvoidQuery,
    build_concatenated,
    mean_covariance_of_X,
)

__all__ = [
    "StackedRegion",
    "McEstimate",
    "ReachAvoidObjective",
    "reach_avoid_probability",
    "reach_avoid_probability_mc",
    "cf_X",
    "pdf_via_cf_inversion",
]

_MC_CHUNK = 32768


@dataclass(frozen=True)
class StackedRegion:
    """The box ``safe x ... x safe x target`` in stacked-state space."""

    box: Box

    @classmethod
    def for_query(cls, safe: Box, target: Box, horizon: int) -> "StackedRegion":
        if safe.dim != target.dim:
            raise ValueError("safe and target boxes must share a dimension")
        if horizon < 1:
            raise ValueError("horizon must be at least 1")
        reps = horizon - 1
        lower = np.concatenate([np.tile(safe.lower, reps), target.lower])
        upper = np.concatenate([np.tile(safe.upper, reps), target.upper])
        return cls(Box(lower, upper))


@dataclass(frozen=True)
class McEstimate:
    """Monte-Carlo estimate with a 95% normal-approximation half-width."""

    p_hat: float
    half_width_95: float
    n_samples: int

    def __post_init__(self):
        if not 0.0 <= self.p_hat <= 1.0:
            raise ValueError("estimate outside [0, 1]")


def _check_feasible(policy: OpenLoopPolicy, system: LtiSystem, horizon: int):
    U = policy.inputs(system.input_dim)
    if U.shape[0] != horizon:
        raise ValueError(f"policy has {U.shape[0]} steps, query horizon is {horizon}")
    if not bool(np.all(system.input_box.contains(U))):
        raise ValueError("policy leaves the input box")


class ReachAvoidObjective:
    """Evaluator bound to one query; reuses the stacked dynamics across calls.

    Membership of x0 in the safe box is deterministic, so it is checked once
    up front; when violated every probability is exactly zero and no
    quadrature runs.
    """

    def __init__(self, query: ReachAvoidQuery, quad_cfg: QuadConfig):
        dist = query.system.disturbance
        if not isinstance(dist, GaussianDisturbance):
            raise ValueError(
                "quadrature objective needs a Gaussian disturbance; "
                "use the Monte-Carlo path otherwise"
            )
        self.query = query
        self.quad_cfg = quad_cfg
        self.concat = build_concatenated(query.system, query.horizon)
        self.region = StackedRegion.for_query(query.safe, query.target, query.horizon)
        self.x0_safe = bool(query.safe.contains(query.x0))
        N = query.horizon
        self._base_mean = (
            self.concat.G_bar @ np.tile(dist.mean, N) + self.concat.A_bar @ query.x0
        )
        gw = self.concat.G_bar @ np.kron(np.eye(N), dist.covariance)
        cov = gw @ self.concat.G_bar.T
        self._cov = 0.5 * (cov + cov.T)

    def probability(self, policy: OpenLoopPolicy) -> QuadResult:
        _check_feasible(policy, self.query.system, self.query.horizon)
        if not self.x0_safe:
            return QuadResult(0.0, 0.0, 0)
        mean = self._base_mean + self.concat.H_bar @ policy.U
        return mvn_box_probability(GaussianVector(mean, self._cov), self.region.box, self.quad_cfg)


def reach_avoid_probability(
    query: ReachAvoidQuery, policy: OpenLoopPolicy, cfg: QuadConfig
) -> QuadResult:
    """Reach-avoid probability of `policy` by Gaussian rectangle quadrature."""
    return ReachAvoidObjective(query, cfg).probability(policy)


def reach_avoid_probability_mc(
    query: ReachAvoidQuery, policy: OpenLoopPolicy, n_samples: int, seed: int
) -> McEstimate:
    """Reach-avoid probability of `policy` by trajectory simulation.

    Works for any disturbance that can be sampled; deterministic for a fixed
    seed.  The x0-membership factor is deterministic and applied exactly.
    """
    if n_samples < 100:
        raise ValueError("need at least 100 samples for a meaningful estimate")
    system = query.system
    if system.disturbance is None:
        raise ValueError("system has no disturbance model to sample from")
    _check_feasible(policy, system, query.horizon)
    if not query.safe.contains(query.x0):
        return McEstimate(0.0, 0.0, n_samples)

    n, N = system.state_dim, query.horizon
    U = policy.inputs(system.input_dim)
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < n_samples:
        batch = min(_MC_CHUNK, n_samples - done)
        draws = system.disturbance.sample(rng, batch * N).reshape(batch, N, n)
        x = np.broadcast_to(query.x0, (batch, n)).copy()
        alive = np.ones(batch, dtype=bool)
        for k in range(N):
            x = x @ system.A.T + system.B @ U[k] + draws[:, k]
            if k < N - 1:
                alive &= query.safe.contains(x)
        hits += int(np.count_nonzero(alive & query.target.contains(x)))
        done += batch
    p_hat = hits / n_samples
    half_width = 1.96 * np.sqrt(p_hat * (1.0 - p_hat) / n_samples)
    return McEstimate(p_hat, float(half_width), n_samples)


def _cf_w_blocks(system: LtiSystem, blocks: np.ndarray) -> complex:
    dist = system.disturbance
    if isinstance(dist, GaussianDisturbance):
        m, S = dist.mean, dist.covariance
        phases = blocks @ m
        quads = np.einsum("ki,ij,kj->k", blocks, S, blocks)
        return complex(np.prod(np.exp(1j * phases - 0.5 * quads)))
    if dist is not None and dist.cf is not None:
        out = 1.0 + 0.0j
        for blk in blocks:
            out *= complex(dist.cf(blk))
        return out
    raise ValueError("disturbance provides no characteristic function")


def cf_X(
    concat: ConcatenatedDynamics,
    system: LtiSystem,
    x0,
    policy: OpenLoopPolicy,
    beta,
) -> complex:
    """Characteristic function of the stacked state at frequency `beta`.

    Factors through the per-step disturbance CF:
    ``exp(j beta'(A_bar x0 + H_bar U)) * prod_k cf_w((G_bar' beta)_k)``.
    """
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if beta.size != concat.stacked_dim:
        raise ValueError(f"beta has length {beta.size}, expected {concat.stacked_dim}")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    det = concat.A_bar @ x0 + concat.H_bar @ policy.U
    phase = complex(np.exp(1j * float(beta @ det)))
    blocks = (concat.G_bar.T @ beta).reshape(concat.horizon, concat.state_dim)
    return phase * _cf_w_blocks(system, blocks)


def pdf_via_cf_inversion(
    concat: ConcatenatedDynamics,
    system: LtiSystem,
    x0,
    policy: OpenLoopPolicy,
    points,
    freq_radius: float,
    n_freq: int = 128,
) -> np.ndarray:
    """Stacked-state density by trapezoidal inverse Fourier transform.

    Validation-only routine for stacked dimension <= 2: the frequency
    integral is truncated to ``[-freq_radius, freq_radius]^d`` and evaluated
    on an ``n_freq``-per-axis trapezoidal grid.  Returns density values at
    `points`, shape ``(len(points),)``.
    """
    d = concat.stacked_dim
    if d > 2:
        raise ValueError("inverse-transform validation is limited to 2 stacked dimensions")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != d:
        raise ValueError(f"points must have {d} columns")

    axis = np.linspace(-freq_radius, freq_radius, n_freq)
    w = np.full(n_freq, axis[1] - axis[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    if d == 1:
        betas = axis.reshape(-1, 1)
        weights = w
    else:
        bx, by = np.meshgrid(axis, axis, indexing="ij")
        betas = np.column_stack([bx.ravel(), by.ravel()])
        weights = np.outer(w, w).ravel()

    x0 = np.asarray(x0, dtype=float).reshape(-1)
    det = concat.A_bar @ x0 + concat.H_bar @ policy.U
    blocks = (betas @ concat.G_bar).reshape(-1, concat.horizon, concat.state_dim)
    dist = system.disturbance
    if isinstance(dist, GaussianDisturbance):
        phases = blocks @ dist.mean
        quads = np.einsum("mki,ij,mkj->mk", blocks, dist.covariance, blocks)
        cf_w = np.exp(1j * phases - 0.5 * quads).prod(axis=1)
    elif dist is not None and dist.cf is not None:
        cf_w = np.array(
            [np.prod([complex(dist.cf(blk)) for blk in row]) for row in blocks]
        )
    else:
        raise ValueError("disturbance provides no characteristic function")
    cf_vals = np.exp(1j * (betas @ det)) * cf_w

    kernel = np.exp(-1j * (betas @ pts.T))
    dens = (weights * cf_vals) @ kernel / (2.0 * np.pi) ** d
    return dens.real
