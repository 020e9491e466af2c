"""Maximizing the reach-avoid probability over open-loop input sequences.

Two bound-constrained maximizers of the clamped-log objective: a
generating-set direct search (poll +/- coordinate directions on an adaptive
mesh; robust to quadrature noise) and a smooth local method (projected
gradient ascent with central finite differences).  The quadrature seed is
held fixed across all evaluations of one solve, so the noisy objective
becomes a deterministic surrogate.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .mvn import QuadConfig, QuadResult
from .objective import ReachAvoidObjective
from .systems import OpenLoopPolicy, ReachAvoidQuery

__all__ = [
    "SolverConfig",
    "SolveResult",
    "initial_guess",
    "clamped_log_objective",
    "maximize_direct_search",
    "maximize_smooth_local",
    "maximize",
]


@dataclass(frozen=True)
class SolverConfig:
    """Knobs shared by both maximizers.

    Mesh sizes and the finite-difference step are relative to the
    per-coordinate input range: a poll step along coordinate i moves by
    ``mesh * (upper_i - lower_i)``.  `mesh_tol` doubles as the
    projected-gradient stopping tolerance of the smooth method.
    """

    method: str = "direct_search"
    eps_clamp: float = 0.01
    initial_mesh: float = 0.25
    mesh_tol: float = 1e-4
    max_evals: int = 2000
    expansion: float = 2.0
    contraction: float = 0.5
    fd_step: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("direct_search", "smooth_local"):
            raise ValueError(f"unknown method {self.method!r}")
        if not 0.0 < self.eps_clamp < 1.0:
            raise ValueError("eps_clamp must lie in (0, 1)")
        if not 0.0 < self.mesh_tol < self.initial_mesh:
            raise ValueError("need 0 < mesh_tol < initial_mesh")
        if self.expansion <= 1.0 or not 0.0 < self.contraction < 1.0:
            raise ValueError("expansion must exceed 1 and contraction lie in (0, 1)")
        if self.max_evals < 1 or self.fd_step <= 0.0:
            raise ValueError("max_evals and fd_step must be positive")


@dataclass(frozen=True)
class SolveResult:
    """Best input sequence found, its probability, and solve diagnostics."""

    U_star: OpenLoopPolicy
    p_star: QuadResult
    evals: int
    wall_time: float
    converged: bool
    trace: tuple


def initial_guess(query: ReachAvoidQuery, heuristic: bool = False) -> OpenLoopPolicy:
    """Zero sequence clipped to the input box; optionally a least-squares pull.

    The heuristic solves for the sequence steering the stacked mean closest
    to the target center at every step, then clips; it needs a bounded
    target, and includes the disturbance mean when one is known.
    """
    system = query.system
    N = query.horizon
    box = system.input_box
    U = np.tile(box.clip(np.zeros(system.input_dim)), N)
    if not heuristic:
        return OpenLoopPolicy(U)
    if not np.all(np.isfinite(query.target.center)):
        return OpenLoopPolicy(U)
    from .systems import GaussianDisturbance, build_concatenated

    concat = build_concatenated(system, N)
    w_mean = np.zeros(system.state_dim)
    if isinstance(system.disturbance, GaussianDisturbance):
        w_mean = system.disturbance.mean
    goal = np.tile(query.target.center, N)
    drift = concat.A_bar @ query.x0 + concat.G_bar @ np.tile(w_mean, N)
    sol, *_ = np.linalg.lstsq(concat.H_bar, goal - drift, rcond=None)
    clipped = box.clip(sol.reshape(N, system.input_dim)).reshape(-1)
    return OpenLoopPolicy(clipped)


def clamped_log_objective(
    query: ReachAvoidQuery,
    policy: OpenLoopPolicy,
    eps_clamp: float,
    quad_cfg: QuadConfig,
) -> float:
    """``log(max(p, eps_clamp))`` -- the objective both solvers climb."""
    p = ReachAvoidObjective(query, quad_cfg).probability(policy).p
    return math.log(max(p, eps_clamp))


class _Memoized:
    """Objective wrapper counting evaluations and caching QuadResults."""

    def __init__(self, objective: ReachAvoidObjective, eps_clamp: float):
        self.objective = objective
        self.eps_clamp = eps_clamp
        self.cache: dict = {}
        self.evals = 0
        self.p_log: list = []

    def __call__(self, U: np.ndarray) -> float:
        key = U.tobytes()
        res = self.cache.get(key)
        if res is None:
            res = self.objective.probability(OpenLoopPolicy(U))
            self.cache[key] = res
            self.evals += 1
            self.p_log.append(res.p)
        return math.log(max(res.p, self.eps_clamp))

    def result_at(self, U: np.ndarray) -> QuadResult:
        key = U.tobytes()
        if key not in self.cache:
            self.cache[key] = self.objective.probability(OpenLoopPolicy(U))
        return self.cache[key]

    def trace(self) -> tuple:
        out = []
        best = -1.0
        for idx, p in enumerate(self.p_log, start=1):
            best = max(best, p)
            out.append((idx, best))
        return tuple(out)


def _direct_search_core(
    f: Callable[[np.ndarray], float],
    x0: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    cfg: SolverConfig,
    budget: Callable[[], int],
):
    """Generating-set search on a box: opportunistic +/- coordinate polls.

    Poll points are clipped to the box, so every evaluated point is
    feasible.  The mesh expands on success and contracts on a full failed
    poll; stops when the mesh falls below `mesh_tol` or the budget is spent.
    """
    scale = upper - lower
    x = np.clip(x0, lower, upper)
    fx = f(x)
    mesh = cfg.initial_mesh
    d = x.size
    while mesh >= cfg.mesh_tol and budget() > 0:
        improved = False
        for i in range(d):
            for sign in (1.0, -1.0):
                if budget() <= 0:
                    break
                cand = x.copy()
                cand[i] = min(max(cand[i] + sign * mesh * scale[i], lower[i]), upper[i])
                if cand[i] == x[i]:
                    continue
                fc = f(cand)
                if fc > fx:
                    x, fx = cand, fc
                    improved = True
                    break
            if improved or budget() <= 0:
                break
        mesh = mesh * cfg.expansion if improved else mesh * cfg.contraction
        mesh = min(mesh, 1.0)
    converged = mesh < cfg.mesh_tol
    return x, fx, converged


def _projected_gradient_core(
    f: Callable[[np.ndarray], float],
    x0: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    cfg: SolverConfig,
    budget: Callable[[], int],
):
    """Projected gradient ascent with central differences on a box.

    Works in coordinates normalized to [0, 1] per axis so the step and
    tolerance are range-relative.  Stops when the projected-gradient norm
    drops below `mesh_tol`, a line search fails, or the budget is spent.
    """
    scale = upper - lower
    x = np.clip(x0, lower, upper)
    fx = f(x)
    d = x.size
    h = cfg.fd_step
    converged = False
    while budget() > 0:
        grad = np.zeros(d)
        for i in range(d):
            if budget() <= 1:
                return x, fx, converged
            plus = x.copy()
            minus = x.copy()
            plus[i] = min(x[i] + h * scale[i], upper[i])
            minus[i] = max(x[i] - h * scale[i], lower[i])
            gap = (plus[i] - minus[i]) / scale[i]
            if gap <= 0.0:
                continue
            grad[i] = (f(plus) - f(minus)) / gap
        xi = (x - lower) / scale
        proj_norm = float(np.linalg.norm(np.clip(xi + grad, 0.0, 1.0) - xi))
        if proj_norm < cfg.mesh_tol:
            converged = True
            break
        step = 0.25 / max(1.0, float(np.max(np.abs(grad))))
        accepted = False
        for _ in range(25):
            if budget() <= 0:
                break
            cand = np.clip(lower + np.clip(xi + step * grad, 0.0, 1.0) * scale, lower, upper)
            fc = f(cand)
            if fc > fx:
                x, fx = cand, fc
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # No ascent along the finite-difference gradient: local stop.
            converged = proj_norm < cfg.mesh_tol
            break
    return x, fx, converged


def _solve(query: ReachAvoidQuery, cfg: SolverConfig, quad_cfg: QuadConfig,
           initial: Optional[OpenLoopPolicy], core) -> SolveResult:
    objective = ReachAvoidObjective(query, quad_cfg)
    if not query.system.input_box.is_bounded:
        raise ValueError("solvers need a bounded input box")
    start = initial if initial is not None else initial_guess(query)
    N = query.horizon
    lower = np.tile(query.system.input_box.lower, N)
    upper = np.tile(query.system.input_box.upper, N)
    memo = _Memoized(objective, cfg.eps_clamp)

    t0 = time.monotonic()
    budget = lambda: cfg.max_evals - memo.evals
    x_star, _, converged = core(memo, start.U.copy(), lower, upper, cfg, budget)
    wall = time.monotonic() - t0

    return SolveResult(
        U_star=OpenLoopPolicy(x_star),
        p_star=memo.result_at(x_star),
        evals=memo.evals,
        wall_time=wall,
        converged=converged,
        trace=memo.trace(),
    )


def maximize_direct_search(
    query: ReachAvoidQuery,
    cfg: SolverConfig,
    quad_cfg: QuadConfig,
    initial: Optional[OpenLoopPolicy] = None,
) -> SolveResult:
    """Maximize the clamped-log reach-avoid probability by direct search."""
    return _solve(query, cfg, quad_cfg, initial, _direct_search_core)


def maximize_smooth_local(
    query: ReachAvoidQuery,
    cfg: SolverConfig,
    quad_cfg: QuadConfig,
    initial: Optional[OpenLoopPolicy] = None,
) -> SolveResult:
    """Maximize the clamped-log reach-avoid probability by projected gradient."""
    return _solve(query, cfg, quad_cfg, initial, _projected_gradient_core)


def maximize(
    query: ReachAvoidQuery,
    cfg: SolverConfig,
    quad_cfg: QuadConfig,
    initial: Optional[OpenLoopPolicy] = None,
) -> SolveResult:
    """Dispatch on ``cfg.method``."""
    if cfg.method == "direct_search":
        return maximize_direct_search(query, cfg, quad_cfg, initial)
    return maximize_smooth_local(query, cfg, quad_cfg, initial)
