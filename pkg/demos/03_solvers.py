"""Choosing the input sequence: direct search versus a smooth local method.

Both solvers climb log(max(p, eps)).  The clamp makes the objective flat
wherever p < eps, so a gradient method started on that plateau cannot move,
while the direct search polls at mesh scale and can walk off it.  This is
the mechanism behind the quality gap between the two.
"""

import numpy as np

from reachkit import (
    Box,
    GaussianDisturbance,
    OpenLoopPolicy,
    QuadConfig,
    ReachAvoidQuery,
    SolverConfig,
    build_chain_of_integrators,
    initial_guess,
    maximize_direct_search,
    maximize_smooth_local,
    reach_avoid_probability,
)

n, horizon = 2, 10
system = build_chain_of_integrators(
    n, 0.1, disturbance=GaussianDisturbance(np.zeros(n), 0.01 * np.eye(n))
)

quad_cfg = QuadConfig(eps=2e-3, seed=11)
solver_cfg = SolverConfig(eps_clamp=0.01, mesh_tol=2e-3, max_evals=250, seed=11)

# A state near the corner of the safe box: doing nothing almost surely
# fails, so the zero initial guess sits close to the clamp plateau.
query = ReachAvoidQuery(
    system=system,
    safe=Box.centered(1.0, n),
    target=Box.centered(0.5, n),
    horizon=horizon,
    x0=np.array([0.1, 0.9]),
)
p0 = reach_avoid_probability(query, initial_guess(query), quad_cfg)
print(f"probability of the zero sequence: {p0.p:.4f}")

ds = maximize_direct_search(query, solver_cfg, quad_cfg)
sl = maximize_smooth_local(query, solver_cfg, quad_cfg)
print(f"direct search : p = {ds.p_star.p:.4f} after {ds.evals} evaluations "
      f"({ds.wall_time:.1f}s, converged={ds.converged})")
print(f"smooth local  : p = {sl.p_star.p:.4f} after {sl.evals} evaluations "
      f"({sl.wall_time:.1f}s, converged={sl.converged})")

print("\nbest-so-far trace of the direct search (every 20th evaluation):")
for idx, best in ds.trace[::20]:
    print(f"  eval {idx:4d}: best p = {best:.4f}")

print("\noptimal input sequence (direct search):")
print(np.array2string(ds.U_star.inputs(1).ravel(), precision=3))
