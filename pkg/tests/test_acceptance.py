"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s``.  The n=2 study fixture is
shared between the underapproximation check and the solver comparison; it is
the expensive part of the suite (about 15 minutes).
"""

import math
import time

import numpy as np
import pytest
from scipy.special import ndtr

from oracles import mvn_box_prob_tensor
from reachkit import (
    Box,
    GaussianDisturbance,
    GaussianVector,
    GridMemoryError,
    GridSpec,
    OpenLoopPolicy,
    QuadConfig,
    ReachAvoidObjective,
    ReachAvoidQuery,
    SolverConfig,
    build_chain_of_integrators,
    cli,
    dp_solve,
    dp_value_at,
    maximize_direct_search,
    maximize_smooth_local,
    mvn_box_probability,
    reach_avoid_probability,
    reach_avoid_probability_mc,
)
from conftest import random_query


def report(criterion: str, ok: bool, detail: str):
    print(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}", flush=True)
    assert ok, f"{criterion}: {detail}"


def n2_study_config():
    """The calibrated double-integrator study (sampling time as calibrated)."""
    n = 2
    dist = GaussianDisturbance(np.zeros(n), 0.01 * np.eye(n))
    system = build_chain_of_integrators(n, 0.1, disturbance=dist)
    safe, target = Box.centered(1.0, n), Box.centered(0.5, n)
    grid = GridSpec(
        state_spacing=0.05,
        input_spacing=0.1,
        disturbance_box=Box.centered(0.5, n),
        disturbance_spacing=0.05,
    )
    quad = QuadConfig(eps=3e-3, seed=11)
    solver = SolverConfig(eps_clamp=0.01, mesh_tol=2e-3, max_evals=250, seed=11)
    return system, safe, target, grid, quad, solver


@pytest.fixture(scope="module")
def n2_sweep():
    """DP + both solvers on an 11x11 sweep of the calibrated n=2 study."""
    system, safe, target, grid, quad, solver = n2_study_config()
    horizon = 10
    axis = np.linspace(-0.9, 0.9, 11)
    points = [np.array([a, b]) for a in axis for b in axis]
    vg = dp_solve(
        ReachAvoidQuery(system=system, safe=safe, target=target, horizon=horizon,
                        x0=points[0]),
        grid,
    )
    rows = []
    for x0 in points:
        query = ReachAvoidQuery(system=system, safe=safe, target=target,
                                horizon=horizon, x0=x0)
        ds = maximize_direct_search(query, solver, quad)
        sl = maximize_smooth_local(query, solver, quad)
        rows.append(
            {
                "x0": x0,
                "v": dp_value_at(vg, x0),
                "ds": ds.p_star.p,
                "ds_err": ds.p_star.err_est,
                "sl": sl.p_star.p,
                "sl_err": sl.p_star.err_est,
            }
        )
    return rows


def test_criterion_1_quadrature_vs_analytic():
    t0 = time.monotonic()
    rng = np.random.default_rng(1)
    worst = 0.0
    for d in (1, 2, 10, 100):
        var = rng.uniform(0.5, 2.0, d)
        lo = rng.uniform(-2.0, -0.5, d)
        hi = rng.uniform(0.5, 2.0, d)
        cfg = QuadConfig(eps=1e-3, seed=d)
        r = mvn_box_probability(GaussianVector(np.zeros(d), np.diag(var)), Box(lo, hi), cfg)
        sd = np.sqrt(var)
        exact = float(np.prod(ndtr(hi / sd) - ndtr(lo / sd)))
        worst = max(worst, abs(r.p - exact))
    orthant = mvn_box_probability(
        GaussianVector(np.zeros(2), [[1.0, 0.5], [0.5, 1.0]]),
        Box([0.0, 0.0], [np.inf, np.inf]),
        QuadConfig(eps=1e-3, seed=5),
    )
    orthant_gap = abs(orthant.p - 1.0 / 3.0)
    elapsed = time.monotonic() - t0
    ok = worst <= 2e-3 and orthant_gap <= 2e-3 and elapsed < 5.0
    report(
        "criterion 1 (quadrature vs analytic)",
        ok,
        f"diag gap {worst:.2e}, orthant gap {orthant_gap:.2e}, {elapsed:.1f}s",
    )


def test_criterion_2_quadrature_vs_dense_oracle():
    t0 = time.monotonic()
    rng = np.random.default_rng(2)
    worst = 0.0
    for case in range(20):
        d = int(rng.integers(1, 4))
        root = rng.standard_normal((d, d))
        cov = root @ root.T + 0.4 * np.eye(d)
        mean = rng.uniform(-0.5, 0.5, d)
        lo = mean + rng.uniform(-2.5, -0.5, d)
        hi = mean + rng.uniform(0.5, 2.5, d)
        r = mvn_box_probability(GaussianVector(mean, cov), Box(lo, hi),
                                QuadConfig(eps=1e-3, seed=100 + case))
        oracle = mvn_box_prob_tensor(mean, cov, lo, hi, nodes=200)
        worst = max(worst, abs(r.p - oracle))
    elapsed = time.monotonic() - t0
    ok = worst <= 5e-3 and elapsed < 60.0
    report(
        "criterion 2 (quadrature vs dense-quadrature oracle)",
        ok,
        f"worst gap {worst:.2e} over 20 cases, {elapsed:.1f}s",
    )


def test_criterion_3_underapproximation_desk_check(n2_sweep):
    violations = [
        (row["x0"], row["ds"], row["v"])
        for row in n2_sweep
        if row["ds"] > row["v"] + 0.02
    ]
    worst = max((row["ds"] - row["v"]) for row in n2_sweep)
    ok = not violations and len(n2_sweep) >= 100
    report(
        "criterion 3 (open-loop bound below DP value, +0.02 slack)",
        ok,
        f"{len(n2_sweep)} points, worst (bound - DP) = {worst:+.3f}, "
        f"{len(violations)} violations",
    )


def test_criterion_4_cross_oracle():
    # solve each random query, then compare the two oracles at the solved
    # input sequence
    t0 = time.monotonic()
    rng = np.random.default_rng(4)
    solver_cfg = SolverConfig(eps_clamp=0.01, mesh_tol=1e-2, max_evals=60, seed=4)
    agree = 0
    total = 0
    attempts = 0
    while total < 100 and attempts < 600:
        attempts += 1
        q = random_query(rng, max_horizon=5)
        solved = maximize_direct_search(q, solver_cfg, QuadConfig(eps=3e-3, seed=attempts))
        quad = reach_avoid_probability(
            q, solved.U_star, QuadConfig(eps=1e-3, seed=attempts)
        )
        if not 0.02 <= quad.p <= 0.98:
            continue  # keep queries the MC oracle can actually resolve
        total += 1
        mc = reach_avoid_probability_mc(q, solved.U_star, 100_000, seed=10_000 + attempts)
        if abs(quad.p - mc.p_hat) <= mc.half_width_95 + quad.err_est:
            agree += 1
    elapsed = time.monotonic() - t0
    ok = total == 100 and agree >= 95 and elapsed < 600.0
    report(
        "criterion 4 (quadrature vs Monte-Carlo cross-oracle at the solved sequence)",
        ok,
        f"{agree}/{total} agreements, {elapsed:.0f}s",
    )


def test_criterion_5_log_concavity():
    t0 = time.monotonic()
    system, safe, target, _, _, _ = n2_study_config()
    quad = QuadConfig(eps=1e-3, seed=55)
    query = ReachAvoidQuery(system=system, safe=safe, target=target, horizon=5,
                            x0=np.array([0.2, 0.1]))
    objective = ReachAvoidObjective(query, quad)
    rng = np.random.default_rng(5)
    passes = 0
    total = 0
    attempts = 0
    while total < 100 and attempts < 1000:
        attempts += 1
        U1 = rng.uniform(-1.0, 1.0, 5)
        U2 = rng.uniform(-1.0, 1.0, 5)
        r1 = objective.probability(OpenLoopPolicy(U1))
        r2 = objective.probability(OpenLoopPolicy(U2))
        if min(r1.p, r2.p) < 10 * quad.eps:
            continue
        rm = objective.probability(OpenLoopPolicy(0.5 * (U1 + U2)))
        total += 1
        err = max(r1.err_est, r2.err_est, rm.err_est, 1e-12)
        delta = 3.0 * err / min(r1.p, r2.p, max(rm.p, 1e-12))
        lhs = math.log(max(rm.p, 1e-300))
        rhs = 0.5 * (math.log(r1.p) + math.log(r2.p)) - delta
        if lhs >= rhs:
            passes += 1
    elapsed = time.monotonic() - t0
    ok = total >= 100 and passes / total >= 0.99 and elapsed < 600.0
    report(
        "criterion 5 (log-concavity midpoint inequality)",
        ok,
        f"{passes}/{total} pairs hold, {elapsed:.0f}s",
    )


def test_criterion_6_scalability_40d():
    t0 = time.monotonic()
    n, horizon = 40, 10
    system = build_chain_of_integrators(
        n, 0.25, disturbance=GaussianDisturbance(np.zeros(n), 0.01 * np.eye(n))
    )
    query = ReachAvoidQuery(
        system=system, safe=Box.centered(10.0, n), target=Box.centered(8.0, n),
        horizon=horizon, x0=np.zeros(n),
    )
    res = maximize_direct_search(
        query,
        SolverConfig(eps_clamp=1e-3, mesh_tol=1e-2, max_evals=150, seed=7),
        QuadConfig(eps=1e-3, seed=7),
    )
    elapsed = time.monotonic() - t0

    guard_hit = False
    try:
        dp_solve(
            ReachAvoidQuery(
                system=build_chain_of_integrators(
                    4, 0.25,
                    disturbance=GaussianDisturbance(np.zeros(4), 0.01 * np.eye(4)),
                ),
                safe=Box.centered(10.0, 4), target=Box.centered(8.0, 4),
                horizon=horizon, x0=np.zeros(4),
            ),
            GridSpec(state_spacing=0.05, input_spacing=0.1,
                     disturbance_box=Box.centered(0.5, 4), disturbance_spacing=0.05),
        )
    except GridMemoryError:
        guard_hit = True
    ok = res.p_star.p >= 0.99 and elapsed < 1800.0 and guard_hit
    report(
        "criterion 6 (40-D chain scalability)",
        ok,
        f"p = {res.p_star.p:.4f} in {elapsed:.0f}s ({res.evals} evals), "
        f"DP memory guard above n=3: {guard_hit}",
    )


def test_criterion_7_certificate_1d():
    doc = {
        "system": {"A": [[1.0]], "B": [[1.0]]},
        "disturbance": {"gaussian": {"covariance": [[0.09]]}},
        "input_box": {"lower": [-0.1], "upper": [0.1]},
        "safe_box": {"lower": [-1.0], "upper": [1.0]},
        "target_box": {"lower": [-0.2], "upper": [0.2]},
        "horizon": 1,
        "x0": [0.05],
        "solver": {"eps_clamp": 0.001, "max_evals": 200},
        "dp_grid": {
            "state_spacing": 0.05,
            "input_spacing": 0.05,
            "disturbance_box": {"lower": [-1.5], "upper": [1.5]},
            "disturbance_spacing": 0.05,
        },
        "seed": 3,
    }
    rows = cli.cmd_certificate(doc, [0.25, 0.02])
    flags = {row["spacing"]: row["valid"] for row in rows}
    coarse_flagged = flags[format(0.25, ".12g")] == "fail"
    fine_passes = flags[format(0.02, ".12g")] == "pass"

    # closed-form sanity anchor: the bound equals the analytic optimum here
    us = np.linspace(-0.1, 0.1, 4001)
    analytic = float(np.max(ndtr((0.2 - 0.05 - us) / 0.3) - ndtr((-0.2 - 0.05 - us) / 0.3)))
    bound = float(rows[0]["ftbu_bound"])
    anchored = abs(bound - analytic) <= 1e-3
    ok = coarse_flagged and fine_passes and anchored
    report(
        "criterion 7 (grid-spacing certificate, 1-D synthetic)",
        ok,
        f"coarse flagged: {coarse_flagged}, fine passes: {fine_passes}, "
        f"bound {bound:.4f} vs analytic {analytic:.4f}",
    )


def test_criterion_8_solver_comparison(n2_sweep):
    clamp = 0.01
    at_least = sum(
        1
        for row in n2_sweep
        if row["ds"] >= row["sl"] - 2.0 * max(row["ds_err"], row["sl_err"], 1e-12)
    )
    frac_points = at_least / len(n2_sweep)

    denom = [row for row in n2_sweep if row["v"] > clamp]
    ds_frac = sum(1 for r in denom if (r["v"] - r["ds"]) / r["v"] * 100.0 < 30.0) / len(denom)
    sl_frac = sum(1 for r in denom if (r["v"] - r["sl"]) / r["v"] * 100.0 < 30.0) / len(denom)
    ok = frac_points >= 0.90 and ds_frac > sl_frac
    report(
        "criterion 8 (direct search vs smooth local)",
        ok,
        f"ds >= sl - 2err on {frac_points:.1%} of points; "
        f"rel-err<30% fractions ds {ds_frac:.1%} vs sl {sl_frac:.1%}",
    )


def test_criterion_9_determinism(tmp_path):
    import json as _json

    doc = {
        "system": {"A": [[1.0]], "B": [[1.0]]},
        "disturbance": {"gaussian": {"covariance": [[0.09]]}},
        "input_box": {"lower": [-0.1], "upper": [0.1]},
        "safe_box": {"lower": [-2.0], "upper": [2.0]},
        "target_box": {"lower": [-0.5], "upper": [0.5]},
        "horizon": 2,
        "x0": {"sweep": {"lower": [-1.0], "upper": [1.0], "counts": [3]}},
        "solver": {"eps_clamp": 0.01, "max_evals": 120},
        "dp_grid": {
            "state_spacing": 0.1,
            "input_spacing": 0.05,
            "disturbance_box": {"lower": [-1.5], "upper": [1.5]},
            "disturbance_spacing": 0.1,
        },
        "seed": 13,
    }
    path = tmp_path / "problem.json"
    path.write_text(_json.dumps(doc))
    problem = cli.load_problem(path)

    def strip(text: str) -> str:
        lines = text.strip().splitlines()
        header = lines[0].split(",")
        keep = [i for i, h in enumerate(header) if not h.endswith("wall_time_s")]
        return "\n".join(",".join(line.split(",")[i] for i in keep) for line in lines)

    mismatches = []

    rec_a, _ = cli.cmd_grid(problem, ("ds", "sl", "dp", "mc"))
    rec_b, _ = cli.cmd_grid(problem, ("ds", "sl", "dp", "mc"))
    if strip(cli.records_csv_text(rec_a)) != strip(cli.records_csv_text(rec_b)):
        mismatches.append("grid")

    single = dict(doc)
    single["x0"] = [0.3]
    path2 = tmp_path / "single.json"
    path2.write_text(_json.dumps(single))
    sp = cli.load_problem(path2)
    if strip(cli.records_csv_text([cli.cmd_solve(sp, "ds")])) != strip(
        cli.records_csv_text([cli.cmd_solve(sp, "ds")])
    ):
        mismatches.append("solve")

    cert_a = cli.cmd_certificate(sp, [0.2, 0.1])
    cert_b = cli.cmd_certificate(sp, [0.2, 0.1])
    key = lambda rows: [(r["spacing"], r["x0"], r["dp_value"], r["ftbu_bound"], r["valid"]) for r in rows]
    if key(cert_a) != key(cert_b):
        mismatches.append("certificate")

    val_a = cli.cmd_validate(sp, n_samples=5000)
    val_b = cli.cmd_validate(sp, n_samples=5000)
    if (
        val_a["quadrature"].probability != val_b["quadrature"].probability
        or val_a["monte_carlo"].probability != val_b["monte_carlo"].probability
    ):
        mismatches.append("validate")

    bench_a = cli.cmd_bench([1], reps=1, seed=2, horizon=2)
    bench_b = cli.cmd_bench([1], reps=1, seed=2, horizon=2)
    det = lambda rows: [(r["n"], r["method"], r["reps"], r["status"]) for r in rows]
    if det(bench_a) != det(bench_b):
        mismatches.append("bench")

    ok = not mismatches
    report(
        "criterion 9 (byte-identical CSV bodies, timing columns excluded)",
        ok,
        "all commands reproducible" if ok else f"mismatches: {mismatches}",
    )
