"""Grid DP recursion against closed forms, interpolation, and serialization."""

import numpy as np
import pytest

from oracles import interp_multilinear_reference, one_step_integrator_value
from reachkit import (
    Box,
    GaussianDisturbance,
    GridMemoryError,
    GridSpec,
    LtiSystem,
    QuadConfig,
    ReachAvoidQuery,
    SolverConfig,
    ValueGrid,
    build_chain_of_integrators,
    dp_solve,
    dp_value_at,
    load_value_grid,
    maximize_direct_search,
    save_value_grid,
)


def integrator_1d(sd=0.3, input_radius=0.1):
    return LtiSystem(
        A=[[1.0]],
        B=[[1.0]],
        disturbance=GaussianDisturbance([0.0], [[sd**2]]),
        input_box=Box([-input_radius], [input_radius]),
    )


def query_1d(horizon=1, safe=(-1.0, 1.0), target=(-0.2, 0.2), x0=0.05, **kw):
    return ReachAvoidQuery(
        system=integrator_1d(**kw),
        safe=Box([safe[0]], [safe[1]]),
        target=Box([target[0]], [target[1]]),
        horizon=horizon,
        x0=[x0],
    )


def grid_1d(state=0.05, inp=0.05, w_radius=1.5, w=0.05, **kw):
    return GridSpec(
        state_spacing=state,
        input_spacing=inp,
        disturbance_box=Box([-w_radius], [w_radius]),
        disturbance_spacing=w,
        **kw,
    )


class TestRecursion:
    def test_terminal_slice_is_target_indicator(self):
        q = query_1d(horizon=2)
        vg = dp_solve(q, grid_1d(state=0.1))
        nodes = vg.axes()[0]
        expect = ((nodes >= -0.2) & (nodes <= 0.2)).astype(float)
        assert np.array_equal(vg.values[2], expect)

    def test_values_within_unit_interval(self):
        q = query_1d(horizon=3)
        vg = dp_solve(q, grid_1d(state=0.1, w=0.1))
        assert np.all(vg.values >= 0.0)
        assert np.all(vg.values <= 1.0)

    def test_renormalized_weights_preserve_certain_success(self):
        # A = 0 puts every successor near the origin: staying and hitting is
        # certain, so V_0 must be exactly 1 under renormalized weights
        system = LtiSystem(
            A=[[0.0]], B=[[1.0]],
            disturbance=GaussianDisturbance([0.0], [[0.01]]),
            input_box=Box([-0.1], [0.1]),
        )
        q = ReachAvoidQuery(system=system, safe=Box([-5], [5]), target=Box([-5], [5]),
                            horizon=3, x0=[0.0])
        vg = dp_solve(q, grid_1d(state=0.5, inp=0.1, w_radius=0.5, w=0.1))
        assert np.allclose(vg.values[0], 1.0)

    def test_one_step_matches_phi_closed_form(self):
        sd = 0.3
        q = query_1d(horizon=1, sd=sd)
        spacing = 0.02
        vg = dp_solve(q, grid_1d(state=spacing, inp=0.02, w=0.02))
        u_grid = np.arange(-0.1, 0.1 + 1e-12, 0.02)
        nodes = vg.axes()[0]
        exact = np.array(
            [one_step_integrator_value(x, u_grid, sd, -0.2, 0.2) for x in nodes]
        )
        # snap error is O(dx + dw)
        assert np.max(np.abs(vg.values[0] - exact)) <= 4 * (spacing + 0.02)

    def test_target_subset_monotonicity(self):
        q_big = query_1d(horizon=3, target=(-0.4, 0.4))
        q_small = query_1d(horizon=3, target=(-0.2, 0.2))
        g = grid_1d(state=0.1, w=0.1)
        v_big = dp_solve(q_big, g)
        v_small = dp_solve(q_small, g)
        assert np.all(v_small.values <= v_big.values + 1e-12)

    def test_interpolated_successor_variant(self):
        q = query_1d(horizon=2)
        snap = dp_solve(q, grid_1d(state=0.05, snap_successors=True))
        smooth = dp_solve(q, grid_1d(state=0.05, snap_successors=False))
        # both approximate the same value function
        assert abs(dp_value_at(snap, q.x0) - dp_value_at(smooth, q.x0)) <= 0.1

    def test_requires_gaussian_and_bounded_sets(self):
        from reachkit import SamplerDisturbance

        sampler = SamplerDisturbance(dim=1, sampler=lambda r, k: r.standard_normal((k, 1)))
        system = LtiSystem(A=[[1.0]], B=[[1.0]], disturbance=sampler,
                           input_box=Box([-1], [1]))
        q = ReachAvoidQuery(system=system, safe=Box([-1], [1]), target=Box([-1], [1]),
                            horizon=1, x0=[0.0])
        with pytest.raises(ValueError):
            dp_solve(q, grid_1d())
        q2 = query_1d(safe=(-np.inf, np.inf))
        with pytest.raises(ValueError):
            dp_solve(q2, grid_1d())


class TestMemoryGuard:
    def test_chain_dimension_four_hits_guard(self):
        n = 4
        system = build_chain_of_integrators(
            n, 0.25, disturbance=GaussianDisturbance(np.zeros(n), 0.01 * np.eye(n))
        )
        q = ReachAvoidQuery(
            system=system, safe=Box.centered(10.0, n), target=Box.centered(8.0, n),
            horizon=10, x0=np.zeros(n),
        )
        grid = GridSpec(
            state_spacing=0.05, input_spacing=0.1,
            disturbance_box=Box.centered(0.5, n), disturbance_spacing=0.05,
        )
        with pytest.raises(GridMemoryError) as err:
            dp_solve(q, grid)
        assert "node-values" in str(err.value)

    def test_small_high_dimensional_grid_still_refused(self):
        n = 4
        system = build_chain_of_integrators(
            n, 0.25, disturbance=GaussianDisturbance(np.zeros(n), 0.01 * np.eye(n))
        )
        q = ReachAvoidQuery(
            system=system, safe=Box.centered(1.0, n), target=Box.centered(1.0, n),
            horizon=1, x0=np.zeros(n),
        )
        grid = GridSpec(
            state_spacing=0.5, input_spacing=0.5,
            disturbance_box=Box.centered(0.5, n), disturbance_spacing=0.25,
        )
        with pytest.raises(ValueError):
            dp_solve(q, grid)


class TestValueLookup:
    def test_node_value_exact(self):
        q = query_1d(horizon=2)
        vg = dp_solve(q, grid_1d(state=0.1))
        nodes = vg.axes()[0]
        for i in (0, 7, len(nodes) - 1):
            assert dp_value_at(vg, [nodes[i]]) == pytest.approx(vg.values[0][i])

    def test_midpoint_is_mean_1d(self):
        q = query_1d(horizon=1)
        vg = dp_solve(q, grid_1d(state=0.1))
        nodes = vg.axes()[0]
        mid = 0.5 * (nodes[3] + nodes[4])
        expect = 0.5 * (vg.values[0][3] + vg.values[0][4])
        assert dp_value_at(vg, [mid]) == pytest.approx(expect)

    def test_matches_reference_interpolation(self, rng):
        values = rng.uniform(0.0, 1.0, (1, 5, 6, 4))
        vg = ValueGrid(values=values, lower=[-1.0, 0.0, 2.0], spacing=[0.5, 0.25, 1.0],
                       horizon=0)
        for _ in range(50):
            pt = vg.lower + rng.uniform(0.0, 1.0, 3) * (vg.upper - vg.lower)
            ref = interp_multilinear_reference(values[0], vg.lower, vg.spacing, pt)
            assert abs(dp_value_at(vg, pt) - ref) <= 1e-12

    def test_outside_grid_raises(self):
        q = query_1d(horizon=1)
        vg = dp_solve(q, grid_1d(state=0.1))
        with pytest.raises(ValueError):
            dp_value_at(vg, [2.0])


class TestSerialization:
    def test_round_trip(self, tmp_path, rng):
        q = query_1d(horizon=2)
        vg = dp_solve(q, grid_1d(state=0.1))
        path = tmp_path / "grid.bin"
        save_value_grid(vg, path, metadata={"note": "round-trip"})
        loaded = load_value_grid(path)
        assert np.array_equal(loaded.values, vg.values)
        assert np.array_equal(loaded.lower, vg.lower)
        assert np.array_equal(loaded.spacing, vg.spacing)
        assert loaded.horizon == vg.horizon
        sidecar = (tmp_path / "grid.bin.json").read_text()
        assert "reachkit-value-grid-v1" in sidecar
        assert "round-trip" in sidecar

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"not a grid")
        with pytest.raises(ValueError):
            load_value_grid(path)


def test_underapproximation_desk_check_1d():
    # open-loop optimum never exceeds the feedback value (small 1-D version;
    # the acceptance suite runs the full 2-D study)
    q_base = query_1d(horizon=2, safe=(-1.0, 1.0), target=(-0.4, 0.4), input_radius=0.2)
    vg = dp_solve(q_base, grid_1d(state=0.02, inp=0.04, w=0.02))
    quad = QuadConfig(eps=1e-3, seed=21)
    cfg = SolverConfig(eps_clamp=0.001, max_evals=250, seed=21)
    for x0 in (-0.6, -0.3, 0.0, 0.25, 0.55, 0.9):
        q = query_1d(horizon=2, safe=(-1.0, 1.0), target=(-0.4, 0.4),
                     input_radius=0.2, x0=x0)
        res = maximize_direct_search(q, cfg, quad)
        v = dp_value_at(vg, [x0])
        assert res.p_star.p <= v + 0.02
