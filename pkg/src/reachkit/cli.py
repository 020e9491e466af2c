"""Command-line harness: solve, sweep, benchmark, certify, and cross-check.

Problems are JSON documents (schema below, validated with jsonschema).
Single results go to stdout as JSON; sweeps and benchmarks append CSV with a
fixed, documented column set.  Rows are sorted deterministically and all
columns except the trailing timing column are byte-reproducible for fixed
seeds.  Exit codes: 0 success, 2 malformed problem file, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import jsonschema
import numpy as np

from . import __version__
from .dp import GridMemoryError, GridSpec, dp_solve, dp_value_at
from .geometry import Box
from .mvn import FactorizationError, QuadConfig
from .objective import reach_avoid_probability, reach_avoid_probability_mc
from .solvers import SolverConfig, initial_guess, maximize
from .systems import (
    GaussianDisturbance,
    LtiSystem,
    OpenLoopPolicy,
    ReachAvoidQuery,
    build_chain_of_integrators,
)

__all__ = [
    "ResultRecord",
    "load_problem",
    "cmd_solve",
    "cmd_grid",
    "cmd_bench",
    "cmd_certificate",
    "cmd_validate",
    "main",
]

_BOUND_ITEM = {"type": ["number", "string"]}
_BOX_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "lower": {"type": "array", "items": _BOUND_ITEM, "minItems": 1},
                "upper": {"type": "array", "items": _BOUND_ITEM, "minItems": 1},
            },
            "required": ["lower", "upper"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "cube": {
                    "type": "object",
                    "properties": {
                        "radius": {"type": "number"},
                        "dim": {"type": "integer", "minimum": 1},
                    },
                    "required": ["radius", "dim"],
                    "additionalProperties": False,
                }
            },
            "required": ["cube"],
            "additionalProperties": False,
        },
    ]
}

PROBLEM_SCHEMA = {
    "type": "object",
    "properties": {
        "system": {
            "oneOf": [
                {
                    "type": "object",
                    "properties": {"A": {"type": "array"}, "B": {"type": "array"}},
                    "required": ["A", "B"],
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "properties": {
                        "chain_of_integrators": {
                            "type": "object",
                            "properties": {
                                "n": {"type": "integer", "minimum": 1},
                                "sampling_time": {"type": "number", "exclusiveMinimum": 0},
                            },
                            "required": ["n", "sampling_time"],
                            "additionalProperties": False,
                        }
                    },
                    "required": ["chain_of_integrators"],
                    "additionalProperties": False,
                },
            ]
        },
        "disturbance": {
            "type": "object",
            "properties": {
                "gaussian": {
                    "type": "object",
                    "properties": {
                        "mean": {"type": "array", "items": {"type": "number"}},
                        "covariance": {
                            "oneOf": [
                                {"type": "array"},
                                {
                                    "type": "object",
                                    "properties": {
                                        "diagonal": {
                                            "type": "array",
                                            "items": {"type": "number"},
                                        }
                                    },
                                    "required": ["diagonal"],
                                    "additionalProperties": False,
                                },
                                {
                                    "type": "object",
                                    "properties": {
                                        "scaled_identity": {
                                            "type": "number",
                                            "exclusiveMinimum": 0,
                                        }
                                    },
                                    "required": ["scaled_identity"],
                                    "additionalProperties": False,
                                },
                            ]
                        },
                    },
                    "required": ["covariance"],
                    "additionalProperties": False,
                }
            },
            "required": ["gaussian"],
            "additionalProperties": False,
        },
        "input_box": _BOX_SCHEMA,
        "safe_box": _BOX_SCHEMA,
        "target_box": _BOX_SCHEMA,
        "horizon": {"type": "integer", "minimum": 1},
        "x0": {
            "oneOf": [
                {"type": "array", "items": {"type": "number"}, "minItems": 1},
                {
                    "type": "object",
                    "properties": {
                        "sweep": {
                            "type": "object",
                            "properties": {
                                "lower": {"type": "array", "items": {"type": "number"}},
                                "upper": {"type": "array", "items": {"type": "number"}},
                                "counts": {
                                    "type": "array",
                                    "items": {"type": "integer", "minimum": 1},
                                },
                            },
                            "required": ["lower", "upper", "counts"],
                            "additionalProperties": False,
                        }
                    },
                    "required": ["sweep"],
                    "additionalProperties": False,
                },
            ]
        },
        "policy": {"type": "array", "items": {"type": "number"}},
        "solver": {
            "type": "object",
            "properties": {
                "method": {"enum": ["direct_search", "smooth_local"]},
                "eps_clamp": {"type": "number"},
                "initial_mesh": {"type": "number"},
                "mesh_tol": {"type": "number"},
                "max_evals": {"type": "integer", "minimum": 1},
                "expansion": {"type": "number"},
                "contraction": {"type": "number"},
                "fd_step": {"type": "number"},
                "seed": {"type": "integer"},
            },
            "additionalProperties": False,
        },
        "quadrature": {
            "type": "object",
            "properties": {
                "eps": {"type": "number"},
                "max_samples": {"type": "integer", "minimum": 2},
                "shifts": {"type": "integer", "minimum": 2},
                "seed": {"type": "integer"},
            },
            "additionalProperties": False,
        },
        "dp_grid": {
            "type": "object",
            "properties": {
                "state_spacing": {"type": "number", "exclusiveMinimum": 0},
                "input_spacing": {"type": "number", "exclusiveMinimum": 0},
                "disturbance_box": _BOX_SCHEMA,
                "disturbance_spacing": {"type": "number", "exclusiveMinimum": 0},
                "snap_successors": {"type": "boolean"},
            },
            "required": [
                "state_spacing",
                "input_spacing",
                "disturbance_box",
                "disturbance_spacing",
            ],
            "additionalProperties": False,
        },
        "mc": {
            "type": "object",
            "properties": {"n_samples": {"type": "integer", "minimum": 100}},
            "additionalProperties": False,
        },
        "seed": {"type": "integer"},
    },
    "required": [
        "system",
        "disturbance",
        "input_box",
        "safe_box",
        "target_box",
        "horizon",
        "x0",
    ],
    "additionalProperties": False,
}

CSV_COLUMNS = [
    "method",
    "n",
    "horizon",
    "x0",
    "probability",
    "error",
    "evals",
    "seed",
    "version",
    "wall_time_s",
]

_METHOD_TAGS = {"ds": "ftbu-ds", "sl": "ftbu-sl", "dp": "dp", "mc": "mc"}


class ProblemError(ValueError):
    """Problem file is malformed (maps to exit code 2)."""


@dataclass(frozen=True)
class ResultRecord:
    """One row of output: query echo, method tag, value, and diagnostics."""

    method: str
    n: int
    horizon: int
    x0: tuple
    probability: float
    error: float
    evals: int
    seed: int
    version: str
    wall_time_s: float

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "n": self.n,
            "horizon": self.horizon,
            "x0": list(self.x0),
            "probability": self.probability,
            "error": self.error,
            "evals": self.evals,
            "seed": self.seed,
            "version": self.version,
            "wall_time_s": self.wall_time_s,
        }

    def to_csv_row(self) -> list:
        return [
            self.method,
            str(self.n),
            str(self.horizon),
            _format_vector(self.x0),
            format(self.probability, ".12g"),
            format(self.error, ".12g"),
            str(self.evals),
            str(self.seed),
            self.version,
            format(self.wall_time_s, ".3f"),
        ]


def _format_vector(values) -> str:
    return " ".join(format(float(v), ".17g") for v in values)


def _parse_bound(value):
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "+inf", "infinity"):
            return math.inf
        if text in ("-inf", "-infinity"):
            return -math.inf
        raise ProblemError(f"unrecognized bound {value!r}")
    return float(value)


def _parse_box(doc) -> Box:
    if "cube" in doc:
        return Box.centered(doc["cube"]["radius"], doc["cube"]["dim"])
    lower = [_parse_bound(v) for v in doc["lower"]]
    upper = [_parse_bound(v) for v in doc["upper"]]
    try:
        return Box(lower, upper)
    except ValueError as exc:
        raise ProblemError(str(exc)) from exc


def _parse_disturbance(doc, n: int) -> GaussianDisturbance:
    g = doc["gaussian"]
    cov_doc = g["covariance"]
    if isinstance(cov_doc, dict) and "diagonal" in cov_doc:
        cov = np.diag(np.asarray(cov_doc["diagonal"], dtype=float))
    elif isinstance(cov_doc, dict) and "scaled_identity" in cov_doc:
        cov = float(cov_doc["scaled_identity"]) * np.eye(n)
    else:
        cov = np.asarray(cov_doc, dtype=float)
    mean = np.asarray(g.get("mean", np.zeros(n)), dtype=float)
    try:
        return GaussianDisturbance(mean=mean, covariance=cov)
    except ValueError as exc:
        raise ProblemError(str(exc)) from exc


def _parse_system(problem) -> LtiSystem:
    doc = problem["system"]
    input_box = _parse_box(problem["input_box"])
    if "chain_of_integrators" in doc:
        spec = doc["chain_of_integrators"]
        base = build_chain_of_integrators(spec["n"], spec["sampling_time"])
        A, B = base.A, base.B
    else:
        A = np.asarray(doc["A"], dtype=float)
        B = np.asarray(doc["B"], dtype=float)
    n = np.atleast_2d(A).shape[0]
    disturbance = _parse_disturbance(problem["disturbance"], n)
    try:
        return LtiSystem(A=A, B=B, disturbance=disturbance, input_box=input_box)
    except ValueError as exc:
        raise ProblemError(str(exc)) from exc


def load_problem(path) -> dict:
    """Read and schema-validate a problem file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ProblemError(f"cannot read problem file {path}: {exc}") from exc
    try:
        jsonschema.validate(doc, PROBLEM_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ProblemError(f"problem file {path} is invalid: {exc.message}") from exc
    return doc


def problem_x0_list(problem) -> list:
    """All initial states of the problem (one, or the full sweep grid)."""
    doc = problem["x0"]
    if isinstance(doc, list):
        return [np.asarray(doc, dtype=float)]
    sweep = doc["sweep"]
    lower = np.asarray(sweep["lower"], dtype=float)
    upper = np.asarray(sweep["upper"], dtype=float)
    counts = [int(c) for c in sweep["counts"]]
    if not (lower.size == upper.size == len(counts)):
        raise ProblemError("sweep lower/upper/counts lengths differ")
    axes = [
        np.linspace(lower[i], upper[i], counts[i]) if counts[i] > 1 else np.array([lower[i]])
        for i in range(lower.size)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    return [np.array(pt) for pt in np.column_stack([m.ravel() for m in mesh])]


def build_query(problem, x0) -> ReachAvoidQuery:
    system = _parse_system(problem)
    try:
        return ReachAvoidQuery(
            system=system,
            safe=_parse_box(problem["safe_box"]),
            target=_parse_box(problem["target_box"]),
            horizon=int(problem["horizon"]),
            x0=np.asarray(x0, dtype=float),
        )
    except ValueError as exc:
        raise ProblemError(str(exc)) from exc


def _solver_config(problem, method_key: str, eps=None, seed=None) -> SolverConfig:
    doc = dict(problem.get("solver", {}))
    doc["method"] = "smooth_local" if method_key == "sl" else "direct_search"
    if eps is not None:
        doc["eps_clamp"] = eps
    if seed is not None:
        doc["seed"] = seed
    try:
        return SolverConfig(**doc)
    except (TypeError, ValueError) as exc:
        raise ProblemError(f"bad solver config: {exc}") from exc


def _quad_config(problem, eps=None, seed=None) -> QuadConfig:
    doc = dict(problem.get("quadrature", {}))
    if eps is not None:
        doc["eps"] = eps
    if seed is not None:
        doc["seed"] = seed
    try:
        return QuadConfig(**doc)
    except (TypeError, ValueError) as exc:
        raise ProblemError(f"bad quadrature config: {exc}") from exc


def _grid_spec(problem) -> GridSpec:
    doc = problem.get("dp_grid")
    if doc is None:
        raise ProblemError("problem file has no dp_grid section but a DP run was requested")
    try:
        return GridSpec(
            state_spacing=doc["state_spacing"],
            input_spacing=doc["input_spacing"],
            disturbance_box=_parse_box(doc["disturbance_box"]),
            disturbance_spacing=doc["disturbance_spacing"],
            snap_successors=doc.get("snap_successors", True),
        )
    except ValueError as exc:
        raise ProblemError(str(exc)) from exc


def _problem_policy(problem, query) -> OpenLoopPolicy:
    if "policy" in problem:
        policy = OpenLoopPolicy(np.asarray(problem["policy"], dtype=float))
        if policy.U.size != query.horizon * query.system.input_dim:
            raise ProblemError("policy length does not match horizon * input dimension")
        return policy
    return initial_guess(query)


def _base_seed(problem, seed=None) -> int:
    if seed is not None:
        return int(seed)
    return int(problem.get("seed", 0))


def _point_seed(base: int, index: int) -> int:
    return (base + 1_000_003 * index) % (2**63)


def _record(method_tag, query, p, err, evals, seed, wall) -> ResultRecord:
    return ResultRecord(
        method=method_tag,
        n=query.system.state_dim,
        horizon=query.horizon,
        x0=tuple(float(v) for v in query.x0),
        probability=float(p),
        error=float(err),
        evals=int(evals),
        seed=int(seed),
        version=__version__,
        wall_time_s=float(wall),
    )


def _solve_point(problem, x0, method_key, eps, base_seed, dp_grid_cache=None) -> ResultRecord:
    query = build_query(problem, x0)
    if method_key in ("ds", "sl"):
        cfg = _solver_config(problem, method_key, eps=eps, seed=base_seed)
        quad = _quad_config(problem, eps=eps, seed=base_seed)
        res = maximize(query, cfg, quad, initial=_problem_policy(problem, query))
        return _record(
            _METHOD_TAGS[method_key], query, res.p_star.p, res.p_star.err_est,
            res.evals, base_seed, res.wall_time,
        )
    if method_key == "dp":
        t0 = time.monotonic()
        if dp_grid_cache is None:
            vg = dp_solve(query, _grid_spec(problem))
        else:
            vg = dp_grid_cache
        p = dp_value_at(vg, query.x0)
        return _record("dp", query, p, 0.0, 0, base_seed, time.monotonic() - t0)
    if method_key == "mc":
        n_samples = int(problem.get("mc", {}).get("n_samples", 100_000))
        policy = _problem_policy(problem, query)
        t0 = time.monotonic()
        est = reach_avoid_probability_mc(query, policy, n_samples, base_seed)
        return _record(
            "mc", query, est.p_hat, est.half_width_95, est.n_samples,
            base_seed, time.monotonic() - t0,
        )
    raise ProblemError(f"unknown method {method_key!r}")


def cmd_solve(problem, method_key="ds", eps=None, seed=None) -> ResultRecord:
    """Solve at the problem's single initial state."""
    points = problem_x0_list(problem)
    if len(points) != 1:
        raise ProblemError("solve expects a single x0; use the grid command for sweeps")
    return _solve_point(problem, points[0], method_key, eps, _base_seed(problem, seed))


def cmd_grid(problem, method_keys=("ds",), eps=None, seed=None, threads=1):
    """Sweep all x0 points with each method; returns (records, summary).

    The summary reports, per FTBU method, the fraction of points whose
    relative gap to the DP value is below 30% (only when DP is requested;
    points with DP value below the clamp are excluded, matching the way the
    relative error is defined).
    """
    points = problem_x0_list(problem)
    base = _base_seed(problem, seed)
    dp_cache = None
    dp_wall = None
    if "dp" in method_keys:
        t0 = time.monotonic()
        dp_cache = dp_solve(build_query(problem, points[0]), _grid_spec(problem))
        dp_wall = time.monotonic() - t0

    jobs = []
    for key in method_keys:
        for idx, x0 in enumerate(points):
            jobs.append((key, idx, x0))

    def run(job):
        key, idx, x0 = job
        return _solve_point(
            problem, x0, key, eps, _point_seed(base, idx),
            dp_grid_cache=dp_cache if key == "dp" else None,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(run, jobs))
    else:
        records = [run(job) for job in jobs]
    records.sort(key=lambda r: (r.method, r.x0))

    summary = {"points": len(points)}
    if dp_wall is not None:
        summary["dp_solve_wall_time_s"] = round(dp_wall, 3)
    if "dp" in method_keys:
        clamp = eps if eps is not None else problem.get("solver", {}).get("eps_clamp", 0.01)
        by_x0 = {r.x0: r.probability for r in records if r.method == "dp"}
        fractions = {}
        for key in method_keys:
            if key not in ("ds", "sl"):
                continue
            tag = _METHOD_TAGS[key]
            good = total = 0
            for r in records:
                if r.method != tag:
                    continue
                v = by_x0.get(r.x0)
                if v is None or v <= clamp:
                    continue
                total += 1
                if (v - r.probability) / v * 100.0 < 30.0:
                    good += 1
            fractions[key] = good / total if total else float("nan")
        summary["fraction_rel_err_lt_30"] = fractions
    return records, summary


def cmd_bench(
    n_list,
    reps=20,
    seed=0,
    horizon=10,
    sampling_time=0.25,
    safe_radius=10.0,
    target_radius=5.0,
    eps=0.01,
    noise_variance=0.01,
    with_dp=True,
    dp_grid=None,
):
    """Chain-of-integrators scaling benchmark.

    For each state dimension in `n_list`, solves the reach-avoid problem at
    `reps` random initial states inside the target cube and reports mean
    wall time per method.  DP rows above three dimensions are emitted with
    status "infeasible" rather than run.
    """
    rows = []
    rng = np.random.default_rng(seed)
    for n in n_list:
        system = build_chain_of_integrators(
            n,
            sampling_time,
            disturbance=GaussianDisturbance(np.zeros(n), noise_variance * np.eye(n)),
        )
        safe = Box.centered(safe_radius, n)
        target = Box.centered(target_radius, n)
        points = rng.uniform(target.lower, target.upper, size=(reps, n))
        methods = ["ds"] + (["dp"] if with_dp else [])
        for key in methods:
            tag = _METHOD_TAGS[key]
            if key == "dp" and n > 3:
                rows.append(
                    {"n": n, "method": tag, "reps": reps, "status": "infeasible",
                     "mean_wall_time_s": ""}
                )
                continue
            times = []
            status = "ok"
            try:
                if key == "dp":
                    spec = dp_grid or GridSpec(
                        state_spacing=max(0.5, safe_radius / 10),
                        input_spacing=0.25,
                        disturbance_box=Box.centered(5 * math.sqrt(noise_variance), n),
                        disturbance_spacing=max(0.1, math.sqrt(noise_variance)),
                    )
                    t0 = time.monotonic()
                    query = ReachAvoidQuery(
                        system=system, safe=safe, target=target, horizon=horizon,
                        x0=points[0],
                    )
                    vg = dp_solve(query, spec)
                    for x0 in points:
                        dp_value_at(vg, x0)
                    times.append(time.monotonic() - t0)
                else:
                    for x0 in points:
                        query = ReachAvoidQuery(
                            system=system, safe=safe, target=target, horizon=horizon,
                            x0=x0,
                        )
                        cfg = SolverConfig(eps_clamp=eps, seed=seed)
                        quad = QuadConfig(eps=eps, seed=seed)
                        t0 = time.monotonic()
                        maximize(query, cfg, quad)
                        times.append(time.monotonic() - t0)
            except GridMemoryError:
                status = "infeasible"
            mean_t = sum(times) / len(times) if times else ""
            rows.append(
                {
                    "n": n,
                    "method": tag,
                    "reps": reps,
                    "status": status,
                    "mean_wall_time_s": format(mean_t, ".3f") if times else "",
                }
            )
    return rows


def cmd_certificate(problem, spacings, eps=None, seed=None):
    """DP values per grid spacing against the grid-free lower bound.

    A spacing is flagged invalid at a point when the DP value falls below
    the bound, which the underapproximation guarantee forbids.
    """
    points = problem_x0_list(problem)
    base = _base_seed(problem, seed)
    bounds = {}
    for idx, x0 in enumerate(points):
        rec = _solve_point(problem, x0, "ds", eps, _point_seed(base, idx))
        bounds[tuple(x0)] = rec

    rows = []
    shared_query = build_query(problem, points[0])
    base_grid = _grid_spec(problem)
    for spacing in spacings:
        spec = GridSpec(
            state_spacing=float(spacing),
            input_spacing=base_grid.input_spacing,
            disturbance_box=base_grid.disturbance_box,
            disturbance_spacing=base_grid.disturbance_spacing,
            snap_successors=base_grid.snap_successors,
        )
        t0 = time.monotonic()
        vg = dp_solve(shared_query, spec)
        dp_wall = time.monotonic() - t0
        for x0 in points:
            rec = bounds[tuple(x0)]
            v = dp_value_at(vg, x0)
            rows.append(
                {
                    "spacing": format(float(spacing), ".12g"),
                    "x0": _format_vector(x0),
                    "dp_value": format(v, ".12g"),
                    "ftbu_bound": format(rec.probability, ".12g"),
                    "ftbu_err": format(rec.error, ".12g"),
                    "valid": "pass" if v >= rec.probability else "fail",
                    "dp_wall_time_s": format(dp_wall, ".3f"),
                }
            )
    return rows


def cmd_validate(problem, n_samples=100_000, eps=None, seed=None):
    """Quadrature vs Monte-Carlo at the solved input sequence."""
    points = problem_x0_list(problem)
    if len(points) != 1:
        raise ProblemError("validate expects a single x0")
    base = _base_seed(problem, seed)
    query = build_query(problem, points[0])
    cfg = _solver_config(problem, "ds", eps=eps, seed=base)
    quad = _quad_config(problem, eps=eps, seed=base)
    t0 = time.monotonic()
    solved = maximize(query, cfg, quad, initial=_problem_policy(problem, query))
    quad_rec = _record(
        "ftbu-ds", query, solved.p_star.p, solved.p_star.err_est, solved.evals,
        base, time.monotonic() - t0,
    )
    t0 = time.monotonic()
    est = reach_avoid_probability_mc(query, solved.U_star, n_samples, base)
    mc_rec = _record(
        "mc", query, est.p_hat, est.half_width_95, est.n_samples, base,
        time.monotonic() - t0,
    )
    agree = abs(quad_rec.probability - mc_rec.probability) <= (
        mc_rec.error + quad_rec.error
    )
    return {"quadrature": quad_rec, "monte_carlo": mc_rec, "agree": bool(agree)}


def write_records_csv(records, path) -> None:
    """Append records to a CSV file, writing the header when new/empty."""
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if new:
            writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow(rec.to_csv_row())


def write_dict_rows_csv(rows, columns, path) -> None:
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if new:
            writer.writerow(columns)
        for row in rows:
            writer.writerow([row[c] for c in columns])


def records_csv_text(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow(rec.to_csv_row())
    return buf.getvalue()


def _threads_from(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("REACHKIT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reachkit",
        description="Lower bounds on terminal-time reach-avoid probabilities "
        "for discrete-time stochastic LTI systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, methods=True):
        p.add_argument("--problem", required=True, help="problem JSON file")
        if methods:
            p.add_argument(
                "--method", default="ds",
                help="ds | sl | dp | mc (grid accepts a comma list)",
            )
        p.add_argument("--eps", type=float, default=None,
                       help="override quadrature accuracy and the log clamp")
        p.add_argument("--seed", type=int, default=None, help="override the problem seed")
        p.add_argument("--out", default=None, help="CSV output path (appended)")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (or REACHKIT_THREADS)")

    common(sub.add_parser("solve", help="solve at the problem's single x0"))
    common(sub.add_parser("grid", help="sweep all x0 points"))

    bench = sub.add_parser("bench", help="chain-of-integrators scaling benchmark")
    bench.add_argument("--n-list", required=True, help="comma list of state dimensions")
    bench.add_argument("--reps", type=int, default=20)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--horizon", type=int, default=10)
    bench.add_argument("--sampling-time", type=float, default=0.25)
    bench.add_argument("--safe-radius", type=float, default=10.0)
    bench.add_argument("--target-radius", type=float, default=5.0)
    bench.add_argument("--eps", type=float, default=0.01)
    bench.add_argument("--no-dp", action="store_true", help="skip DP rows")
    bench.add_argument("--out", default=None)
    bench.add_argument("--threads", type=int, default=None)

    cert = sub.add_parser("certificate", help="DP grid-spacing certificate table")
    common(cert, methods=False)
    cert.add_argument("--spacings", required=True, help="comma list of state spacings")

    val = sub.add_parser("validate", help="quadrature vs Monte-Carlo cross-check")
    common(val, methods=False)
    val.add_argument("--n-samples", type=int, default=100_000)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "bench":
            n_list = [int(v) for v in args.n_list.split(",") if v.strip()]
            rows = cmd_bench(
                n_list,
                reps=args.reps,
                seed=args.seed,
                horizon=args.horizon,
                sampling_time=args.sampling_time,
                safe_radius=args.safe_radius,
                target_radius=args.target_radius,
                eps=args.eps,
                with_dp=not args.no_dp,
            )
            cols = ["n", "method", "reps", "status", "mean_wall_time_s"]
            if args.out:
                write_dict_rows_csv(rows, cols, args.out)
            print(json.dumps(rows, indent=2))
            return 0

        problem = load_problem(args.problem)

        if args.command == "solve":
            rec = cmd_solve(problem, args.method, eps=args.eps, seed=args.seed)
            if args.out:
                write_records_csv([rec], args.out)
            print(json.dumps(rec.to_json(), indent=2))
            return 0
        if args.command == "grid":
            keys = [k.strip() for k in args.method.split(",") if k.strip()]
            for k in keys:
                if k not in _METHOD_TAGS:
                    raise ProblemError(f"unknown method {k!r}")
            records, summary = cmd_grid(
                problem, keys, eps=args.eps, seed=args.seed, threads=_threads_from(args)
            )
            if args.out:
                write_records_csv(records, args.out)
            else:
                sys.stdout.write(records_csv_text(records))
            print(json.dumps({"summary": summary}, indent=2, sort_keys=True))
            return 0
        if args.command == "certificate":
            spacings = [float(v) for v in args.spacings.split(",") if v.strip()]
            rows = cmd_certificate(problem, spacings, eps=args.eps, seed=args.seed)
            cols = ["spacing", "x0", "dp_value", "ftbu_bound", "ftbu_err", "valid",
                    "dp_wall_time_s"]
            if args.out:
                write_dict_rows_csv(rows, cols, args.out)
            print(json.dumps(rows, indent=2))
            return 0
        if args.command == "validate":
            out = cmd_validate(
                problem, n_samples=args.n_samples, eps=args.eps, seed=args.seed
            )
            payload = {
                "quadrature": out["quadrature"].to_json(),
                "monte_carlo": out["monte_carlo"].to_json(),
                "agree": out["agree"],
            }
            if args.out:
                write_records_csv([out["quadrature"], out["monte_carlo"]], args.out)
            print(json.dumps(payload, indent=2))
            return 0
        raise ProblemError(f"unknown command {args.command!r}")
    except ProblemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FactorizationError, GridMemoryError, FloatingPointError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
