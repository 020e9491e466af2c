"""Gridded dynamic-programming baseline for the reach-avoid value function.

Solves the backward recursion V_N = 1_target, V_k = 1_safe * max_u E[V_{k+1}]
on a regular grid over the safe box, with the disturbance integral replaced
by a midpoint rule on a truncated box and successors snapped to the nearest
grid node (an interpolating variant sits behind a flag).  Deliberately
limited to three state dimensions; the point of the grid-free bound is that
this baseline cannot scale.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import Box
from .systems import GaussianDisturbance, ReachAvoidQuery

__all__ = [
    "GridSpec",
    "ValueGrid",
    "GridMemoryError",
    "dp_solve",
    "dp_value_at",
    "save_value_grid",
    "load_value_grid",
]

_MAX_NODE_VALUES = 200_000_000
_STATE_CHUNK = 8192
_MAGIC = b"RKVG"


class GridMemoryError(RuntimeError):
    """Requested grid exceeds the supported memory envelope."""


@dataclass(frozen=True)
class GridSpec:
    """Grid spacings for state, input, and truncated disturbance space."""

    state_spacing: float
    input_spacing: float
    disturbance_box: Box
    disturbance_spacing: float
    snap_successors: bool = True

    def __post_init__(self):
        if min(self.state_spacing, self.input_spacing, self.disturbance_spacing) <= 0:
            raise ValueError("all grid spacings must be positive")
        if not self.disturbance_box.is_bounded or self.disturbance_box.is_empty:
            raise ValueError("disturbance truncation box must be bounded and nonempty")


@dataclass(frozen=True)
class ValueGrid:
    """Value functions V_0..V_N sampled on the state grid.

    `values` has shape ``(N+1, *shape)``; axis k of the grid runs over
    ``lower[k] + spacing[k] * arange(shape[k])``.
    """

    values: np.ndarray
    lower: np.ndarray
    spacing: np.ndarray
    horizon: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        spacing = np.asarray(self.spacing, dtype=float).reshape(-1)
        if values.ndim != lower.size + 1:
            raise ValueError("value array rank does not match grid dimension")
        if values.shape[0] != self.horizon + 1:
            raise ValueError("need one value slice per time step 0..N")
        if np.any(values < -1e-12) or np.any(values > 1 + 1e-12):
            raise ValueError("value function leaves [0, 1]")
        for arr in (values, lower, spacing):
            arr.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "spacing", spacing)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def shape(self) -> tuple:
        return self.values.shape[1:]

    @property
    def upper(self) -> np.ndarray:
        return self.lower + self.spacing * (np.array(self.shape) - 1)

    def axes(self) -> list:
        return [
            self.lower[i] + self.spacing[i] * np.arange(self.shape[i])
            for i in range(self.dim)
        ]


def _axis_nodes(lo: float, hi: float, spacing: float) -> np.ndarray:
    count = int(math.floor((hi - lo) / spacing + 1e-9)) + 1
    return lo + spacing * np.arange(count)


def _grid_points(axes) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def _gaussian_pdf(points: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    d = mean.size
    diff = points - mean
    sol = np.linalg.solve(cov, diff.T)
    quad = np.einsum("ij,ji->i", diff, sol)
    norm = math.sqrt((2.0 * math.pi) ** d * float(np.linalg.det(cov)))
    return np.exp(-0.5 * quad) / norm


def dp_solve(query: ReachAvoidQuery, grid: GridSpec) -> ValueGrid:
    """Backward recursion on the gridded safe box.

    Disturbance weights are the Gaussian density at midpoint nodes times the
    cell volume, renormalized to sum to one so values stay in [0, 1] exactly.
    Successors leaving the grid contribute value zero; the input argmax
    breaks ties toward the lowest grid index.
    """
    system = query.system
    n = system.state_dim
    dist = system.disturbance
    if not isinstance(dist, GaussianDisturbance):
        raise ValueError("the grid baseline needs a Gaussian disturbance")
    if not query.safe.is_bounded:
        raise ValueError("the grid baseline needs a bounded safe box")
    if not grid.disturbance_box.contains(dist.mean):
        raise ValueError("disturbance truncation box must contain the disturbance mean")
    if not system.input_box.is_bounded:
        raise ValueError("the grid baseline needs a bounded input box")

    axes = [
        _axis_nodes(query.safe.lower[i], query.safe.upper[i], grid.state_spacing)
        for i in range(n)
    ]
    shape = tuple(len(ax) for ax in axes)
    n_states = int(np.prod(shape))
    node_values = (query.horizon + 1) * n_states
    if node_values > _MAX_NODE_VALUES:
        raise GridMemoryError(
            f"grid needs {node_values:.3g} node-values "
            f"(shape {shape} x {query.horizon + 1} steps), cap is {_MAX_NODE_VALUES:.3g}; "
            "coarsen state_spacing or shrink the horizon"
        )
    if n > 3:
        raise ValueError("the grid baseline is limited to 3 state dimensions")

    states = _grid_points(axes)
    lower = np.array([ax[0] for ax in axes])

    input_axes = [
        _axis_nodes(system.input_box.lower[i], system.input_box.upper[i], grid.input_spacing)
        for i in range(system.input_dim)
    ]
    inputs = _grid_points(input_axes)

    w_axes = []
    for i in range(n):
        lo, hi = grid.disturbance_box.lower[i], grid.disturbance_box.upper[i]
        count = max(1, int(round((hi - lo) / grid.disturbance_spacing)))
        w_axes.append(lo + (np.arange(count) + 0.5) * (hi - lo) / count)
    w_nodes = _grid_points(w_axes)
    weights = _gaussian_pdf(w_nodes, dist.mean, dist.covariance) * grid.disturbance_spacing**n
    weights = weights / weights.sum()

    safe_mask = query.safe.contains(states)
    values = np.empty((query.horizon + 1,) + shape)
    values[query.horizon] = query.target.contains(states).astype(float).reshape(shape)

    spacing = np.full(n, grid.state_spacing)
    strides = np.array([int(np.prod(shape[i + 1 :])) for i in range(n)], dtype=np.int64)

    def successor_values(v_next_flat: np.ndarray, base: np.ndarray) -> np.ndarray:
        """Expected next value for deterministic parts `base` (chunk, n)."""
        succ = base[:, None, :] + w_nodes[None, :, :]
        if grid.snap_successors:
            idx = np.rint((succ - lower) / spacing).astype(np.int64)
            valid = np.all((idx >= 0) & (idx < np.array(shape)), axis=-1)
            flat = np.where(valid, idx @ strides, v_next_flat.size)
            ext = np.append(v_next_flat, 0.0)
            return ext[flat] @ weights
        vals = _interpolate_flat(v_next_flat, shape, lower, spacing, succ.reshape(-1, n))
        return vals.reshape(succ.shape[:2]) @ weights

    for k in range(query.horizon - 1, -1, -1):
        v_next = values[k + 1].reshape(-1)
        best = np.zeros(n_states)
        for start in range(0, n_states, _STATE_CHUNK):
            chunk = states[start : start + _STATE_CHUNK]
            det = chunk @ system.A.T
            acc = np.full(chunk.shape[0], -1.0)
            for u in inputs:
                ev = successor_values(v_next, det + system.B @ u)
                acc = np.maximum(acc, ev)
            best[start : start + _STATE_CHUNK] = acc
        best[~safe_mask] = 0.0
        values[k] = best.reshape(shape)

    return ValueGrid(values=values, lower=lower, spacing=spacing, horizon=query.horizon)


def _interpolate_flat(
    flat: np.ndarray, shape, lower: np.ndarray, spacing: np.ndarray, points: np.ndarray
) -> np.ndarray:
    """Multilinear interpolation with value 0 outside the grid hull."""
    n = lower.size
    shape_arr = np.array(shape)
    rel = (points - lower) / spacing
    inside = np.all((rel >= -1e-12) & (rel <= shape_arr - 1 + 1e-12), axis=-1)
    rel = np.clip(rel, 0.0, shape_arr - 1)
    base = np.minimum(np.floor(rel).astype(np.int64), shape_arr - 2)
    base = np.maximum(base, 0)
    frac = rel - base
    strides = np.array([int(np.prod(shape[i + 1 :])) for i in range(n)], dtype=np.int64)
    out = np.zeros(points.shape[0])
    for corner in range(2**n):
        offs = np.array([(corner >> i) & 1 for i in range(n)], dtype=np.int64)
        idx = np.minimum(base + offs, shape_arr - 1)
        w = np.prod(np.where(offs, frac, 1.0 - frac), axis=-1)
        out += w * flat[idx @ strides]
    return np.where(inside, out, 0.0)


def dp_value_at(grid_result: ValueGrid, x0) -> float:
    """Multilinear interpolation of V_0 at `x0`; x0 must be inside the grid."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != grid_result.dim:
        raise ValueError("x0 dimension does not match the grid")
    if np.any(x0 < grid_result.lower - 1e-12) or np.any(x0 > grid_result.upper + 1e-12):
        raise ValueError("x0 lies outside the grid bounding box")
    flat = grid_result.values[0].reshape(-1)
    val = _interpolate_flat(
        flat, grid_result.shape, grid_result.lower, grid_result.spacing, x0[None, :]
    )
    return float(min(max(val[0], 0.0), 1.0))


def save_value_grid(vg: ValueGrid, path, metadata: Optional[dict] = None) -> None:
    """Write the grid as flat little-endian binary plus a JSON sidecar.

    Layout: magic "RKVG", then int64 dim, int64 horizon, int64 shape[dim],
    float64 lower[dim], float64 spacing[dim], then the value payload as
    row-major float64, time-major.
    """
    path = str(path)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<q", vg.dim))
        fh.write(struct.pack("<q", vg.horizon))
        fh.write(np.asarray(vg.shape, dtype="<i8").tobytes())
        fh.write(vg.lower.astype("<f8").tobytes())
        fh.write(vg.spacing.astype("<f8").tobytes())
        fh.write(np.ascontiguousarray(vg.values, dtype="<f8").tobytes())
    sidecar = {
        "format": "reachkit-value-grid-v1",
        "dim": vg.dim,
        "horizon": vg.horizon,
        "shape": list(vg.shape),
        "lower": vg.lower.tolist(),
        "spacing": vg.spacing.tolist(),
    }
    if metadata:
        sidecar["metadata"] = metadata
    with open(path + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_value_grid(path) -> ValueGrid:
    path = str(path)
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError(f"{path} is not a value-grid file")
        dim, horizon = struct.unpack("<qq", fh.read(16))
        shape = np.frombuffer(fh.read(8 * dim), dtype="<i8")
        lower = np.frombuffer(fh.read(8 * dim), dtype="<f8")
        spacing = np.frombuffer(fh.read(8 * dim), dtype="<f8")
        count = (horizon + 1) * int(np.prod(shape))
        values = np.frombuffer(fh.read(8 * count), dtype="<f8")
    return ValueGrid(
        values=values.reshape((horizon + 1,) + tuple(int(s) for s in shape)),
        lower=lower.copy(),
        spacing=spacing.copy(),
        horizon=int(horizon),
    )
