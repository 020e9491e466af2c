"""Axis-aligned boxes used as safe, target, and input-constraint sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Box"]


def _as_bound(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float).reshape(-1).copy()
    if np.any(np.isnan(arr)):
        raise ValueError("box bounds must not contain NaN")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``{x : lower <= x <= upper}``; bounds may be infinite.

    A box with ``lower[i] > upper[i]`` in some coordinate is empty.  Empty
    boxes are representable on purpose: degenerate queries (an unreachable
    target, say) should evaluate to probability zero rather than fail.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = _as_bound(self.lower)
        upper = _as_bound(self.upper)
        if lower.size == 0:
            raise ValueError("box dimension must be positive")
        if lower.shape != upper.shape:
            raise ValueError(
                f"bound shapes differ: {lower.shape} vs {upper.shape}"
            )
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def centered(cls, radius: float, dim: int) -> "Box":
        """The cube ``[-radius, radius]^dim``."""
        r = float(radius)
        return cls(np.full(dim, -r), np.full(dim, r))

    @classmethod
    def whole_space(cls, dim: int) -> "Box":
        return cls(np.full(dim, -np.inf), np.full(dim, np.inf))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def is_empty(self) -> bool:
        return bool(np.any(self.lower > self.upper))

    @property
    def is_bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, points):
        """Membership test; `points` has shape ``(dim,)`` or ``(..., dim)``.

        Returns a bool for a single point, a bool array otherwise.
        """
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1] != self.dim:
            raise ValueError(f"expected trailing dimension {self.dim}, got {pts.shape}")
        inside = np.all((pts >= self.lower) & (pts <= self.upper), axis=-1)
        if pts.ndim == 1:
            return bool(inside)
        return inside

    def clip(self, points) -> np.ndarray:
        """Componentwise projection of `points` onto the box."""
        if self.is_empty:
            raise ValueError("cannot project onto an empty box")
        return np.clip(np.asarray(points, dtype=float), self.lower, self.upper)
