"""Axis-aligned box domains on which densities live and KDEs are evaluated."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DomainBox:
    """A compact box ``[lower_1, upper_1] x ... x [lower_d, upper_d]``."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self) -> None:
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) == 0 or len(lo) != len(hi):
            raise ValueError("lower and upper must be non-empty and equally long")
        if not all(np.isfinite(lo)) or not all(np.isfinite(hi)):
            raise ValueError("domain bounds must be finite")
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError("every lower bound must be strictly below its upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def interval(cls, lo: float, hi: float) -> "DomainBox":
        return cls((lo,), (hi,))

    @classmethod
    def unit(cls, dim: int) -> "DomainBox":
        return cls((0.0,) * dim, (1.0,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(np.asarray(self.upper) - np.asarray(self.lower)))

    @property
    def midpoint(self) -> np.ndarray:
        return (np.asarray(self.lower) + np.asarray(self.upper)) / 2.0

    def contains(self, x: np.ndarray) -> np.ndarray:
        """Boolean mask of which points (rows of ``x``) lie in the closed box."""
        pts = as_points(x, self.dim)
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        return np.all((pts >= lo) & (pts <= hi), axis=1)

    def require_inside(self, x: np.ndarray, what: str = "point") -> np.ndarray:
        pts = as_points(x, self.dim)
        inside = self.contains(pts)
        if not inside.all():
            bad = pts[~inside][0]
            raise ValueError(f"{what} {bad.tolist()} lies outside the domain box")
        return pts

    def axis_grids(self, points_per_axis: int) -> list[np.ndarray]:
        return [
            np.linspace(lo, hi, points_per_axis)
            for lo, hi in zip(self.lower, self.upper)
        ]

    def grid(self, points_per_axis: int) -> np.ndarray:
        """Tensor grid as an ``(points_per_axis**dim, dim)`` array."""
        axes = self.axis_grids(points_per_axis)
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


def as_points(x: np.ndarray, dim: int) -> np.ndarray:
    """Coerce ``x`` to a float ``(m, dim)`` array; accepts ``(m,)`` when dim is 1."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim == 1:
        if dim == 1:
            arr = arr.reshape(-1, 1)
        elif arr.shape[0] == dim:
            arr = arr.reshape(1, dim)
        else:
            raise ValueError(f"cannot interpret shape {arr.shape} as points in R^{dim}")
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {arr.shape}")
    return arr
