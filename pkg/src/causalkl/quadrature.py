"""Numerical integration helpers: 1-D adaptive quadrature and tensor Romberg.

Integrands are assumed smooth on the boxes used here (densities and their
logarithms are bounded away from zero on their domains), so Romberg on nested
dyadic grids converges quickly and the last refinement step gives a usable
error estimate.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy import integrate

from .domain import DomainBox


class QuadratureError(RuntimeError):
    """Requested tolerance could not be certified at maximum refinement."""


def integrate_interval(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    tol: float = 1e-8,
) -> float:
    """Adaptive quadrature of a vectorized scalar integrand on ``[lo, hi]``."""
    value, err = integrate.quad(f, lo, hi, epsabs=tol, epsrel=0.0, limit=400)
    if err > max(tol, abs(value) * 1e-12):
        raise QuadratureError(
            f"adaptive quadrature error estimate {err:.3e} exceeds tol {tol:.3e}"
        )
    return float(value)


def _romberg_on_grid(values: np.ndarray, box: DomainBox, points: int) -> float:
    out = values
    for axis in range(box.dim - 1, -1, -1):
        dx = (box.upper[axis] - box.lower[axis]) / (points - 1)
        out = integrate.romb(out, dx=dx, axis=axis)
    return float(out)


def integrate_box(
    f: Callable[[np.ndarray], np.ndarray],
    box: DomainBox,
    tol: float = 1e-6,
    max_points_per_axis: int = 257,
    raise_on_failure: bool = True,
) -> tuple[float, float]:
    """Tensor-grid Romberg integration of ``f`` over a box.

    ``f`` maps an ``(m, d)`` array of points to ``(m,)`` values.  Grids are
    refined through ``2**k + 1`` points per axis until the change between
    refinements is at most ``tol`` or the axis cap is reached.

    Returns ``(value, residual)`` where ``residual`` is the last refinement
    change.  Raises :class:`QuadratureError` when the tolerance is not reached
    and ``raise_on_failure`` is set; otherwise returns the best value with its
    residual so callers can report it.
    """
    if max_points_per_axis < 5:
        raise ValueError("max_points_per_axis must be at least 5")
    max_exp = int(np.log2(max_points_per_axis - 1))
    previous = None
    value = np.nan
    residual = np.inf
    for exp in range(3, max_exp + 1):
        points = 2**exp + 1
        grid = box.grid(points)
        values = np.asarray(f(grid), dtype=float).reshape((points,) * box.dim)
        value = _romberg_on_grid(values, box, points)
        if previous is not None:
            residual = abs(value - previous)
            if residual <= tol:
                return value, residual
        previous = value
    if raise_on_failure:
        raise QuadratureError(
            f"tensor Romberg did not reach tol {tol:.3e} at "
            f"{2**max_exp + 1} points per axis (residual {residual:.3e})"
        )
    return value, residual
