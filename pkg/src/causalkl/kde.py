"""Kernel density estimation on a box with a clamping floor.

The estimate at ``x`` is the plain average ``(1/n) sum_i h^{-d} K((x_i - x)/h)``
over exactly the samples it was fitted with (callers own any data splitting),
clamped below at a floor so that logarithms and ratios of estimates stay
finite.  Higher-order kernels can push the raw average negative; the clamp is
applied at evaluation without renormalizing.

For ``d == 1`` evaluation is exact but O(log n) per point: because the base
kernel is a polynomial with support ``[-1, 1]``, the windowed kernel sum is a
closed-form combination of prefix power sums of the sorted samples.
"""

from __future__ import annotations

from math import comb

import numpy as np

from .domain import DomainBox, as_points
from .kernels import KernelSpec, bandwidth_rule

#: Default clamping floor, relative to the uniform density on the domain.
FLOOR_SCALE = 1e-3

# Evaluation chunk size for the broadcast path, in offset-array elements.
_CHUNK_ELEMENTS = 4_000_000


def default_floor(domain: DomainBox) -> float:
    """Floor of ``FLOOR_SCALE`` times the uniform level on the domain."""
    return FLOOR_SCALE / domain.volume


class DensityEstimate:
    """A fitted KDE; immutable after construction and safe to evaluate concurrently.

    Parameters
    ----------
    samples : array-like, shape (n, d) or (n,)
        Fitting samples; all must lie inside ``domain``.
    kernel : KernelSpec
        Product kernel matching the domain dimension.
    bandwidth : float
        Positive smoothing bandwidth ``h``.
    domain : DomainBox
        Evaluation is only defined inside this box.
    floor : float
        Clamping floor ``rho >= 0`` applied at evaluation.
    """

    def __init__(
        self,
        samples: np.ndarray,
        kernel: KernelSpec,
        bandwidth: float,
        domain: DomainBox,
        floor: float,
    ):
        pts = as_points(samples, domain.dim)
        if pts.shape[0] == 0:
            raise ValueError("cannot fit a KDE on an empty sample list")
        if kernel.dim != domain.dim:
            raise ValueError(
                f"kernel dimension {kernel.dim} does not match domain {domain.dim}"
            )
        if bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if floor < 0:
            raise ValueError("floor must be nonnegative")
        domain.require_inside(pts, "fitting sample")
        self.samples = pts
        self.kernel = kernel
        self.bandwidth = float(bandwidth)
        self.domain = domain
        self.floor = float(floor)
        self._n = pts.shape[0]
        if domain.dim == 1:
            sorted_samples = np.sort(pts[:, 0])
            powers = kernel.moment_powers
            prefix = np.empty((powers + 1, self._n + 1))
            prefix[:, 0] = 0.0
            for t in range(powers + 1):
                np.cumsum(sorted_samples**t, out=prefix[t, 1:])
            self._sorted = sorted_samples
            self._prefix = prefix

    def evaluate(self, x: np.ndarray) -> np.ndarray | float:
        """Clamped density values at ``x``; scalar in, scalar out."""
        arr = np.asarray(x, dtype=float)
        single = arr.ndim == 0 or (arr.ndim == 1 and self.domain.dim > 1)
        pts = self.domain.require_inside(arr, "evaluation point")
        if self.domain.dim == 1:
            raw = self._raw_sorted(pts[:, 0])
        else:
            raw = self._raw_broadcast(pts)
        out = np.maximum(raw, self.floor)
        return float(out[0]) if single else out

    # -- exact windowed evaluation via prefix power sums (d == 1) ----------

    def _raw_sorted(self, x: np.ndarray) -> np.ndarray:
        h = self.bandwidth
        s = self._sorted
        lo = np.searchsorted(s, x - h, side="left")
        hi = np.searchsorted(s, x + h, side="right")
        win = [self._prefix[t, hi] - self._prefix[t, lo]
               for t in range(self.kernel.moment_powers + 1)]
        total = np.zeros_like(x)
        for r, c in enumerate(self.kernel.coeffs):
            # sum over the window of (s - x)^(2r), expanded binomially.
            power_sum = np.zeros_like(x)
            for t in range(2 * r + 1):
                power_sum += comb(2 * r, t) * win[t] * (-x) ** (2 * r - t)
            total += c * power_sum / h ** (2 * r)
        return total / (self._n * h)

    # -- chunked broadcast evaluation (d >= 2) ------------------------------

    def _raw_broadcast(self, pts: np.ndarray) -> np.ndarray:
        h = self.bandwidth
        d = self.domain.dim
        chunk = max(1, _CHUNK_ELEMENTS // (self._n * d))
        out = np.empty(pts.shape[0])
        for start in range(0, pts.shape[0], chunk):
            block = pts[start : start + chunk]
            offsets = (self.samples[None, :, :] - block[:, None, :]) / h
            out[start : start + chunk] = self.kernel.eval(offsets).mean(axis=1)
        return out / h**d


def kde_fit(
    samples: np.ndarray,
    kernel: KernelSpec,
    domain: DomainBox,
    bandwidth: float | None = None,
    floor: float | None = None,
    beta: float | None = None,
    scale: float = 1.0,
) -> DensityEstimate:
    """Fit a KDE; the bandwidth defaults to the smoothness-matched rule.

    When ``bandwidth`` is omitted, ``beta`` must be given and the bandwidth is
    ``bandwidth_rule(n, beta, d, scale)`` for the fitted sample count ``n``.
    The floor defaults to :func:`default_floor` of the domain.
    """
    pts = as_points(samples, domain.dim)
    if bandwidth is None:
        if beta is None:
            raise ValueError("either bandwidth or beta must be provided")
        bandwidth = bandwidth_rule(pts.shape[0], beta, domain.dim, scale)
    if floor is None:
        floor = default_floor(domain)
    return DensityEstimate(pts, kernel, bandwidth, domain, floor)


def kde_eval(estimate: DensityEstimate, x: np.ndarray) -> np.ndarray | float:
    """Clamped KDE value(s) at ``x`` (see :meth:`DensityEstimate.evaluate`)."""
    return estimate.evaluate(x)
