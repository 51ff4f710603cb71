"""Compactly supported product kernels and the smoothness-matched bandwidth rule.

The univariate bases are polynomial kernels on ``[-1, 1]``: the Epanechnikov
kernel for order 2 and its fourth-order polynomial extension.  Both are even
polynomials times ``(1 - u^2)``, obtained by orthogonalizing against low-order
monomials, so their moment identities hold in closed form and can be checked
independently by quadrature.  Multivariate kernels are coordinate products of
the same base, which preserves the vanishing-moment identities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Coefficients of the base kernel as a polynomial in u^2:
#   k(u) = sum_r coeffs[r] * u^(2r)  on |u| <= 1, zero outside.
# order 2: (3/4)(1 - u^2); order 4: (15/32)(3 - 7u^2)(1 - u^2).
# All coefficients are dyadic rationals, so k(1) == 0.0 holds exactly in floats.
_BASE_COEFFS: dict[int, tuple[float, ...]] = {
    2: (0.75, -0.75),
    4: (45 / 32, -150 / 32, 105 / 32),
}

#: Largest supported kernel order.
MAX_ORDER = 4

SUPPORTED_ORDERS = tuple(sorted(_BASE_COEFFS))


@dataclass(frozen=True)
class KernelSpec:
    """A product kernel: one univariate polynomial base raised across ``dim`` axes.

    ``order`` is the bias order: moments 1 through ``order - 1`` of the base
    vanish while the ``order``-th moment does not, which is what reduces KDE
    bias to ``O(h^order)`` for densities of matching smoothness.

    Attributes
    ----------
    order, dim : int
        Bias order of the base kernel and number of coordinates.
    coeffs : tuple of float
        Base-kernel coefficients as a polynomial in ``u**2``.
    sup_bound : float
        A finite bound on ``sup |K_d|`` (the univariate sup to the d-th power).
    """

    order: int
    dim: int
    coeffs: tuple[float, ...]
    sup_bound: float

    @property
    def moment_powers(self) -> int:
        """Highest power of the offset needed to expand the base polynomial."""
        return 2 * (len(self.coeffs) - 1)

    def base_eval(self, u: np.ndarray) -> np.ndarray:
        """Evaluate the univariate base kernel at scaled offsets ``u``."""
        u = np.asarray(u, dtype=float)
        t = u * u
        acc = np.full_like(t, self.coeffs[-1])
        for c in self.coeffs[-2::-1]:
            acc = acc * t + c
        return np.where(t < 1.0, acc, 0.0)

    def eval(self, u: np.ndarray) -> np.ndarray:
        """Evaluate the product kernel on ``(..., dim)`` scaled offsets."""
        u = np.asarray(u, dtype=float)
        if u.shape[-1] != self.dim:
            raise ValueError(f"expected trailing dimension {self.dim}, got {u.shape}")
        return np.prod(self.base_eval(u), axis=-1)


def make_kernel(order: int, dim: int) -> KernelSpec:
    """Build the product kernel of the given bias order and dimension.

    Supported orders are the even values in ``SUPPORTED_ORDERS`` (2 and 4);
    anything else is rejected.  Odd orders are degenerate for symmetric
    compactly supported kernels (symmetry already cancels every odd moment),
    so they are not offered.
    """
    if dim < 1:
        raise ValueError("dim must be a positive integer")
    if order not in _BASE_COEFFS:
        raise ValueError(
            f"unsupported kernel order {order}; supported orders are "
            f"{SUPPORTED_ORDERS} (maximum {MAX_ORDER})"
        )
    coeffs = _BASE_COEFFS[order]
    sup_uni = _univariate_sup(coeffs)
    return KernelSpec(order=order, dim=dim, coeffs=coeffs, sup_bound=sup_uni**dim)


def _univariate_sup(coeffs: tuple[float, ...]) -> float:
    ts = np.linspace(0.0, 1.0, 2049)
    acc = np.full_like(ts, coeffs[-1])
    for c in coeffs[-2::-1]:
        acc = acc * ts + c
    return float(np.max(np.abs(acc)))


def bandwidth_rule(n: int, beta: float, dim: int, scale: float = 1.0) -> float:
    """Bandwidth ``scale * n**(-1 / (2*beta + dim))`` for smoothness ``beta``.

    The exponent matches the rate-optimal choice for estimating a
    ``beta``-smooth density in ``dim`` dimensions; ``scale`` exposes the
    hidden constant, which matters at practical sample sizes.
    """
    if n < 1:
        raise ValueError("n must be a positive sample count")
    if beta <= 0:
        raise ValueError("beta must be positive")
    if dim < 1:
        raise ValueError("dim must be a positive integer")
    if scale <= 0:
        raise ValueError("scale must be positive")
    return float(scale * float(n) ** (-1.0 / (2.0 * beta + dim)))
