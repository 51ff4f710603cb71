"""Kernel construction, moment identities, and the bandwidth rule.

Moment identities are checked against adaptive quadrature over the kernel
polynomial, independently of the closed forms used to build the kernels.
"""

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from causalkl.kernels import (
    MAX_ORDER,
    SUPPORTED_ORDERS,
    bandwidth_rule,
    make_kernel,
)


def base_moment(kernel, power: int, tol: float = 1e-10) -> float:
    """Quadrature oracle for the univariate moment of the base kernel."""
    value, err = integrate.quad(
        lambda u: u**power * float(kernel.base_eval(np.array([u]))[0]),
        -1.0, 1.0, epsabs=tol,
    )
    assert err < 1e-8
    return value


class TestKernelConstruction:
    def test_epanechnikov_peak_value(self):
        kernel = make_kernel(2, 1)
        assert kernel.base_eval(np.array([0.0]))[0] == pytest.approx(0.75, abs=0)

    def test_order2_normalization_and_first_moment(self):
        kernel = make_kernel(2, 1)
        assert base_moment(kernel, 0) == pytest.approx(1.0, abs=1e-10)
        assert base_moment(kernel, 1) == pytest.approx(0.0, abs=1e-10)

    def test_order4_second_moment_vanishes(self):
        kernel = make_kernel(4, 1)
        assert base_moment(kernel, 2) == pytest.approx(0.0, abs=1e-8)

    @pytest.mark.parametrize("order", SUPPORTED_ORDERS)
    def test_vanishing_moments_and_order(self, order):
        kernel = make_kernel(order, 1)
        assert base_moment(kernel, 0) == pytest.approx(1.0, abs=1e-6)
        for power in range(1, order):
            assert base_moment(kernel, power) == pytest.approx(0.0, abs=1e-6)
        # The order-th moment must not vanish, otherwise the label lies.
        assert abs(base_moment(kernel, order)) > 1e-3

    @pytest.mark.parametrize("order", SUPPORTED_ORDERS)
    @pytest.mark.parametrize("dim", [1, 2])
    def test_product_kernel_multivariate_moments(self, order, dim):
        kernel = make_kernel(order, dim)
        grid = np.linspace(-1.0, 1.0, 513)
        values = kernel.base_eval(grid)
        dx = grid[1] - grid[0]
        # Tensor moments factor over coordinates for a product kernel.
        for powers in _multi_indices(dim, order - 1):
            factors = [
                integrate.romb(grid**p * values, dx=dx) for p in powers
            ]
            total = np.prod(factors)
            expected = 1.0 if sum(powers) == 0 else 0.0
            assert total == pytest.approx(expected, abs=1e-6)

    def test_sup_bound_holds_on_support(self):
        for order in SUPPORTED_ORDERS:
            for dim in (1, 2):
                kernel = make_kernel(order, dim)
                pts = np.random.default_rng(0).uniform(-1, 1, size=(4000, dim))
                assert np.all(np.abs(kernel.eval(pts)) <= kernel.sup_bound + 1e-12)

    def test_compact_support(self):
        kernel = make_kernel(4, 1)
        outside = np.array([-1.5, 1.0001, 2.0, -7.0])
        assert np.all(kernel.base_eval(outside) == 0.0)

    def test_rejects_unsupported_orders(self):
        for bad in (0, 1, 3, MAX_ORDER + 1, MAX_ORDER + 2):
            with pytest.raises(ValueError):
                make_kernel(bad, 1)

    def test_rejects_bad_dim(self):
        with pytest.raises(ValueError):
            make_kernel(2, 0)


def _multi_indices(dim: int, max_total: int):
    if dim == 1:
        return [(p,) for p in range(max_total + 1)]
    out = []
    for p in range(max_total + 1):
        for rest in _multi_indices(dim - 1, max_total - p):
            out.append((p,) + rest)
    return out


class TestBandwidthRule:
    def test_base_case_n_equals_one(self):
        assert bandwidth_rule(1, 1.0, 1) == pytest.approx(1.0, abs=0)

    def test_arithmetic_example(self):
        # 4096 ** (-1/3) == 1/16
        assert bandwidth_rule(4096, 1.0, 1) == pytest.approx(1.0 / 16.0, rel=1e-12)

    def test_scale_multiplies(self):
        assert bandwidth_rule(4096, 1.0, 1, scale=2.0) == pytest.approx(
            2.0 / 16.0, rel=1e-12
        )

    @given(
        n=st.integers(min_value=1, max_value=10**7),
        beta=st.floats(min_value=0.25, max_value=8.0),
        dim=st.integers(min_value=1, max_value=3),
    )
    def test_strictly_decreasing_in_n(self, n, beta, dim):
        h1 = bandwidth_rule(n, beta, dim)
        assert bandwidth_rule(n + 1, beta, dim) < h1
        assert bandwidth_rule(2 * n, beta, dim) < h1

    def test_validation(self):
        with pytest.raises(ValueError):
            bandwidth_rule(0, 1.0, 1)
        with pytest.raises(ValueError):
            bandwidth_rule(10, -1.0, 1)
        with pytest.raises(ValueError):
            bandwidth_rule(10, 1.0, 1, scale=0.0)
