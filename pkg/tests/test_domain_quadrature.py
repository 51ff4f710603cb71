"""Domain boxes and the integration helpers backing every oracle."""

import numpy as np
import pytest

from causalkl.domain import DomainBox, as_points
from causalkl.quadrature import QuadratureError, integrate_box, integrate_interval


class TestDomainBox:
    def test_validation(self):
        with pytest.raises(ValueError):
            DomainBox((0.0, 0.0), (1.0,))
        with pytest.raises(ValueError):
            DomainBox((1.0,), (1.0,))
        with pytest.raises(ValueError):
            DomainBox((0.0,), (np.inf,))

    def test_volume_and_midpoint(self):
        box = DomainBox((-3.0, 0.0), (3.0, 2.0))
        assert box.volume == pytest.approx(12.0)
        assert box.midpoint.tolist() == [0.0, 1.0]

    def test_contains_is_closed(self):
        box = DomainBox.interval(0.0, 1.0)
        inside = box.contains(np.array([[0.0], [1.0], [0.5]]))
        assert inside.all()
        assert not box.contains(np.array([[1.0 + 1e-12]]))[0]

    def test_require_inside_raises_with_point(self):
        box = DomainBox.unit(2)
        with pytest.raises(ValueError, match="outside"):
            box.require_inside(np.array([[0.5, 1.5]]))

    def test_as_points_shapes(self):
        assert as_points(0.5, 1).shape == (1, 1)
        assert as_points([1.0, 2.0], 2).shape == (1, 2)
        assert as_points([1.0, 2.0], 1).shape == (2, 1)
        with pytest.raises(ValueError):
            as_points(np.zeros((3, 2)), 1)


class TestQuadrature:
    def test_interval_polynomial(self):
        assert integrate_interval(lambda t: 3 * t**2, 0.0, 1.0) == pytest.approx(1.0)

    def test_box_matches_product_integral(self):
        box = DomainBox((-1.0, 0.0), (1.0, 2.0))
        value, residual = integrate_box(
            lambda pts: pts[:, 0] ** 2 * np.exp(-pts[:, 1]), box, tol=1e-10
        )
        expected = (2.0 / 3.0) * (1.0 - np.exp(-2.0))
        assert value == pytest.approx(expected, abs=1e-9)
        assert residual <= 1e-10

    def test_box_3d(self):
        box = DomainBox.unit(3)
        value, _ = integrate_box(
            lambda pts: pts.prod(axis=1), box, tol=1e-9, max_points_per_axis=65
        )
        assert value == pytest.approx(0.125, abs=1e-9)

    def test_failure_reports_residual(self):
        box = DomainBox.interval(0.0, 1.0)

        def rough(pts):
            # A kink plus fine oscillation defeats the coarse grid cap.
            t = pts[:, 0]
            return np.abs(t - 0.37) ** 0.2 + np.sin(200 * t)

        with pytest.raises(QuadratureError):
            integrate_box(rough, box, tol=1e-12, max_points_per_axis=17)
        value, residual = integrate_box(
            rough, box, tol=1e-12, max_points_per_axis=17, raise_on_failure=False
        )
        assert np.isfinite(value)
        assert residual > 1e-12
