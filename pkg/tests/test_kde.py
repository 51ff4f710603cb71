"""KDE fitting and evaluation: exactness, clamping, and convergence."""

import numpy as np
import pytest

from causalkl.densities import TruncatedGaussian
from causalkl.domain import DomainBox
from causalkl.kde import DensityEstimate, default_floor, kde_eval, kde_fit
from causalkl.kernels import bandwidth_rule, make_kernel
from causalkl.rngstream import substream


def brute_force_kde(samples, kernel, h, x, floor):
    """Direct sum over samples, the oracle for the windowed fast path."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if samples.ndim == 1:
        samples = samples.reshape(-1, 1)
    d = samples.shape[1]
    pts = x.reshape(-1, d)
    offsets = (samples[None, :, :] - pts[:, None, :]) / h
    raw = kernel.eval(offsets).mean(axis=1) / h**d
    return np.maximum(raw, floor)


class TestFitValidation:
    def test_empty_samples_rejected(self, std_domain):
        with pytest.raises(ValueError):
            kde_fit(np.empty((0, 1)), make_kernel(2, 1), std_domain, bandwidth=0.3)

    def test_sample_outside_domain_rejected(self, std_domain):
        with pytest.raises(ValueError, match="outside"):
            kde_fit(np.array([[0.0], [4.0]]), make_kernel(2, 1), std_domain,
                    bandwidth=0.3)

    def test_needs_bandwidth_or_beta(self, std_domain):
        with pytest.raises(ValueError):
            kde_fit(np.zeros((5, 1)), make_kernel(2, 1), std_domain)

    def test_default_bandwidth_follows_rule(self, std_domain, rng):
        samples = rng.uniform(-3, 3, size=(100, 1))
        est = kde_fit(samples, make_kernel(2, 1), std_domain, beta=2.0, scale=1.3)
        assert est.bandwidth == pytest.approx(bandwidth_rule(100, 2.0, 1, 1.3))

    def test_default_floor_is_relative_to_uniform(self, std_domain):
        assert default_floor(std_domain) == pytest.approx(1e-3 / 6.0)


class TestEvaluation:
    def test_single_sample_peak(self, std_domain):
        kernel = make_kernel(2, 1)
        h = 0.5
        est = kde_fit(np.array([[0.2]]), kernel, std_domain, bandwidth=h, floor=0.0)
        expected = kernel.base_eval(np.array([0.0]))[0] / h
        assert est.evaluate(0.2) == pytest.approx(expected, rel=1e-12)

    def test_symmetric_pair_at_center(self, std_domain):
        kernel = make_kernel(2, 1)
        a, h = 0.3, 0.8
        est = kde_fit(np.array([[-a], [a]]), kernel, std_domain,
                      bandwidth=h, floor=0.0)
        expected = kernel.base_eval(np.array([a / h]))[0] / h
        assert est.evaluate(0.0) == pytest.approx(expected, rel=1e-12)

    def test_far_from_support_hits_floor(self, std_domain, rng):
        kernel = make_kernel(2, 1)
        samples = rng.uniform(-0.5, 0.5, size=(50, 1))
        est = kde_fit(samples, kernel, std_domain, bandwidth=0.2, floor=0.01)
        assert est.evaluate(2.9) == pytest.approx(0.01)

    def test_floor_clamps_everywhere(self, std_domain, rng):
        samples = rng.uniform(-3, 3, size=(40, 1))
        est = kde_fit(samples, make_kernel(4, 1), std_domain, beta=2.0, floor=0.05)
        xs = np.linspace(-3, 3, 301)
        assert np.all(est.evaluate(xs) >= 0.05)

    def test_eval_outside_domain_rejected(self, std_domain, rng):
        est = kde_fit(rng.uniform(-1, 1, (10, 1)), make_kernel(2, 1),
                      std_domain, bandwidth=0.5)
        with pytest.raises(ValueError, match="outside"):
            est.evaluate(3.5)

    def test_deterministic(self, std_domain, rng):
        samples = rng.uniform(-2, 2, size=(200, 1))
        est = kde_fit(samples, make_kernel(2, 1), std_domain, beta=2.0)
        xs = np.linspace(-3, 3, 50)
        np.testing.assert_array_equal(est.evaluate(xs), est.evaluate(xs))

    @pytest.mark.parametrize("order", [2, 4])
    def test_fast_path_matches_brute_force(self, order, std_domain, rng):
        kernel = make_kernel(order, 1)
        samples = rng.uniform(-3, 3, size=(500, 1))
        est = kde_fit(samples, kernel, std_domain, bandwidth=0.37, floor=1e-4)
        xs = np.linspace(-3, 3, 257)
        expected = brute_force_kde(samples, kernel, 0.37, xs, 1e-4)
        np.testing.assert_allclose(est.evaluate(xs), expected, rtol=1e-7)

    def test_multivariate_matches_brute_force(self, rng):
        domain = DomainBox.unit(2)
        kernel = make_kernel(2, 2)
        samples = rng.random((300, 2))
        est = kde_fit(samples, kernel, domain, bandwidth=0.25, floor=0.0)
        pts = rng.random((40, 2))
        expected = brute_force_kde(samples, kernel, 0.25, pts, 0.0)
        np.testing.assert_allclose(est.evaluate(pts), expected, rtol=1e-10)

    def test_continuity_in_x(self, std_domain, rng):
        samples = rng.uniform(-2, 2, size=(300, 1))
        est = kde_fit(samples, make_kernel(2, 1), std_domain, beta=2.0)
        xs = np.linspace(-2.5, 2.5, 2001)
        values = np.asarray(est.evaluate(xs))
        # Lipschitz-like bound: increments vanish with the grid step.
        assert np.max(np.abs(np.diff(values))) < 0.05


class TestStatisticalBehavior:
    def test_uniform_density_level(self):
        # 1e4 uniform draws on [0, 1]; the estimate at the center must
        # recover the level 1.0 closely once averaged across replicates.
        domain = DomainBox.unit(1)
        kernel = make_kernel(2, 1)
        values = []
        for seed in range(50):
            draws = substream(11, "kde-uniform", seed).random((10_000, 1))
            est = kde_fit(draws, kernel, domain, beta=2.0)
            values.append(est.evaluate(0.5))
        assert np.mean(values) == pytest.approx(1.0, abs=0.05)

    def test_sup_norm_error_shrinks_with_n(self, std_domain):
        # Interior grid: the box boundary has an O(1) bias layer by design
        # (no boundary correction), so convergence is graded away from it.
        density = TruncatedGaussian(0.0, 1.0, std_domain)
        kernel = make_kernel(2, 1)
        grid = np.linspace(-2.5, 2.5, 101)
        truth = density.pdf(grid)
        medians = []
        for n in (2**9, 2**11, 2**13):
            errors = []
            for seed in range(15):
                draws = density.sample(substream(12, "kde-sup", n, seed), n)
                est = kde_fit(draws, kernel, std_domain, beta=2.0)
                errors.append(np.max(np.abs(np.asarray(est.evaluate(grid)) - truth)))
            medians.append(np.median(errors))
        assert medians[0] >= medians[1] >= medians[2]


def test_module_level_helpers(std_domain, rng):
    samples = rng.uniform(-1, 1, size=(20, 1))
    est = kde_fit(samples, make_kernel(2, 1), std_domain, bandwidth=0.4)
    assert isinstance(est, DensityEstimate)
    xs = np.array([0.0, 0.5])
    np.testing.assert_array_equal(kde_eval(est, xs), est.evaluate(xs))
