"""The analytic corpus: normalization, lower bounds, and sampler consistency."""

import numpy as np
import pytest

from causalkl.densities import (
    BetaMix,
    Mixture,
    ProductDensity,
    SmoothMap,
    TruncatedGaussian,
    Uniform,
    matched_floor,
    reference_alt_pair,
    reference_mixture_pair,
    reference_null_pair,
    reference_shift_pair,
)
from causalkl.domain import DomainBox

ALL_CASES = [
    ("uniform", lambda dom: Uniform(dom)),
    ("trunc_gauss", lambda dom: TruncatedGaussian(0.4, 0.8, dom)),
    ("pushforward", lambda dom: SmoothMap(dom, bend=0.6)),
]


@pytest.mark.parametrize("name,builder", ALL_CASES)
def test_mass_is_one(name, builder, std_domain):
    density = builder(std_domain)
    assert density.mass(tol=1e-8) == pytest.approx(1.0, abs=1e-6)


def test_beta_mix_mass_and_floor():
    density = BetaMix(2, 9, 0.12)
    assert density.mass(tol=1e-9) == pytest.approx(1.0, abs=1e-8)
    grid = np.linspace(0, 1, 4001)
    assert np.min(density.pdf(grid)) >= density.p_min - 1e-12


@pytest.mark.parametrize("name,builder", ALL_CASES)
def test_lower_bound_certificate(name, builder, std_domain):
    density = builder(std_domain)
    grid = np.linspace(std_domain.lower[0], std_domain.upper[0], 4001)
    assert density.p_min > 0
    assert np.min(density.pdf(grid)) >= density.p_min - 1e-12


@pytest.mark.parametrize("name,builder", ALL_CASES)
def test_sampler_matches_density_histogram(name, builder, std_domain, rng):
    density = builder(std_domain)
    draws = density.sample(rng, 100_000)[:, 0]
    assert np.all((draws >= std_domain.lower[0]) & (draws <= std_domain.upper[0]))
    edges = np.linspace(std_domain.lower[0], std_domain.upper[0], 51)
    hist, _ = np.histogram(draws, bins=edges)
    centers = (edges[:-1] + edges[1:]) / 2
    widths = np.diff(edges)
    expected = density.pdf(centers) * widths
    observed = hist / draws.size
    # Total-variation proxy between binned sampler mass and density mass.
    assert 0.5 * np.abs(observed - expected).sum() < 0.03


def test_mixture_weights_validated(std_domain):
    comp = TruncatedGaussian(0.0, 1.0, std_domain)
    with pytest.raises(ValueError):
        Mixture([comp], [0.7])
    other_domain = DomainBox.interval(-1.0, 1.0)
    with pytest.raises(ValueError):
        Mixture([comp, TruncatedGaussian(0.0, 1.0, other_domain)], [0.5, 0.5])


def test_product_density_factorizes(rng):
    f1 = BetaMix(2, 2, 0.3)
    f2 = BetaMix(3, 2, 0.2)
    product = ProductDensity([f1, f2])
    pts = rng.random((64, 2))
    expected = f1.pdf(pts[:, 0]) * f2.pdf(pts[:, 1])
    np.testing.assert_allclose(product.pdf(pts), expected, rtol=1e-12)
    assert product.p_min == pytest.approx(f1.p_min * f2.p_min)
    draws = product.sample(rng, 500)
    assert draws.shape == (500, 2)


def test_smooth_map_pdf_matches_finite_difference(std_domain):
    density = SmoothMap(std_domain, bend=0.5)
    # Pushforward CDF differences approximate the pdf independently of the
    # Newton-inverse path.
    xs = np.linspace(-2.9, 2.9, 41)
    h = 1e-5
    v_hi = density._inverse((xs + h - std_domain.lower[0]) / 6.0)
    v_lo = density._inverse((xs - h - std_domain.lower[0]) / 6.0)
    cdf_diff = (v_hi - v_lo) / (2 * h)
    np.testing.assert_allclose(density.pdf(xs), cdf_diff, rtol=1e-5)


def test_truncated_gaussian_normalizer_records_truncation(std_domain):
    density = TruncatedGaussian(0.0, 1.0, std_domain)
    assert density.normalizer == pytest.approx(1.0 / 0.9973002039367398, rel=1e-9)


class TestReferenceCorpus:
    def test_null_pair_identical_laws(self):
        p, q = reference_null_pair()
        xs = np.linspace(-3, 3, 101)
        np.testing.assert_allclose(p.pdf(xs), q.pdf(xs))

    def test_shift_pair_domains_match(self):
        p, q = reference_shift_pair(0.5)
        assert p.domain == q.domain

    def test_alt_pair_is_cushioned(self):
        p, q = reference_alt_pair()
        assert p.p_min > 0.01
        assert q.p_min > 0.01

    def test_mixture_pair_masses(self):
        p, q = reference_mixture_pair()
        assert p.mass(tol=1e-8) == pytest.approx(1.0, abs=1e-6)
        assert q.mass(tol=1e-8) == pytest.approx(1.0, abs=1e-6)

    def test_matched_floor_halves_minimum(self):
        p, q = reference_alt_pair()
        assert matched_floor(p, q) == pytest.approx(min(p.p_min, q.p_min) / 2)
