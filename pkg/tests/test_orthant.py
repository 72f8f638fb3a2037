"""Orthant probability kernels against closed forms, Genz integration and Monte Carlo."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from onebitdet.errors import NotPositiveDefinite, ValidationError
from onebitdet.model import default_params
from onebitdet.orthant import (OrthantSpec, orthant, orthant2, orthant_all_patterns,
                               orthant_probability, pair_correlation, tridiagonal_cov)
from onebitdet.validation import random_tridiagonal_specs


def genz_orthant(cov, signs):
    """P(sign(x) == signs) through scipy's Genz integrator (independent oracle)."""
    sg = np.array(signs, dtype=float)
    flipped = np.asarray(cov) * np.outer(sg, sg)
    return float(stats.multivariate_normal.cdf(np.zeros(len(sg)), mean=np.zeros(len(sg)),
                                               cov=flipped, abseps=1e-10, releps=1e-10,
                                               maxpts=2_000_000))


def quad_orthant2(rho):
    """Positive-quadrant mass by direct 2-D quadrature of the bivariate density."""
    det = 1.0 - rho * rho
    f = lambda y, x: math.exp(-(x * x - 2 * rho * x * y + y * y) / (2 * det)) / (
        2 * math.pi * math.sqrt(det))
    val, _ = integrate.dblquad(f, 0, 12, 0, 12, epsabs=1e-12)
    return val


class TestPairCorrelation:
    def test_zero_corr(self):
        assert pair_correlation(default_params(corr=0.0)) == 0.0

    def test_unit_noise(self):
        p = default_params(corr=0.5, snr_db=None, noise_std=1.0)
        assert pair_correlation(p) == pytest.approx(0.25)

    def test_noiseless_limit(self):
        p = default_params(corr=0.7, snr_db=None, noise_std=1e-9)
        assert pair_correlation(p) == pytest.approx(0.7, abs=1e-12)


class TestOrthant2:
    def test_independent(self):
        assert orthant2(0.0) == 0.25

    def test_half(self):
        assert orthant2(0.5) == pytest.approx(1 / 3, abs=1e-15)
        assert quad_orthant2(0.5) == pytest.approx(1 / 3, abs=1e-8)

    def test_quarter(self):
        assert orthant2(0.25) == pytest.approx(0.29021531, abs=1e-8)
        assert orthant2(0.25) == pytest.approx(quad_orthant2(0.25), abs=1e-9)

    def test_quarter_monte_carlo(self):
        n = 1_000_000
        x = np.random.default_rng(3).multivariate_normal([0, 0], [[1, 0.25], [0.25, 1]], n)
        freq = np.mean(np.all(x > 0, axis=1))
        p = orthant2(0.25)
        assert abs(freq - p) < 3 * math.sqrt(p * (1 - p) / n)

    @pytest.mark.parametrize("rho", [-0.9, -0.5, 0.0, 0.25, 0.5, 0.707, 0.9])
    def test_matches_general_kernel(self, rho):
        assert orthant(OrthantSpec(((1, rho), (rho, 1)), (1, 1))) == pytest.approx(
            orthant2(rho), abs=1e-8)

    @pytest.mark.parametrize("rho", [-0.6, 0.1, 0.8])
    def test_matches_quadrature(self, rho):
        assert orthant2(rho) == pytest.approx(quad_orthant2(rho), abs=1e-8)

    @given(a=st.floats(-0.999, 0.999), b=st.floats(-0.999, 0.999))
    def test_strictly_increasing(self, a, b):
        if a < b:
            assert orthant2(a) < orthant2(b) or b - a < 1e-12

    @pytest.mark.parametrize("rho", [-1.0, 1.0, 1.5, float("nan")])
    def test_rejects_invalid(self, rho):
        with pytest.raises(ValidationError):
            orthant2(rho)


class TestOrthantGeneral:
    @pytest.mark.parametrize("dim,expected", [(3, 0.125), (4, 0.0625)])
    def test_identity(self, dim, expected):
        for signs in itertools.product((1, -1), repeat=dim):
            assert orthant(OrthantSpec(np.eye(dim), signs)) == pytest.approx(expected, abs=1e-14)

    def test_raw_variance_units(self):
        cov = tridiagonal_cov(3, 4.0, 1.0)
        assert orthant_probability(cov, "+-+") == pytest.approx(
            orthant_probability(tridiagonal_cov(3, 1.0, 0.25), "+-+"), abs=1e-14)

    def test_equicorrelated_four(self):
        # closed form for equicorrelation 1/2 in four dimensions is 1/5
        cov = np.full((4, 4), 0.5) + 0.5 * np.eye(4)
        assert orthant_probability(cov, (1, 1, 1, 1)) == pytest.approx(0.2, abs=1e-10)

    def test_spec_three_dim_against_monte_carlo(self):
        cov = tridiagonal_cov(3, 1.0, 0.25)
        p = orthant(OrthantSpec(cov, ("-", "+", "-")))
        n = 10_000_000
        rng = np.random.default_rng(17)
        chol = np.linalg.cholesky(cov)
        hits = 0
        for _ in range(10):
            x = rng.standard_normal((n // 10, 3)) @ chol.T
            hits += np.count_nonzero((x[:, 0] < 0) & (x[:, 1] > 0) & (x[:, 2] < 0))
        assert abs(hits / n - p) < 3 * math.sqrt(p * (1 - p) / n)

    @pytest.mark.parametrize("dim", [3, 4])
    def test_random_specs_against_genz(self, dim):
        rng = np.random.default_rng(dim)
        for cov, signs in random_tridiagonal_specs(dim, 10, rng):
            assert orthant_probability(cov, signs) == pytest.approx(genz_orthant(cov, signs),
                                                                    abs=1e-6)

    def test_dense_four_against_genz(self):
        a = np.random.default_rng(5).standard_normal((4, 6))
        cov = a @ a.T
        for signs in [(1, 1, 1, 1), (1, -1, 1, -1), (-1, -1, 1, 1)]:
            assert orthant_probability(cov, signs) == pytest.approx(genz_orthant(cov, signs),
                                                                    abs=1e-6)

    @pytest.mark.parametrize("dim,tol", [(2, 1e-12), (3, 1e-7), (4, 1e-6)])
    def test_patterns_sum_to_one(self, dim, tol):
        total = sum(orthant_all_patterns(tridiagonal_cov(dim, 1.0, 0.25)).values())
        assert total == pytest.approx(1.0, abs=tol)

    def test_two_dim_patterns(self):
        pats = orthant_all_patterns([[1.0, 0.0], [0.0, 1.0]])
        assert all(v == pytest.approx(0.25) for v in pats.values())
        pats = orthant_all_patterns([[1.0, 0.5], [0.5, 1.0]])
        assert pats[(1, 1)] == pytest.approx(1 / 3) and pats[(-1, -1)] == pytest.approx(1 / 3)
        assert pats[(1, -1)] == pytest.approx(1 / 6) and pats[(-1, 1)] == pytest.approx(1 / 6)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000), dim=st.sampled_from([2, 3, 4]))
    def test_sign_flip_symmetry(self, seed, dim):
        rng = np.random.default_rng(seed)
        (cov, signs), = random_tridiagonal_specs(dim, 1, rng)
        neg = tuple(-s for s in signs)
        assert orthant_probability(cov, signs) == pytest.approx(orthant_probability(cov, neg),
                                                                abs=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000), dim=st.sampled_from([3, 4]))
    def test_random_pattern_sums(self, seed, dim):
        (cov, _), = random_tridiagonal_specs(dim, 1, np.random.default_rng(seed))
        assert sum(orthant_all_patterns(cov).values()) == pytest.approx(1.0, abs=1e-7)

    def test_not_positive_definite(self):
        with pytest.raises(NotPositiveDefinite):
            orthant_probability(tridiagonal_cov(4, 1.0, 0.7), (1, 1, 1, 1))

    @pytest.mark.parametrize("cov,signs", [
        ([[1.0, 0.2], [0.3, 1.0]], (1, 1)),            # asymmetric
        ([[0.0, 0.0], [0.0, 1.0]], (1, 1)),            # zero variance
        ([[1.0, 0.2], [0.2, 1.0]], (1, 1, 1)),         # length mismatch
        ([[1.0, 0.2], [0.2, 1.0]], (1, 0)),            # bad sign
    ])
    def test_invalid_inputs(self, cov, signs):
        with pytest.raises(ValidationError):
            orthant_probability(cov, signs)

    def test_spec_dimension_bounds(self):
        with pytest.raises(ValidationError):
            OrthantSpec(np.eye(5), (1,) * 5)
        with pytest.raises(ValidationError):
            OrthantSpec(np.eye(1), (1,))
