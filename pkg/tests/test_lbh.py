"""
Tests for the logarithmic / bounded / harmless growth diagnostics.
"""

import math

import numpy as np
import pytest

from kz_associator.algebra.free_series import TruncatedSeries, exp_lambda, mul
from kz_associator.associator.drinfeld import DEFAULT_GRID
from kz_associator.associator.identities import hexagon_remainder
from kz_associator.associator.lbh import (
    BOUNDED,
    HARMLESS,
    LOGARITHMIC,
    UNIT,
    classify_lbh,
    fit_degree,
)


def harmless(ab, order, letter, power):
    """1 + lambda delta^power X as a family over the default grid."""
    X = ab.element(letter)
    return {d: TruncatedSeries(ab, order, [ab.unit(), X.scale(d ** power)]) for d in DEFAULT_GRID}


def log_divergent(ab, order):
    """exp(lambda ln(delta) A) over the default grid."""
    A = ab.element('A')
    return {d: exp_lambda(A, order, math.log(d)) for d in DEFAULT_GRID}


class TestFitDegree:
    """Test suite for single-degree model selection."""

    def test_all_zero_is_bounded_with_zero_constant(self):
        """Test a vanishing degree is B with C = 0."""
        grid = np.array(DEFAULT_GRID)
        fit = fit_degree(grid, np.zeros_like(grid), 2)
        assert fit.model == BOUNDED
        assert fit.constant == 0.0

    def test_power_law(self):
        """Test C delta^beta is recognised with its exponent."""
        grid = np.array(DEFAULT_GRID)
        fit = fit_degree(grid, 3.0 * grid ** 0.75, 1)
        assert fit.model == HARMLESS
        assert fit.exponent == pytest.approx(0.75, abs=1e-9)
        assert fit.constant == pytest.approx(3.0, rel=1e-9)

    def test_noisy_constant_stays_bounded(self):
        """Test small wiggles around a constant do not count as growth."""
        grid = np.array(DEFAULT_GRID)
        norms = 2.0 + 0.01 * np.array([1, -1, 1, -1, 1, -1, 1], dtype=float)
        assert fit_degree(grid, norms, 1).model == BOUNDED


class TestClassifyLbh:
    """Test suite for family classification."""

    def test_exponential_of_log_is_logarithmic(self, ab):
        """Test exp(lambda ln(delta) A) is L with alpha = r at degree r."""
        diagnostics = classify_lbh(log_divergent(ab, 4))
        assert diagnostics.classification == LOGARITHMIC
        assert diagnostics.fit(0).model == UNIT
        for r in range(1, 5):
            fit = diagnostics.fit(r)
            assert fit.model == LOGARITHMIC
            assert abs(fit.exponent - r) < 0.2

    def test_constant_family_is_bounded(self, ab):
        """Test a delta-independent series is B."""
        A = ab.element('A')
        F = {d: exp_lambda(A, 3, 0.5) for d in DEFAULT_GRID}
        diagnostics = classify_lbh(F)
        assert diagnostics.classification == BOUNDED
        assert all(f.model in (UNIT, BOUNDED) for f in diagnostics.fits)

    def test_square_root_is_harmless(self, ab):
        """Test 1 + lambda delta^(1/2) A is H with beta = 1/2."""
        diagnostics = classify_lbh(harmless(ab, 2, 'A', 0.5))
        assert diagnostics.classification == HARMLESS
        assert diagnostics.fit(1).exponent == pytest.approx(0.5, abs=1e-6)
        assert diagnostics.fit(2).constant == 0.0

    def test_quadratic_term_is_harmless(self, ab):
        """Test 1 + lambda^2 delta AB is H."""
        AB = ab.element('A') * ab.element('B')
        F = {d: TruncatedSeries(ab, 3, [ab.unit(), ab.zero(), AB.scale(d)]) for d in DEFAULT_GRID}
        diagnostics = classify_lbh(F)
        assert diagnostics.classification == HARMLESS
        assert diagnostics.fit(2).model == HARMLESS

    def test_product_of_harmless_is_harmless(self, ab):
        """Test the harmless families form a group."""
        first = harmless(ab, 3, 'A', 0.5)
        second = harmless(ab, 3, 'B', 1.0)
        product = {d: mul(first[d], second[d]) for d in DEFAULT_GRID}
        assert classify_lbh(product).classification == HARMLESS

    def test_logarithmic_times_harmless_part_is_harmless(self, ab):
        """Test an L family times the harmless part F - 1 of an H family is H."""
        order = 3
        L = log_divergent(ab, order)
        H = harmless(ab, order, 'B', 1.0)
        one = TruncatedSeries.one(ab, order)
        left = {d: mul(L[d], H[d] - one) for d in DEFAULT_GRID}
        right = {d: mul(H[d] - one, L[d]) for d in DEFAULT_GRID}
        assert classify_lbh(left).classification == HARMLESS
        assert classify_lbh(right).classification == HARMLESS

    def test_logarithmic_times_harmless_group_element_is_logarithmic(self, ab):
        """Test the product keeps the logarithmic degree-one part."""
        L = log_divergent(ab, 2)
        H = harmless(ab, 2, 'B', 1.0)
        product = {d: mul(L[d], H[d]) for d in DEFAULT_GRID}
        assert classify_lbh(product).classification == LOGARITHMIC

    def test_too_few_points(self, ab):
        """Test fewer than five grid points raise ValueError."""
        F = dict(list(harmless(ab, 1, 'A', 1.0).items())[:4])
        with pytest.raises(ValueError):
            classify_lbh(F)

    def test_to_dict(self, ab):
        """Test the report form lists one fit per degree."""
        data = classify_lbh(harmless(ab, 2, 'A', 1.0)).to_dict()
        assert data['classification'] == HARMLESS
        assert [f['degree'] for f in data['fits']] == [0, 1, 2]
        assert data['grid'] == list(DEFAULT_GRID)

    @pytest.mark.slow
    def test_hexagon_remainder_is_harmless(self, letters):
        """Test H(B, A) vanishes like a power of delta at degrees 1..3."""
        A, B = letters
        grid = [2.0 ** -k for k in range(4, 10)]
        F = {d: hexagon_remainder(B, A, d, 3) for d in grid}
        diagnostics = classify_lbh(F)
        assert diagnostics.classification == HARMLESS
        for r in (1, 2, 3):
            fit = diagnostics.fit(r)
            assert fit.model == HARMLESS
            assert fit.exponent >= 0.3
