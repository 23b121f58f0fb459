"""
Tests for the formal ODE solver.

This module tests the cumulative quadrature rule, propagators of pulled-back
fields, their groupoid structure and locality, the step-halving error
estimate, the factorization W = U * Xi and a seeded batch of random fields.
"""

import math
import time

import numpy as np
import pytest

from kz_associator.algebra.free_series import TruncatedSeries, exp_lambda
from kz_associator.exceptions import InadmissiblePathError, PathError
from kz_associator.geometry.transport import (
    Propagator,
    PulledBackField,
    compose_transports,
    cumulative_integral,
    factorize,
    propagate,
)


RANDOM_FIELDS = 50
RANDOM_FIELD_BUDGET = 30.0


def _random_field(ab, seed, reparametrized=False):
    """Two terms f_k(s) C_k with f_k = a + b cos(w s + p) and C_k real combinations of A and B."""
    rng = np.random.default_rng(seed)
    terms = []
    for _ in range(2):
        a, b = rng.uniform(-1.0, 1.0, 2)
        w, p = rng.uniform(0.0, 3.0), rng.uniform(0.0, 2 * math.pi)
        coefficient = ab.element('A', float(rng.normal())) + ab.element('B', float(rng.normal()))
        if reparametrized:
            f = lambda t, a=a, b=b, w=w, p=p: (a + b * np.cos(w * t * t + p)) * 2 * t
        else:
            f = lambda s, a=a, b=b, w=w, p=p: a + b * np.cos(w * s + p)
        terms.append((f, coefficient))
    return PulledBackField.from_functions(ab, terms)


@pytest.fixture
def field_(ab, letters):
    """A smooth noncommuting field A/(1+s) + B cos(s)."""
    A, B = letters
    return PulledBackField.from_functions(ab, [(lambda s: 1.0 / (1.0 + s), A), (np.cos, B)])


class TestCumulativeIntegral:
    """Test suite for the fourth-order running integral."""

    def test_cubic_is_exact(self):
        """Test a cubic integrates exactly at every node."""
        s = np.linspace(0.0, 1.0, 9)
        out = cumulative_integral(s ** 3 - 2 * s, s[1] - s[0])
        np.testing.assert_allclose(out, s ** 4 / 4 - s ** 2, atol=1e-14)

    def test_fourth_order_convergence(self):
        """Test halving h divides the error by about sixteen."""
        errors = []
        for m in (16, 32, 64):
            s = np.linspace(0.0, 1.0, m + 1)
            errors.append(abs(cumulative_integral(np.exp(3 * s), 1.0 / m)[-1] - (math.exp(3) - 1) / 3))
        assert errors[0] / errors[1] > 12
        assert errors[1] / errors[2] > 12

    def test_too_few_panels(self):
        """Test fewer than three panels raise ValueError."""
        with pytest.raises(ValueError):
            cumulative_integral(np.ones(3), 0.5)

    def test_vectorized_over_leading_axes(self):
        """Test rows are integrated independently."""
        s = np.linspace(0.0, 1.0, 5)
        out = cumulative_integral(np.vstack([np.ones_like(s), 2 * s]), 0.25)
        np.testing.assert_allclose(out[:, -1], [1.0, 1.0])


class TestPropagate:
    """Test suite for propagators."""

    def test_constant_field_is_exponential(self, ab, letters):
        """Test W = exp(lambda c A) for Y = c A."""
        A, _ = letters
        Y = PulledBackField.constant(ab, A, 0.75)
        W = propagate(Y, 0.0, 1.0, order=4, steps=16)
        assert W.value.distance(exp_lambda(A, 4, 0.75)).max() < 1e-14

    def test_commuting_field_closed_form(self, ab, letters):
        """Test W = exp(lambda int f) when the field is f(s) A."""
        A, _ = letters
        Y = PulledBackField.from_functions(ab, [(lambda s: 1.0 / (1.0 + s), A)])
        W = propagate(Y, 0.0, 1.0, order=4, steps=512)
        assert W.value.distance(exp_lambda(A, 4, math.log(2.0))).max() < 1e-9

    def test_group_element(self, field_):
        """Test the propagator starts with 1."""
        assert propagate(field_, 0.0, 1.0, order=3, steps=64).value.is_group_element()

    def test_groupoid(self, field_):
        """Test W_{1,1/2} W_{1/2,0} = W_{1,0}."""
        first = propagate(field_, 0.0, 0.5, order=4, steps=512)
        second = propagate(field_, 0.5, 1.0, order=4, steps=512)
        whole = propagate(field_, 0.0, 1.0, order=4, steps=1024)
        assert compose_transports(second, first).value.distance(whole.value).max() < 1e-9

    def test_backwards_is_inverse(self, ab, field_):
        """Test W_{0,1} W_{1,0} = 1."""
        forward = propagate(field_, 0.0, 1.0, order=4, steps=256)
        backward = propagate(field_, 1.0, 0.0, order=4, steps=256)
        product = compose_transports(backward, forward).value
        assert product.distance(TruncatedSeries.one(ab, 4)).max() < 1e-13

    def test_inverse_matches_reverse(self, field_):
        """Test Propagator.inverse swaps the endpoints."""
        W = propagate(field_, 0.2, 0.8, order=3, steps=128)
        inverse = W.inverse()
        assert (inverse.start, inverse.end) == (0.8, 0.2)
        assert inverse.value.distance(propagate(field_, 0.8, 0.2, 3, 128).value).max() < 1e-14

    def test_identity(self, ab):
        """Test the identity propagator is the unit series."""
        assert Propagator.identity(ab, 3).value.distance(TruncatedSeries.one(ab, 3)).max() == 0

    @pytest.mark.parametrize('steps', [8, 16])
    def test_step_halving(self, field_, steps):
        """Test doubling the panels cuts the error at least eightfold."""
        reference = propagate(field_, 0.0, 1.0, order=3, steps=4096).value
        coarse = propagate(field_, 0.0, 1.0, order=3, steps=steps).value.distance(reference).max()
        fine = propagate(field_, 0.0, 1.0, order=3, steps=2 * steps).value.distance(reference).max()
        assert fine * 8 <= coarse

    def test_error_estimate(self, field_):
        """Test the Richardson estimate is close to the true error."""
        reference = propagate(field_, 0.0, 1.0, order=3, steps=4096).value
        W = propagate(field_, 0.0, 1.0, order=3, steps=32, estimate_error=True)
        actual = W.value.distance(reference).max()
        assert W.estimated_error is not None
        assert actual / 4 <= W.estimated_error <= actual * 4

    def test_no_estimate_for_odd_steps(self, field_):
        """Test odd step counts skip the estimate."""
        assert propagate(field_, 0.0, 1.0, 2, steps=33, estimate_error=True).estimated_error is None

    def test_range_checks(self, field_):
        """Test parameters outside [0, 1] and too few steps are rejected."""
        with pytest.raises(ValueError):
            propagate(field_, -0.1, 1.0, 2)
        with pytest.raises(ValueError):
            propagate(field_, 0.0, 1.0, 2, steps=2)

    def test_singular_sample(self, ab, letters):
        """Test a non-finite field value raises InadmissiblePathError."""
        A, _ = letters
        Y = PulledBackField.from_functions(ab, [(lambda s: 1.0 / (s - 0.5), A)])
        with np.errstate(divide='ignore'):
            with pytest.raises(InadmissiblePathError):
                propagate(Y, 0.0, 1.0, 2, steps=4)

    def test_compose_mismatch(self, ab, letters):
        """Test composing transports with different joining points raises PathError."""
        one = TruncatedSeries.one(ab, 2)
        w1 = Propagator(one, 0.0, 1.0, 4, None, (0.1,), (0.5,))
        w2 = Propagator(one, 0.0, 1.0, 4, None, (0.6,), (0.9,))
        with pytest.raises(PathError):
            compose_transports(w2, w1)


class TestFieldArithmetic:
    """Test suite for sums of pulled-back fields."""

    def test_sum_merges_breakpoints(self, ab, letters):
        """Test the sum of fields splits at both breakpoint sets."""
        A, B = letters
        left = PulledBackField.constant(ab, A, 1.0, (0.0, 0.5, 1.0))
        right = PulledBackField.constant(ab, B, 2.0, (0.0, 0.25, 1.0))
        total = left + right
        assert total.singular_set == (0.0, 0.25, 0.5, 1.0)
        assert total.value_at(0.3).distance(A + B.scale(2.0)) < 1e-15

    def test_difference(self, ab, letters):
        """Test Y - Y has zero value."""
        A, _ = letters
        Y = PulledBackField.constant(ab, A, 1.0)
        assert (Y - Y).value_at(0.5).is_zero()


class TestFactorize:
    """Test suite for the split W = U * Xi."""

    def test_product_reproduces_transport(self, ab, letters):
        """Test U * Xi equals the transport of Y0 + Z."""
        A, B = letters
        Y0 = PulledBackField.constant(ab, B, 1.5)
        Z = PulledBackField.from_functions(ab, [(lambda s: 1.0 / (1.0 + s), A)])
        U, Xi = factorize(Y0, Z, 0.0, 1.0, order=4, steps=512)
        W = propagate(Y0 + Z, 0.0, 1.0, order=4, steps=512)
        assert (U.value * Xi.value).distance(W.value).max() < 1e-9
        assert U.value.distance(exp_lambda(B, 4, 1.5)).max() < 1e-15

    def test_commuting_z_is_untouched(self, ab, letters):
        """Test Xi is the transport of Z when Z commutes with Y0."""
        A, _ = letters
        Y0 = PulledBackField.constant(ab, A, 2.0)
        Z = PulledBackField.from_functions(ab, [(np.cos, A)])
        _, Xi = factorize(Y0, Z, 0.0, 1.0, order=3, steps=256)
        assert Xi.value.distance(propagate(Z, 0.0, 1.0, 3, 256).value).max() < 1e-13

    def test_needs_constant_y0(self, ab, field_):
        """Test a non-constant Y0 is rejected."""
        with pytest.raises(ValueError):
            factorize(field_, field_, 0.0, 1.0, order=2)


class TestLocality:
    """Test suite for the dependence of transports on the field."""

    def test_perturbation_outside_interval(self, ab, letters, field_):
        """Test changing Y on [0.6, 1] leaves W_{0.5,0.1} untouched."""
        A, B = letters
        bump = lambda s: np.where(s > 0.6, 5.0 * (s - 0.6) ** 2, 0.0)
        perturbed = PulledBackField.from_functions(
            ab, [(lambda s: 1.0 / (1.0 + s), A), (np.cos, B), (bump, A)]
        )
        for alpha, beta in ((0.1, 0.5), (0.5, 0.1)):
            before = propagate(field_, alpha, beta, order=4, steps=512).value
            after = propagate(perturbed, alpha, beta, order=4, steps=512).value
            assert after.distance(before).max() <= 1e-12

    def test_perturbation_inside_interval(self, ab, letters, field_):
        """Test the same perturbation does change W_{1,0}."""
        A, B = letters
        bump = lambda s: np.where(s > 0.6, 5.0 * (s - 0.6) ** 2, 0.0)
        perturbed = PulledBackField.from_functions(
            ab, [(lambda s: 1.0 / (1.0 + s), A), (np.cos, B), (bump, A)]
        )
        before = propagate(field_, 0.0, 1.0, order=4, steps=512).value
        after = propagate(perturbed, 0.0, 1.0, order=4, steps=512).value
        assert after.distance(before)[1] > 0.05


@pytest.mark.slow
class TestRandomFields:
    """Test suite for transports of random smooth degree-0 fields at N=5 with 2048 panels."""

    elapsed = []

    @pytest.mark.parametrize('seed', range(RANDOM_FIELDS))
    def test_random_field(self, ab, seed):
        """Test the groupoid law to 1e-9 and reparametrization to 1e-8 in every degree."""
        order, steps = 5, 2048
        started = time.perf_counter()
        Y = _random_field(ab, seed)

        alpha, beta, gamma = np.sort(np.random.default_rng(1000 + seed).uniform(0.0, 1.0, 3))
        first = propagate(Y, alpha, beta, order, steps)
        second = propagate(Y, beta, gamma, order, steps)
        whole = propagate(Y, alpha, gamma, order, steps)
        groupoid = compose_transports(second, first).value.distance(whole.value)

        W = propagate(Y, 0.0, 1.0, order, steps).value
        V = propagate(_random_field(ab, seed, reparametrized=True), 0.0, 1.0, order, steps).value
        reparametrization = W.distance(V)

        self.elapsed.append(time.perf_counter() - started)
        assert len(groupoid) == len(reparametrization) == order + 1
        for degree in range(order + 1):
            assert groupoid[degree] <= 1e-9, f"groupoid, degree {degree}: {groupoid[degree]:.3g}"
            assert reparametrization[degree] <= 1e-8, \
                f"reparametrization, degree {degree}: {reparametrization[degree]:.3g}"
        assert sum(self.elapsed) <= RANDOM_FIELD_BUDGET
