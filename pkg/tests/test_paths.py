"""
Tests for piecewise-smooth paths.

This module tests the path constructors, composition, reversal,
reparametrization and the image paths under Mobius and affine maps.
"""

import numpy as np
import pytest

from kz_associator.exceptions import PathError
from kz_associator.geometry.paths import (
    PathPiece,
    PiecewisePath,
    SmoothSegment,
    affine_map_path,
    affine_path,
    compose_many,
    compose_paths,
    constant_path,
    exponential_half_path,
    mobius_path,
    reparametrize,
    reverse_path,
)


def _numeric_derivative(path, s, h=1e-6):
    return (path(s + h) - path(s - h)) / (2 * h)


class TestAffinePath:
    """Test suite for straight segments."""

    def test_endpoints(self):
        """Test the segment starts and ends where asked."""
        c = affine_path([0.1], [0.9])
        assert c.initial_point[0] == pytest.approx(0.1)
        assert c.final_point[0] == pytest.approx(0.9)
        assert c.dimension == 1

    def test_derivative_is_constant(self):
        """Test c'(s) = end - start."""
        c = affine_path([0.0, 1.0], [1.0, 3.0])
        np.testing.assert_allclose(c.derivative(np.array([0.0, 0.3, 1.0])), [[1, 2]] * 3)

    def test_dimension_mismatch(self):
        """Test endpoints of different dimension raise PathError."""
        with pytest.raises(PathError):
            affine_path([0.0], [1.0, 2.0])

    def test_constant_path(self):
        """Test the constant path has zero derivative."""
        c = constant_path([0.5j])
        assert c(0.7)[0] == 0.5j
        assert c.derivative(0.7)[0] == 0


class TestComposition:
    """Test suite for composing and reversing paths."""

    def test_first_path_runs_first(self):
        """Test compose_paths(c2, c1) traverses c1 on [0, 1/2]."""
        c1 = affine_path([0.1], [0.5])
        c2 = affine_path([0.5], [0.9])
        c = compose_paths(c2, c1)
        assert c(0.25)[0] == pytest.approx(0.3)
        assert c(0.75)[0] == pytest.approx(0.7)
        assert c.singular_set == (0.0, 0.5, 1.0)

    def test_derivative_rescaled(self):
        """Test each half is traversed at double speed."""
        c = compose_paths(affine_path([0.5], [0.9]), affine_path([0.1], [0.5]))
        assert c.derivative(0.25)[0] == pytest.approx(0.8)

    def test_mismatched_endpoints(self):
        """Test composing paths that do not meet raises PathError."""
        with pytest.raises(PathError):
            compose_paths(affine_path([0.6], [0.9]), affine_path([0.1], [0.5]))

    def test_compose_many_traversal_order(self):
        """Test compose_many lists paths in traversal order."""
        c = compose_many([affine_path([0.0], [1.0]), affine_path([1.0], [2.0]), affine_path([2.0], [3.0])])
        assert c.initial_point[0] == 0
        assert c.final_point[0] == pytest.approx(3.0)
        assert len(c.pieces) == 3

    def test_reverse(self):
        """Test reverse_path(c)(s) = c(1 - s) with negated derivative."""
        c = exponential_half_path([0.5], [0.01], [0.0])
        r = reverse_path(c)
        for s in (0.0, 0.3, 1.0):
            np.testing.assert_allclose(r(s), c(1.0 - s))
            np.testing.assert_allclose(r.derivative(s), -c.derivative(1.0 - s))

    def test_discontinuous_pieces_rejected(self):
        """Test a jump between pieces raises PathError."""
        a = SmoothSegment(lambda t: np.asarray(t)[:, None] * 0.0, lambda t: np.zeros((np.size(t), 1)))
        b = SmoothSegment(lambda t: np.asarray(t)[:, None] * 0.0 + 1.0, lambda t: np.zeros((np.size(t), 1)))
        with pytest.raises(PathError):
            PiecewisePath(1, [PathPiece(0.0, 0.5, a), PathPiece(0.5, 1.0, b)])

    def test_gap_rejected(self):
        """Test pieces that do not cover [0, 1] raise PathError."""
        seg = SmoothSegment(lambda t: np.asarray(t)[:, None] * 0.0, lambda t: np.zeros((np.size(t), 1)))
        with pytest.raises(PathError):
            PiecewisePath(1, [PathPiece(0.0, 0.5, seg)])


class TestExponentialHalfPath:
    """Test suite for geometric approach to a sink."""

    def test_endpoints(self):
        """Test the half-path runs from start to end."""
        c = exponential_half_path([0.5], [1 - 2 ** -12], [1.0])
        assert c.initial_point[0] == pytest.approx(0.5)
        assert c.final_point[0] == pytest.approx(1 - 2 ** -12, abs=1e-15)

    def test_distance_decays_geometrically(self):
        """Test |c(s) - sink| = |start - sink| rho^s."""
        c = exponential_half_path([0.5], [0.5 / 64], [0.0])
        assert abs(c(0.5)[0]) == pytest.approx(0.5 / 8)

    def test_derivative_matches_difference_quotient(self):
        """Test the analytic derivative against a central difference."""
        c = exponential_half_path([0.25, 0.5], [0.0 + 0.01, 0.5], [0.0, 0.5])
        np.testing.assert_allclose(c.derivative(0.4), _numeric_derivative(c, 0.4), rtol=1e-6)

    def test_end_off_the_ray(self):
        """Test an end point off the ray from the sink raises PathError."""
        with pytest.raises(PathError):
            exponential_half_path([0.5], [-0.1], [0.0])


class TestMappedPaths:
    """Test suite for reparametrized and mapped paths."""

    def test_reparametrize(self):
        """Test (c o theta)(s) = c(s^2)."""
        c = compose_paths(affine_path([0.5], [0.9]), affine_path([0.1], [0.5]))
        r = reparametrize(c, lambda s: np.asarray(s) ** 2, lambda s: 2 * np.asarray(s), np.sqrt)
        for s in (0.2, 0.6, 0.9):
            np.testing.assert_allclose(r(s), c(s * s))
        np.testing.assert_allclose(r.derivative(0.6), c.derivative(0.36) * 1.2)
        assert r.singular_set[1] == pytest.approx(np.sqrt(0.5))

    def test_mobius_image(self):
        """Test z -> 1 - z maps [0.2, 0.4] onto [0.8, 0.6]."""
        c = mobius_path(affine_path([0.2], [0.4]), (-1, 1, 0, 1))
        assert c.initial_point[0] == pytest.approx(0.8)
        assert c.final_point[0] == pytest.approx(0.6)
        assert c.derivative(0.5)[0] == pytest.approx(-0.2)

    def test_mobius_derivative(self):
        """Test the chain rule for z -> 1 / z."""
        c = mobius_path(affine_path([0.5], [2.0]), (0, 1, 1, 0))
        np.testing.assert_allclose(c.derivative(0.3), _numeric_derivative(c, 0.3), rtol=1e-6)

    def test_affine_map(self):
        """Test the anti-diagonal reflection (x2, x3) -> (1 - x3, 1 - x2)."""
        c = affine_map_path(affine_path([0.1, 0.2], [0.3, 0.6]), ((0, -1), (-1, 0)), (1, 1))
        np.testing.assert_allclose(c.initial_point, [0.8, 0.9])
        np.testing.assert_allclose(c.derivative(0.5), [-0.4, -0.2])
