#!/usr/bin/env python3
"""
Continuous piecewise-smooth paths [0, 1] -> C^m.

A path is a list of pieces, each covering a closed parameter subinterval
and carrying a smooth segment with value and derivative samplers on the
local parameter t in [0, 1]. Breakpoints (the singular set) are never
smoothed over: quadrature runs piece by piece.

Usage:
    from kz_associator.geometry.paths import affine_path, compose_paths

    c1 = affine_path([0.1], [0.5])
    c2 = affine_path([0.5], [0.9])
    c = compose_paths(c2, c1)   # first c1, then c2
"""

import logging
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple, Union

import numpy as np

from kz_associator.exceptions import PathError


logger = logging.getLogger(__name__)

Sampler = Callable[[np.ndarray], np.ndarray]

CONTINUITY_TOLERANCE = 1e-12
ENDPOINT_TOLERANCE = 1e-10


def _as_point(point: Union[complex, Sequence[complex]]) -> np.ndarray:
    return np.atleast_1d(np.asarray(point, dtype=np.complex128))


@dataclass(frozen=True)
class SmoothSegment:
    """Smooth curve on the local parameter t in [0, 1]; samplers map (k,) -> (k, m)."""
    value: Sampler
    derivative: Sampler

    def reversed(self) -> 'SmoothSegment':
        value, derivative = self.value, self.derivative
        return SmoothSegment(
            value=lambda t: value(1.0 - t),
            derivative=lambda t: -derivative(1.0 - t),
        )


@dataclass(frozen=True)
class PathPiece:
    """A segment placed on the global parameter interval [start, end]."""
    start: float
    end: float
    segment: SmoothSegment

    @property
    def length(self) -> float:
        return self.end - self.start

    def value(self, s: np.ndarray) -> np.ndarray:
        return self.segment.value((np.asarray(s, dtype=float) - self.start) / self.length)

    def derivative(self, s: np.ndarray) -> np.ndarray:
        t = (np.asarray(s, dtype=float) - self.start) / self.length
        return self.segment.derivative(t) / self.length


class PiecewisePath:
    """
    Continuous piecewise-smooth path with an explicit singular set.

    Pieces are ordered and cover [0, 1] without gaps. Values at interior
    breakpoints must agree from both sides to CONTINUITY_TOLERANCE
    (relative to the size of the point).
    """

    def __init__(self, dimension: int, pieces: Sequence[PathPiece]):
        """
        Initialize the path.

        Args:
            dimension: Ambient complex dimension m
            pieces: Ordered pieces covering [0, 1]

        Raises:
            PathError: If the pieces leave gaps or the path is discontinuous
        """
        if not pieces:
            raise PathError("A path needs at least one piece")
        pieces = tuple(pieces)
        if abs(pieces[0].start) > 1e-15 or abs(pieces[-1].end - 1.0) > 1e-15:
            raise PathError("Pieces must cover [0, 1]")
        for left, right in zip(pieces, pieces[1:]):
            if abs(left.end - right.start) > 1e-15:
                raise PathError(f"Gap between pieces at s={left.end} and s={right.start}")
            if not left.end > left.start:
                raise PathError(f"Empty piece at s={left.start}")
            a = left.value(np.array([left.end]))[0]
            b = right.value(np.array([right.start]))[0]
            scale = max(1.0, float(np.max(np.abs(a))))
            if np.max(np.abs(a - b)) > CONTINUITY_TOLERANCE * scale:
                raise PathError(f"Path is discontinuous at s={left.end}: {a} vs {b}")

        self.dimension = dimension
        self.pieces: Tuple[PathPiece, ...] = pieces

    @property
    def singular_set(self) -> Tuple[float, ...]:
        return tuple([0.0] + [p.end for p in self.pieces])

    def _piece_indices(self, s: np.ndarray) -> np.ndarray:
        ends = np.array([p.end for p in self.pieces[:-1]])
        return np.searchsorted(ends, s, side='right')

    def _sample(self, s, which: str) -> np.ndarray:
        scalar = np.ndim(s) == 0
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty((s.size, self.dimension), dtype=np.complex128)
        indices = self._piece_indices(s)
        for k in np.unique(indices):
            mask = indices == k
            piece = self.pieces[k]
            out[mask] = getattr(piece, which)(s[mask])
        return out[0] if scalar else out

    def __call__(self, s) -> np.ndarray:
        """Point(s) on the path; breakpoints use the piece to their right."""
        return self._sample(s, 'value')

    def derivative(self, s) -> np.ndarray:
        return self._sample(s, 'derivative')

    @property
    def initial_point(self) -> np.ndarray:
        return self.pieces[0].value(np.array([0.0]))[0]

    @property
    def final_point(self) -> np.ndarray:
        return self.pieces[-1].value(np.array([1.0]))[0]

    def sample_points(self, count: int = 64) -> np.ndarray:
        """Values at count equally spaced parameters, endpoints included."""
        return self(np.linspace(0.0, 1.0, count))

    def __repr__(self) -> str:
        return (f"PiecewisePath(dimension={self.dimension}, pieces={len(self.pieces)}, "
                f"from={self.initial_point}, to={self.final_point})")


def path_from_segment(dimension: int, value: Sampler, derivative: Sampler) -> PiecewisePath:
    """Single-piece path from global samplers on [0, 1]."""
    return PiecewisePath(dimension, [PathPiece(0.0, 1.0, SmoothSegment(value, derivative))])


def affine_path(start, end) -> PiecewisePath:
    """Straight segment from start to end."""
    p = _as_point(start)
    q = _as_point(end)
    if p.shape != q.shape:
        raise PathError(f"Endpoint dimensions differ: {p.shape} vs {q.shape}")
    step = q - p
    return path_from_segment(
        p.size,
        lambda t: p[None, :] + np.asarray(t)[:, None] * step[None, :],
        lambda t: np.broadcast_to(step, (np.size(t), p.size)).copy(),
    )


def constant_path(point) -> PiecewisePath:
    p = _as_point(point)
    return path_from_segment(
        p.size,
        lambda t: np.broadcast_to(p, (np.size(t), p.size)).copy(),
        lambda t: np.zeros((np.size(t), p.size), dtype=np.complex128),
    )


def exponential_half_path(start, end, sink) -> PiecewisePath:
    """
    Path sink + (start - sink) * rho^s with rho = |end - sink| / |start - sink|.

    start, end and sink must be collinear with end on the ray from sink
    through start.

    Raises:
        PathError: If the three points are not in that position
    """
    p = _as_point(start)
    q = _as_point(end)
    o = _as_point(sink)
    direction = p - o
    target = q - o
    norm = float(np.linalg.norm(direction))
    if norm == 0.0:
        raise PathError("Half-path start coincides with its sink")
    rho = float(np.linalg.norm(target)) / norm
    if rho == 0.0 or np.linalg.norm(target - rho * direction) > 1e-12 * max(1.0, norm):
        raise PathError(f"End point {q} is not on the ray from {o} through {p}")
    log_rho = np.log(rho)
    return path_from_segment(
        p.size,
        lambda t: o[None, :] + np.exp(log_rho * np.asarray(t))[:, None] * direction[None, :],
        lambda t: log_rho * np.exp(log_rho * np.asarray(t))[:, None] * direction[None, :],
    )


def _check_join(c2: PiecewisePath, c1: PiecewisePath) -> None:
    if c1.dimension != c2.dimension:
        raise PathError(f"Dimension mismatch: {c1.dimension} vs {c2.dimension}")
    gap = float(np.max(np.abs(c1.final_point - c2.initial_point)))
    if gap > ENDPOINT_TOLERANCE * max(1.0, float(np.max(np.abs(c2.initial_point)))):
        raise PathError(f"Cannot compose: c1 ends at {c1.final_point}, c2 starts at {c2.initial_point}")


def compose_paths(c2: PiecewisePath, c1: PiecewisePath) -> PiecewisePath:
    """
    Run c1 on [0, 1/2] and then c2 on [1/2, 1].

    Raises:
        PathError: If c1(1) != c2(0)
    """
    _check_join(c2, c1)
    pieces = [PathPiece(p.start / 2, p.end / 2, p.segment) for p in c1.pieces]
    pieces += [PathPiece(0.5 + p.start / 2, 0.5 + p.end / 2, p.segment) for p in c2.pieces]
    return PiecewisePath(c1.dimension, pieces)


def compose_many(paths: Sequence[PiecewisePath]) -> PiecewisePath:
    """Right-nested composition; paths are listed in traversal order."""
    result = paths[0]
    for path in paths[1:]:
        result = compose_paths(path, result)
    return result


def reverse_path(c: PiecewisePath) -> PiecewisePath:
    """The path s -> c(1 - s)."""
    pieces = [
        PathPiece(1.0 - p.end, 1.0 - p.start, p.segment.reversed())
        for p in reversed(c.pieces)
    ]
    return PiecewisePath(c.dimension, pieces)


def reparametrize(c: PiecewisePath, theta: Callable, dtheta: Callable,
                  theta_inverse: Callable) -> PiecewisePath:
    """
    The path c o theta for an increasing smooth bijection theta of [0, 1].

    Args:
        c: Path to reparametrize
        theta: The bijection (vectorized)
        dtheta: Its derivative (vectorized)
        theta_inverse: Its inverse, used to place the new breakpoints
    """
    pieces = []
    for p in c.pieces:
        a = 0.0 if p.start == 0.0 else float(theta_inverse(p.start))
        b = 1.0 if p.end == 1.0 else float(theta_inverse(p.end))

        def make(piece=p, a=a, b=b):
            def value(t):
                s = theta(a + np.asarray(t) * (b - a))
                return piece.value(s)

            def derivative(t):
                u = a + np.asarray(t) * (b - a)
                return piece.derivative(theta(u)) * (dtheta(u) * (b - a))[:, None]

            return SmoothSegment(value, derivative)

        pieces.append(PathPiece(a, b, make()))
    return PiecewisePath(c.dimension, pieces)


def map_path(c: PiecewisePath, mapping: Callable, jacobian_vector: Callable,
             dimension: int = None) -> PiecewisePath:
    """
    Image path f o c.

    Args:
        c: Path
        mapping: f, vectorized over rows (k, m) -> (k, m')
        jacobian_vector: (x, v) -> Df(x) v, vectorized over rows
        dimension: Target dimension (defaults to c's)
    """
    pieces = []
    for p in c.pieces:
        def make(segment=p.segment):
            return SmoothSegment(
                value=lambda t: mapping(segment.value(t)),
                derivative=lambda t: jacobian_vector(segment.value(t), segment.derivative(t)),
            )
        pieces.append(PathPiece(p.start, p.end, make()))
    return PiecewisePath(dimension or c.dimension, pieces)


def mobius_path(c: PiecewisePath, coefficients: Tuple[complex, complex, complex, complex]) -> PiecewisePath:
    """Image of a one-dimensional path under z -> (a z + b) / (c z + d)."""
    a, b, cc, d = coefficients
    det = a * d - b * cc
    return map_path(
        c,
        lambda x: (a * x + b) / (cc * x + d),
        lambda x, v: det * v / (cc * x + d) ** 2,
    )


def affine_map_path(c: PiecewisePath, matrix, shift) -> PiecewisePath:
    """Image of a path under x -> M x + t."""
    m = np.asarray(matrix, dtype=np.complex128)
    t = np.asarray(shift, dtype=np.complex128)
    return map_path(
        c,
        lambda x: x @ m.T + t[None, :],
        lambda x, v: v @ m.T,
        dimension=m.shape[0],
    )
