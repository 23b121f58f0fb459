#!/usr/bin/env python3
"""
Formal connections of logarithmic type and their pullbacks.

Every connection used here is a sum over hyperplanes

    Gamma = sum_H A_H d log(<w_H, x> - b_H)

so the components Gamma_i(x) = sum_H A_H w_{H,i} / l_H(x) and their
partial derivatives -sum_H A_H w_{H,i} w_{H,j} / l_H(x)^2 are explicit
rational functions. Evaluation at a point is plain Python arithmetic, so
Fraction coordinates with rational coefficients give exact results.

Usage:
    from kz_associator.geometry.connections import pentagon_connection, curvature

    gamma = pentagon_connection(presentation.generators(kind="rational"))
    sample = curvature(gamma, (Fraction(1, 4), Fraction(1, 2)), 0, 1)
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from numbers import Number
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from kz_associator.algebra.free_series import COMPLEX, RATIONAL, AlgebraElement, Alphabet
from kz_associator.exceptions import InadmissiblePathError, PathError
from kz_associator.geometry.paths import PiecewisePath
from kz_associator.geometry.transport import FieldPiece, PulledBackField


logger = logging.getLogger(__name__)

Point = Sequence[Number]

# z -> 1 / (1 - z), the order-three element of the S3 action
ZETA = (0, 1, -1, 1)
# z -> 1 - z
IOTA = (-1, 1, 0, 1)
# z -> 1 / z
INVERSION = (0, 1, 1, 0)


@dataclass(frozen=True)
class LogarithmicTerm:
    """coefficient * d log(<weights, x> - offset)."""
    coefficient: AlgebraElement
    weights: Tuple[Number, ...]
    offset: Number

    def linear_form(self, x: Point):
        return sum(w * xi for w, xi in zip(self.weights, x)) - self.offset

    def normalized(self) -> Tuple[Tuple[Number, ...], Number]:
        """Hyperplane data scaled so that the first nonzero weight is 1."""
        lead = next(w for w in self.weights if w != 0)
        return tuple(w / lead for w in self.weights), self.offset / lead


def _key(weights, offset) -> Tuple:
    def r(v):
        v = complex(v)
        return (round(v.real, 12) + 0.0, round(v.imag, 12) + 0.0)
    return tuple(r(w) for w in weights) + (r(offset),)


def singular_distance(points: np.ndarray, hyperplanes: Sequence[Tuple[Sequence, Number]]) -> np.ndarray:
    """Distance of each row of points to the nearest hyperplane <w, x> = b."""
    points = np.atleast_2d(np.asarray(points, dtype=np.complex128))
    best = np.full(points.shape[0], np.inf)
    for weights, offset in hyperplanes:
        w = np.asarray(weights, dtype=np.complex128)
        values = np.abs(points @ w - complex(offset)) / np.linalg.norm(w)
        best = np.minimum(best, values)
    return best


@dataclass(frozen=True)
class CurvatureSample:
    """Flatness defect d_j Gamma_i - d_i Gamma_j + [Gamma_i, Gamma_j] at a point."""
    point: Tuple[Number, ...]
    pair: Tuple[int, int]
    value: AlgebraElement


class FormalConnection:
    """
    Degree-0 formal connection given by logarithmic terms.

    The admissible locus is the complement of the hyperplanes, intersected
    with an optional domain predicate (e.g. the open triangle of the
    pentagon construction).
    """

    def __init__(self, alphabet: Alphabet, dimension: int, terms: Sequence[LogarithmicTerm],
                 domain: Optional[Callable[[Point], bool]] = None, name: str = ''):
        """
        Initialize the connection.

        Args:
            alphabet: Alphabet of the coefficients
            dimension: Ambient dimension m
            terms: Logarithmic terms; weights have length m
            domain: Extra admissibility predicate
            name: Label used in reports
        """
        for term in terms:
            if len(term.weights) != dimension:
                raise ValueError(f"Term weights {term.weights} do not match dimension {dimension}")
            if term.coefficient.alphabet != alphabet:
                raise ValueError(f"Coefficient over {term.coefficient.alphabet!r}, expected {alphabet!r}")
        self.alphabet = alphabet
        self.dimension = dimension
        self.terms: Tuple[LogarithmicTerm, ...] = tuple(t for t in terms if not t.coefficient.is_zero())
        self.domain = domain
        self.name = name

    @property
    def kind(self) -> str:
        """Rational when every coefficient is exact."""
        if self.terms and all(t.coefficient.kind == RATIONAL for t in self.terms):
            return RATIONAL
        return COMPLEX

    @property
    def hyperplanes(self) -> List[Tuple[Tuple[Number, ...], Number]]:
        return [(t.weights, t.offset) for t in self.terms]

    def is_admissible(self, x: Point) -> bool:
        if len(x) != self.dimension:
            return False
        if any(t.linear_form(x) == 0 for t in self.terms):
            return False
        return self.domain is None or bool(self.domain(x))

    def _require(self, x: Point) -> None:
        if not self.is_admissible(x):
            raise InadmissiblePathError(f"Point {tuple(x)} is not admissible for {self.name or 'connection'}")

    def components(self, x: Point) -> List[AlgebraElement]:
        """Gamma_i(x) for i = 0..m-1."""
        self._require(x)
        out = [self.alphabet.zero(self.kind) for _ in range(self.dimension)]
        for term in self.terms:
            ell = term.linear_form(x)
            for i, w in enumerate(term.weights):
                if w != 0:
                    out[i] = out[i] + term.coefficient * (w / ell)
        return out

    def partials(self, x: Point) -> List[List[AlgebraElement]]:
        """partials[i][j] = d Gamma_i / d x_j."""
        self._require(x)
        m = self.dimension
        out = [[self.alphabet.zero(self.kind) for _ in range(m)] for _ in range(m)]
        for term in self.terms:
            ell = term.linear_form(x)
            for i, wi in enumerate(term.weights):
                for j, wj in enumerate(term.weights):
                    if wi != 0 and wj != 0:
                        out[i][j] = out[i][j] - term.coefficient * (wi * wj / (ell * ell))
        return out

    def simplified(self) -> 'FormalConnection':
        """Merge terms on the same hyperplane; drop terms that cancel."""
        merged: Dict[Tuple, LogarithmicTerm] = {}
        for term in self.terms:
            weights, offset = term.normalized()
            key = _key(weights, offset)
            if key in merged:
                old = merged[key]
                merged[key] = LogarithmicTerm(old.coefficient + term.coefficient, old.weights, old.offset)
            else:
                merged[key] = LogarithmicTerm(term.coefficient, weights, offset)
        return FormalConnection(self.alphabet, self.dimension, list(merged.values()), self.domain, self.name)

    def distance(self, other: 'FormalConnection') -> float:
        """Largest coefficient difference between the simplified term lists."""
        mine = {_key(*t.normalized()): t.coefficient for t in self.simplified().terms}
        theirs = {_key(*t.normalized()): t.coefficient for t in other.simplified().terms}
        worst = 0.0
        for key in set(mine) | set(theirs):
            a = mine.get(key, self.alphabet.zero())
            b = theirs.get(key, self.alphabet.zero())
            worst = max(worst, a.distance(b))
        return worst

    def substitute_coefficients(self, images: Mapping[str, AlgebraElement],
                                target: Alphabet) -> 'FormalConnection':
        """Apply an algebra morphism to every coefficient."""
        from kz_associator.algebra.free_series import TruncatedSeries, substitute

        terms = []
        for term in self.terms:
            series = TruncatedSeries.monomial(self.alphabet, 1, term.coefficient, degree=0)
            image = substitute(series, images, target)[0]
            terms.append(LogarithmicTerm(image, term.weights, term.offset))
        return FormalConnection(target, self.dimension, terms, self.domain, self.name)

    def __repr__(self) -> str:
        return f"FormalConnection({self.name!r}, dimension={self.dimension}, terms={len(self.terms)})"


def affine_pull_back(gamma: FormalConnection, matrix, shift) -> FormalConnection:
    """
    Pullback along x -> M x + t (M square).

    l(Mx + t) = <M^T w, x> - (b - <w, t>); terms whose form becomes
    constant drop out.
    """
    m = len(matrix)
    terms = []
    for term in gamma.terms:
        weights = tuple(sum(term.weights[i] * matrix[i][j] for i in range(m)) for j in range(m))
        if all(w == 0 for w in weights):
            continue
        offset = term.offset - sum(w * t for w, t in zip(term.weights, shift))
        terms.append(LogarithmicTerm(term.coefficient, weights, offset))

    domain = None
    if gamma.domain is not None:
        inner = gamma.domain

        def domain(x):
            return inner([sum(matrix[i][j] * x[j] for j in range(m)) + shift[i] for i in range(m)])

    return FormalConnection(gamma.alphabet, m, terms, domain, f"affine*{gamma.name}").simplified()


def mobius_pull_back(gamma: FormalConnection, coefficients: Tuple[Number, Number, Number, Number]) -> FormalConnection:
    """
    Pullback of a one-dimensional connection along z -> (a z + b) / (c z + d).

    d log(w phi(z) - o) = d log((wa - oc) z + (wb - od)) - d log(c z + d).
    """
    if gamma.dimension != 1:
        raise ValueError("Mobius pullback needs a one-dimensional connection")
    a, b, c, d = coefficients
    if a * d - b * c == 0:
        raise ValueError("Degenerate Mobius transformation")
    terms = []
    for term in gamma.terms:
        w, o = term.weights[0], term.offset
        slope, intercept = w * a - o * c, w * b - o * d
        if slope != 0:
            terms.append(LogarithmicTerm(term.coefficient, (slope,), -intercept))
        if c != 0:
            terms.append(LogarithmicTerm(-term.coefficient, (c,), -d))
    return FormalConnection(gamma.alphabet, 1, terms, None, f"mobius*{gamma.name}").simplified()


def interval_connection(A: AlgebraElement, B: AlgebraElement) -> FormalConnection:
    """(A/x + B/(x-1)) dx on ]0, 1[."""
    return FormalConnection(
        A.alphabet, 1,
        [LogarithmicTerm(A, (1,), 0), LogarithmicTerm(B, (1,), 1)],
        domain=lambda x: 0 < complex(x[0]).real < 1 and complex(x[0]).imag == 0,
        name='interval',
    )


def punctured_plane_connection(A: AlgebraElement, B: AlgebraElement) -> FormalConnection:
    """(A/z + B/(z-1)) dz on C minus {0, 1}."""
    return FormalConnection(
        A.alphabet, 1,
        [LogarithmicTerm(A, (1,), 0), LogarithmicTerm(B, (1,), 1)],
        name='punctured-plane',
    )


def _pair_key(key) -> Tuple[int, int]:
    if isinstance(key, str):
        digits = key.lstrip('tA').replace('_', ' ').split()
        if len(digits) == 1 and len(digits[0]) == 2:
            digits = [digits[0][0], digits[0][1]]
        i, j = int(digits[0]), int(digits[1])
    else:
        i, j = key
    if i == j:
        raise ValueError(f"Generator index pair must be distinct: {key}")
    return (min(i, j), max(i, j))


def _canonical_images(images: Mapping) -> Dict[Tuple[int, int], AlgebraElement]:
    out: Dict[Tuple[int, int], AlgebraElement] = {}
    for key, value in images.items():
        pair = _pair_key(key)
        if pair in out and out[pair] != value:
            raise ValueError(f"Conflicting images for t{pair[0]}{pair[1]}")
        out[pair] = value
    return out


def kz_connection(n: int, images: Mapping) -> FormalConnection:
    """
    sum_{i<j} A_ij d log(z_i - z_j) on the configuration space of n points.

    Args:
        n: Number of points, at least 2
        images: A_ij keyed by (i, j) or by name ("t12"); (j, i) means (i, j)
    """
    if n < 2:
        raise ValueError(f"KZ connection needs n >= 2, got {n}")
    pairs = _canonical_images(images)
    alphabet = next(iter(pairs.values())).alphabet
    terms = []
    for (i, j), coefficient in sorted(pairs.items()):
        if not 1 <= i < j <= n:
            raise ValueError(f"Pair ({i}, {j}) out of range for n={n}")
        weights = [0] * n
        weights[i - 1], weights[j - 1] = 1, -1
        terms.append(LogarithmicTerm(coefficient, tuple(weights), 0))
    return FormalConnection(alphabet, n, terms, name=f'kz{n}')


def _in_triangle(x: Point) -> bool:
    x2, x3 = (complex(v) for v in x)
    if x2.imag != 0 or x3.imag != 0:
        return False
    return 0 < x2.real < x3.real < 1


def pentagon_connection(images: Mapping) -> FormalConnection:
    """
    KZ connection for four points pulled back to (0, x2, x3, 1).

    On the triangle 0 < x2 < x3 < 1 this is
    A12 dx2/x2 + A13 dx3/x3 + A23 d(x2-x3)/(x2-x3) + A24 dx2/(x2-1) + A34 dx3/(x3-1).
    """
    pairs = _canonical_images(images)
    missing = [p for p in ((1, 2), (1, 3), (2, 3), (2, 4), (3, 4)) if p not in pairs]
    if missing:
        raise ValueError(f"Missing images for {missing}")
    alphabet = pairs[(1, 2)].alphabet
    terms = [
        LogarithmicTerm(pairs[(1, 2)], (1, 0), 0),
        LogarithmicTerm(pairs[(1, 3)], (0, 1), 0),
        LogarithmicTerm(pairs[(2, 3)], (1, -1), 0),
        LogarithmicTerm(pairs[(2, 4)], (1, 0), 1),
        LogarithmicTerm(pairs[(3, 4)], (0, 1), 1),
    ]
    return FormalConnection(alphabet, 2, terms, domain=_in_triangle, name='pentagon')


def curvature(gamma: FormalConnection, x: Point, i: int, j: int) -> CurvatureSample:
    """
    Flatness defect at an admissible point for the axis pair (i, j).

    Raises:
        InadmissiblePathError: If x is not admissible
    """
    if not (0 <= i < gamma.dimension and 0 <= j < gamma.dimension):
        raise ValueError(f"Axes ({i}, {j}) out of range for dimension {gamma.dimension}")
    point = tuple(x)
    if i == j:
        gamma._require(point)
        return CurvatureSample(point, (i, j), gamma.alphabet.zero(gamma.kind))
    comps = gamma.components(point)
    parts = gamma.partials(point)
    value = parts[i][j] - parts[j][i] + comps[i].commutator(comps[j])
    return CurvatureSample(point, (i, j), value)


def regulator_margin(delta: float) -> float:
    """Smallest admitted distance from the singular locus for paths regulated by delta."""
    return delta * delta / 4.0


def pull_back_to_path(gamma: FormalConnection, c: PiecewisePath, samples: int = 64, *,
                      margin: float) -> PulledBackField:
    """
    Field Gamma^(c)(s) = sum_H A_H <w_H, c'(s)> / l_H(c(s)).

    Args:
        gamma: Connection
        c: Path in the admissible locus
        samples: Number of sample points for the admissibility check
        margin: Required distance from the hyperplanes at the samples, usually
            regulator_margin(delta) for the regulator the path was built with

    Raises:
        InadmissiblePathError: If a sample point is on (or within margin of) the singular locus
    """
    if c.dimension != gamma.dimension:
        raise PathError(f"Path dimension {c.dimension} != connection dimension {gamma.dimension}")

    points = c.sample_points(samples)
    if gamma.terms:
        distance = singular_distance(points, gamma.hyperplanes)
        if np.any(distance < margin) or np.any(distance == 0):
            s_bad = float(np.linspace(0, 1, samples)[int(np.argmin(distance))])
            raise InadmissiblePathError(
                f"Path comes within {float(np.min(distance)):.3g} of the singular locus near s={s_bad}"
            )
    if gamma.domain is not None:
        inside = [gamma.domain(tuple(complex(v) for v in p)) for p in points[1:-1]]
        if not all(inside):
            raise InadmissiblePathError(f"Path leaves the domain of {gamma.name or 'connection'}")

    weights = np.array([[complex(w) for w in t.weights] for t in gamma.terms],
                       dtype=np.complex128).reshape(len(gamma.terms), gamma.dimension)
    offsets = np.array([complex(t.offset) for t in gamma.terms], dtype=np.complex128)

    pieces = []
    for piece in c.pieces:
        def scalars(s, piece=piece):
            values = piece.value(s)
            derivs = piece.derivative(s)
            return ((derivs @ weights.T) / (values @ weights.T - offsets[None, :])).T
        pieces.append(FieldPiece(piece.start, piece.end, scalars))

    return PulledBackField(
        gamma.alphabet,
        tuple(t.coefficient for t in gamma.terms),
        tuple(pieces),
        path=c,
    )
