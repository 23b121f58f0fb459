#!/usr/bin/env python3
"""
Formal linear ODE dW/ds = lambda Y(s) W and its propagators.

Y(s) = sum_k f_k(s) A_k is a pulled-back field: scalar samplers on each
smooth piece times degree-0 algebra coefficients. The propagator W_{beta,alpha}
is computed order by order (Picard iteration)

    W_0 = 1,   W_r(s) = int_alpha^s Y(u) W_{r-1}(u) du

with every word's coefficient held as an array over one uniform grid per
piece. The cumulative integrals use a fourth-order Newton-Cotes rule built
from cubic interpolation on four neighbouring nodes.

Usage:
    from kz_associator.geometry.transport import PulledBackField, propagate

    Y = PulledBackField.from_functions(ab, [(lambda s: 1 / (1 + s), ab.element("A"))])
    W = propagate(Y, 0.0, 1.0, order=4, steps=512)
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from kz_associator.algebra.free_series import (
    AlgebraElement,
    Alphabet,
    TruncatedSeries,
    Word,
    exp_lambda,
    invert_group,
    mul,
)
from kz_associator.exceptions import AlphabetMismatchError, InadmissiblePathError, PathError
from kz_associator.geometry.paths import ENDPOINT_TOLERANCE, PiecewisePath


logger = logging.getLogger(__name__)

DEFAULT_STEPS = 2048
MIN_STEPS = 3

ScalarSampler = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FieldPiece:
    """Scalar samplers on one closed piece; scalars(s) has shape (terms, len(s))."""
    start: float
    end: float
    scalars: ScalarSampler


def _stack_scalars(functions: Sequence[Callable]) -> ScalarSampler:
    def scalars(s):
        s = np.asarray(s, dtype=float)
        return np.vstack([np.broadcast_to(np.asarray(f(s), dtype=np.complex128), s.shape)
                          for f in functions]) if functions else np.zeros((0, s.size), dtype=np.complex128)
    return scalars


@dataclass(frozen=True)
class PulledBackField:
    """
    Y(s) = sum_k f_k(s) coefficients[k] with lambda-degree-0 coefficients.

    constants[k] is set when f_k does not depend on s. The optional path is
    the one the field was pulled back along, used to report endpoints.
    """
    alphabet: Alphabet
    coefficients: Tuple[AlgebraElement, ...]
    pieces: Tuple[FieldPiece, ...]
    constants: Tuple[Optional[complex], ...] = ()
    path: Optional[PiecewisePath] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.constants:
            object.__setattr__(self, 'constants', (None,) * len(self.coefficients))
        for c in self.coefficients:
            if c.alphabet != self.alphabet:
                raise AlphabetMismatchError(f"Field coefficient over {c.alphabet!r}")

    @property
    def singular_set(self) -> Tuple[float, ...]:
        return tuple([self.pieces[0].start] + [p.end for p in self.pieces])

    @classmethod
    def from_functions(cls, alphabet: Alphabet,
                       terms: Sequence[Tuple[Callable, AlgebraElement]],
                       breakpoints: Sequence[float] = (0.0, 1.0)) -> 'PulledBackField':
        """Field whose scalar functions are the same formula on every piece."""
        functions = [f for f, _ in terms]
        scalars = _stack_scalars(functions)
        pieces = tuple(FieldPiece(a, b, scalars) for a, b in zip(breakpoints, breakpoints[1:]))
        return cls(alphabet, tuple(c for _, c in terms), pieces)

    @classmethod
    def constant(cls, alphabet: Alphabet, coefficient: AlgebraElement, value: complex,
                 breakpoints: Sequence[float] = (0.0, 1.0)) -> 'PulledBackField':
        value = complex(value)
        field_ = cls.from_functions(alphabet, [(lambda s: np.full(np.shape(s), value), coefficient)],
                                    breakpoints)
        return cls(alphabet, field_.coefficients, field_.pieces, (value,))

    @classmethod
    def zero(cls, alphabet: Alphabet, breakpoints: Sequence[float] = (0.0, 1.0)) -> 'PulledBackField':
        return cls.from_functions(alphabet, [], breakpoints)

    def _piece_at(self, s: float) -> FieldPiece:
        for piece in self.pieces:
            if piece.start <= s <= piece.end:
                return piece
        raise ValueError(f"Parameter {s} outside the field's range")

    def __add__(self, other: 'PulledBackField') -> 'PulledBackField':
        if other.alphabet != self.alphabet:
            raise AlphabetMismatchError("Cannot add fields over different alphabets")
        breaks = sorted(set(self.singular_set) | set(other.singular_set))
        pieces = []
        for a, b in zip(breaks, breaks[1:]):
            mid = 0.5 * (a + b)
            left = self._piece_at(mid).scalars
            right = other._piece_at(mid).scalars

            def scalars(s, left=left, right=right):
                return np.vstack([left(s), right(s)])

            pieces.append(FieldPiece(a, b, scalars))
        return PulledBackField(
            self.alphabet,
            self.coefficients + other.coefficients,
            tuple(pieces),
            self.constants + other.constants,
            self.path or other.path,
        )

    def __neg__(self) -> 'PulledBackField':
        return PulledBackField(
            self.alphabet,
            tuple(-c for c in self.coefficients),
            self.pieces,
            self.constants,
            self.path,
        )

    def __sub__(self, other: 'PulledBackField') -> 'PulledBackField':
        return self + (-other)

    def value_at(self, s: float) -> AlgebraElement:
        """Y(s) as a single algebra element."""
        scalars = self._piece_at(s).scalars(np.array([s]))[:, 0]
        result = self.alphabet.zero()
        for value, coefficient in zip(scalars, self.coefficients):
            result = result + coefficient.scale(complex(value))
        return result

    def point_at(self, s: float) -> Tuple[complex, ...]:
        """Path point at parameter s, or the parameter itself when no path is attached."""
        if self.path is None:
            return (complex(s),)
        return tuple(complex(v) for v in self.path(s))


@dataclass(frozen=True)
class Propagator:
    """Transport W from parameter start to parameter end, with quadrature metadata."""
    value: TruncatedSeries
    start: float
    end: float
    steps: int
    estimated_error: Optional[float] = None
    initial_point: Optional[Tuple[complex, ...]] = None
    final_point: Optional[Tuple[complex, ...]] = None

    @classmethod
    def identity(cls, alphabet: Alphabet, order: int,
                 point: Optional[Tuple[complex, ...]] = None) -> 'Propagator':
        return cls(TruncatedSeries.one(alphabet, order), 0.0, 0.0, 0, 0.0, point, point)

    def inverse(self) -> 'Propagator':
        return Propagator(invert_group(self.value), self.end, self.start, self.steps,
                          self.estimated_error, self.final_point, self.initial_point)


def cumulative_integral(values: np.ndarray, h: float) -> np.ndarray:
    """
    Running integral of samples on a uniform grid, fourth order.

    Interior intervals use the cubic through the two neighbours on each
    side; the first and last intervals use the one-sided cubic.

    Args:
        values: Samples f_0..f_M along the last axis, M >= 3
        h: Grid spacing

    Returns:
        Array of the same shape, zero at the first node
    """
    f = np.asarray(values)
    m = f.shape[-1] - 1
    if m < MIN_STEPS:
        raise ValueError(f"Need at least {MIN_STEPS} panels, got {m}")
    inc = np.empty(f.shape[:-1] + (m,), dtype=np.result_type(f, float))
    inc[..., 0] = 9 * f[..., 0] + 19 * f[..., 1] - 5 * f[..., 2] + f[..., 3]
    inc[..., 1:m - 1] = -f[..., 0:m - 2] + 13 * f[..., 1:m - 1] + 13 * f[..., 2:m] - f[..., 3:m + 1]
    inc[..., m - 1] = f[..., m - 3] - 5 * f[..., m - 2] + 19 * f[..., m - 1] + 9 * f[..., m]
    out = np.zeros(f.shape, dtype=inc.dtype)
    np.cumsum(inc * (h / 24.0), axis=-1, out=out[..., 1:])
    return out


def _picard_segment(coefficients: Sequence[AlgebraElement], degrees: Sequence[int],
                    scalars: np.ndarray, h: float, order: int) -> List[Dict[Word, complex]]:
    """
    Endpoint values of the Picard levels on one piece.

    Args:
        coefficients: Algebra coefficients of the summands
        degrees: lambda-degree of each summand (0 for plain fields)
        scalars: Sampled scalar functions, shape (summands, nodes)
        h: Grid spacing
        order: Truncation order

    Returns:
        levels[r] maps word -> coefficient of lambda^r in W at the piece end
    """
    # Y grouped by (lambda-degree, word)
    field_terms: Dict[Tuple[int, Word], np.ndarray] = {}
    for k, (coefficient, degree) in enumerate(zip(coefficients, degrees)):
        if degree >= order:
            continue
        for word, value in coefficient.terms.items():
            key = (degree, word)
            contribution = scalars[k] * complex(value)
            if key in field_terms:
                field_terms[key] = field_terms[key] + contribution
            else:
                field_terms[key] = contribution

    nodes = scalars.shape[1]
    levels: List[Dict[Word, np.ndarray]] = [{(): np.ones(nodes, dtype=np.complex128)}]
    for r in range(1, order + 1):
        integrand: Dict[Word, np.ndarray] = {}
        for (degree, word), y in field_terms.items():
            source = r - 1 - degree
            if source < 0:
                continue
            for inner, w in levels[source].items():
                key = word + inner
                product = y * w
                if key in integrand:
                    integrand[key] += product
                else:
                    integrand[key] = product
        levels.append({key: cumulative_integral(f, h) for key, f in integrand.items()})

    return [{word: complex(arr[-1]) for word, arr in level.items()} for level in levels]


def _transport(alphabet: Alphabet, coefficients: Sequence[AlgebraElement], degrees: Sequence[int],
               pieces: Sequence[FieldPiece], lo: float, hi: float, order: int,
               steps: int) -> TruncatedSeries:
    value = TruncatedSeries.one(alphabet, order)
    if hi <= lo:
        return value
    for piece in pieces:
        a = max(lo, piece.start)
        b = min(hi, piece.end)
        if b <= a:
            continue
        s = np.linspace(a, b, steps + 1)
        scalars = np.asarray(piece.scalars(s), dtype=np.complex128).reshape(len(coefficients), s.size)
        if not np.all(np.isfinite(scalars)):
            raise InadmissiblePathError(
                f"Non-finite field value on [{a}, {b}]; the path touches a singularity"
            )
        levels = _picard_segment(coefficients, degrees, scalars, (b - a) / steps, order)
        segment = TruncatedSeries(
            alphabet, order, [AlgebraElement(alphabet, level) for level in levels]
        )
        value = mul(segment, value)
        logger.debug(f"Transported piece [{a:.6g}, {b:.6g}] with {steps} panels")
    return value


def _check_range(alpha: float, beta: float, steps: int) -> None:
    for name, value in (('alpha', alpha), ('beta', beta)):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name}={value} outside [0, 1]")
    if steps < MIN_STEPS:
        raise ValueError(f"steps must be >= {MIN_STEPS}, got {steps}")


def _estimate(alphabet, coefficients, degrees, pieces, lo, hi, order, steps, fine) -> Optional[float]:
    if steps % 2 or steps // 2 < MIN_STEPS:
        return None
    coarse = _transport(alphabet, coefficients, degrees, pieces, lo, hi, order, steps // 2)
    return (fine - coarse).sup_norm().max() / 15.0


def propagate(Y: PulledBackField, alpha: float, beta: float, order: int,
              steps: int = DEFAULT_STEPS, estimate_error: bool = False) -> Propagator:
    """
    Propagator W_{beta,alpha} of dW/ds = lambda Y W.

    Args:
        Y: Pulled-back field
        alpha: Initial parameter in [0, 1]
        beta: Final parameter in [0, 1]; beta < alpha gives the inverse transport
        order: Truncation order N
        steps: Panels per smooth piece
        estimate_error: Rerun on the half-resolution grid to estimate the error

    Returns:
        Propagator with value in 1 + lambda(...)

    Raises:
        InadmissiblePathError: If a sampled field value is not finite
    """
    _check_range(alpha, beta, steps)
    lo, hi = min(alpha, beta), max(alpha, beta)
    degrees = [0] * len(Y.coefficients)
    value = _transport(Y.alphabet, Y.coefficients, degrees, Y.pieces, lo, hi, order, steps)
    error = None
    if estimate_error:
        error = _estimate(Y.alphabet, Y.coefficients, degrees, Y.pieces, lo, hi, order, steps, value)
    if beta < alpha:
        value = invert_group(value)
    return Propagator(value, alpha, beta, steps, error, Y.point_at(alpha), Y.point_at(beta))


def compose_transports(w2: Propagator, w1: Propagator) -> Propagator:
    """
    Transport along w1 followed by w2, i.e. the series product w2 * w1.

    Raises:
        PathError: If w1 does not end where w2 starts
    """
    if w1.final_point is not None and w2.initial_point is not None:
        a = np.asarray(w1.final_point, dtype=np.complex128)
        b = np.asarray(w2.initial_point, dtype=np.complex128)
        scale = max(1.0, float(np.max(np.abs(b)))) if b.size else 1.0
        if a.shape != b.shape or float(np.max(np.abs(a - b))) > ENDPOINT_TOLERANCE * scale:
            raise PathError(f"Cannot compose transports: {w1.final_point} != {w2.initial_point}")
    error = None
    if w1.estimated_error is not None and w2.estimated_error is not None:
        error = w1.estimated_error + w2.estimated_error
    return Propagator(
        mul(w2.value, w1.value),
        w1.start,
        w2.end,
        max(w1.steps, w2.steps),
        error,
        w1.initial_point,
        w2.final_point,
    )


def factorize(Y0: PulledBackField, Z: PulledBackField, alpha: float, beta: float,
              order: int, steps: int = DEFAULT_STEPS) -> Tuple[Propagator, Propagator]:
    """
    Split W = U * Xi for Y = Y0 + Z with Y0 = c X constant.

    U = exp(lambda c (s - alpha) X) is exact; Xi solves
    dXi/ds = lambda (U^-1 Z U) Xi, where the conjugated field expands as
    sum_j lambda^j (-c (s - alpha))^j / j! ad_X^j (Z).

    Returns:
        (U, Xi) as propagators from alpha to beta

    Raises:
        ValueError: If Y0 is not a single constant summand or beta < alpha
    """
    if len(Y0.coefficients) != 1 or Y0.constants[0] is None:
        raise ValueError("Y0 must be a single summand with a constant scalar")
    if Y0.alphabet != Z.alphabet:
        raise AlphabetMismatchError("Y0 and Z live over different alphabets")
    if beta < alpha:
        raise ValueError("factorize integrates forward only (alpha <= beta)")
    _check_range(alpha, beta, steps)

    c = Y0.constants[0]
    X = Y0.coefficients[0]
    u_value = exp_lambda(X, order, c * (beta - alpha))
    U = Propagator(u_value, alpha, beta, 0, 0.0, Z.point_at(alpha), Z.point_at(beta))

    coefficients: List[AlgebraElement] = []
    degrees: List[int] = []
    index: List[Tuple[int, int]] = []
    for k, base in enumerate(Z.coefficients):
        nested = base
        for j in range(order):
            if nested.is_zero():
                break
            coefficients.append(nested.scale((-c) ** j / math.factorial(j)))
            degrees.append(j)
            index.append((k, j))
            nested = X.commutator(nested)

    pieces = []
    for piece in Z.pieces:
        def scalars(s, base=piece.scalars):
            raw = base(s)
            offset = np.asarray(s, dtype=float) - alpha
            return np.vstack([raw[k] * offset ** j for k, j in index]) if index else raw[:0]
        pieces.append(FieldPiece(piece.start, piece.end, scalars))

    xi_value = _transport(Z.alphabet, coefficients, degrees, pieces, alpha, beta, order, steps)
    Xi = Propagator(xi_value, alpha, beta, steps, None, Z.point_at(alpha), Z.point_at(beta))
    return U, Xi
