#!/usr/bin/env python3
"""
Regularized Drinfel'd associator.

For the connection (A/x + B/(x - 1)) dx on ]0, 1[ the transport W from
delta to 1 - epsilon factorizes as

    W = exp(lambda ln(eps) B) * Phi_{delta,eps}(A, B) * exp(-lambda ln(delta) A)

and Phi_{delta,eps} tends to the associator Phi(A, B) as both regulators
go to zero. Everything is computed once over the two-letter alphabet
{A, B} and then pushed to the requested images with substitute(); the
transport commutes with algebra morphisms, so this is exact.

The power-series variable is lambda = h / (2 pi i); coefficients are
reported as computed, e.g. the lambda^2 coefficient of AB tends to
-pi^2 / 6.

Usage:
    from kz_associator.associator.drinfeld import phi_limit

    estimate = phi_limit(A, B, order=4, grid=[2 ** -k for k in range(4, 11)])
    print(estimate.extrapolated)
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import mpmath
import numpy as np

from kz_associator.algebra.free_series import (
    AlgebraElement,
    Alphabet,
    SeriesNorm,
    TruncatedSeries,
    exp_lambda,
    invert_group,
    mul,
    substitute,
)
from kz_associator.exceptions import RegulatorRangeError
from kz_associator.geometry.connections import interval_connection, pull_back_to_path, regulator_margin
from kz_associator.geometry.path_families import (
    AFFINE,
    EXPONENTIAL,
    PARAMETRIZATIONS,
    check_regulator,
    interval_path,
)
from kz_associator.geometry.paths import exponential_half_path
from kz_associator.geometry.transport import DEFAULT_STEPS, propagate


logger = logging.getLogger(__name__)

UNIVERSAL = Alphabet(('A', 'B'))

LAST = 'last'
RICHARDSON = 'richardson'
EXTRAPOLATIONS = (LAST, RICHARDSON)

DEFAULT_GRID = tuple(2.0 ** -k for k in range(4, 11))


@dataclass(frozen=True)
class HalfPathFactor:
    """psi_eps(B, A) at parameter s along the half-path from 1/2 towards 1 - eps."""
    epsilon: float
    value: TruncatedSeries
    s: float = 1.0


@dataclass
class AssociatorEstimate:
    """
    Samples of Phi_{delta,delta} over a grid and the extrapolated limit.

    convergence[k] is the per-degree sup norm of samples[k+1] - samples[k]
    in grid order.
    """
    order: int
    grid: Tuple[float, ...]
    samples: Dict[Tuple[float, float], TruncatedSeries]
    extrapolated: TruncatedSeries
    convergence: List[SeriesNorm]
    converged: bool
    extrapolation: str = LAST

    def convergence_table(self) -> List[Dict]:
        """One row per grid step, ready for a report."""
        return [
            {'delta': self.grid[k + 1], 'difference': norm.as_list(), 'max': norm.max()}
            for k, norm in enumerate(self.convergence)
        ]


def _universal_letters() -> Tuple[AlgebraElement, AlgebraElement]:
    return UNIVERSAL.element('A'), UNIVERSAL.element('B')


def push_forward(series: TruncatedSeries, A: AlgebraElement, B: AlgebraElement) -> TruncatedSeries:
    if A.alphabet != B.alphabet:
        raise ValueError(f"A and B live over different alphabets: {A.alphabet!r} vs {B.alphabet!r}")
    return substitute(series, {'A': A, 'B': B}, A.alphabet)


@lru_cache(maxsize=256)
def _universal_psi(epsilon: float, order: int, steps: int, s: float) -> TruncatedSeries:
    a, b = _universal_letters()
    path = exponential_half_path([0.5], [1.0 - epsilon], [1.0])
    field_ = pull_back_to_path(interval_connection(a, b), path, margin=regulator_margin(epsilon))
    transport = propagate(field_, 0.0, s, order, steps).value
    return mul(exp_lambda(b, order, -s * math.log(epsilon)), transport)


def psi_half(B: AlgebraElement, A: AlgebraElement, epsilon: float, order: int,
             steps: int = DEFAULT_STEPS, s: float = 1.0) -> HalfPathFactor:
    """
    Half-path factor psi_eps(B, A) = exp(-lambda s ln(eps) B) * W_{s,0}.

    W is the transport of (A/x + B/(x - 1)) dx along x = 1 - rho^s / 2
    with rho = 2 eps, which runs from 1/2 to 1 - eps. The B-part of the
    pulled-back field is the constant ln(2 eps).

    Raises:
        RegulatorRangeError: Unless 0 < epsilon <= 1/4
    """
    epsilon = check_regulator(epsilon, 'epsilon')
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s} outside [0, 1]")
    universal = _universal_psi(epsilon, order, steps, float(s))
    return HalfPathFactor(epsilon, push_forward(universal, A, B), float(s))


@lru_cache(maxsize=256)
def _universal_phi(delta: float, epsilon: float, order: int, steps: int,
                   parametrization: str) -> TruncatedSeries:
    a, b = _universal_letters()
    if parametrization == EXPONENTIAL:
        # Phi_{delta,eps}(A, B) = psi_eps(B, A) * psi_delta(A, B)^-1
        right = _universal_psi(epsilon, order, steps, 1.0)
        left = substitute(_universal_psi(delta, order, steps, 1.0), {'A': b, 'B': a}, UNIVERSAL)
        return mul(right, invert_group(left))

    path = interval_path(delta, epsilon, AFFINE)
    margin = regulator_margin(min(delta, epsilon))
    field_ = pull_back_to_path(interval_connection(a, b), path, margin=margin)
    transport = propagate(field_, 0.0, 1.0, order, steps).value
    value = mul(exp_lambda(b, order, -math.log(epsilon)), transport)
    return mul(value, exp_lambda(a, order, math.log(delta)))


def phi_sample(A: AlgebraElement, B: AlgebraElement, delta: float, epsilon: float, order: int,
               steps: int = DEFAULT_STEPS, parametrization: str = AFFINE) -> TruncatedSeries:
    """
    Regularized associator Phi_{delta,eps}(A, B).

    Args:
        A, B: Images of the two letters (same alphabet)
        delta, epsilon: Regulators in ]0, 1/4]
        order: Truncation order N
        steps: Panels per smooth piece
        parametrization: 'affine' transports along delta -> 1 - eps directly;
            'exponential' combines the two half-path factors

    Raises:
        RegulatorRangeError: If a regulator is out of range
    """
    delta = check_regulator(delta, 'delta')
    epsilon = check_regulator(epsilon, 'epsilon')
    if parametrization not in PARAMETRIZATIONS:
        raise ValueError(f"Unknown parametrization '{parametrization}'")
    universal = _universal_phi(delta, epsilon, order, steps, parametrization)
    return push_forward(universal, A, B)


def validate_grid(grid: Sequence[float]) -> Tuple[float, ...]:
    """
    Raises:
        RegulatorRangeError: If a value is outside ]0, 1/4]
        ValueError: If the grid is empty or not strictly decreasing
    """
    grid = tuple(float(d) for d in grid)
    if not grid:
        raise ValueError("The regulator grid is empty")
    for d in grid:
        if not 0.0 < d <= 0.25:
            raise RegulatorRangeError(f"Grid value {d} outside ]0, 1/4]")
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise ValueError(f"Grid must be strictly decreasing: {grid}")
    return grid


def _sample_payload(delta: float, order: int, steps: int) -> Dict:
    """Worker entry point; returns the JSON form so results cross process boundaries."""
    return _universal_phi(delta, delta, order, steps, EXPONENTIAL).to_dict()


def _universal_samples(grid: Tuple[float, ...], order: int, steps: int,
                       workers: int) -> List[TruncatedSeries]:
    if workers > 1 and len(grid) > 1:
        logger.info(f"Sampling {len(grid)} regulators on {workers} worker processes")
        with ProcessPoolExecutor(max_workers=workers) as pool:
            payloads = list(pool.map(_sample_payload, grid, [order] * len(grid), [steps] * len(grid)))
        return [TruncatedSeries.from_dict(p) for p in payloads]

    samples = []
    for delta in grid:
        samples.append(_universal_phi(delta, delta, order, steps, EXPONENTIAL))
        logger.debug(f"Sampled Phi at delta={delta:.3g}")
    return samples


def log_richardson(samples: Mapping[float, TruncatedSeries]) -> TruncatedSeries:
    """
    Extrapolate delta -> 0 for sequences with delta * polylog(delta) corrections.

    For each lambda-degree r the coefficients are fitted, word by word, to

        c + delta (c_0 + c_1 ln(delta) + ... + c_m ln(delta)^m),   m = r

    by least squares over the finest m + 4 points; m is lowered when the
    grid is too short. With fewer than three points the finest sample is
    returned.
    """
    deltas = sorted(samples, reverse=True)
    finest = samples[deltas[-1]]
    n = len(deltas)
    if n < 3:
        return finest

    alphabet = finest.alphabet
    order = min(s.order for s in samples.values())
    coeffs = [finest[0]]
    for r in range(1, order + 1):
        m = min(r, n - 3)
        window = deltas[-min(n, m + 4):]
        words = sorted({w for d in window for w in samples[d][r].terms}, key=lambda w: (len(w), w))
        if not words:
            coeffs.append(alphabet.zero())
            continue
        x = np.array(window)
        logs = np.log(x)
        design = np.column_stack([np.ones_like(x)] + [x * logs ** i for i in range(m + 1)])
        scale = np.max(np.abs(design), axis=0)
        values = np.array([[complex(samples[d][r].coefficient(w)) for w in words] for d in window])
        solution, *_ = np.linalg.lstsq(design / scale, values, rcond=None)
        constant = solution[0] / scale[0]
        coeffs.append(AlgebraElement(alphabet, dict(zip(words, constant))))
    return TruncatedSeries(alphabet, order, coeffs)


def universal_associator(order: int, grid: Sequence[float] = DEFAULT_GRID,
                         steps: int = DEFAULT_STEPS, extrapolation: str = LAST,
                         workers: int = 1) -> AssociatorEstimate:
    """phi_limit over the letters A, B themselves."""
    a, b = _universal_letters()
    return phi_limit(a, b, order, grid, steps, extrapolation, workers)


def phi_limit(A: AlgebraElement, B: AlgebraElement, order: int,
              grid: Sequence[float] = DEFAULT_GRID, steps: int = DEFAULT_STEPS,
              extrapolation: str = LAST, workers: int = 1) -> AssociatorEstimate:
    """
    Sample Phi_{delta,delta}(A, B) on a decreasing grid and extrapolate.

    Args:
        A, B: Images of the letters
        order: Truncation order N
        grid: Strictly decreasing regulators in ]0, 1/4]
        steps: Panels per smooth piece
        extrapolation: 'last' (finest sample) or 'richardson' (log-aware fit)
        workers: Worker processes for the grid samples

    Returns:
        AssociatorEstimate; converged is False when the last successive
        difference exceeds the one before it (flagged, not raised)

    Raises:
        RegulatorRangeError: If a grid value is out of range
        ValueError: If the grid is not strictly decreasing
    """
    grid = validate_grid(grid)
    if extrapolation not in EXTRAPOLATIONS:
        raise ValueError(f"Unknown extrapolation '{extrapolation}', expected one of {EXTRAPOLATIONS}")

    universal = _universal_samples(grid, order, steps, workers)
    samples = {(d, d): push_forward(u, A, B) for d, u in zip(grid, universal)}
    ordered = [samples[(d, d)] for d in grid]
    convergence = [later.distance(earlier) for earlier, later in zip(ordered, ordered[1:])]

    converged = True
    if len(convergence) >= 2:
        converged = convergence[-1].max() <= convergence[-2].max()
    if not converged:
        logger.warning(
            f"Associator grid did not settle: last difference {convergence[-1].max():.3g} "
            f"> previous {convergence[-2].max():.3g}"
        )

    if extrapolation == RICHARDSON:
        extrapolated = push_forward(log_richardson(dict(zip(grid, universal))), A, B)
    else:
        extrapolated = ordered[-1]

    return AssociatorEstimate(order, grid, samples, extrapolated, convergence, converged, extrapolation)


def commuting_closed_form(A: AlgebraElement, B: AlgebraElement, delta: float, epsilon: float,
                          order: int) -> TruncatedSeries:
    """Phi_{delta,eps} for commuting A, B: exp(lambda (ln(1 - eps) A - ln(1 - delta) B))."""
    exponent = A.scale(math.log1p(-epsilon)) - B.scale(math.log1p(-delta))
    return exp_lambda(exponent, order)


def zeta2_oracle(delta: float, epsilon: Optional[float] = None) -> Dict[str, float]:
    """
    lambda^2 coefficients of Phi_{delta,eps}(A, B) by direct quadrature.

    The double integrals over delta < v < u < 1 - eps collapse to single
    integrals, evaluated with mpmath; the regularizing exponentials are
    then expanded by hand. Keys are the words 'AA', 'AB', 'BA', 'BB'.
    """
    epsilon = delta if epsilon is None else epsilon
    d, e = mpmath.mpf(delta), mpmath.mpf(epsilon)
    ld, le = mpmath.log(d), mpmath.log(e)
    a = mpmath.log((1 - e) / d)
    b = mpmath.log(e / (1 - d))

    w_ab = mpmath.quad(lambda u: mpmath.log((1 - u) / (1 - d)) / u, [d, mpmath.mpf(1) / 2, 1 - e])
    w_ba = mpmath.quad(lambda u: mpmath.log(u / d) / (u - 1), [d, mpmath.mpf(1) / 2, 1 - e])

    return {
        'AA': float(mpmath.log(1 - e) ** 2 / 2),
        'AB': float(w_ab),
        'BA': float(w_ba - le * a + b * ld - le * ld),
        'BB': float(mpmath.log(1 - d) ** 2 / 2),
    }
