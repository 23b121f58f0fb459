#!/usr/bin/env python3
"""
Hexagon and pentagon verification.

Each verifier runs in one of two modes:

    finite  parallel transport at a fixed regulator, where flatness makes
            the identity exact up to quadrature (loop triviality for the
            hexagon, path independence for the pentagon)
    limit   the identity between extrapolated associators

and returns a VerificationReport with the per-degree residual norms
modulo the relation ideal.

Usage:
    from kz_associator.associator.identities import verify_pentagon

    report = verify_pentagon(mode="finite", delta=0.125, order=4)
    print(report.passed, report.residual_norm)
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from kz_associator.algebra.braid_relations import (
    BraidPresentation,
    RelationIdeal,
    build_presentation,
    reduce_mod_ideal,
)
from kz_associator.algebra.free_series import (
    AlgebraElement,
    TruncatedSeries,
    exp_lambda,
    mul,
    substitute,
)
from kz_associator.associator.drinfeld import (
    RICHARDSON,
    phi_sample,
    push_forward,
    universal_associator,
)
from kz_associator.exceptions import PreconditionError
from kz_associator.geometry.connections import (
    pentagon_connection,
    pull_back_to_path,
    punctured_plane_connection,
    regulator_margin,
)
from kz_associator.geometry.path_families import (
    EXPONENTIAL,
    check_regulator,
    hexagon_paths,
    pentagon_paths,
)
from kz_associator.geometry.transport import (
    DEFAULT_STEPS,
    PulledBackField,
    compose_transports,
    factorize,
    propagate,
)


logger = logging.getLogger(__name__)

FINITE = 'finite'
LIMIT = 'limit'
MODES = (FINITE, LIMIT)

FINITE_TOLERANCE = 1e-6
LIMIT_TOLERANCE = 1e-3
PRECONDITION_TOLERANCE = 1e-12

# Limit-mode checks need the regulator error well below the tolerance.
LIMIT_GRID = tuple(2.0 ** -k for k in range(6, 17))

PENTAGON_PAIRS = ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4))


@dataclass
class VerificationReport:
    """Outcome of one hexagon or pentagon check."""
    identity: str
    mode: str
    order: int
    passed: bool
    tolerance: float
    residual_norm: List[float]
    delta: Optional[float] = None
    grid: Optional[Tuple[float, ...]] = None
    converged: Optional[bool] = None
    details: Dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max(self.residual_norm, default=0.0)

    def to_dict(self) -> Dict:
        return {
            'identity': self.identity,
            'mode': self.mode,
            'order': self.order,
            'passed': self.passed,
            'tolerance': self.tolerance,
            'residual_norm': list(self.residual_norm),
            'max_residual': self.max_residual,
            'delta': self.delta,
            'grid': list(self.grid) if self.grid is not None else None,
            'converged': self.converged,
            'details': self.details,
        }


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"Unknown mode '{mode}', expected one of {MODES}")


def _presentation(ideal: Optional[RelationIdeal], n: int) -> BraidPresentation:
    """The given ideal when it is T_n itself, else a fresh T_n sharing its cache."""
    if isinstance(ideal, BraidPresentation) and ideal.n == n:
        return ideal
    return build_presentation(n, getattr(ideal, 'cache', None))


def _residual(difference: TruncatedSeries, ideal: RelationIdeal) -> List[float]:
    return reduce_mod_ideal(difference, ideal).residual_norm.as_list()


def check_centrality(A: AlgebraElement, B: AlgebraElement, C: AlgebraElement,
                     ideal: RelationIdeal) -> None:
    """
    Raises:
        PreconditionError: If A + B + C fails to commute with A, B or C modulo the ideal
    """
    total = A + B + C
    for label, x in (('A', A), ('B', B), ('C', C)):
        residual = ideal.reduce_element(total.commutator(x))
        if residual.sup_norm() > PRECONDITION_TOLERANCE:
            relation = f"[A+B+C, {label}]"
            raise PreconditionError(
                f"A+B+C is not central: {relation} = {residual!r} modulo the ideal", relation
            )


def hexagon_remainder(B: AlgebraElement, A: AlgebraElement, delta: float, order: int,
                      steps: int = DEFAULT_STEPS) -> TruncatedSeries:
    """
    Remainder H(B, A) = exp(-lambda i pi B) W_II for (A/z + B/(z - 1)) dz.

    W_II is the transport along the half circle around 1. The B-part of
    the pulled-back field is split into the constant i pi plus an O(delta)
    rest, so H comes out of factorize() directly.
    """
    delta = check_regulator(delta)
    leg = hexagon_paths(delta).legs[1]
    Y = pull_back_to_path(punctured_plane_connection(A, B), leg, margin=regulator_margin(delta))
    Y0 = PulledBackField.constant(A.alphabet, B, 1j * math.pi, Y.singular_set)
    Z = Y - Y0
    _, xi = factorize(Y0, Z, 0.0, 1.0, order, steps)
    return xi.value


def assemble_hexagon_identity(A: AlgebraElement, B: AlgebraElement, delta: float, order: int,
                              steps: int = DEFAULT_STEPS) -> TruncatedSeries:
    """
    Product of the six leg transports rebuilt from associators and remainders.

    With C~ = -A - B the legs are

        W_I   = e^{ln(d) B} Phi_d(A, B) e^{-ln(d) A}
        W_II  = e^{i pi B} H(B, A)
        W_III = e^{ln(d) C~} Phi_d(B, C~) e^{-ln(d) B}
        W_IV  = e^{i pi C~} H(C~, B)
        W_V   = e^{ln(d) A} Phi_d(C~, A) e^{-ln(d) C~}
        W_VI  = e^{i pi A} H(A, C~)

    (lambda omitted), and the result W_VI ... W_I equals the loop transport.
    """
    delta = check_regulator(delta)
    C = -(A + B)
    log_d = math.log(delta)

    def e(x, factor):
        return exp_lambda(x, order, factor)

    def interval_leg(x, y):
        phi = phi_sample(x, y, delta, delta, order, steps)
        return mul(mul(e(y, log_d), phi), e(x, -log_d))

    def arc_leg(y, x):
        return mul(e(y, 1j * math.pi), hexagon_remainder(y, x, delta, order, steps))

    legs = [
        interval_leg(A, B),
        arc_leg(B, A),
        interval_leg(B, C),
        arc_leg(C, B),
        interval_leg(C, A),
        arc_leg(A, C),
    ]
    product = legs[0]
    for leg in legs[1:]:
        product = mul(leg, product)
    return product


def verify_hexagon(A: Optional[AlgebraElement] = None, B: Optional[AlgebraElement] = None,
                   C: Optional[AlgebraElement] = None, ideal: Optional[RelationIdeal] = None,
                   mode: str = FINITE, order: int = 4, tol: Optional[float] = None,
                   delta: float = 0.125, grid: Sequence[float] = LIMIT_GRID,
                   steps: int = DEFAULT_STEPS, extrapolation: str = RICHARDSON,
                   workers: int = 1) -> VerificationReport:
    """
    Check the hexagon identity.

    finite: the loop transport around the six legs must equal 1.
    limit:  e^{i pi L} = e^{i pi A} Phi(C, A) e^{i pi C} Phi(B, C) e^{i pi B} Phi(A, B)
            with L = A + B + C (lambda omitted).

    Args:
        A, B, C: Images; default t12, t23, t13 in T_3
        ideal: Relation ideal over the images' alphabet (default T_3)
        mode: 'finite' or 'limit'
        order: Truncation order N
        tol: Residual tolerance (1e-6 finite, 1e-3 limit by default)
        delta: Regulator for finite mode
        grid: Regulator grid for limit mode
        steps: Panels per smooth piece
        extrapolation: Limit-mode extrapolation
        workers: Worker processes for the grid samples

    Raises:
        PreconditionError: If A + B + C is not central modulo the ideal
    """
    _check_mode(mode)
    start = time.perf_counter()
    if A is None or B is None or C is None:
        t3 = _presentation(ideal, 3)
        A, B, C = t3.generator(1, 2), t3.generator(2, 3), t3.generator(1, 3)
        ideal = t3 if ideal is None else ideal
    elif ideal is None:
        ideal = RelationIdeal.free(A.alphabet)
    check_centrality(A, B, C, ideal)

    if mode == FINITE:
        tol = FINITE_TOLERANCE if tol is None else tol
        hexagon = hexagon_paths(delta)
        gamma = punctured_plane_connection(A, B)
        Y = pull_back_to_path(gamma, hexagon.loop, margin=regulator_margin(delta))
        transport = propagate(Y, 0.0, 1.0, order, steps, estimate_error=True)
        one = TruncatedSeries.one(A.alphabet, order)
        residual = _residual(transport.value - one, ideal)
        details = {
            'estimated_quadrature_error': transport.estimated_error,
            'joining_points': [[z.real, z.imag] for z in hexagon.joining_points],
        }
        report = VerificationReport('hexagon', mode, order, max(residual) <= tol, tol, residual,
                                    delta=delta, details=details)
    else:
        tol = LIMIT_TOLERANCE if tol is None else tol
        estimate = universal_associator(order, grid, steps, extrapolation, workers)
        phi = estimate.extrapolated

        def assoc(x, y):
            return push_forward(phi, x, y)

        def e(x):
            return exp_lambda(x, order, 1j * math.pi)

        lhs = e(A + B + C)
        rhs = e(A)
        for factor in (assoc(C, A), e(C), assoc(B, C), e(B), assoc(A, B)):
            rhs = mul(rhs, factor)
        residual = _residual(lhs - rhs, ideal)
        details = {
            'extrapolation': estimate.extrapolation,
            'convergence': estimate.convergence_table(),
        }
        report = VerificationReport('hexagon', mode, order, max(residual) <= tol, tol, residual,
                                    grid=estimate.grid, converged=estimate.converged, details=details)

    report.details['seconds'] = round(time.perf_counter() - start, 3)
    logger.info(f"Hexagon ({mode}) residual {report.max_residual:.3g} "
                f"(tolerance {tol:.0e}): {'pass' if report.passed else 'FAIL'}")
    return report


def _canonical_pentagon_images(images: Mapping, presentation: BraidPresentation) -> Dict[str, AlgebraElement]:
    out = {}
    for key, value in images.items():
        if isinstance(key, str):
            digits = key.lstrip('tA')
            i, j = int(digits[0]), int(digits[1])
        else:
            i, j = key
        out[presentation.generator_name(i, j)] = value
    missing = [presentation.generator_name(i, j) for i, j in PENTAGON_PAIRS
               if presentation.generator_name(i, j) not in out]
    if missing:
        raise ValueError(f"Pentagon images missing for {missing}")
    return out


def check_braid_relations(images: Mapping[str, AlgebraElement], ideal: RelationIdeal,
                          presentation: Optional[BraidPresentation] = None) -> None:
    """
    Raises:
        PreconditionError: If an infinitesimal braid relation fails for the images
    """
    presentation = presentation or build_presentation(4)
    target = next(iter(images.values())).alphabet
    for relation, label in zip(presentation.relations, presentation.labels):
        series = TruncatedSeries.monomial(presentation.alphabet, 0, relation, degree=0)
        image = substitute(series, images, target)[0]
        residual = ideal.reduce_element(image)
        if residual.sup_norm() > PRECONDITION_TOLERANCE:
            raise PreconditionError(f"Images violate {label} modulo the ideal", label)


def verify_pentagon(images: Optional[Mapping] = None, ideal: Optional[RelationIdeal] = None,
                    mode: str = FINITE, order: int = 4, tol: Optional[float] = None,
                    delta: float = 0.125, grid: Sequence[float] = LIMIT_GRID,
                    steps: int = DEFAULT_STEPS, extrapolation: str = RICHARDSON,
                    workers: int = 1, parametrization: str = EXPONENTIAL) -> VerificationReport:
    """
    Check the pentagon identity.

    finite: W_V W_IV = W_III W_II W_I between the zones p1 and p4.
    limit:  Phi(A12, A23+A24) Phi(A13+A23, A34)
              = Phi(A23, A34) Phi(A12+A13, A24+A34) Phi(A12, A23).

    Args:
        images: A_ij keyed by 't12'.. or (i, j); default the generators of T_4
        ideal: Relation ideal over the images' alphabet (default T_4)
        mode, order, tol, delta, grid, steps, extrapolation, workers: as verify_hexagon
        parametrization: Leg parametrization for finite mode

    Raises:
        PreconditionError: If the images violate the infinitesimal braid relations
    """
    _check_mode(mode)
    start = time.perf_counter()
    t4 = _presentation(ideal, 4)
    if images is None:
        images = t4.generators()
        ideal = t4 if ideal is None else ideal
    else:
        images = _canonical_pentagon_images(images, t4)
        if ideal is None:
            ideal = RelationIdeal.free(next(iter(images.values())).alphabet)
    check_braid_relations(images, ideal, t4)

    def a(i, j):
        return images[t4.generator_name(i, j)]

    if mode == FINITE:
        tol = FINITE_TOLERANCE if tol is None else tol
        pentagon = pentagon_paths(delta, parametrization)
        gamma = pentagon_connection({(i, j): a(i, j) for i, j in PENTAGON_PAIRS if (i, j) != (1, 4)})
        margin = regulator_margin(delta)
        transports = {
            key: propagate(pull_back_to_path(gamma, leg, margin=margin), 0.0, 1.0, order, steps)
            for key, leg in pentagon.legs.items()
        }
        right = compose_transports(transports['III'], compose_transports(transports['II'], transports['I']))
        left = compose_transports(transports['V'], transports['IV'])
        residual = _residual(right.value - left.value, ideal)
        details = {
            'parametrization': parametrization,
            'zones': {k: list(v) for k, v in pentagon.zones.items()},
        }
        report = VerificationReport('pentagon', mode, order, max(residual) <= tol, tol, residual,
                                    delta=delta, details=details)
    else:
        tol = LIMIT_TOLERANCE if tol is None else tol
        estimate = universal_associator(order, grid, steps, extrapolation, workers)
        phi = estimate.extrapolated

        def assoc(x, y):
            return push_forward(phi, x, y)

        lhs = mul(assoc(a(1, 2), a(2, 3) + a(2, 4)), assoc(a(1, 3) + a(2, 3), a(3, 4)))
        rhs = mul(mul(assoc(a(2, 3), a(3, 4)), assoc(a(1, 2) + a(1, 3), a(2, 4) + a(3, 4))),
                  assoc(a(1, 2), a(2, 3)))
        residual = _residual(lhs - rhs, ideal)
        details = {
            'extrapolation': estimate.extrapolation,
            'convergence': estimate.convergence_table(),
        }
        report = VerificationReport('pentagon', mode, order, max(residual) <= tol, tol, residual,
                                    grid=estimate.grid, converged=estimate.converged, details=details)

    report.details['seconds'] = round(time.perf_counter() - start, 3)
    logger.info(f"Pentagon ({mode}) residual {report.max_residual:.3g} "
                f"(tolerance {tol:.0e}): {'pass' if report.passed else 'FAIL'}")
    return report
