#!/usr/bin/env python3
"""
Command-line interface.

Subcommands:
    associator   extrapolated Phi(A, B) with its grid convergence table
    verify       hexagon or pentagon identity, finite-delta or limit mode
    transport    propagator along a named path family
    flatness     curvature of a connection at seeded rational points
    classify     L/B/H growth diagnostics of a regulator-dependent family

Exit codes: 0 pass, 1 fail, 2 non-convergence, 3 precondition or
configuration error.

Usage:
    kz-associator associator --order 4 --grid 2^-4..2^-10
    kz-associator verify pentagon --mode finite --delta 0.125 --order 4
    kz-associator transport --path-spec '{"family": "hexagon", "delta": 0.125, "leg": "loop"}'
"""

import argparse
import json
import logging
import math
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from kz_associator.algebra.basis_cache import BasisCache
from kz_associator.algebra.braid_relations import (
    RelationIdeal,
    build_presentation,
    reduce_mod_ideal,
)
from kz_associator.algebra.free_series import (
    COMPLEX,
    RATIONAL,
    SCALAR_KINDS,
    TruncatedSeries,
    exp_lambda,
)
from kz_associator.associator.drinfeld import (
    LAST,
    RICHARDSON,
    UNIVERSAL,
    phi_sample,
    psi_half,
    universal_associator,
)
from kz_associator.associator.identities import (
    LIMIT,
    LIMIT_GRID,
    MODES,
    hexagon_remainder,
    verify_hexagon,
    verify_pentagon,
)
from kz_associator.associator.lbh import MIN_POINTS, classify_lbh
from kz_associator.config import RunConfig, parse_grid, resolve_cache_dir
from kz_associator.exceptions import ConfigError, KZAssociatorError, PathError, PreconditionError
from kz_associator.geometry.connections import (
    FormalConnection,
    curvature,
    interval_connection,
    kz_connection,
    pentagon_connection,
    pull_back_to_path,
    punctured_plane_connection,
    regulator_margin,
)
from kz_associator.geometry.path_families import path_from_spec
from kz_associator.geometry.transport import propagate
from kz_associator.report import (
    EXIT_FAIL,
    EXIT_NOT_CONVERGED,
    EXIT_PASS,
    EXIT_PRECONDITION,
    RunReport,
    render_summary,
)


logger = logging.getLogger(__name__)

BRAID = 'braid'
FREE = 'free'
COMMUTING = 'commuting'
IMAGE_CHOICES = (BRAID, FREE, COMMUTING)

CONNECTIONS = ('auto', 'interval', 'punctured-plane', 'pentagon', 'kz3', 'kz4')
FAMILIES = ('hexagon-remainder', 'phi', 'psi-half', 'exp-log')

LOOP_TOLERANCE = 1e-6
CLOSED_FORM_TOLERANCE = 1e-8
FLATNESS_TOLERANCE = 1e-10
COMMUTING_TOLERANCE = 1e-6


def _cache(config: RunConfig) -> BasisCache:
    return BasisCache(resolve_cache_dir(str(config.cache_dir) if config.cache_dir else None))


def _quotient(n: int, images: str, cache: Optional[BasisCache], kind: str = COMPLEX):
    """Generators of T_n and the ideal that matches the image choice."""
    presentation = build_presentation(n, cache)
    if images == BRAID:
        ideal = presentation
    elif images == COMMUTING:
        ideal = RelationIdeal.commutative(presentation.alphabet)
    else:
        ideal = RelationIdeal.free(presentation.alphabet)
    return presentation, presentation.generators(kind), ideal


def _two_letters(images: str, cache: Optional[BasisCache], kind: str = COMPLEX):
    """A, B and the ideal for one-dimensional connections."""
    if images == BRAID:
        _, gens, ideal = _quotient(3, BRAID, cache, kind)
        return gens['t12'], gens['t23'], ideal
    a, b = UNIVERSAL.element('A', 1, kind), UNIVERSAL.element('B', 1, kind)
    ideal = RelationIdeal.commutative(UNIVERSAL) if images == COMMUTING else RelationIdeal.free(UNIVERSAL)
    return a, b, ideal


def _failure(command: str, config: RunConfig, error: Exception, exit_code: int) -> RunReport:
    results = {'error': str(error)}
    if isinstance(error, PreconditionError):
        results['relation'] = error.relation
    return RunReport(command, config.to_dict(), results, passed=False, exit_code=exit_code)


def cmd_associator(config: RunConfig, images: str = FREE) -> RunReport:
    """
    Extrapolate Phi(A, B) over the grid.

    With commuting images the residual of Phi - 1 modulo the commutator
    ideal is checked against the tolerance (default 1e-6). An explicit
    --epsilon adds the finite sample Phi_{delta,eps} at (--delta, --epsilon).
    """
    start = time.perf_counter()
    extrapolation = config.extrapolation or LAST
    estimate = universal_associator(config.order, config.effective_grid, config.steps,
                                    extrapolation, config.workers)
    phi = estimate.extrapolated
    results = {
        'series': phi.to_dict(),
        'convergence': estimate.convergence_table(),
        'converged': estimate.converged,
        'extrapolation': extrapolation,
    }
    if config.epsilon is not None:
        A, B = UNIVERSAL.element('A'), UNIVERSAL.element('B')
        sample = phi_sample(A, B, config.delta, config.epsilon, config.order, config.steps)
        results['sample'] = {'delta': config.delta, 'epsilon': config.epsilon, 'series': sample.to_dict()}
    passed = True
    if images == COMMUTING:
        ideal = RelationIdeal.commutative(UNIVERSAL)
        residual = reduce_mod_ideal(phi - TruncatedSeries.one(UNIVERSAL, phi.order), ideal)
        tolerance = config.tolerance or COMMUTING_TOLERANCE
        results['residual_norm'] = residual.residual_norm.as_list()
        results['tolerance'] = tolerance
        passed = residual.residual_norm.max() <= tolerance

    if not estimate.converged:
        exit_code = EXIT_NOT_CONVERGED
    else:
        exit_code = EXIT_PASS if passed else EXIT_FAIL
    return RunReport('associator', config.to_dict(), results,
                     {'total': time.perf_counter() - start}, passed and estimate.converged, exit_code)


def cmd_verify(config: RunConfig, which: str, mode: str, images: str = BRAID) -> RunReport:
    """Run verify_hexagon or verify_pentagon under the config."""
    start = time.perf_counter()
    command = f"verify {which}"
    cache = _cache(config)
    n = 3 if which == 'hexagon' else 4
    presentation, gens, ideal = _quotient(n, images, cache)

    grid = config.grid if config.grid is not None else LIMIT_GRID
    options = dict(
        ideal=ideal,
        mode=mode,
        order=config.order,
        tol=config.tolerance,
        delta=config.delta,
        grid=grid,
        steps=config.steps,
        extrapolation=config.extrapolation or RICHARDSON,
        workers=config.workers,
    )
    try:
        if which == 'hexagon':
            report = verify_hexagon(gens['t12'], gens['t23'], gens['t13'], **options)
        else:
            report = verify_pentagon(gens, **options)
    except PreconditionError as e:
        logger.error(f"Precondition failed: {e}")
        return _failure(command, config, e, EXIT_PRECONDITION)

    results = report.to_dict()
    results['details'].pop('seconds', None)
    if mode == LIMIT:
        results['convergence'] = results['details'].pop('convergence', [])
    if not report.passed:
        exit_code = EXIT_FAIL
    elif report.converged is False:
        exit_code = EXIT_NOT_CONVERGED
    else:
        exit_code = EXIT_PASS
    timings = {'total': time.perf_counter() - start}
    return RunReport(command, config.to_dict(), results, timings, exit_code == EXIT_PASS, exit_code)


def _connection_for(name: str, spec: Mapping, dimension: int, images: str,
                    cache: Optional[BasisCache]) -> Tuple[FormalConnection, RelationIdeal]:
    if name == 'auto':
        family = spec.get('family')
        if family == 'interval':
            name = 'interval'
        elif family == 'pentagon' or dimension == 2:
            name = 'pentagon'
        elif dimension == 1:
            name = 'punctured-plane'
        elif dimension in (3, 4):
            name = f'kz{dimension}'
        else:
            raise PathError(f"No default connection for a path of dimension {dimension}")

    if name in ('interval', 'punctured-plane'):
        A, B, ideal = _two_letters(images, cache)
        build = interval_connection if name == 'interval' else punctured_plane_connection
        return build(A, B), ideal
    if name == 'pentagon':
        _, gens, ideal = _quotient(4, images, cache)
        return pentagon_connection(gens), ideal
    n = int(name[2:])
    _, gens, ideal = _quotient(n, images, cache)
    return kz_connection(n, gens), ideal


def _load_spec(text: str) -> Dict:
    if text.startswith('@'):
        text = Path(text[1:]).read_text(encoding='utf-8')
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise PathError(f"Path spec is not valid JSON: {e}") from e


def cmd_transport(config: RunConfig, path_spec: str, connection: str = 'auto',
                  images: str = BRAID) -> RunReport:
    """
    Propagator along a named path.

    Closed loops also report the residual of W - 1 modulo the ideal. On the
    interval with commuting images the closed form
    exp(lambda (A ln(x1/x0) + B ln((1-x1)/(1-x0)))) is checked as well.
    """
    start = time.perf_counter()
    spec = _load_spec(path_spec)
    if isinstance(spec, dict) and spec.get('family') == 'interval' and config.epsilon is not None:
        spec.setdefault('epsilon', config.epsilon)
    path = path_from_spec(spec)
    gamma, ideal = _connection_for(connection, spec, path.dimension, images, _cache(config))
    regulator = float(spec.get('delta', config.delta)) if isinstance(spec, dict) else config.delta
    field_ = pull_back_to_path(gamma, path, margin=regulator_margin(regulator))
    W = propagate(field_, 0.0, 1.0, config.order, config.steps, estimate_error=True)

    results = {
        'path_spec': spec,
        'connection': gamma.name,
        'series': W.value.to_dict(),
        'group_element': W.value.is_group_element(),
        'estimated_error': W.estimated_error,
        'initial_point': list(W.initial_point),
        'final_point': list(W.final_point),
        'singular_set': list(path.singular_set),
    }
    passed = results['group_element']

    x0, x1 = np.asarray(W.initial_point), np.asarray(W.final_point)
    if float(np.max(np.abs(x1 - x0))) <= 1e-10:
        one = TruncatedSeries.one(gamma.alphabet, config.order)
        form = reduce_mod_ideal(W.value - one, ideal)
        tolerance = config.tolerance or LOOP_TOLERANCE
        results['loop_residual'] = form.residual_norm.as_list()
        results['tolerance'] = tolerance
        passed = passed and form.residual_norm.max() <= tolerance
    elif gamma.name == 'interval' and images == COMMUTING:
        a, b = complex(x0[0]), complex(x1[0])
        A, B = UNIVERSAL.element('A'), UNIVERSAL.element('B')
        exponent = A.scale(math.log(b.real / a.real)) + B.scale(math.log((1 - b.real) / (1 - a.real)))
        closed = exp_lambda(exponent, config.order)
        form = reduce_mod_ideal(W.value - closed, ideal)
        tolerance = config.tolerance or CLOSED_FORM_TOLERANCE
        results['closed_form_residual'] = form.residual_norm.as_list()
        results['tolerance'] = tolerance
        passed = passed and form.residual_norm.max() <= tolerance

    return RunReport('transport', config.to_dict(), results, {'total': time.perf_counter() - start},
                     passed, EXIT_PASS if passed else EXIT_FAIL)


def sample_points(connection: FormalConnection, count: int, seed: int,
                  max_denominator: int = 1000) -> List[Tuple[Fraction, ...]]:
    """Seeded admissible rational points for a connection."""
    rng = np.random.default_rng(seed)
    points: List[Tuple[Fraction, ...]] = []
    attempts = 0
    while len(points) < count:
        attempts += 1
        if attempts > 100 * count:
            raise ConfigError(f"Could not find {count} admissible points for {connection.name}")
        raw = rng.uniform(0.0, 1.0, size=connection.dimension)
        if connection.name == 'pentagon':
            raw = np.sort(raw)
        point = tuple(Fraction(float(v)).limit_denominator(max_denominator) for v in raw)
        if connection.is_admissible(point):
            points.append(point)
    return points


def cmd_flatness(config: RunConfig, connection: str = 'pentagon', images: str = BRAID) -> RunReport:
    """Largest curvature residual modulo the ideal over seeded rational points."""
    start = time.perf_counter()
    dimension = {'interval': 1, 'punctured-plane': 1, 'pentagon': 2, 'kz3': 3, 'kz4': 4}.get(connection)
    if dimension is None:
        raise ConfigError(f"Unknown connection '{connection}'")
    cache = _cache(config)

    if dimension == 1:
        A, B, ideal = _two_letters(images, cache, config.scalar_kind)
        build = interval_connection if connection == 'interval' else punctured_plane_connection
        gamma = build(A, B)
    elif dimension == 2:
        _, gens, ideal = _quotient(4, images, cache, config.scalar_kind)
        gamma = pentagon_connection(gens)
    else:
        _, gens, ideal = _quotient(dimension, images, cache, config.scalar_kind)
        gamma = kz_connection(dimension, gens)

    samples = []
    worst = 0.0
    points = sample_points(gamma, config.samples, config.seed)
    for point in points:
        for i in range(gamma.dimension):
            for j in range(i + 1, gamma.dimension):
                value = curvature(gamma, point, i, j).value
                residual = ideal.reduce_element(value).sup_norm()
                worst = max(worst, residual)
                samples.append({'point': [str(x) for x in point], 'pair': [i, j], 'residual': residual})

    tolerance = config.tolerance or FLATNESS_TOLERANCE
    passed = worst <= tolerance
    results = {
        'connection': gamma.name,
        'images': images,
        'max_residual': worst,
        'tolerance': tolerance,
        'samples': samples,
        'vacuous': gamma.dimension == 1,
    }
    return RunReport('flatness', config.to_dict(), results, {'total': time.perf_counter() - start},
                     passed, EXIT_PASS if passed else EXIT_FAIL)


def cmd_classify(config: RunConfig, family: str = 'hexagon-remainder') -> RunReport:
    """L/B/H diagnostics of a named family over the config grid."""
    start = time.perf_counter()
    grid = config.effective_grid
    if len(grid) < MIN_POINTS:
        raise ConfigError(f"classify needs at least {MIN_POINTS} grid points, got {len(grid)}")
    A, B = UNIVERSAL.element('A'), UNIVERSAL.element('B')
    if family == 'hexagon-remainder':
        F = {d: hexagon_remainder(B, A, d, config.order, config.steps) for d in grid}
    elif family == 'phi':
        estimate = universal_associator(config.order, grid, config.steps, LAST, config.workers)
        F = {d: estimate.samples[(d, d)] for d in grid}
    elif family == 'psi-half':
        F = {d: psi_half(B, A, d, config.order, config.steps).value for d in grid}
    elif family == 'exp-log':
        F = {d: exp_lambda(A, config.order, math.log(d)) for d in grid}
    else:
        raise ConfigError(f"Unknown family '{family}', expected one of {FAMILIES}")

    diagnostics = classify_lbh(F)
    results = {'family': family}
    results.update(diagnostics.to_dict())
    return RunReport('classify', config.to_dict(), results, {'total': time.perf_counter() - start},
                     True, EXIT_PASS)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--order', type=int, default=4, help='Truncation order N (default: 4)')
    common.add_argument('--steps', type=int, default=None,
                        help='Quadrature panels per smooth piece (default: 2048)')
    common.add_argument('--grid', help='Regulator grid, e.g. "2^-4..2^-10" or "0.0625,0.03125"')
    common.add_argument('--delta', type=float, default=0.125,
                        help='Regulator for finite mode; paths keep delta^2/4 from the poles (default: 0.125)')
    common.add_argument('--epsilon', type=float,
                        help='Second regulator for the associator sample and interval paths (default: delta)')
    common.add_argument('--tolerance', type=float, help='Override the pass/fail tolerance')
    common.add_argument('--extrapolation', choices=(LAST, RICHARDSON),
                        help='Limit extrapolation (default: last; richardson for verify)')
    common.add_argument('--workers', type=int, default=1, help='Worker processes for grid samples')
    common.add_argument('--seed', type=int, default=0, help='Seed for sampled points (default: 0)')
    common.add_argument('--samples', type=int, default=10, help='Number of sampled points (default: 10)')
    common.add_argument('--scalar-kind', choices=SCALAR_KINDS,
                        help='Scalar kind of the generators for flatness checks (default: rational)')
    common.add_argument('--images', choices=IMAGE_CHOICES, help='Generator images and quotient')
    common.add_argument('--commuting', action='store_true', help='Shorthand for --images commuting')
    common.add_argument('--cache-dir', help='Ideal basis cache (default: $KZ_ASSOCIATOR_CACHE_DIR '
                                            'or ~/.cache/kz-associator)')
    common.add_argument('--output', help='Write the JSON report to this file')
    common.add_argument('--format', choices=('text', 'json'), default='text', help='Console output format')
    common.add_argument('--verbose', action='store_true', help='Debug logging')

    parser = argparse.ArgumentParser(
        prog='kz-associator',
        description='Drinfel\'d associator from KZ parallel transport, with hexagon and pentagon checks',
    )
    sub = parser.add_subparsers(dest='command', required=True)

    sub.add_parser('associator', parents=[common], help='Extrapolate Phi(A, B)')

    verify = sub.add_parser('verify', parents=[common], help='Check the hexagon or pentagon identity')
    verify.add_argument('identity', choices=('hexagon', 'pentagon'))
    verify.add_argument('--mode', choices=MODES, default='finite', help='finite-delta or limit (default: finite)')

    transport = sub.add_parser('transport', parents=[common], help='Propagator along a named path')
    transport.add_argument('--path-spec', required=True, help='Path spec as JSON, or @file')
    transport.add_argument('--connection', choices=CONNECTIONS, default='auto')

    flatness = sub.add_parser('flatness', parents=[common], help='Curvature at sampled rational points')
    flatness.add_argument('--connection', choices=CONNECTIONS[1:], default='pentagon')

    classify = sub.add_parser('classify', parents=[common], help='L/B/H growth diagnostics')
    classify.add_argument('--family', choices=FAMILIES, default='hexagon-remainder')

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    config = RunConfig(
        order=args.order,
        grid=parse_grid(args.grid) if args.grid else None,
        delta=args.delta,
        epsilon=args.epsilon,
        tolerance=args.tolerance,
        cache_dir=Path(args.cache_dir) if args.cache_dir else None,
        output=Path(args.output) if args.output else None,
        extrapolation=args.extrapolation,
        workers=args.workers,
        seed=args.seed,
        samples=args.samples,
        scalar_kind=args.scalar_kind or (RATIONAL if args.command == 'flatness' else COMPLEX),
    )
    if args.steps is not None:
        config.steps = args.steps
    return config.validate()


def run(args: argparse.Namespace) -> RunReport:
    config = config_from_args(args)
    images = COMMUTING if args.commuting else args.images
    if args.command == 'associator':
        return cmd_associator(config, images or FREE)
    if args.command == 'verify':
        return cmd_verify(config, args.identity, args.mode, images or BRAID)
    if args.command == 'transport':
        return cmd_transport(config, args.path_spec, args.connection, images or BRAID)
    if args.command == 'flatness':
        return cmd_flatness(config, args.connection, images or BRAID)
    return cmd_classify(config, args.family)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s - %(levelname)s - %(message)s',
    )

    try:
        report = run(args)
    except (ConfigError, PathError) as e:
        logger.error(f"Invalid input: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_PRECONDITION
    except KZAssociatorError as e:
        logger.error(f"Run failed: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_PRECONDITION

    if args.output:
        report.write(args.output)
    if args.format == 'json':
        print(report.to_json())
    else:
        print(render_summary(report))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
