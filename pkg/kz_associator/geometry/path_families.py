#!/usr/bin/env python3
"""
Named path families for the associator, hexagon and pentagon constructions.

All formulas for the legs live here and nowhere else. Each constructor
checks that every leg keeps a distance of at least delta^2 / 4 from the
relevant singular hyperplanes at 64 sample points.

Usage:
    from kz_associator.geometry.path_families import hexagon_paths, path_from_spec

    hexagon = hexagon_paths(0.125)
    leg = path_from_spec({"family": "pentagon", "delta": 0.125, "leg": "IV-2"})
"""

import logging
from dataclasses import dataclass
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np

from kz_associator.exceptions import InadmissiblePathError, PathError, RegulatorRangeError
from kz_associator.geometry.connections import regulator_margin, singular_distance
from kz_associator.geometry.paths import (
    PiecewisePath,
    affine_map_path,
    affine_path,
    compose_many,
    compose_paths,
    exponential_half_path,
    path_from_segment,
    reverse_path,
)


logger = logging.getLogger(__name__)

AFFINE = 'affine'
EXPONENTIAL = 'exponential'
PARAMETRIZATIONS = (AFFINE, EXPONENTIAL)

MARGIN_SAMPLES = 64

HEXAGON_HYPERPLANES = (((1,), 0), ((1,), 1))
PENTAGON_HYPERPLANES = (
    ((1, 0), 0),
    ((0, 1), 0),
    ((1, -1), 0),
    ((1, 0), 1),
    ((0, 1), 1),
)

# (x2, x3) -> (1 - x3, 1 - x2)
THETA_MATRIX = ((0, -1), (-1, 0))
THETA_SHIFT = (1, 1)

HEXAGON_LEGS = ('I', 'II', 'III', 'IV', 'V', 'VI')
PENTAGON_LEGS = ('I', 'II', 'III', 'IV', 'V')


def check_regulator(value: float, name: str = 'delta') -> float:
    """
    Raises:
        RegulatorRangeError: Unless 0 < value <= 1/4
    """
    value = float(value)
    if not 0.0 < value <= 0.25:
        raise RegulatorRangeError(f"{name}={value} outside ]0, 1/4]")
    return value


def check_margin(path: PiecewisePath, hyperplanes, margin: float, label: str = '') -> float:
    """
    Smallest distance from the hyperplanes over the sample points.

    Raises:
        InadmissiblePathError: If it falls below margin
    """
    distance = float(np.min(singular_distance(path.sample_points(MARGIN_SAMPLES), hyperplanes)))
    if distance < margin:
        raise InadmissiblePathError(
            f"Path {label} comes within {distance:.3g} of the singular locus (margin {margin:.3g})"
        )
    return distance


def _check_parametrization(parametrization: str) -> None:
    if parametrization not in PARAMETRIZATIONS:
        raise PathError(f"Unknown parametrization '{parametrization}', expected one of {PARAMETRIZATIONS}")


def _through_midpoint(midpoint, start, start_sink, end, end_sink) -> PiecewisePath:
    """start -> midpoint -> end, each half exponential towards its sink."""
    first = reverse_path(exponential_half_path(midpoint, start, start_sink))
    second = exponential_half_path(midpoint, end, end_sink)
    return compose_paths(second, first)


def interval_path(delta: float, epsilon: float, parametrization: str = AFFINE) -> PiecewisePath:
    """
    Path from delta to 1 - epsilon on the real interval.

    The affine version is s -> delta + s(1 - delta - epsilon). The
    exponential version passes through 1/2, approaching each end
    geometrically, which keeps the pulled-back field smooth however small
    the regulators are.
    """
    check_regulator(delta, 'delta')
    check_regulator(epsilon, 'epsilon')
    _check_parametrization(parametrization)
    if parametrization == AFFINE:
        return affine_path([delta], [1.0 - epsilon])
    return _through_midpoint([0.5], [delta], [0.0], [1.0 - epsilon], [1.0])


def _hexagon_legs(delta: float) -> Tuple[PiecewisePath, ...]:
    d = delta
    width = 1.0 - 2.0 * d
    radius = 1.0 / d - 0.5
    half = 1.0 - d / 2.0

    def rot(s):
        return np.exp(-1j * np.pi * np.asarray(s, dtype=float))

    def col(values):
        return np.asarray(values, dtype=np.complex128)[:, None]

    def g(s):
        return half * rot(s) + d / 2.0

    def dg(s):
        return -1j * np.pi * half * rot(s)

    def h(s):
        return -half * rot(s) + d / 2.0

    def dh(s):
        return 1j * np.pi * half * rot(s)

    def u(s):
        return d + np.asarray(s, dtype=float) * width

    leg_i = path_from_segment(1, lambda s: col(u(s)), lambda s: col(np.full(np.shape(s), width)))
    leg_ii = path_from_segment(
        1,
        lambda s: col(1.0 - d / g(s)),
        lambda s: col(d * dg(s) / g(s) ** 2),
    )
    leg_iii = path_from_segment(
        1,
        lambda s: col(1.0 / (1.0 - u(s))),
        lambda s: col(width / (1.0 - u(s)) ** 2),
    )
    leg_iv = path_from_segment(
        1,
        lambda s: col(0.5 + radius * rot(s)),
        lambda s: col(-1j * np.pi * radius * rot(s)),
    )
    leg_v = path_from_segment(
        1,
        lambda s: col((u(s) - 1.0) / u(s)),
        lambda s: col(width / u(s) ** 2),
    )
    leg_vi = path_from_segment(
        1,
        lambda s: col(d / h(s)),
        lambda s: col(-d * dh(s) / h(s) ** 2),
    )
    return leg_i, leg_ii, leg_iii, leg_iv, leg_v, leg_vi


@dataclass(frozen=True)
class HexagonPaths:
    """
    The six legs of the hexagon loop and their composite.

    Legs I, III and V run along the real axis; II, IV and VI are lower
    half circles around 1, around {0, 1} and around 0.
    """
    delta: float
    legs: Tuple[PiecewisePath, ...]
    loop: PiecewisePath

    def leg(self, key) -> PiecewisePath:
        """Leg by number (1..6) or roman numeral."""
        if isinstance(key, str) and key in HEXAGON_LEGS:
            return self.legs[HEXAGON_LEGS.index(key)]
        index = int(key)
        if not 1 <= index <= 6:
            raise PathError(f"Hexagon leg must be 1..6, got {key}")
        return self.legs[index - 1]

    @property
    def joining_points(self) -> Tuple[complex, ...]:
        return tuple(complex(leg.initial_point[0]) for leg in self.legs)


def hexagon_paths(delta: float) -> HexagonPaths:
    """
    Build the hexagon legs for a regulator delta.

    Joining points: delta, 1 - delta, 1/(1 - delta), 1/delta, 1 - 1/delta,
    -delta/(1 - delta), and back to delta.

    Raises:
        RegulatorRangeError: Unless 0 < delta <= 1/4
        InadmissiblePathError: If a leg violates the delta^2 / 4 margin
    """
    delta = check_regulator(delta)
    legs = _hexagon_legs(delta)
    margin = regulator_margin(delta)
    for name, leg in zip(HEXAGON_LEGS, legs):
        check_margin(leg, HEXAGON_HYPERPLANES, margin, f"hexagon {name}")
    loop = compose_many(legs)
    logger.debug(f"Built hexagon loop for delta={delta}")
    return HexagonPaths(delta, legs, loop)


def pentagon_zones(delta: float) -> Dict[str, Tuple[float, float]]:
    """The five zone points p1..p5 in (x2, x3) coordinates."""
    d = delta
    dd = d * d
    return {
        'p1': (dd, d),
        'p2': (d - dd, d),
        'p3': (1.0 - d, 1.0 - d + dd),
        'p4': (1.0 - d, 1.0 - dd),
        'p5': (dd, 1.0 - dd),
    }


def pentagon_half_paths(delta: float) -> Dict[str, PiecewisePath]:
    """
    The six exponential half-paths from the leg midpoints.

    "I-1" runs from the midpoint of leg I towards p1, "I-2" towards p2,
    and likewise for legs II and IV. Legs III and V are their reflections.
    """
    d = delta
    dd = d * d
    z = pentagon_zones(delta)
    mid_i = (d / 2.0, d)
    mid_ii = ((1.0 - dd) / 2.0, (1.0 + dd) / 2.0)
    mid_iv = (dd, 0.5)
    return {
        'I-1': exponential_half_path(mid_i, z['p1'], (0.0, d)),
        'I-2': exponential_half_path(mid_i, z['p2'], (d, d)),
        'II-1': exponential_half_path(mid_ii, z['p2'], (-dd / 2.0, dd / 2.0)),
        'II-2': exponential_half_path(mid_ii, z['p3'], (1.0 - dd / 2.0, 1.0 + dd / 2.0)),
        'IV-1': exponential_half_path(mid_iv, z['p1'], (dd, 0.0)),
        'IV-2': exponential_half_path(mid_iv, z['p5'], (dd, 1.0)),
    }


def theta_reflect(c: PiecewisePath) -> PiecewisePath:
    """Theta o c o iota: reflect in the anti-diagonal and run backwards."""
    return reverse_path(affine_map_path(c, THETA_MATRIX, THETA_SHIFT))


@dataclass(frozen=True)
class PentagonPaths:
    """
    Legs of the two pentagon composites.

    right = III * II * I runs p1 -> p2 -> p3 -> p4; left = V * IV runs
    p1 -> p5 -> p4.
    """
    delta: float
    parametrization: str
    zones: Dict[str, Tuple[float, float]]
    legs: Dict[str, PiecewisePath]
    half_paths: Dict[str, PiecewisePath]

    @property
    def right(self) -> PiecewisePath:
        return compose_paths(self.legs['III'], compose_paths(self.legs['II'], self.legs['I']))

    @property
    def left(self) -> PiecewisePath:
        return compose_paths(self.legs['V'], self.legs['IV'])

    def leg(self, key: str) -> PiecewisePath:
        if key in self.legs:
            return self.legs[key]
        if key in self.half_paths:
            return self.half_paths[key]
        if key == 'right':
            return self.right
        if key == 'left':
            return self.left
        raise PathError(f"Unknown pentagon leg '{key}'")


def pentagon_paths(delta: float, parametrization: str = EXPONENTIAL) -> PentagonPaths:
    """
    Build the pentagon legs for a regulator delta.

    Raises:
        RegulatorRangeError: Unless 0 < delta <= 1/4
        InadmissiblePathError: If a leg violates the delta^2 / 4 margin
    """
    delta = check_regulator(delta)
    _check_parametrization(parametrization)
    zones = pentagon_zones(delta)
    halves = pentagon_half_paths(delta)

    if parametrization == AFFINE:
        legs = {
            'I': affine_path(zones['p1'], zones['p2']),
            'II': affine_path(zones['p2'], zones['p3']),
            'IV': affine_path(zones['p1'], zones['p5']),
        }
    else:
        legs = {
            key: compose_paths(halves[f'{key}-2'], reverse_path(halves[f'{key}-1']))
            for key in ('I', 'II', 'IV')
        }
    legs['III'] = theta_reflect(legs['I'])
    legs['V'] = theta_reflect(legs['IV'])
    legs = {key: legs[key] for key in PENTAGON_LEGS}

    margin = regulator_margin(delta)
    for key, leg in list(legs.items()) + list(halves.items()):
        check_margin(leg, PENTAGON_HYPERPLANES, margin, f"pentagon {key}")
    logger.debug(f"Built pentagon legs for delta={delta} ({parametrization})")
    return PentagonPaths(delta, parametrization, zones, legs, halves)


def path_from_spec(spec: Mapping) -> PiecewisePath:
    """
    Resolve a named-path description.

    Examples:
        {"family": "interval", "delta": 0.25, "epsilon": 0.25}
        {"family": "hexagon", "delta": 0.125, "leg": 4}
        {"family": "hexagon", "delta": 0.125, "leg": "loop"}
        {"family": "pentagon", "delta": 0.125, "leg": "IV-2"}
        {"kind": "affine", "start": [0.1], "end": [0.9]}
        {"pieces": [<spec>, <spec>, ...]}   (traversal order)

    Raises:
        PathError: If the description cannot be resolved
    """
    if not isinstance(spec, Mapping):
        raise PathError(f"Path spec must be a mapping, got {type(spec).__name__}")

    if 'pieces' in spec:
        parts = [path_from_spec(part) for part in spec['pieces']]
        if not parts:
            raise PathError("A composite path spec needs at least one piece")
        return compose_many(parts)

    kind = spec.get('kind')
    if kind == 'affine':
        try:
            return affine_path(_complex_list(spec['start']), _complex_list(spec['end']))
        except KeyError as e:
            raise PathError(f"Affine path spec is missing {e}") from e
    if kind == 'sampled':
        raise PathError("Sampled paths are not supported; use a named family or affine pieces")
    if kind is not None:
        raise PathError(f"Unknown path kind '{kind}'")

    family = spec.get('family')
    try:
        if family == 'interval':
            delta = spec['delta']
            epsilon = spec.get('epsilon', delta)
            return interval_path(delta, epsilon, spec.get('parametrization', AFFINE))
        if family == 'hexagon':
            hexagon = hexagon_paths(spec['delta'])
            leg = spec.get('leg', 'loop')
            return hexagon.loop if leg == 'loop' else hexagon.leg(leg)
        if family == 'pentagon':
            pentagon = pentagon_paths(spec['delta'], spec.get('parametrization', EXPONENTIAL))
            return pentagon.leg(str(spec.get('leg', 'right')))
    except KeyError as e:
        raise PathError(f"Path spec for family '{family}' is missing {e}") from e
    raise PathError(f"Unknown path family '{family}'")


def _complex_list(values: Sequence) -> list:
    out = []
    for value in values:
        if isinstance(value, Mapping):
            out.append(complex(value.get('re', 0.0), value.get('im', 0.0)))
        elif isinstance(value, (list, tuple)) and len(value) == 2:
            out.append(complex(value[0], value[1]))
        else:
            out.append(complex(value))
    return out
