#!/usr/bin/env python3
"""
Run configuration shared by every command.

Values come from command-line flags; the cache directory may also come
from the KZ_ASSOCIATOR_CACHE_DIR environment variable. Everything is
validated before any computation starts.
"""

import os
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from kz_associator.algebra.basis_cache import CACHE_ENV_VAR, DEFAULT_CACHE_DIR
from kz_associator.algebra.free_series import SCALAR_KINDS, COMPLEX
from kz_associator.associator.drinfeld import DEFAULT_GRID, EXTRAPOLATIONS
from kz_associator.exceptions import ConfigError
from kz_associator.geometry.transport import DEFAULT_STEPS, MIN_STEPS


MAX_ORDER = 12
POWER_RANGE = re.compile(r'^\s*2\^(-?\d+)\s*\.\.\s*2\^(-?\d+)\s*$')


def parse_grid(text: str) -> Tuple[float, ...]:
    """
    Parse a regulator grid.

    Accepts a power range such as "2^-4..2^-10" (both ends included) or a
    comma-separated list of numbers, where "2^-5" style entries are allowed.

    Raises:
        ConfigError: If the text cannot be parsed
    """
    match = POWER_RANGE.match(text)
    if match:
        first, last = int(match.group(1)), int(match.group(2))
        step = -1 if last < first else 1
        return tuple(2.0 ** k for k in range(first, last + step, step))

    values = []
    for item in text.split(','):
        item = item.strip()
        if not item:
            continue
        try:
            if item.startswith('2^'):
                values.append(2.0 ** int(item[2:]))
            else:
                values.append(float(item))
        except ValueError as e:
            raise ConfigError(f"Cannot parse grid entry '{item}'") from e
    if not values:
        raise ConfigError(f"Empty grid: '{text}'")
    return tuple(values)


def resolve_cache_dir(flag: Optional[str] = None) -> Path:
    """Flag, then the environment variable, then ~/.cache/kz-associator."""
    if flag:
        return Path(flag).expanduser()
    env = os.environ.get(CACHE_ENV_VAR)
    if env:
        return Path(env).expanduser()
    return DEFAULT_CACHE_DIR


@dataclass
class RunConfig:
    """Validated parameters of one run."""
    order: int = 4
    steps: int = DEFAULT_STEPS
    grid: Optional[Tuple[float, ...]] = None
    delta: float = 0.125
    epsilon: Optional[float] = None
    tolerance: Optional[float] = None
    cache_dir: Optional[Path] = None
    output: Optional[Path] = None
    scalar_kind: str = COMPLEX
    extrapolation: Optional[str] = None
    workers: int = 1
    seed: int = 0
    samples: int = 10

    @property
    def effective_grid(self) -> Tuple[float, ...]:
        return self.grid if self.grid is not None else DEFAULT_GRID

    @property
    def effective_epsilon(self) -> float:
        return self.delta if self.epsilon is None else self.epsilon

    def validate(self) -> 'RunConfig':
        """
        Raises:
            ConfigError: Listing every invalid field
        """
        errors: List[str] = []
        if not 0 <= self.order <= MAX_ORDER:
            errors.append(f"order must be in 0..{MAX_ORDER}, got {self.order}")
        if self.steps < MIN_STEPS:
            errors.append(f"steps must be >= {MIN_STEPS}, got {self.steps}")
        for name, value in (('delta', self.delta), ('epsilon', self.effective_epsilon)):
            if not 0.0 < value <= 0.25:
                errors.append(f"{name} must be in ]0, 1/4], got {value}")
        if self.grid is not None:
            if not self.grid:
                errors.append("grid is empty")
            elif any(not 0.0 < d <= 0.25 for d in self.grid):
                errors.append(f"grid values must be in ]0, 1/4]: {list(self.grid)}")
            elif any(b >= a for a, b in zip(self.grid, self.grid[1:])):
                errors.append(f"grid must be strictly decreasing: {list(self.grid)}")
        if self.tolerance is not None and not self.tolerance > 0:
            errors.append(f"tolerance must be positive, got {self.tolerance}")
        if self.scalar_kind not in SCALAR_KINDS:
            errors.append(f"scalar kind must be one of {SCALAR_KINDS}, got {self.scalar_kind}")
        if self.extrapolation is not None and self.extrapolation not in EXTRAPOLATIONS:
            errors.append(f"extrapolation must be one of {EXTRAPOLATIONS}, got {self.extrapolation}")
        if self.workers < 1:
            errors.append(f"workers must be >= 1, got {self.workers}")
        if self.samples < 1:
            errors.append(f"samples must be >= 1, got {self.samples}")
        if errors:
            raise ConfigError('; '.join(errors))
        return self

    def to_dict(self) -> Dict:
        """Config echo for reports (paths as strings, cache dir omitted)."""
        data = asdict(self)
        data['grid'] = list(self.effective_grid)
        data['epsilon'] = self.effective_epsilon
        data['output'] = str(self.output) if self.output else None
        data.pop('cache_dir')
        return data
