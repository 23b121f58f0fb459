#!/usr/bin/env python3
"""
On-disk cache for exact ideal bases.

Each degree-d basis is stored as one JSON file of rational rows
(numerator/denominator strings), keyed by the ideal key, the degree and
the file format version. Writes go to a temporary file in the same
directory and are renamed into place, so concurrent writers never leave a
half-written file behind.

Usage:
    cache = BasisCache.from_environment()
    cache.store("dk-n4", 3, 6, pivots, rows)
    entry = cache.load("dk-n4", 3)
"""

import json
import logging
import os
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union


logger = logging.getLogger(__name__)

CACHE_ENV_VAR = 'KZ_ASSOCIATOR_CACHE_DIR'
DEFAULT_CACHE_DIR = Path.home() / '.cache' / 'kz-associator'


@dataclass
class CachedBasis:
    """Raw basis data as read back from disk."""
    generator_count: int
    degree: int
    pivots: Tuple[int, ...]
    rows: List[Dict[int, Fraction]]


class BasisCache:
    """Directory of versioned basis files."""

    FORMAT_VERSION = 1

    def __init__(self, directory: Union[str, Path]):
        """
        Initialize the cache.

        Args:
            directory: Cache directory (created on first store)
        """
        self.directory = Path(directory).expanduser()
        self.hits = 0
        self.misses = 0

    @classmethod
    def from_environment(cls, directory: Optional[Union[str, Path]] = None) -> 'BasisCache':
        """Use the explicit directory, else the environment key, else the default."""
        if directory is None:
            directory = os.environ.get(CACHE_ENV_VAR, str(DEFAULT_CACHE_DIR))
        return cls(directory)

    def path_for(self, key: str, degree: int) -> Path:
        return self.directory / f"{key}-d{degree}-v{self.FORMAT_VERSION}.json"

    def load(self, key: str, degree: int) -> Optional[CachedBasis]:
        """
        Read a basis back from disk.

        Returns:
            CachedBasis, or None on a miss or an unreadable file
        """
        path = self.path_for(key, degree)
        if not path.exists():
            self.misses += 1
            return None

        try:
            with open(path, 'r', encoding='utf-8') as f:
                payload = json.load(f)
            if payload.get('format_version') != self.FORMAT_VERSION:
                logger.warning(f"Ignoring cache file with foreign format: {path}")
                self.misses += 1
                return None
            rows = [
                {int(col): Fraction(val) for col, val in zip(row['columns'], row['values'])}
                for row in payload['rows']
            ]
            entry = CachedBasis(
                generator_count=int(payload['generator_count']),
                degree=int(payload['degree']),
                pivots=tuple(int(p) for p in payload['pivots']),
                rows=rows,
            )
        except (OSError, ValueError, KeyError, TypeError) as e:
            logger.warning(f"Could not read cache file {path}: {e}")
            self.misses += 1
            return None

        self.hits += 1
        logger.debug(f"Cache hit: {path}")
        return entry

    def store(self, key: str, degree: int, generator_count: int,
              pivots: Sequence[int], rows: Sequence[Dict[int, Fraction]]) -> bool:
        """
        Write a basis atomically.

        Returns:
            True if the file was written, False on I/O errors (logged)
        """
        payload = {
            'format_version': self.FORMAT_VERSION,
            'key': key,
            'degree': degree,
            'generator_count': generator_count,
            'pivots': list(pivots),
            'rows': [
                {
                    'columns': sorted(row),
                    'values': [str(row[col]) for col in sorted(row)],
                }
                for row in rows
            ],
        }
        path = self.path_for(key, degree)
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
            fd, tmp_name = tempfile.mkstemp(dir=self.directory, prefix=path.stem, suffix='.tmp')
            try:
                with os.fdopen(fd, 'w', encoding='utf-8') as f:
                    json.dump(payload, f)
                os.replace(tmp_name, path)
            except BaseException:
                if os.path.exists(tmp_name):
                    os.unlink(tmp_name)
                raise
        except OSError as e:
            logger.warning(f"Could not write cache file {path}: {e}")
            return False

        logger.debug(f"Cached basis {key} degree {degree} at {path}")
        return True
