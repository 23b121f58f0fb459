"""
Tests for the on-disk ideal basis cache.
"""

import json
from fractions import Fraction

import pytest

from kz_associator.algebra.basis_cache import CACHE_ENV_VAR, BasisCache
from kz_associator.algebra.braid_relations import build_presentation


class TestBasisCache:
    """Test suite for storing and loading bases."""

    def test_miss_on_empty_directory(self, cache):
        """Test loading a missing basis returns None and counts a miss."""
        assert cache.load('dk-n3', 2) is None
        assert cache.misses == 1

    def test_store_and_load(self, cache):
        """Test rational rows come back exactly."""
        rows = [{0: Fraction(1), 5: Fraction(-2, 3)}, {1: Fraction(1)}]
        assert cache.store('demo', 2, 3, (0, 1), rows)
        entry = cache.load('demo', 2)
        assert entry.pivots == (0, 1)
        assert entry.rows == rows
        assert entry.generator_count == 3
        assert cache.hits == 1

    def test_no_temporary_files_left(self, cache):
        """Test the atomic write leaves only the final file."""
        cache.store('demo', 2, 2, (0,), [{0: Fraction(1)}])
        files = [p.name for p in cache.directory.iterdir()]
        assert files == [cache.path_for('demo', 2).name]

    def test_corrupt_file_is_a_miss(self, cache):
        """Test unreadable files are ignored."""
        cache.directory.mkdir(parents=True)
        cache.path_for('demo', 2).write_text('{not json', encoding='utf-8')
        assert cache.load('demo', 2) is None
        assert cache.misses == 1

    def test_foreign_version_is_a_miss(self, cache):
        """Test files written with another format version are ignored."""
        cache.store('demo', 2, 2, (0,), [{0: Fraction(1)}])
        path = cache.path_for('demo', 2)
        payload = json.loads(path.read_text(encoding='utf-8'))
        payload['format_version'] = 99
        path.write_text(json.dumps(payload), encoding='utf-8')
        assert cache.load('demo', 2) is None

    def test_environment_directory(self, tmp_path, monkeypatch):
        """Test the environment variable selects the directory."""
        monkeypatch.setenv(CACHE_ENV_VAR, str(tmp_path / 'env-cache'))
        assert BasisCache.from_environment().directory == tmp_path / 'env-cache'

    def test_explicit_directory_wins(self, tmp_path, monkeypatch):
        """Test an explicit directory overrides the environment."""
        monkeypatch.setenv(CACHE_ENV_VAR, str(tmp_path / 'env-cache'))
        assert BasisCache.from_environment(tmp_path / 'flag').directory == tmp_path / 'flag'


class TestCachedPresentation:
    """Test suite for presentations backed by the cache."""

    @pytest.mark.integration
    def test_second_presentation_reads_cache(self, cache):
        """Test a fresh T_4 reuses bases written by an earlier one."""
        first = build_presentation(4, cache)
        built = first.basis(3)
        assert cache.path_for('dk-n4', 3).exists()

        second = build_presentation(4, cache)
        loaded = second.basis(3)
        assert cache.hits == 1
        assert loaded.pivots == built.pivots
        assert loaded.rows == built.rows
