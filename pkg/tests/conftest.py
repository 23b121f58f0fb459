"""Shared fixtures for the kz_associator test suite."""

from fractions import Fraction

import pytest

from kz_associator.algebra.basis_cache import BasisCache
from kz_associator.algebra.braid_relations import build_presentation
from kz_associator.algebra.free_series import COMPLEX, RATIONAL, AlgebraElement, Alphabet, TruncatedSeries


@pytest.fixture
def ab():
    """Two-letter alphabet {A, B}."""
    return Alphabet(['A', 'B'])


@pytest.fixture
def letters(ab):
    """The complex generators A and B."""
    return ab.element('A'), ab.element('B')


@pytest.fixture
def cache(tmp_path):
    """Basis cache in a temporary directory."""
    return BasisCache(tmp_path / 'cache')


@pytest.fixture(scope='session')
def t3():
    """T_3 with its infinitesimal braid relations."""
    return build_presentation(3)


@pytest.fixture(scope='session')
def t4():
    """T_4 with its infinitesimal braid relations."""
    return build_presentation(4)


@pytest.fixture
def t3_rational(t3):
    """Exact-rational generators of T_3."""
    return t3.generators(RATIONAL)


@pytest.fixture
def random_element():
    """Factory for sparse random homogeneous elements drawn from a numpy Generator."""
    def build(rng, alphabet, length, terms=3, kind=COMPLEX):
        values = {}
        for _ in range(terms):
            word = tuple(int(i) for i in rng.integers(0, len(alphabet), size=length))
            if kind == RATIONAL:
                values[word] = Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 7)))
            else:
                values[word] = complex(rng.normal(), rng.normal())
        return AlgebraElement(alphabet, values, kind)
    return build


@pytest.fixture
def random_series(random_element):
    """Factory for random series with words of length r at lambda^r."""
    def build(rng, alphabet, order, terms=3, kind=COMPLEX):
        coeffs = [random_element(rng, alphabet, r, terms, kind) for r in range(order + 1)]
        return TruncatedSeries(alphabet, order, coeffs, kind)
    return build
