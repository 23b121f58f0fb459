"""Truncated series over free algebras and the infinitesimal braid ideal."""

from .basis_cache import BasisCache
from .braid_relations import BraidPresentation, RelationIdeal, build_presentation, reduce_mod_ideal
from .free_series import Alphabet, AlgebraElement, TruncatedSeries

__all__ = [
    'Alphabet',
    'AlgebraElement',
    'TruncatedSeries',
    'BasisCache',
    'BraidPresentation',
    'RelationIdeal',
    'build_presentation',
    'reduce_mod_ideal',
]
