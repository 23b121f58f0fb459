#!/usr/bin/env python3
"""
Infinitesimal braid relations and equality modulo their two-sided ideal.

The Drinfel'd-Kohno algebra T_n is the free algebra on t_ij (i < j) modulo
the homogeneous relations

    [t_ij + t_ik, t_jk] = 0     for distinct i, j, k
    [t_ij, t_kl] = 0            for disjoint pairs

Because the relations are homogeneous of length 2, the ideal is graded by
word length. Its degree-d component is spanned by w1 * r * w2 and is kept
as an exact reduced row-echelon basis over Q, one per degree, built on
demand and optionally cached on disk.

Usage:
    from kz_associator.algebra.braid_relations import build_presentation, reduce_mod_ideal

    p = build_presentation(4)
    form = reduce_mod_ideal(series, p)
    print(form.residual_norm.as_list())
"""

import heapq
import itertools
import logging
import threading
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from kz_associator.algebra.basis_cache import BasisCache
from kz_associator.algebra.free_series import (
    COMPLEX,
    RATIONAL,
    AlgebraElement,
    Alphabet,
    SeriesNorm,
    TruncatedSeries,
    Word,
    sup_norm,
)
from kz_associator.exceptions import AlphabetMismatchError


logger = logging.getLogger(__name__)

SparseRow = Dict[int, Fraction]


def word_column(word: Word, generator_count: int) -> int:
    """Position of a word among the words of its length, read as a base-g number."""
    column = 0
    for letter in word:
        column = column * generator_count + letter
    return column


def row_reduce(rows: Iterable[SparseRow]) -> Tuple[Tuple[int, ...], List[SparseRow]]:
    """
    Exact sparse reduced row-echelon form.

    Args:
        rows: Sparse rational rows (column -> value)

    Returns:
        (pivot columns in increasing order, rows with a leading 1 at the
        pivot and zeros in every other pivot column)
    """
    pivot_rows: Dict[int, SparseRow] = {}
    seen = set()

    for row in rows:
        row = {c: Fraction(v) for c, v in row.items() if v != 0}
        key = frozenset(row.items())
        if not row or key in seen:
            continue
        seen.add(key)

        heap = [c for c in row if c in pivot_rows]
        heapq.heapify(heap)
        while heap:
            col = heapq.heappop(heap)
            coef = row.get(col)
            if not coef:
                continue
            for other_col, value in pivot_rows[col].items():
                updated = row.get(other_col, 0) - coef * value
                if updated:
                    row[other_col] = updated
                    if other_col != col and other_col in pivot_rows:
                        heapq.heappush(heap, other_col)
                else:
                    row.pop(other_col, None)

        if not row:
            continue
        lead = min(row)
        scale = row[lead]
        pivot_rows[lead] = {c: v / scale for c, v in row.items()}

    # back substitution, largest pivot first
    pivots = sorted(pivot_rows)
    for pivot in reversed(pivots):
        row = pivot_rows[pivot]
        for col in sorted(c for c in row if c != pivot and c in pivot_rows):
            coef = row.get(col)
            if not coef:
                continue
            for other_col, value in pivot_rows[col].items():
                updated = row.get(other_col, 0) - coef * value
                if updated:
                    row[other_col] = updated
                else:
                    row.pop(other_col, None)

    return tuple(pivots), [pivot_rows[p] for p in pivots]


@dataclass
class GradedIdealBasis:
    """
    Reduced row-echelon basis of the degree-d ideal component.

    Columns index the words of length d in lexicographic order of generator
    ids, i.e. a word is read as a base-g number.
    """
    generator_count: int
    degree: int
    pivots: Tuple[int, ...]
    rows: List[SparseRow]
    _pivot_index: Dict[int, int] = field(default_factory=dict, init=False, repr=False)
    _csr: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = field(default=None, init=False, repr=False)
    _span: Optional[np.ndarray] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self._pivot_index = {p: k for k, p in enumerate(self.pivots)}

    @property
    def dimension(self) -> int:
        return self.generator_count ** self.degree

    @property
    def rank(self) -> int:
        return len(self.pivots)

    @property
    def quotient_dimension(self) -> int:
        return self.dimension - self.rank

    def column_of(self, word: Word) -> int:
        return word_column(word, self.generator_count)

    def word_of(self, column: int) -> Word:
        letters = []
        for _ in range(self.degree):
            column, letter = divmod(column, self.generator_count)
            letters.append(letter)
        return tuple(reversed(letters))

    def reduce_exact(self, vector: Mapping[int, Fraction]) -> Dict[int, Fraction]:
        """Eliminate pivot coordinates of an exact sparse vector."""
        residual = dict(vector)
        for col in [c for c in vector if c in self._pivot_index]:
            coef = residual.get(col)
            if not coef:
                continue
            for other_col, value in self.rows[self._pivot_index[col]].items():
                updated = residual.get(other_col, 0) - coef * value
                if updated:
                    residual[other_col] = updated
                else:
                    residual.pop(other_col, None)
        return residual

    def _sparse_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self._csr is None:
            lengths = np.array([len(row) for row in self.rows], dtype=np.int64)
            indices = np.fromiter(
                (c for row in self.rows for c in row), dtype=np.int64, count=int(lengths.sum())
            )
            data = np.fromiter(
                (float(v) for row in self.rows for v in row.values()),
                dtype=np.float64, count=int(lengths.sum()),
            )
            self._csr = (lengths, indices, data)
        return self._csr

    def reduce_numeric(self, vector: np.ndarray) -> np.ndarray:
        """Eliminate pivot coordinates of a dense complex vector."""
        if not self.pivots:
            return vector.copy()
        lengths, indices, data = self._sparse_arrays()
        weights = np.repeat(vector[list(self.pivots)], lengths) * data
        contribution = (
            np.bincount(indices, weights=weights.real, minlength=self.dimension)
            + 1j * np.bincount(indices, weights=weights.imag, minlength=self.dimension)
        )
        return vector - contribution

    def orthogonal_residual(self, vector: np.ndarray) -> np.ndarray:
        """Component of a dense vector orthogonal to the ideal, in word coordinates."""
        if not self.pivots:
            return vector.copy()
        if self._span is None:
            dense = np.zeros((self.dimension, self.rank))
            for k, row in enumerate(self.rows):
                for col, value in row.items():
                    dense[col, k] = float(value)
            self._span, _ = np.linalg.qr(dense)
        q = self._span
        return vector - q @ (q.T @ vector)


class RelationIdeal:
    """
    Two-sided ideal generated by homogeneous length-2 relations.

    Bases are built lazily per degree and are immutable once built.
    """

    def __init__(self, alphabet: Alphabet, relations: Sequence[AlgebraElement],
                 labels: Optional[Sequence[str]] = None,
                 cache: Optional[BasisCache] = None,
                 cache_key: Optional[str] = None):
        """
        Initialize the ideal.

        Args:
            alphabet: Alphabet of the ambient free algebra
            relations: Exact-rational elements, homogeneous of word length 2
            labels: Display label for each relation
            cache: Optional disk cache for bases
            cache_key: Cache file prefix (required for disk caching)

        Raises:
            ValueError: If a relation is not exact or not homogeneous of length 2
        """
        for relation in relations:
            if relation.alphabet != alphabet:
                raise AlphabetMismatchError(f"Relation over {relation.alphabet!r}")
            if relation.kind != RATIONAL:
                raise ValueError("Relations must have exact rational coefficients")
            if any(len(w) != 2 for w in relation.terms):
                raise ValueError(f"Relation is not homogeneous of length 2: {relation!r}")

        self.alphabet = alphabet
        self.relations: Tuple[AlgebraElement, ...] = tuple(relations)
        self.labels: Tuple[str, ...] = tuple(labels) if labels else tuple(
            repr(r) for r in self.relations
        )
        self.cache = cache
        self.cache_key = cache_key
        self._bases: Dict[int, GradedIdealBasis] = {}
        self._locks: Dict[int, threading.Lock] = {}
        self._guard = threading.Lock()

    @classmethod
    def free(cls, alphabet: Alphabet) -> 'RelationIdeal':
        """The zero ideal: no relations at all."""
        return cls(alphabet, [])

    @classmethod
    def commutative(cls, alphabet: Alphabet) -> 'RelationIdeal':
        """The commutator ideal, whose quotient is the polynomial ring."""
        relations, labels = [], []
        for a, b in itertools.combinations(alphabet.names, 2):
            x = alphabet.element(a, kind=RATIONAL)
            y = alphabet.element(b, kind=RATIONAL)
            relations.append(x.commutator(y))
            labels.append(f"[{a}, {b}]")
        return cls(alphabet, relations, labels)

    def _build(self, degree: int) -> GradedIdealBasis:
        g = len(self.alphabet)
        if self.cache is not None and self.cache_key:
            cached = self.cache.load(self.cache_key, degree)
            if cached is not None and cached.generator_count == g:
                return GradedIdealBasis(g, degree, cached.pivots, cached.rows)

        start = time.perf_counter()

        def spanning_rows():
            for relation in self.relations:
                for left_len in range(degree - 1):
                    right_len = degree - 2 - left_len
                    for left in itertools.product(range(g), repeat=left_len):
                        for right in itertools.product(range(g), repeat=right_len):
                            yield {
                                word_column(left + word + right, g): value
                                for word, value in relation.terms.items()
                            }

        pivots, rows = row_reduce(spanning_rows())
        basis = GradedIdealBasis(g, degree, pivots, rows)
        logger.info(
            f"Built ideal basis degree {degree}: rank {basis.rank} of {basis.dimension} "
            f"({time.perf_counter() - start:.2f}s)"
        )

        if self.cache is not None and self.cache_key:
            self.cache.store(self.cache_key, degree, g, pivots, rows)
        return basis

    def basis(self, degree: int) -> GradedIdealBasis:
        """Degree-d basis; empty below degree 2 or without relations."""
        found = self._bases.get(degree)
        if found is not None:
            return found
        if degree < 2 or not self.relations:
            return GradedIdealBasis(len(self.alphabet), degree, (), [])

        with self._guard:
            lock = self._locks.setdefault(degree, threading.Lock())
        with lock:
            found = self._bases.get(degree)
            if found is None:
                found = self._build(degree)
                self._bases[degree] = found
        return found

    def reduce_element(self, element: AlgebraElement) -> AlgebraElement:
        """Residual of an element after removing its ideal component, per word length."""
        if element.alphabet != self.alphabet:
            raise AlphabetMismatchError(
                f"Element over {element.alphabet!r}, ideal over {self.alphabet!r}"
            )
        by_length: Dict[int, Dict[Word, complex]] = {}
        for word, value in element.terms.items():
            by_length.setdefault(len(word), {})[word] = value

        residual: Dict[Word, object] = {}
        for length, part in by_length.items():
            basis = self.basis(length)
            if basis.rank == 0:
                residual.update(part)
                continue
            if element.kind == RATIONAL:
                reduced = basis.reduce_exact({basis.column_of(w): v for w, v in part.items()})
                residual.update({basis.word_of(c): v for c, v in reduced.items()})
            else:
                vector = np.zeros(basis.dimension, dtype=np.complex128)
                for word, value in part.items():
                    vector[basis.column_of(word)] = value
                reduced = basis.reduce_numeric(vector)
                for column in np.flatnonzero(reduced):
                    residual[basis.word_of(int(column))] = complex(reduced[column])
        return AlgebraElement(self.alphabet, residual, element.kind)

    def distance(self, element: AlgebraElement) -> float:
        """
        Euclidean distance from an element to the ideal.

        Word coordinates are orthonormal, so the value does not depend on
        the pivot order and is preserved by relabelling generators.
        """
        if element.alphabet != self.alphabet:
            raise AlphabetMismatchError(
                f"Element over {element.alphabet!r}, ideal over {self.alphabet!r}"
            )
        by_length: Dict[int, Dict[Word, object]] = {}
        for word, value in element.terms.items():
            by_length.setdefault(len(word), {})[word] = value

        total = 0.0
        for length, part in by_length.items():
            basis = self.basis(length)
            vector = np.zeros(basis.dimension, dtype=np.complex128)
            for word, value in part.items():
                vector[basis.column_of(word)] = complex(value)
            orthogonal = basis.orthogonal_residual(vector)
            total += float(np.vdot(orthogonal, orthogonal).real)
        return float(np.sqrt(total))


class BraidPresentation(RelationIdeal):
    """The Drinfel'd-Kohno presentation of T_n with canonical generators t_ij, i < j."""

    def __init__(self, n: int, cache: Optional[BasisCache] = None):
        """
        Initialize the presentation.

        Args:
            n: Strand count, at least 2
            cache: Optional disk cache for ideal bases

        Raises:
            ValueError: If n < 2
        """
        if n < 2:
            raise ValueError(f"Strand count must be >= 2, got {n}")
        self.n = n
        self.pairs: Tuple[Tuple[int, int], ...] = tuple(
            itertools.combinations(range(1, n + 1), 2)
        )
        alphabet = Alphabet(self.generator_name(i, j) for i, j in self.pairs)

        relations, labels = [], []

        def t(i, j):
            return alphabet.element(self.generator_name(i, j), kind=RATIONAL)

        for triple in itertools.combinations(range(1, n + 1), 3):
            for i in triple:
                j, k = (x for x in triple if x != i)
                relations.append((t(i, j) + t(i, k)).commutator(t(j, k)))
                labels.append(
                    f"[{self.generator_name(i, j)}+{self.generator_name(i, k)}, "
                    f"{self.generator_name(j, k)}]"
                )
        for a, b, c, d in itertools.combinations(range(1, n + 1), 4):
            for (i, j), (k, l) in (((a, b), (c, d)), ((a, c), (b, d)), ((a, d), (b, c))):
                relations.append(t(i, j).commutator(t(k, l)))
                labels.append(f"[{self.generator_name(i, j)}, {self.generator_name(k, l)}]")

        super().__init__(alphabet, relations, labels, cache=cache, cache_key=f"dk-n{n}")

    def generator_name(self, i: int, j: int) -> str:
        """Canonical name of t_ij; (i, j) with i > j is read as (j, i)."""
        if i == j:
            raise ValueError(f"t_ij needs distinct indices, got ({i}, {j})")
        i, j = min(i, j), max(i, j)
        if not 1 <= i < j <= self.n:
            raise ValueError(f"Indices ({i}, {j}) out of range for n={self.n}")
        return f"t{i}{j}" if self.n < 10 else f"t{i}_{j}"

    def generator(self, i: int, j: int, kind: str = COMPLEX) -> AlgebraElement:
        return self.alphabet.element(self.generator_name(i, j), kind=kind)

    def generators(self, kind: str = COMPLEX) -> Dict[str, AlgebraElement]:
        return {self.generator_name(i, j): self.generator(i, j, kind) for i, j in self.pairs}

    def permutation_images(self, sigma: Sequence[int], kind: str = COMPLEX) -> Dict[str, AlgebraElement]:
        """
        Images t_ij -> t_sigma(i)sigma(j) for a permutation given as (sigma(1), ..., sigma(n)).

        Raises:
            ValueError: If sigma is not a permutation of 1..n
        """
        if sorted(sigma) != list(range(1, self.n + 1)):
            raise ValueError(f"Not a permutation of 1..{self.n}: {sigma}")
        return {
            self.generator_name(i, j): self.generator(sigma[i - 1], sigma[j - 1], kind)
            for i, j in self.pairs
        }

    def __repr__(self) -> str:
        return f"BraidPresentation(n={self.n}, relations={len(self.relations)})"


@dataclass(frozen=True)
class ReducedForm:
    """What is left of a series after removing its ideal component in each degree."""
    residual: TruncatedSeries
    residual_norm: SeriesNorm


def build_presentation(n: int, cache: Optional[BasisCache] = None) -> BraidPresentation:
    """Construct T_n with its infinitesimal braid relations."""
    return BraidPresentation(n, cache)


def ideal_component(p: RelationIdeal, d: int) -> GradedIdealBasis:
    """Exact reduced row-echelon basis of the degree-d ideal component (empty for d < 2)."""
    return p.basis(d)


def reduce_mod_ideal(x: TruncatedSeries, p: RelationIdeal) -> ReducedForm:
    """
    Project every lambda-degree of x onto the complement of the ideal.

    Raises:
        AlphabetMismatchError: If x is not over the ideal's alphabet
    """
    if x.alphabet != p.alphabet:
        raise AlphabetMismatchError(f"Series over {x.alphabet!r}, ideal over {p.alphabet!r}")
    residual = TruncatedSeries(x.alphabet, x.order, [p.reduce_element(c) for c in x.coeffs], x.kind)
    return ReducedForm(residual=residual, residual_norm=sup_norm(residual))


def ideal_distance(x: TruncatedSeries, p: RelationIdeal) -> SeriesNorm:
    """Per-lambda-degree Euclidean distance of x to the ideal."""
    if x.alphabet != p.alphabet:
        raise AlphabetMismatchError(f"Series over {x.alphabet!r}, ideal over {p.alphabet!r}")
    return SeriesNorm(tuple(p.distance(c) for c in x.coeffs))


def is_zero_mod_ideal(x: TruncatedSeries, p: RelationIdeal,
                      tol: float = 0.0) -> Tuple[bool, ReducedForm]:
    """True iff each residual norm is at most tol * max(1, sup norm of that degree)."""
    form = reduce_mod_ideal(x, p)
    scale = sup_norm(x)
    ok = all(
        form.residual_norm[r] <= tol * max(1.0, scale[r])
        for r in range(x.order + 1)
    )
    return ok, form
