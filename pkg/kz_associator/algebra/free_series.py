#!/usr/bin/env python3
"""
Truncated formal power series in lambda over a free associative algebra.

Coefficients are sparse maps from words (tuples of generator ids) to
scalars. Scalars are complex doubles for everything transport related and
exact rationals (fractions.Fraction) for the relation ideal.

Usage:
    from kz_associator.algebra.free_series import Alphabet, TruncatedSeries

    ab = Alphabet(["A", "B"])
    x = TruncatedSeries.monomial(ab, 3, ab.element("A"))
    g = exp_proper(x)
"""

import logging
import threading
from dataclasses import dataclass
from fractions import Fraction
from numbers import Number
from types import MappingProxyType
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from kz_associator.exceptions import (
    AlphabetMismatchError,
    GroupElementError,
    MissingImageError,
)


logger = logging.getLogger(__name__)

Word = Tuple[int, ...]
Scalar = Union[complex, Fraction]

COMPLEX = 'complex'
RATIONAL = 'rational'
SCALAR_KINDS = (COMPLEX, RATIONAL)

# complex coefficients below this fraction of the element's sup norm are dropped
PRUNE_RELATIVE = 1e-15

# tolerance on the constant term when checking 1 + lambda(...)
GROUP_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Generator:
    """A named generator and its id inside an alphabet."""
    name: str
    index: int


class Alphabet:
    """
    Ordered set of named generators with a word interning table.

    Two alphabets are equal when their generator names agree in order.
    The interning table allows concurrent reads; insertion takes a lock.
    """

    def __init__(self, names: Iterable[str]):
        """
        Initialize the alphabet.

        Args:
            names: Generator names, unique

        Raises:
            ValueError: If a name repeats
        """
        names = tuple(str(name) for name in names)
        if len(set(names)) != len(names):
            raise ValueError(f"Generator names must be unique: {names}")

        self.generators: Tuple[Generator, ...] = tuple(
            Generator(name, index) for index, name in enumerate(names)
        )
        self._index = {name: index for index, name in enumerate(names)}
        self._words: Dict[Word, Word] = {(): ()}
        self._lock = threading.Lock()

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(g.name for g in self.generators)

    def __len__(self) -> int:
        return len(self.generators)

    def __iter__(self) -> Iterator[Generator]:
        return iter(self.generators)

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        return isinstance(other, Alphabet) and self.names == other.names

    def __hash__(self) -> int:
        return hash(self.names)

    def __repr__(self) -> str:
        return f"Alphabet({list(self.names)})"

    def index(self, key: Union[str, int, Generator]) -> int:
        """
        Resolve a generator name, id or Generator to its id.

        Raises:
            KeyError: If the generator is not part of this alphabet
        """
        if isinstance(key, Generator):
            key = key.name
        if isinstance(key, int):
            if 0 <= key < len(self.generators):
                return key
            raise KeyError(f"Generator id {key} out of range for {self!r}")
        try:
            return self._index[key]
        except KeyError:
            raise KeyError(f"Unknown generator {key!r} in {self!r}") from None

    def intern(self, word: Word) -> Word:
        """Return the canonical tuple for a word, inserting it if new."""
        found = self._words.get(word)
        if found is not None:
            return found
        with self._lock:
            return self._words.setdefault(word, word)

    def word(self, letters: Iterable[Union[str, int, Generator]]) -> Word:
        """Build an interned word from names or ids."""
        return self.intern(tuple(self.index(letter) for letter in letters))

    def format_word(self, word: Word) -> List[str]:
        return [self.generators[i].name for i in word]

    def element(self, name: Union[str, int], coefficient: Scalar = 1,
                kind: str = COMPLEX) -> 'AlgebraElement':
        """Return coefficient times the generator as an algebra element."""
        return AlgebraElement(self, {(self.index(name),): coefficient}, kind)

    def unit(self, kind: str = COMPLEX) -> 'AlgebraElement':
        return AlgebraElement(self, {(): 1}, kind)

    def zero(self, kind: str = COMPLEX) -> 'AlgebraElement':
        return AlgebraElement(self, {}, kind)


def _coerce(value, kind: str) -> Scalar:
    if kind == RATIONAL:
        if isinstance(value, complex):
            if value.imag != 0:
                raise TypeError(f"Complex value {value} in an exact-rational element")
            value = value.real
        return Fraction(value)
    return complex(value)


def _normalize(alphabet: Alphabet, terms: Mapping[Word, Scalar], kind: str) -> Dict[Word, Scalar]:
    if kind == RATIONAL:
        out = {}
        for word, value in terms.items():
            value = _coerce(value, kind)
            if value != 0:
                out[alphabet.intern(tuple(word))] = value
        return out

    values = {tuple(word): complex(value) for word, value in terms.items()}
    if not values:
        return {}
    scale = max(abs(v) for v in values.values())
    if scale == 0:
        return {}
    cutoff = PRUNE_RELATIVE * scale
    return {
        alphabet.intern(word): value
        for word, value in values.items()
        if abs(value) >= cutoff
    }


def _join_kinds(a: str, b: str) -> str:
    return RATIONAL if a == RATIONAL and b == RATIONAL else COMPLEX


def _scalar_kind(value) -> str:
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return RATIONAL
    return COMPLEX


class AlgebraElement:
    """
    Element of the free associative unital algebra over an alphabet.

    Immutable. Stored terms never carry a zero coefficient; complex terms
    below PRUNE_RELATIVE times the largest coefficient are dropped too.
    Mixing a rational and a complex operand yields a complex result.
    """

    __slots__ = ('alphabet', 'kind', '_terms')

    def __init__(self, alphabet: Alphabet, terms: Optional[Mapping[Word, Scalar]] = None,
                 kind: str = COMPLEX):
        if kind not in SCALAR_KINDS:
            raise ValueError(f"Unknown scalar kind: {kind}")
        self.alphabet = alphabet
        self.kind = kind
        self._terms = _normalize(alphabet, terms or {}, kind)

    @classmethod
    def from_names(cls, alphabet: Alphabet, terms: Mapping[Tuple[str, ...], Scalar],
                   kind: str = COMPLEX) -> 'AlgebraElement':
        """Build an element from a map of name tuples to coefficients."""
        return cls(alphabet, {alphabet.word(w): c for w, c in terms.items()}, kind)

    @property
    def terms(self) -> Mapping[Word, Scalar]:
        return MappingProxyType(self._terms)

    def coefficient(self, word: Word) -> Scalar:
        return self._terms.get(tuple(word), Fraction(0) if self.kind == RATIONAL else 0j)

    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def max_length(self) -> int:
        """Longest word carrying a nonzero coefficient (-1 for zero)."""
        return max((len(w) for w in self._terms), default=-1)

    def homogeneous_part(self, length: int) -> 'AlgebraElement':
        return AlgebraElement(
            self.alphabet,
            {w: c for w, c in self._terms.items() if len(w) == length},
            self.kind,
        )

    def sup_norm(self) -> float:
        return max((float(abs(c)) for c in self._terms.values()), default=0.0)

    def to_complex(self) -> 'AlgebraElement':
        if self.kind == COMPLEX:
            return self
        return AlgebraElement(self.alphabet, self._terms, COMPLEX)

    def _check(self, other: 'AlgebraElement') -> None:
        if other.alphabet != self.alphabet:
            raise AlphabetMismatchError(
                f"Alphabet mismatch: {self.alphabet!r} vs {other.alphabet!r}"
            )

    def __add__(self, other: 'AlgebraElement') -> 'AlgebraElement':
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        self._check(other)
        terms = dict(self._terms)
        for word, value in other._terms.items():
            terms[word] = terms.get(word, 0) + value
        return AlgebraElement(self.alphabet, terms, _join_kinds(self.kind, other.kind))

    def __neg__(self) -> 'AlgebraElement':
        return AlgebraElement(self.alphabet, {w: -c for w, c in self._terms.items()}, self.kind)

    def __sub__(self, other: 'AlgebraElement') -> 'AlgebraElement':
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return self + (-other)

    def scale(self, factor) -> 'AlgebraElement':
        kind = _join_kinds(self.kind, _scalar_kind(factor))
        if kind == RATIONAL:
            factor = Fraction(factor)
        return AlgebraElement(self.alphabet, {w: c * factor for w, c in self._terms.items()}, kind)

    def __mul__(self, other) -> 'AlgebraElement':
        if isinstance(other, Number):
            return self.scale(other)
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        self._check(other)
        terms: Dict[Word, Scalar] = {}
        for wa, ca in self._terms.items():
            for wb, cb in other._terms.items():
                word = wa + wb
                terms[word] = terms.get(word, 0) + ca * cb
        return AlgebraElement(self.alphabet, terms, _join_kinds(self.kind, other.kind))

    def __rmul__(self, other) -> 'AlgebraElement':
        if isinstance(other, Number):
            return self.scale(other)
        return NotImplemented

    def commutator(self, other: 'AlgebraElement') -> 'AlgebraElement':
        """Return [self, other] = self*other - other*self."""
        return self * other - other * self

    def __eq__(self, other) -> bool:
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return self.alphabet == other.alphabet and self._terms == other._terms

    __hash__ = None

    def distance(self, other: 'AlgebraElement') -> float:
        """Sup norm of the difference."""
        return (self - other).sup_norm()

    def __repr__(self) -> str:
        if not self._terms:
            return "AlgebraElement(0)"
        parts = []
        for word in sorted(self._terms, key=lambda w: (len(w), w)):
            letters = ' '.join(self.alphabet.format_word(word)) or '1'
            parts.append(f"{self._terms[word]}*{letters}")
        return f"AlgebraElement({' + '.join(parts)})"


def commutator(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    return a.commutator(b)


@dataclass(frozen=True)
class SeriesNorm:
    """Per-lambda-degree sup norms of a truncated series."""
    per_degree: Tuple[float, ...]

    def __getitem__(self, degree: int) -> float:
        return self.per_degree[degree]

    def __len__(self) -> int:
        return len(self.per_degree)

    def __iter__(self) -> Iterator[float]:
        return iter(self.per_degree)

    def max(self) -> float:
        return max(self.per_degree, default=0.0)

    def max_from(self, degree: int) -> float:
        return max(self.per_degree[degree:], default=0.0)

    def as_list(self) -> List[float]:
        return list(self.per_degree)


class TruncatedSeries:
    """
    Formal power series in lambda modulo lambda^(order+1).

    coeffs[r] is the AlgebraElement multiplying lambda^r. All arithmetic
    truncates to the smaller order of its operands.
    """

    __slots__ = ('alphabet', 'order', 'coeffs')

    def __init__(self, alphabet: Alphabet, order: int,
                 coeffs: Optional[Sequence[AlgebraElement]] = None,
                 kind: Optional[str] = None):
        """
        Initialize the series.

        Args:
            alphabet: Alphabet of every coefficient
            order: Truncation order N >= 0
            coeffs: Coefficients for lambda^0..lambda^k, padded with zeros
            kind: Scalar kind used for padding (inferred from coeffs if omitted)

        Raises:
            ValueError: If order is negative
            AlphabetMismatchError: If a coefficient uses another alphabet
        """
        if order < 0:
            raise ValueError(f"Truncation order must be >= 0, got {order}")
        coeffs = list(coeffs or [])[:order + 1]
        for c in coeffs:
            if c.alphabet != alphabet:
                raise AlphabetMismatchError(
                    f"Coefficient over {c.alphabet!r} in a series over {alphabet!r}"
                )
        if kind is None:
            kind = RATIONAL if coeffs and all(c.kind == RATIONAL for c in coeffs) else COMPLEX
        if kind == COMPLEX:
            coeffs = [c.to_complex() for c in coeffs]
        while len(coeffs) < order + 1:
            coeffs.append(alphabet.zero(kind))
        self.alphabet = alphabet
        self.order = order
        self.coeffs: Tuple[AlgebraElement, ...] = tuple(coeffs)

    @property
    def kind(self) -> str:
        return RATIONAL if all(c.kind == RATIONAL for c in self.coeffs) else COMPLEX

    @classmethod
    def one(cls, alphabet: Alphabet, order: int, kind: str = COMPLEX) -> 'TruncatedSeries':
        return cls(alphabet, order, [alphabet.unit(kind)], kind)

    @classmethod
    def zero(cls, alphabet: Alphabet, order: int, kind: str = COMPLEX) -> 'TruncatedSeries':
        return cls(alphabet, order, [], kind)

    @classmethod
    def monomial(cls, alphabet: Alphabet, order: int, element: AlgebraElement,
                 degree: int = 1) -> 'TruncatedSeries':
        """Return lambda^degree * element."""
        coeffs = [alphabet.zero(element.kind)] * degree + [element]
        return cls(alphabet, order, coeffs, element.kind)

    def __getitem__(self, degree: int) -> AlgebraElement:
        return self.coeffs[degree]

    def _check(self, other: 'TruncatedSeries') -> None:
        if other.alphabet != self.alphabet:
            raise AlphabetMismatchError(
                f"Alphabet mismatch: {self.alphabet!r} vs {other.alphabet!r}"
            )

    def truncate(self, order: int) -> 'TruncatedSeries':
        return TruncatedSeries(self.alphabet, min(order, self.order), self.coeffs)

    def __add__(self, other: 'TruncatedSeries') -> 'TruncatedSeries':
        return add(self, other)

    def __neg__(self) -> 'TruncatedSeries':
        return TruncatedSeries(self.alphabet, self.order, [-c for c in self.coeffs], self.kind)

    def __sub__(self, other: 'TruncatedSeries') -> 'TruncatedSeries':
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return add(self, -other)

    def __mul__(self, other) -> 'TruncatedSeries':
        if isinstance(other, Number):
            return TruncatedSeries(self.alphabet, self.order, [c.scale(other) for c in self.coeffs])
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return mul(self, other)

    def __rmul__(self, other) -> 'TruncatedSeries':
        if isinstance(other, Number):
            return self * other
        return NotImplemented

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def is_group_element(self, tol: float = GROUP_TOLERANCE) -> bool:
        """True when the lambda^0 part is the unit (within tol for complex scalars)."""
        c0 = self.coeffs[0]
        if any(word != () for word in c0.terms):
            return False
        return abs(complex(c0.coefficient(()) - 1)) <= (0 if c0.kind == RATIONAL else tol)

    def max_word_length(self) -> Tuple[int, ...]:
        return tuple(c.max_length() for c in self.coeffs)

    def sup_norm(self) -> SeriesNorm:
        return sup_norm(self)

    def distance(self, other: 'TruncatedSeries') -> SeriesNorm:
        """Per-degree sup norm of self - other."""
        return sup_norm(self - other)

    def to_complex(self) -> 'TruncatedSeries':
        return TruncatedSeries(self.alphabet, self.order, self.coeffs, COMPLEX)

    def to_dict(self) -> Dict:
        """Serialize to the JSON series format."""
        exact = self.kind == RATIONAL
        terms = []
        for degree, coeff in enumerate(self.coeffs):
            for word in sorted(coeff.terms, key=lambda w: (len(w), w)):
                value = coeff.terms[word]
                entry = {
                    'lambda': degree,
                    'word': self.alphabet.format_word(word),
                    're': float(complex(value).real),
                    'im': float(complex(value).imag),
                }
                if exact:
                    entry['exact'] = str(value)
                terms.append(entry)
        return {
            'order': self.order,
            'alphabet': list(self.alphabet.names),
            'scalar_kind': self.kind,
            'terms': terms,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> 'TruncatedSeries':
        """Inverse of to_dict."""
        alphabet = Alphabet(data['alphabet'])
        order = int(data['order'])
        kind = data.get('scalar_kind', COMPLEX)
        buckets: List[Dict[Word, Scalar]] = [dict() for _ in range(order + 1)]
        for entry in data['terms']:
            degree = int(entry['lambda'])
            if degree > order:
                continue
            if kind == RATIONAL:
                value = Fraction(entry['exact'])
            else:
                value = complex(entry['re'], entry['im'])
            buckets[degree][alphabet.word(entry['word'])] = value
        return cls(alphabet, order, [AlgebraElement(alphabet, b, kind) for b in buckets], kind)

    def __repr__(self) -> str:
        return f"TruncatedSeries(order={self.order}, coeffs={list(self.coeffs)})"


def add(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    """Degreewise sum, truncated to the smaller order."""
    a._check(b)
    order = min(a.order, b.order)
    return TruncatedSeries(a.alphabet, order,
                           [a.coeffs[r] + b.coeffs[r] for r in range(order + 1)])


def mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    """Cauchy product with word concatenation, truncated to the smaller order."""
    a._check(b)
    order = min(a.order, b.order)
    kind = _join_kinds(a.kind, b.kind)
    coeffs = []
    for r in range(order + 1):
        acc: Dict[Word, Scalar] = {}
        for u in range(r + 1):
            left = a.coeffs[u]._terms
            right = b.coeffs[r - u]._terms
            if not left or not right:
                continue
            for wa, ca in left.items():
                for wb, cb in right.items():
                    word = wa + wb
                    acc[word] = acc.get(word, 0) + ca * cb
        coeffs.append(AlgebraElement(a.alphabet, acc, kind))
    return TruncatedSeries(a.alphabet, order, coeffs, kind)


def _reciprocal(k: int, kind: str):
    return Fraction(1, k) if kind == RATIONAL else 1.0 / k


def _require_group(g: TruncatedSeries, operation: str) -> None:
    if not g.is_group_element():
        raise GroupElementError(f"{operation} needs a series of the form 1 + lambda(...)")


def exp_proper(x: TruncatedSeries) -> TruncatedSeries:
    """
    Exponential of a series without constant term.

    Horner scheme exp(x) = 1 + x(1 + x/2(1 + x/3(...))).

    Raises:
        GroupElementError: If the lambda^0 part is nonzero
    """
    if not x.coeffs[0].is_zero():
        raise GroupElementError("exp_proper needs a series with zero lambda^0 part")
    kind = x.kind
    one = TruncatedSeries.one(x.alphabet, x.order, kind)
    result = one
    for k in range(x.order, 0, -1):
        result = one + (x * result) * _reciprocal(k, kind)
    return result


def exp_lambda(element: AlgebraElement, order: int, factor: Scalar = 1) -> TruncatedSeries:
    """Shorthand for exp(lambda * factor * element)."""
    alphabet = element.alphabet
    return exp_proper(TruncatedSeries.monomial(alphabet, order, element.scale(factor)))


def log_group(g: TruncatedSeries) -> TruncatedSeries:
    """
    Logarithm of a group element 1 + y.

    Horner scheme log(1+y) = y(1 - y(1/2 - y(1/3 - ...))).

    Raises:
        GroupElementError: If the lambda^0 part is not the unit
    """
    _require_group(g, "log_group")
    kind = g.kind
    one = TruncatedSeries.one(g.alphabet, g.order, kind)
    y = g - one
    if g.order == 0:
        return TruncatedSeries.zero(g.alphabet, 0, kind)
    s = one * _reciprocal(g.order, kind)
    for k in range(g.order - 1, 0, -1):
        s = one * _reciprocal(k, kind) - y * s
    return y * s


def invert_group(g: TruncatedSeries) -> TruncatedSeries:
    """
    Inverse of a group element via the geometric series in 1 - g.

    Raises:
        GroupElementError: If the lambda^0 part is not the unit
    """
    _require_group(g, "invert_group")
    kind = g.kind
    one = TruncatedSeries.one(g.alphabet, g.order, kind)
    y = g - one
    s = one
    for _ in range(g.order):
        s = one - y * s
    return s


def substitute(x: TruncatedSeries,
               images: Mapping[Union[str, int, Generator], AlgebraElement],
               target: Optional[Alphabet] = None) -> TruncatedSeries:
    """
    Apply the algebra morphism determined by generator images.

    Args:
        x: Series over its own alphabet
        images: Image of every generator of x.alphabet, keyed by name, id or Generator
        target: Target alphabet (taken from the images when omitted)

    Returns:
        The image series over the target alphabet

    Raises:
        MissingImageError: If a generator has no image
        AlphabetMismatchError: If images live over different alphabets
    """
    resolved: Dict[int, AlgebraElement] = {}
    for key, image in images.items():
        try:
            resolved[x.alphabet.index(key)] = image
        except KeyError:
            continue
    missing = [g.name for g in x.alphabet if g.index not in resolved]
    if missing:
        raise MissingImageError(f"No image for generators {missing}")

    if target is None:
        target = resolved[0].alphabet if resolved else x.alphabet
    for image in resolved.values():
        if image.alphabet != target:
            raise AlphabetMismatchError(f"Image over {image.alphabet!r}, expected {target!r}")

    kind = x.kind
    for image in resolved.values():
        kind = _join_kinds(kind, image.kind)

    word_images: Dict[Word, AlgebraElement] = {(): target.unit(kind)}

    def image_of(word: Word) -> AlgebraElement:
        found = word_images.get(word)
        if found is None:
            found = image_of(word[:-1]) * resolved[word[-1]]
            word_images[word] = found
        return found

    coeffs = []
    for coeff in x.coeffs:
        acc: Dict[Word, Scalar] = {}
        for word, value in coeff.terms.items():
            for target_word, target_value in image_of(word).terms.items():
                acc[target_word] = acc.get(target_word, 0) + value * target_value
        coeffs.append(AlgebraElement(target, acc, kind))
    return TruncatedSeries(target, x.order, coeffs, kind)


def sup_norm(x: TruncatedSeries) -> SeriesNorm:
    """Per-degree maximum absolute coefficient."""
    return SeriesNorm(tuple(c.sup_norm() for c in x.coeffs))
