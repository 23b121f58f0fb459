"""
Exception hierarchy for kz_associator.

Most errors also derive from ValueError so callers that only know about
ValueError keep working.
"""


class KZAssociatorError(Exception):
    """Base class for all errors raised by kz_associator."""


class AlphabetMismatchError(KZAssociatorError, ValueError):
    """Two operands live over different alphabets."""


class GroupElementError(KZAssociatorError, ValueError):
    """A series is not in the form required by exp, log or inversion."""


class MissingImageError(KZAssociatorError, KeyError):
    """A substitution map has no image for some generator."""


class RegulatorRangeError(KZAssociatorError, ValueError):
    """A regulator (delta or epsilon) lies outside ]0, 1/4]."""


class PathError(KZAssociatorError, ValueError):
    """Endpoint mismatch, discontinuity or malformed path specification."""


class InadmissiblePathError(PathError):
    """A path or point touches the singular locus of a connection."""


class PreconditionError(KZAssociatorError):
    """
    An algebraic precondition failed modulo the relation ideal.

    Attributes:
        relation: Human-readable description of the violated relation
    """

    def __init__(self, message: str, relation: str = ''):
        super().__init__(message)
        self.relation = relation


class ConfigError(KZAssociatorError, ValueError):
    """Invalid run configuration."""
