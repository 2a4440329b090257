"""Exception hierarchy shared by every novlab module."""

from __future__ import annotations


class NovlabError(Exception):
    """Base class for all library errors."""


class StructuralError(NovlabError):
    """Objects from incompatible graphs or contexts were combined."""


class ValidationError(NovlabError, ValueError):
    """A document or value violates a declared invariant."""


class NovikovConditionError(NovlabError, ValueError):
    """A series was requested for a loop with non-negative valuation."""


class NotInvertibleError(NovlabError, ValueError):
    """A ring element is not of the form identity plus a negative-valuation part."""


class UnsupportedConfigurationError(NovlabError, ValueError):
    """The requested model or family configuration is outside the supported range."""


class InvalidFamilyError(NovlabError, ValueError):
    """A holonomy family fails one of its structural invariants."""


class NonGenericError(NovlabError):
    """A counted intersection is tangential within tolerance."""


class OnCoSphereError(NovlabError, ValueError):
    """A point on the attaching co-sphere was passed to the descent map."""


class ParseError(NovlabError, ValueError):
    """Malformed expression or arrow string.

    ``position`` is the 0-based character offset of the offending token.
    """

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
