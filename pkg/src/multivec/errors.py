"""Exception types raised by loaders and builders.

Each on-disk defect maps to a distinct exception class so callers can
tell a truncated file from a bad vector without parsing messages.
"""

from __future__ import annotations


class FormatError(ValueError):
    """Base class for malformed on-disk artifacts."""


class MalformedHeaderError(FormatError):
    """File too short for its header, or the magic string is wrong."""


class UnsupportedVersionError(FormatError):
    """Header or metadata declares a format version this code cannot read."""


class DimensionError(FormatError):
    """Declared embedding dimensionality differs from 128."""


class OffsetError(FormatError):
    """Document or cluster offsets are decreasing, out of range, or misanchored."""


class EmptyDocumentError(FormatError):
    """A document span contains zero token vectors."""


class InvalidVectorError(FormatError):
    """A token vector contains NaN or infinite components."""


class NormError(FormatError):
    """A token vector's L2 norm departs from 1.0 by more than the tolerance."""


class TokenCountError(FormatError):
    """A query declares a token count outside [1, 32]."""


class SizeMismatchError(FormatError):
    """Payload length disagrees with the counts declared in the header."""


class DegenerateSampleError(ValueError):
    """Residual training sample has too little spread to place bucket boundaries."""
