"""Exception types raised across the package.

Plain invalid arguments (dimension mismatches, non-invertible transforms,
malformed geometry) raise the built-in ``ValueError``; the classes below mark
conditions the CLI maps to distinct exit codes or that callers may want to
catch and recover from.
"""

from __future__ import annotations


class PolyregError(Exception):
    """Base class for package-specific failures."""


class ConfigError(PolyregError):
    """Invalid configuration file, key, value, or flag combination."""


class FrameIOError(PolyregError):
    """A frame file could not be read or written."""


class StreamMismatchError(PolyregError):
    """The two input streams disagree (frame counts, dimensions)."""


class DegenerateFitError(PolyregError):
    """Point configuration cannot constrain the model (rank-deficient fit)."""


class InsufficientDataError(PolyregError):
    """Too few data points for the requested operation."""
