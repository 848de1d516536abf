"""Exception types shared across the package.

Soft conditions (non-convergence, flat risk curves, degenerate dendrograms,
all-disconnected graphs) are reported as flags on the returned objects, not
raised; only conditions that make the requested computation impossible are
exceptions.
"""


class GGMError(Exception):
    """Base class for all package errors."""


class SingularInput(GGMError):
    """lambda = 0 requested but the second-moment matrix is singular."""


class InvalidGrid(GGMError):
    """Lambda grid is not strictly increasing with constant spacing."""


class DegenerateColumn(GGMError):
    """A data column has zero variance (reported, node treated as isolated)."""


class NoSubsetFound(GGMError):
    """Subset search exhausted max_tries without an acceptable subset."""


class InfeasibleDegreeSequence(GGMError):
    """A power-law degree sequence could not be realized as a simple graph."""


class MissingPrecision(GGMError):
    """An information criterion was requested on an adjacency-only path."""


class PathMismatch(GGMError):
    """Subsample tables do not line up with the reference path grid."""


class DimensionMismatch(GGMError):
    """Two graphs/matrices that must share a shape do not."""


class NoMethods(GGMError):
    """select_all called with an empty method set."""
