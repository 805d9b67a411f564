"""Exception types shared across the package.

Each class carries an ``exit_code`` used by the command-line driver.
"""


class DyapackError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class PatternViolationError(DyapackError, ValueError):
    """A nonzero entry falls outside the declared block-sparsity pattern."""

    exit_code = 4

    def __init__(self, message, block=None):
        super().__init__(message)
        self.block = block


class DefinitenessError(DyapackError, ValueError):
    """A local gramian is not positive definite.

    ``coord`` is the (r, l) pyramid coordinate where the breakdown occurred,
    or None when the failing matrix is not tied to a pyramid position.
    """

    exit_code = 5

    def __init__(self, message, coord=None):
        super().__init__(message)
        self.coord = coord


class DisconnectedError(DyapackError, ValueError):
    """The neighbor graph of a 0-1 matrix has more than one component.

    ``components`` lists the components as sorted arrays of 0-based indices.
    """

    exit_code = 6

    def __init__(self, message, components=None):
        super().__init__(message)
        self.components = components or []


class DegenerateConfigurationError(DyapackError, ValueError):
    """Double-centered matrix has no positive leading eigenvalue."""


class AlignmentError(DyapackError, ValueError):
    """A local configuration shares no index with the ones already aligned."""


class IncompleteConfigurationError(DyapackError, ValueError):
    """Some coordinates of a configuration are undefined."""


class NotAPermutationMetricError(DyapackError, ValueError):
    """Matrix is not the distance matrix |pi(i) - pi(j)| of any permutation."""


class ReconstructionError(DyapackError, ValueError):
    """Nearest-neighbor summary is malformed or inconsistent."""
