"""Dyadic block-sparse matrices: factorization, inversion and pattern recovery.

Submodules
----------
dyadic_index
    Pyramid indexing and block-sparsity patterns.
dyadic_matrix
    Block storage for dyadic matrices and their structured products.
factorization
    Sequential orthogonalization ``P.T @ sigma @ P = I``.
packing
    Permutations that pack sparse symmetric matrices near the diagonal.
generators
    Seeded test-matrix families.
cli
    Command-line driver (``dyapack``).
"""

__version__ = "0.1.0"

from .dyadic_index import BlockSparsityPattern, DerivedPattern, DyadicPattern, PyramidCoord
from .dyadic_matrix import DyadicMatrix, FlopCounter, detect_parameters, embed_irregular
from .errors import (DefinitenessError, DisconnectedError, DyapackError,
                     PatternViolationError)
from .factorization import factor_R, factorize, invert, sequential_orthogonalize, solve
from .packing import Permutation, pack, recursive_dyadic_pack, report_stats

__all__ = [
    "__version__", "BlockSparsityPattern", "DerivedPattern", "DyadicPattern", "PyramidCoord",
    "DyadicMatrix", "FlopCounter", "detect_parameters", "embed_irregular", "DyapackError",
    "PatternViolationError", "DefinitenessError", "DisconnectedError",
    "sequential_orthogonalize", "factorize", "invert", "solve", "factor_R", "Permutation",
    "pack", "recursive_dyadic_pack", "report_stats",
]
