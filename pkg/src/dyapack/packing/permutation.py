"""Permutations stored as 0-based image arrays.

``pi(i)`` is the position that row ``i`` takes in the reordered matrix, so
the reordered matrix ``M`` satisfies ``M[pi(i), pi(j)] = S[i, j]``.
"""

from __future__ import annotations

import numpy as np


class Permutation:
    """Bijection on ``{0, ..., d-1}``."""

    __slots__ = ("image",)

    def __init__(self, image):
        image = np.asarray(image, dtype=np.int64).reshape(-1)
        d = len(image)
        seen = np.zeros(d, dtype=bool)
        if d and (image.min() < 0 or image.max() >= d):
            raise ValueError("permutation image out of range")
        seen[image] = True
        if not seen.all():
            raise ValueError("image is not a bijection")
        image.setflags(write=False)
        self.image = image

    @classmethod
    def identity(cls, d: int) -> "Permutation":
        return cls(np.arange(d))

    @classmethod
    def reversal(cls, d: int) -> "Permutation":
        """``rho(i) = d - 1 - i``."""
        return cls(np.arange(d)[::-1])

    @classmethod
    def from_order(cls, order) -> "Permutation":
        """Permutation placing ``order[0]`` first, ``order[1]`` second, and so on."""
        order = np.asarray(order, dtype=np.int64)
        image = np.empty_like(order)
        image[order] = np.arange(len(order))
        return cls(image)

    @classmethod
    def from_one_based(cls, seq) -> "Permutation":
        return cls(np.asarray(seq, dtype=np.int64) - 1)

    @property
    def d(self) -> int:
        return len(self.image)

    def __len__(self):
        return len(self.image)

    def __call__(self, i):
        return self.image[i]

    def __eq__(self, other):
        if not isinstance(other, Permutation):
            return NotImplemented
        return np.array_equal(self.image, other.image)

    def __hash__(self):
        return hash(self.image.tobytes())

    def __repr__(self):
        return f"Permutation({self.image.tolist()})"

    def inverse(self) -> "Permutation":
        inv = np.empty_like(self.image)
        inv[self.image] = np.arange(self.d)
        return Permutation(inv)

    def compose(self, other: "Permutation") -> "Permutation":
        """``self o other``: apply ``other`` first."""
        if other.d != self.d:
            raise ValueError("permutations act on sets of different size")
        return Permutation(self.image[other.image])

    def order(self) -> np.ndarray:
        """Rows listed by position: ``order()[p]`` is the row placed at ``p``."""
        return self.inverse().image

    def one_based(self) -> np.ndarray:
        return self.image + 1

    def distance_matrix(self) -> np.ndarray:
        """``|pi(i) - pi(j)|``."""
        return np.abs(self.image[:, None] - self.image[None, :])


def random_permutation(d: int, seed=None) -> Permutation:
    """Uniform random permutation from a seeded PCG64 stream."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return Permutation(rng.permutation(d))


def apply_permutation(S, pi: Permutation):
    """Reorder rows and columns so that row ``i`` moves to position ``pi(i)``.

    Works for dense arrays and scipy sparse matrices.
    """
    if S.shape != (pi.d, pi.d):
        raise ValueError(f"matrix of shape {S.shape} does not match permutation of size {pi.d}")
    order = pi.order()
    if hasattr(S, "tocsr"):
        S = S.tocsr()
        return S[order][:, order]
    return np.asarray(S)[np.ix_(order, order)]
