"""Index combinatorics of the dyadic pyramid.

Block indices run over ``1 .. 2**N - 1``.  Level ``l`` holds the positions
``2**(l-1) * (2r - 1)`` for ``r = 1 .. 2**(N-l)``; the position at ``(r, l)``
governs a window ("span") of ``2**l - 1`` consecutive indices centred on it.

All indices exposed here are 1-based.  Patterns are materialized as
:class:`BlockSparsityPattern` objects holding a lexicographically sorted
coordinate array together with a hash-set view for membership tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, NamedTuple

import numpy as np

MAX_HEIGHT = 30

_KIND_ALIASES = {
    "h": "h", "horizontal": "h", "hd": "h",
    "v": "v", "vertical": "v", "vd": "v",
    "s": "s", "symmetric": "s", "sd": "s",
}

DERIVED_BASES = ("D", "ED", "ED~", "ED~'", "IS", "IV", "IH")


class PyramidCoord(NamedTuple):
    r: int
    l: int


def _check_height(N: int) -> None:
    if not isinstance(N, (int, np.integer)) or N < 1 or N > MAX_HEIGHT:
        raise ValueError(f"pyramid height must be an integer in 1..{MAX_HEIGHT}, got {N!r}")


def _check_level(N: int, l: int) -> None:
    _check_height(N)
    if not 1 <= l <= N:
        raise ValueError(f"level {l} out of range 1..{N}")


def _check_coord(N: int, r: int, l: int) -> None:
    _check_level(N, l)
    if not 1 <= r <= 2 ** (N - l):
        raise ValueError(f"position {r} out of range 1..{2 ** (N - l)} at level {l}")


def n_blocks(N: int) -> int:
    """Number of block rows ``2**N - 1`` of a pyramid of height N."""
    _check_height(N)
    return 2**N - 1


def level_positions(N: int, l: int) -> np.ndarray:
    """Block indices of level ``l``, ascending.

    >>> level_positions(3, 1).tolist()
    [1, 3, 5, 7]
    """
    _check_level(N, l)
    r = np.arange(1, 2 ** (N - l) + 1, dtype=np.int64)
    return 2 ** (l - 1) * (2 * r - 1)


def position(r: int, l: int) -> int:
    """The single block index at pyramid coordinate ``(r, l)``."""
    return 2 ** (l - 1) * (2 * r - 1)


def span(N: int, r: int, l: int) -> np.ndarray:
    """Consecutive window of ``2**l - 1`` indices centred on ``(r, l)``.

    >>> span(3, 1, 2).tolist()
    [1, 2, 3]
    """
    _check_coord(N, r, l)
    c = position(r, l)
    h = 2 ** (l - 1)
    return np.arange(c - h + 1, c + h, dtype=np.int64)


def level_of(i: int) -> int:
    """Level of block index ``i`` (one plus the number of trailing zero bits)."""
    if i < 1:
        raise ValueError(f"block index must be positive, got {i}")
    return int((i & -i).bit_length())


def coord_of(i: int) -> PyramidCoord:
    """Inverse of :func:`position`."""
    l = level_of(i)
    return PyramidCoord((i // 2 ** (l - 1) + 1) // 2, l)


def sequential_to_dyadic(N: int, i: int) -> PyramidCoord:
    """Map a sequential (level-major) index to its pyramid coordinate.

    Sequential order lists all level-1 positions first, then level 2, and so
    on, so that ``i = 2**N - 2**(N-l+1) + r``.
    """
    _check_height(N)
    if not 1 <= i <= 2**N - 1:
        raise ValueError(f"sequential index {i} out of range 1..{2 ** N - 1}")
    # number of indices on levels < l is 2**N - 2**(N-l+1)
    l = 1
    while i > 2**N - 2 ** (N - l):
        l += 1
    return PyramidCoord(i - (2**N - 2 ** (N - l + 1)), l)


def dyadic_to_sequential(N: int, r: int, l: int) -> int:
    _check_coord(N, r, l)
    return 2**N - 2 ** (N - l + 1) + r


def sequential_order(N: int) -> np.ndarray:
    """Block indices listed in sequential order, level by level."""
    return np.concatenate([level_positions(N, l) for l in range(1, N + 1)])


def s_index(j: int, l: int) -> int:
    """First row of the refined elongated support in column ``j``."""
    return (2 ** (l - 1) - 1) * (2 * j - 1)


def band_offsets(l: int) -> list[int]:
    """Row offsets relative to :func:`s_index` carried by the refined product.

    >>> band_offsets(3)
    [-1, 0, 1, 2]
    """
    if l < 2:
        raise ValueError(f"level must be at least 2, got {l}")
    t = {-(2 ** (l - m)) + 1 for m in range(2, l + 1)}
    t |= {2 ** (l - m) for m in range(2, l + 1)}
    return sorted(t)


@dataclass(frozen=True)
class BlockSparsityPattern:
    """An explicit set of nonzero block coordinates.

    Attributes
    ----------
    coords : ndarray of shape (n, 2)
        1-based ``(i, j)`` pairs, lexicographically sorted, no duplicates.
    block_size : int
    block_rows, block_cols : int
        Extent of the block grid.
    """

    coords: np.ndarray
    block_size: int
    block_rows: int
    block_cols: int

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.int64).reshape(-1, 2)
        if len(c):
            c = np.unique(c, axis=0)
            if c[:, 0].min() < 1 or c[:, 0].max() > self.block_rows:
                raise ValueError("row coordinate outside the block grid")
            if c[:, 1].min() < 1 or c[:, 1].max() > self.block_cols:
                raise ValueError("column coordinate outside the block grid")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)
        if self.block_size < 1:
            raise ValueError("block size must be positive")

    @classmethod
    def from_pairs(cls, pairs, block_size: int, block_rows: int, block_cols: int):
        return cls(np.array(list(pairs), dtype=np.int64).reshape(-1, 2), block_size, block_rows, block_cols)

    @classmethod
    def from_mask(cls, mask: np.ndarray, block_size: int = 1):
        """Pattern of the True entries of a boolean block mask."""
        mask = np.asarray(mask, dtype=bool)
        return cls(np.argwhere(mask) + 1, block_size, mask.shape[0], mask.shape[1])

    @cached_property
    def index_set(self) -> frozenset:
        return frozenset(map(tuple, self.coords.tolist()))

    @property
    def shape(self) -> tuple[int, int]:
        return self.block_rows, self.block_cols

    def __len__(self) -> int:
        return len(self.coords)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(map(tuple, self.coords.tolist()))

    def __contains__(self, ij) -> bool:
        return tuple(ij) in self.index_set

    def __eq__(self, other) -> bool:
        if not isinstance(other, BlockSparsityPattern):
            return NotImplemented
        return (self.shape == other.shape and self.block_size == other.block_size
                and np.array_equal(self.coords, other.coords))

    def __hash__(self):
        return hash((self.shape, self.block_size, self.index_set))

    def __or__(self, other: "BlockSparsityPattern") -> "BlockSparsityPattern":
        self._check_conformal(other)
        return BlockSparsityPattern(np.vstack([self.coords, other.coords]), self.block_size,
                                    self.block_rows, self.block_cols)

    def _check_conformal(self, other):
        if self.shape != other.shape or self.block_size != other.block_size:
            raise ValueError("patterns live on different block grids")

    def issubset(self, other: "BlockSparsityPattern") -> bool:
        self._check_conformal(other)
        return self.index_set <= other.index_set

    def transpose(self) -> "BlockSparsityPattern":
        return BlockSparsityPattern(self.coords[:, ::-1], self.block_size, self.block_cols, self.block_rows)

    @property
    def T(self):
        return self.transpose()

    def mask(self) -> np.ndarray:
        """Boolean block mask of shape ``(block_rows, block_cols)``."""
        m = np.zeros(self.shape, dtype=bool)
        if len(self.coords):
            m[self.coords[:, 0] - 1, self.coords[:, 1] - 1] = True
        return m

    def scalar_mask(self) -> np.ndarray:
        """Boolean mask at entry level, each block expanded to ``k x k``."""
        k = self.block_size
        return np.kron(self.mask(), np.ones((k, k), dtype=bool))


@dataclass(frozen=True)
class DyadicPattern:
    """Descriptor of HD(N, k), VD(N, k) or SD(N, k)."""

    N: int
    k: int = 1
    kind: str = "s"

    def __post_init__(self):
        _check_height(self.N)
        if self.k < 1:
            raise ValueError(f"block size must be positive, got {self.k}")
        try:
            object.__setattr__(self, "kind", _KIND_ALIASES[str(self.kind).lower()])
        except KeyError:
            raise ValueError(f"unknown dyadic kind {self.kind!r}") from None

    @property
    def n_blocks(self) -> int:
        return 2**self.N - 1

    @property
    def d(self) -> int:
        return self.k * self.n_blocks

    def transpose(self) -> "DyadicPattern":
        return DyadicPattern(self.N, self.k, {"h": "v", "v": "h", "s": "s"}[self.kind])

    def n_stored(self) -> int:
        """Number of blocks in the pattern, by closed form."""
        N = self.N
        if self.kind == "s":
            return (2 * N - 3) * 2**N + 3
        return (N - 1) * 2**N + 1

    def _pairs(self):
        N = self.N
        for l in range(1, N + 1):
            h = 2 ** (l - 1)
            for c in level_positions(N, l).tolist():
                for j in range(c - h + 1, c + h):
                    if self.kind in "hs":
                        yield c, j
                    if self.kind in "vs":
                        yield j, c

    def materialize(self) -> BlockSparsityPattern:
        n = self.n_blocks
        return BlockSparsityPattern(np.array(list(self._pairs()), dtype=np.int64), self.k, n, n)


@dataclass(frozen=True)
class DerivedPattern:
    """Patterns of the intermediate products of the level sweep.

    ``base`` is one of

    ``"D"``
        block diagonal, ``2**(N-l)`` blocks;
    ``"ED"``
        elongated diagonal: column ``j`` is nonzero in rows
        ``(j-1)(2**l - 2) + 1 .. j(2**l - 2)``;
    ``"ED~"``, ``"ED~'"``
        the two refinements of ED that arise for block-tridiagonal inputs;
    ``"IS"``, ``"IV"``, ``"IH"``
        block diagonal with ``2**(N-l+1)`` copies of SD/VD/HD(l-1).

    Row indices of the ED family and of the incomplete patterns refer to
    the indices of levels ``< l`` in their natural (ascending) order.
    """

    base: str
    N: int
    l: int
    k: int = 1

    def __post_init__(self):
        if self.base not in DERIVED_BASES:
            raise ValueError(f"unknown derived pattern {self.base!r}")
        _check_height(self.N)
        lo = 1 if self.base == "D" else 2
        if not lo <= self.l <= self.N:
            raise ValueError(f"level {self.l} out of range {lo}..{self.N} for {self.base}")

    @property
    def shape(self) -> tuple[int, int]:
        N, l = self.N, self.l
        m = 2 ** (N - l)
        if self.base == "D":
            return m, m
        rows = 2**N - 2 ** (N - l + 1)
        if self.base.startswith("ED"):
            return rows, m
        return rows, rows

    def _pairs(self):
        N, l = self.N, self.l
        m = 2 ** (N - l)
        if self.base == "D":
            return [(j, j) for j in range(1, m + 1)]
        if self.base == "ED":
            h = 2**l - 2
            return [((j - 1) * h + i, j) for j in range(1, m + 1) for i in range(1, h + 1)]
        if self.base == "ED~":
            return [(s_index(j, l) + t, j) for j in range(1, m + 1) for t in (0, 1)]
        if self.base == "ED~'":
            T = band_offsets(l)
            return [(s_index(j, l) + t, j) for j in range(1, m + 1) for t in T]
        kind = {"IS": "s", "IV": "v", "IH": "h"}[self.base]
        nb = 2 ** (l - 1) - 1
        if l == 2:
            sub = [(1, 1)]
        else:
            sub = list(DyadicPattern(l - 1, 1, kind).materialize())
        return [(q * nb + i, q * nb + j) for q in range(2 ** (N - l + 1)) for i, j in sub]

    def materialize(self) -> BlockSparsityPattern:
        rows, cols = self.shape
        return BlockSparsityPattern(np.array(self._pairs(), dtype=np.int64).reshape(-1, 2), self.k, rows, cols)


def materialize(p) -> BlockSparsityPattern:
    """Explicit index set of a :class:`DyadicPattern` or :class:`DerivedPattern`."""
    return p.materialize()


def refined_ed_support(N: int, l: int) -> tuple[BlockSparsityPattern, BlockSparsityPattern]:
    """Supports of the coupling block and its transformed version in the banded case."""
    return DerivedPattern("ED~", N, l).materialize(), DerivedPattern("ED~'", N, l).materialize()


def retained_after_level_removal(N: int, levels: int = 1) -> np.ndarray:
    """Block indices that survive deleting levels ``1..levels``, ascending."""
    _check_height(N)
    if levels >= N:
        raise ValueError("cannot remove every level")
    idx = np.arange(1, 2**N, dtype=np.int64)
    return idx[idx % 2**levels == 0]
