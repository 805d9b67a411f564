"""Block-sparse dyadic matrices and pattern-aware products.

A dyadic matrix of height ``N`` and breadth ``k`` is stored level by level.
For level ``l`` there are ``n_r = 2**(N-l)`` positions, and the blocks that a
position governs are kept in one contiguous array of shape
``(n_r, 2**l - 1, k, k)``:

* ``h[l-1][r, t]`` is the block in row ``c`` and column ``span[t]``;
* ``v[l-1][r, t]`` is the block in row ``span[t]`` and column ``c``;

where ``c`` is the level position and ``span`` its window.  Horizontal
matrices keep only ``h``, vertical ones only ``v`` and symmetric-pattern
matrices keep both, with the shared diagonal block stored identically in
the centre slot of each.

All products count the k x k block multiplications and block additions
they perform in a :class:`FlopCounter`.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dyadic_index import (MAX_HEIGHT, BlockSparsityPattern, DerivedPattern, DyadicPattern,
                           band_offsets, s_index)
from .errors import PatternViolationError

TAU_ZERO = 1e-14
TAU_NUM = 1e-12


@dataclass
class FlopCounter:
    """Running tally of block operations.

    One block multiply counts ``k**3`` scalar flops, one block add ``k**2``.
    ``other`` collects scalar flops outside block products (local
    orthonormalization: square roots, divisions, triangular solves).
    """

    k: int = 1
    block_multiplies: int = 0
    block_adds: int = 0
    other: int = 0

    @property
    def scalar_ops(self) -> int:
        return self.block_multiplies * self.k**3 + self.block_adds * self.k**2 + self.other

    def reset(self):
        self.block_multiplies = self.block_adds = self.other = 0

    def snapshot(self) -> "FlopCounter":
        return copy.copy(self)

    def add(self, multiplies=0, adds=0, other=0):
        self.block_multiplies += int(multiplies)
        self.block_adds += int(adds)
        self.other += int(other)


@lru_cache(maxsize=None)
def level_geometry(h: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """0-based positions and spans of level ``m`` in a pyramid of height ``h``.

    Returns ``c`` of shape (n_r,) and ``span`` of shape (n_r, 2**m - 1).
    """
    r = np.arange(1, 2 ** (h - m) + 1)
    c = 2 ** (m - 1) * (2 * r - 1) - 1
    half = 2 ** (m - 1)
    sp = c[:, None] + np.arange(-half + 1, half)[None, :]
    c.setflags(write=False)
    sp.setflags(write=False)
    return c, sp


@lru_cache(maxsize=None)
def _pattern_mask(N: int, kind: str) -> np.ndarray:
    nb = 2**N - 1
    mask = np.zeros((nb, nb), dtype=bool)
    for m in range(1, N + 1):
        c, sp = level_geometry(N, m)
        if kind in "hs":
            mask[c[:, None], sp] = True
        if kind in "vs":
            mask[sp, c[:, None]] = True
    mask.setflags(write=False)
    return mask


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


def _as_blocks(A: np.ndarray, k: int) -> np.ndarray:
    """View a (d, q) array as (d/k, k, q) blocks."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.shape[0] % k:
        raise ValueError(f"row count {A.shape[0]} is not a multiple of k={k}")
    return A.reshape(A.shape[0] // k, k, A.shape[1])


def _count(counter, mults, contrib):
    if counter is not None:
        touched = int(np.count_nonzero(contrib))
        counter.add(multiplies=mults, adds=int(contrib.sum()) - touched)


# ---------------------------------------------------------------------------
# batched kernels: leading axis indexes independent pyramids of equal height

def _vd_tall(vlev, A, sup=None, skip_center=False):
    """out[b] = V[b] @ A[b] for a batch of vertical pyramids.

    ``vlev[m-1]`` has shape (B, n_r, w, k, k), ``A`` shape (B, nb, k, q);
    ``sup`` (B, nb) marks the blocks of A that may be nonzero.
    Returns (out, out_support, multiplies, contributions).
    """
    B, nb = A.shape[:2]
    h = len(vlev)
    out = np.zeros(A.shape)
    contrib = np.zeros((B, nb), dtype=np.int64)
    mults = 0
    for m in range(1, h + 1):
        V = vlev[m - 1]
        c, sp = level_geometry(h, m)
        if skip_center:
            keep = np.arange(sp.shape[1]) != 2 ** (m - 1) - 1
            V, sp = V[:, :, keep], sp[:, keep]
            if sp.shape[1] == 0:
                continue
        w = sp.shape[1]
        if sup is None:
            out[:, sp] += np.einsum("brtij,brjq->brtiq", V, A[:, c])
            contrib[:, sp] += 1
            mults += B * len(c) * w
        else:
            bb, rr = np.nonzero(sup[:, c])
            if len(bb) == 0:
                continue
            prods = np.matmul(V[bb, rr], A[bb, c[rr]][:, None])
            out[bb[:, None], sp[rr]] += prods
            contrib[bb[:, None], sp[rr]] += 1
            mults += len(bb) * w
    return out, contrib > 0, mults, contrib


def _hd_tall(hlev, A, sup=None):
    """out[b] = H[b] @ A[b] for a batch of horizontal pyramids."""
    B, nb = A.shape[:2]
    h = len(hlev)
    out = np.zeros(A.shape)
    contrib = np.zeros((B, nb), dtype=np.int64)
    mults = 0
    for m in range(1, h + 1):
        H = hlev[m - 1]
        c, sp = level_geometry(h, m)
        w = sp.shape[1]
        if sup is None:
            out[:, c] += np.einsum("brtij,brtjq->briq", H, A[:, sp])
            contrib[:, c] += w
            mults += B * len(c) * w
        else:
            bb, rr, tt = np.nonzero(sup[:, sp])
            if len(bb) == 0:
                continue
            prods = np.matmul(H[bb, rr, tt], A[bb, sp[rr, tt]])
            np.add.at(out, (bb, c[rr]), prods)
            np.add.at(contrib, (bb, c[rr]), 1)
            mults += len(bb)
    return out, contrib > 0, mults, contrib


def _swap(levels):
    return [np.swapaxes(a, -1, -2) for a in levels]


class DyadicMatrix:
    """Immutable block-sparse matrix with an HD, VD or SD pattern.

    Parameters
    ----------
    pattern : DyadicPattern
    h, v : list of ndarray, optional
        Level arrays as described in the module docstring.  Missing arrays
        of the pattern's kind are filled with zeros.
    """

    def __init__(self, pattern: DyadicPattern, h=None, v=None):
        self.pattern = pattern
        N, k = pattern.N, pattern.k
        shapes = [(2 ** (N - l), 2**l - 1, k, k) for l in range(1, N + 1)]
        self._h = self._v = None
        if pattern.kind in "hs":
            self._h = self._check_levels(h, shapes)
        if pattern.kind in "vs":
            self._v = self._check_levels(v, shapes)
        if pattern.kind == "s":
            # diagonal blocks live in both arrays; the horizontal copy wins
            v = [a.copy() for a in self._v]
            for l in range(1, N + 1):
                v[l - 1][:, 2 ** (l - 1) - 1] = self._h[l - 1][:, 2 ** (l - 1) - 1]
            self._v = [_frozen(a) for a in v]

    @staticmethod
    def _check_levels(levels, shapes):
        if levels is None:
            return [_frozen(np.zeros(s)) for s in shapes]
        if len(levels) != len(shapes):
            raise ValueError(f"expected {len(shapes)} level arrays, got {len(levels)}")
        out = []
        for a, s in zip(levels, shapes):
            a = np.asarray(a, dtype=float)
            if a.shape != s:
                raise ValueError(f"level array has shape {a.shape}, expected {s}")
            out.append(_frozen(a))
        return out

    # -- basic properties --------------------------------------------------
    N = property(lambda self: self.pattern.N)
    k = property(lambda self: self.pattern.k)
    kind = property(lambda self: self.pattern.kind)
    d = property(lambda self: self.pattern.d)
    n_blocks = property(lambda self: self.pattern.n_blocks)
    shape = property(lambda self: (self.d, self.d))

    @property
    def h(self) -> list:
        """Horizontal level arrays (row ``c``, columns ``span``), or None."""
        return self._h

    @property
    def v(self) -> list:
        """Vertical level arrays (rows ``span``, column ``c``), or None."""
        return self._v

    @property
    def stored_blocks(self) -> int:
        return self.pattern.n_stored()

    def __repr__(self):
        return f"DyadicMatrix(N={self.N}, k={self.k}, kind={self.kind!r}, d={self.d})"

    # -- construction ------------------------------------------------------
    @classmethod
    def from_dense(cls, M, pattern: DyadicPattern, tol: float = TAU_ZERO) -> "DyadicMatrix":
        """Extract the blocks of ``M``; entries outside the pattern must be below ``tol``."""
        M = np.asarray(M, dtype=float)
        d, nb, k = pattern.d, pattern.n_blocks, pattern.k
        if M.shape != (d, d):
            raise ValueError(f"matrix has shape {M.shape}, pattern needs {(d, d)}")
        M4 = M.reshape(nb, k, nb, k).transpose(0, 2, 1, 3)
        outside = ~_pattern_mask(pattern.N, pattern.kind)
        bad = outside & (np.abs(M4).max(axis=(2, 3)) > tol)
        if bad.any():
            i, j = (np.argwhere(bad)[0] + 1).tolist()
            raise PatternViolationError(
                f"block ({i}, {j}) has entries above {tol:g} outside the "
                f"{pattern.kind.upper()}D({pattern.N}, {k}) pattern", block=(i, j))
        h = v = None
        geo = [level_geometry(pattern.N, l) for l in range(1, pattern.N + 1)]
        if pattern.kind in "hs":
            h = [M4[c[:, None], sp] for c, sp in geo]
        if pattern.kind in "vs":
            v = [M4[sp, c[:, None]] for c, sp in geo]
        return cls(pattern, h, v)

    @classmethod
    def zeros(cls, N: int, k: int = 1, kind: str = "s") -> "DyadicMatrix":
        return cls(DyadicPattern(N, k, kind))

    @classmethod
    def identity(cls, N: int, k: int = 1, kind: str = "s") -> "DyadicMatrix":
        pat = DyadicPattern(N, k, kind)
        levels = []
        for l in range(1, N + 1):
            a = np.zeros((2 ** (N - l), 2**l - 1, k, k))
            a[:, 2 ** (l - 1) - 1] = np.eye(k)
            levels.append(a)
        return cls(pat, levels, [a.copy() for a in levels])

    def to_dense(self) -> np.ndarray:
        nb, k = self.n_blocks, self.k
        M4 = np.zeros((nb, nb, k, k))
        for l in range(1, self.N + 1):
            c, sp = level_geometry(self.N, l)
            if self._v is not None:
                M4[sp, c[:, None]] = self._v[l - 1]
            if self._h is not None:
                M4[c[:, None], sp] = self._h[l - 1]
        return M4.transpose(0, 2, 1, 3).reshape(self.d, self.d)

    # -- block access ------------------------------------------------------
    def block(self, i: int, j: int) -> np.ndarray:
        """Block in (1-based) block row ``i`` and column ``j``; zero if outside the pattern."""
        nb = self.n_blocks
        if not (1 <= i <= nb and 1 <= j <= nb):
            raise IndexError(f"block ({i}, {j}) outside 1..{nb}")
        from .dyadic_index import coord_of
        ri, li = coord_of(i)
        rj, lj = coord_of(j)
        if li >= lj and self._h is not None and abs(j - i) < 2 ** (li - 1):
            return self._h[li - 1][ri - 1, j - i + 2 ** (li - 1) - 1]
        if lj >= li and self._v is not None and abs(j - i) < 2 ** (lj - 1):
            return self._v[lj - 1][rj - 1, i - j + 2 ** (lj - 1) - 1]
        return np.zeros((self.k, self.k))

    def items(self):
        """Iterate ``((i, j), block)`` over stored blocks, level-major, position-minor."""
        for l in range(1, self.N + 1):
            c, sp = level_geometry(self.N, l)
            mid = 2 ** (l - 1) - 1
            for r in range(len(c)):
                if self._h is not None:
                    for t in range(sp.shape[1]):
                        yield (int(c[r]) + 1, int(sp[r, t]) + 1), self._h[l - 1][r, t]
                if self._v is not None:
                    for t in range(sp.shape[1]):
                        if self._h is not None and t == mid:
                            continue
                        yield (int(sp[r, t]) + 1, int(c[r]) + 1), self._v[l - 1][r, t]

    @property
    def blocks(self) -> dict:
        return dict(self.items())

    # -- structural operations ----------------------------------------------
    def transpose(self) -> "DyadicMatrix":
        h = _swap(self._v) if self._v is not None else None
        v = _swap(self._h) if self._h is not None else None
        return DyadicMatrix(self.pattern.transpose(), h, v)

    @property
    def T(self):
        return self.transpose()

    def subtree(self, r: int, l: int) -> "DyadicMatrix":
        """Principal submatrix on the span of ``(r, l)``, a pyramid of height ``l``."""
        if not (1 <= l <= self.N and 1 <= r <= 2 ** (self.N - l)):
            raise ValueError(f"invalid coordinate ({r}, {l})")

        def cut(levels):
            if levels is None:
                return None
            return [levels[m - 1][(r - 1) * 2 ** (l - m): r * 2 ** (l - m)] for m in range(1, l + 1)]

        return DyadicMatrix(DyadicPattern(l, self.k, self.kind), cut(self._h), cut(self._v))

    def support_mask(self, tol: float = 0.0) -> np.ndarray:
        """Boolean block mask of blocks holding an entry with magnitude above ``tol``."""
        M4 = self.to_dense().reshape(self.n_blocks, self.k, self.n_blocks, self.k)
        return np.abs(M4).max(axis=(1, 3)) > tol

    def batched(self, which: str):
        """Level arrays with a leading batch axis of length one."""
        levels = self._h if which == "h" else self._v
        return None if levels is None else [a[None] for a in levels]


# ---------------------------------------------------------------------------
# dyadic products

def _check_tall(M: DyadicMatrix, A) -> np.ndarray:
    A3 = _as_blocks(A, M.k)
    if A3.shape[0] != M.n_blocks:
        raise ValueError(f"tall operand has {A3.shape[0] * M.k} rows, expected {M.d}")
    return A3


def _reshape_out(out, A):
    A = np.asarray(A)
    return out.reshape(A.shape)


def multiply_hd_tall(H: DyadicMatrix, A, counter: FlopCounter | None = None) -> np.ndarray:
    """Product of a horizontal dyadic matrix with a ``d x q`` array."""
    if H.kind != "h":
        raise PatternViolationError("expected a horizontally dyadic matrix")
    A3 = _check_tall(H, A)
    out, _, mults, contrib = _hd_tall(H.batched("h"), A3[None])
    _count(counter, mults, contrib)
    return _reshape_out(out[0], A)


def multiply_vd_tall(V: DyadicMatrix, A, counter: FlopCounter | None = None) -> np.ndarray:
    """Product of a vertical dyadic matrix with a ``d x q`` array."""
    if V.kind != "v":
        raise PatternViolationError("expected a vertically dyadic matrix")
    A3 = _check_tall(V, A)
    out, _, mults, contrib = _vd_tall(V.batched("v"), A3[None])
    _count(counter, mults, contrib)
    return _reshape_out(out[0], A)


def multiply_sd_tall(S: DyadicMatrix, A, counter: FlopCounter | None = None) -> np.ndarray:
    """Product of a symmetric-pattern dyadic matrix with a ``d x q`` array.

    Each cross costs ``2**(l+1) - 3`` block multiplies, for a total of
    ``(2N - 3) 2**N + 3``.
    """
    if S.kind != "s":
        raise PatternViolationError("expected a symmetrically dyadic matrix")
    A3 = _check_tall(S, A)
    o1, _, m1, c1 = _hd_tall(S.batched("h"), A3[None])
    o2, _, m2, c2 = _vd_tall(S.batched("v"), A3[None], skip_center=True)
    _count(counter, m1 + m2, c1 + c2)
    return _reshape_out(o1[0] + o2[0], A)


def multiply_vd_vdt(P: DyadicMatrix, Q: DyadicMatrix, counter: FlopCounter | None = None) -> np.ndarray:
    """Dense ``P @ Q.T`` for two vertical dyadic matrices of equal shape.

    Summed column by column; the column at level ``l`` contributes
    ``(2**l - 1)**2`` block products.
    """
    if P.kind != "v" or Q.kind != "v":
        raise PatternViolationError("expected two vertically dyadic matrices")
    if (P.N, P.k) != (Q.N, Q.k):
        raise ValueError("operands have different shapes")
    nb, k = P.n_blocks, P.k
    out = np.zeros((nb, nb, k, k))
    contrib = np.zeros((nb, nb), dtype=np.int64)
    mults = 0
    for l in range(1, P.N + 1):
        c, sp = level_geometry(P.N, l)
        prods = np.einsum("rsab,rtcb->rstac", P.v[l - 1], Q.v[l - 1])
        out[sp[:, :, None], sp[:, None, :]] += prods
        contrib[sp[:, :, None], sp[:, None, :]] += 1
        mults += len(c) * sp.shape[1] ** 2
    _count(counter, mults, contrib)
    return out.transpose(0, 2, 1, 3).reshape(P.d, P.d)


def multiply_dense(X: DyadicMatrix, Y: DyadicMatrix) -> np.ndarray:
    """Plain dense product, for combinations without a dyadic closure (e.g. VD @ HD)."""
    return X.to_dense() @ Y.to_dense()


# ---------------------------------------------------------------------------
# derived-pattern matrices of the level sweep

class ElongatedMatrix:
    """Matrix with ED(N, l) pattern.

    ``blocks`` has shape ``(2**(N-l), 2**l - 2, k, q)``: column ``r`` holds
    its blocks in rows ``(r-1)(2**l - 2) + 1 .. r(2**l - 2)``.  ``support``
    (same leading shape, boolean) marks blocks that may be nonzero; None
    means the whole ED pattern.
    """

    def __init__(self, N: int, l: int, blocks, support=None):
        self.N, self.l = N, l
        blocks = np.asarray(blocks, dtype=float)
        expect = (2 ** (N - l), 2**l - 2)
        if blocks.shape[:2] != expect or blocks.ndim != 4:
            raise ValueError(f"ED({N},{l}) blocks need leading shape {expect}, got {blocks.shape}")
        self.blocks = blocks
        self.k = blocks.shape[2]
        self.support = None if support is None else np.asarray(support, dtype=bool)

    @classmethod
    def from_dense(cls, M, N: int, l: int, k: int, tol: float = TAU_ZERO) -> "ElongatedMatrix":
        M = np.asarray(M, dtype=float)
        rows, cols = DerivedPattern("ED", N, l).shape
        if M.shape != (rows * k, cols * k):
            raise ValueError(f"matrix has shape {M.shape}, expected {(rows * k, cols * k)}")
        M4 = M.reshape(rows, k, cols, k).transpose(0, 2, 1, 3)
        mask = DerivedPattern("ED", N, l).materialize().mask()
        bad = ~mask & (np.abs(M4).max(axis=(2, 3)) > tol)
        if bad.any():
            i, j = (np.argwhere(bad)[0] + 1).tolist()
            raise PatternViolationError(f"block ({i}, {j}) outside ED({N},{l})", block=(i, j))
        h = 2**l - 2
        r = np.arange(cols)
        blocks = M4[r[:, None] * h + np.arange(h)[None, :], r[:, None]]
        return cls(N, l, blocks)

    @property
    def pattern(self) -> DerivedPattern:
        return DerivedPattern("ED", self.N, self.l, self.k)

    def to_dense(self) -> np.ndarray:
        rows, cols = DerivedPattern("ED", self.N, self.l).shape
        k, q = self.blocks.shape[2:]
        M4 = np.zeros((rows, cols, k, q))
        h = 2**self.l - 2
        r = np.arange(cols)
        M4[r[:, None] * h + np.arange(h)[None, :], r[:, None]] = self.blocks
        return M4.transpose(0, 2, 1, 3).reshape(rows * k, cols * q)

    def block_support(self) -> BlockSparsityPattern:
        """Pattern of the blocks this object treats as structurally nonzero."""
        sup = np.ones(self.blocks.shape[:2], dtype=bool) if self.support is None else self.support
        return self._pattern_from(sup)

    def nonzero_support(self, tol: float = 0.0) -> BlockSparsityPattern:
        return self._pattern_from(np.abs(self.blocks).max(axis=(2, 3)) > tol)

    def _pattern_from(self, sup):
        h = 2**self.l - 2
        rr, tt = np.nonzero(sup)
        rows, cols = DerivedPattern("ED", self.N, self.l).shape
        return BlockSparsityPattern(np.column_stack([rr * h + tt + 1, rr + 1]), self.k, rows, cols)

    def halves(self):
        """Blocks regrouped by the ``2**(N-l+1)`` sub-pyramids of height ``l-1``."""
        n = 2 ** (self.N - self.l + 1)
        b = self.blocks.reshape((n, 2 ** (self.l - 1) - 1) + self.blocks.shape[2:])
        s = None if self.support is None else self.support.reshape(n, -1)
        return b, s


class BlockDiagonalMatrix:
    """Matrix with D(N, l) pattern: ``blocks`` has shape ``(2**(N-l), k, k)``."""

    def __init__(self, N: int, l: int, blocks):
        self.N, self.l = N, l
        self.blocks = np.asarray(blocks, dtype=float)
        if self.blocks.shape[0] != 2 ** (N - l) or self.blocks.ndim != 3:
            raise ValueError(f"D({N},{l}) needs {2 ** (N - l)} square blocks")
        self.k = self.blocks.shape[1]

    @property
    def pattern(self) -> DerivedPattern:
        return DerivedPattern("D", self.N, self.l, self.k)

    def to_dense(self) -> np.ndarray:
        from scipy.linalg import block_diag
        return block_diag(*self.blocks)


class IncompleteDyadic:
    """Block-diagonal stack of ``2**(N-l+1)`` dyadic matrices of height ``l-1``.

    This is the IH, IV or IS(N, l) pattern: the dyadic pattern with the
    crosses of levels ``>= l`` removed.  ``levels_h`` / ``levels_v`` carry a
    leading batch axis over the sub-pyramids.
    """

    def __init__(self, N: int, l: int, kind: str, levels_h=None, levels_v=None):
        if not 2 <= l <= N:
            raise ValueError(f"level {l} out of range 2..{N}")
        self.N, self.l, self.kind = N, l, kind
        self.levels_h = levels_h
        self.levels_v = levels_v
        ref = levels_h if levels_h is not None else levels_v
        self.k = ref[0].shape[-1]

    @classmethod
    def from_subs(cls, N: int, l: int, subs) -> "IncompleteDyadic":
        subs = list(subs)
        if len(subs) != 2 ** (N - l + 1) or any(s.N != l - 1 for s in subs):
            raise ValueError(f"need {2 ** (N - l + 1)} dyadic matrices of height {l - 1}")
        kind = subs[0].kind
        h = [np.stack([s.h[m] for s in subs]) for m in range(l - 1)] if kind in "hs" else None
        v = [np.stack([s.v[m] for s in subs]) for m in range(l - 1)] if kind in "vs" else None
        return cls(N, l, kind, h, v)

    @classmethod
    def from_pyramid(cls, M: DyadicMatrix, l: int) -> "IncompleteDyadic":
        """The levels ``< l`` of a full pyramid, regrouped by sub-pyramid (no copy)."""
        n = 2 ** (M.N - l + 1)

        def regroup(levels):
            if levels is None:
                return None
            return [levels[m - 1].reshape((n, -1) + levels[m - 1].shape[1:]) for m in range(1, l)]

        return cls(M.N, l, M.kind, regroup(M.h), regroup(M.v))

    @property
    def subs(self) -> list:
        pat = DyadicPattern(self.l - 1, self.k, self.kind)
        out = []
        for b in range(2 ** (self.N - self.l + 1)):
            h = None if self.levels_h is None else [a[b] for a in self.levels_h]
            v = None if self.levels_v is None else [a[b] for a in self.levels_v]
            out.append(DyadicMatrix(pat, h, v))
        return out

    @property
    def pattern(self) -> DerivedPattern:
        return DerivedPattern("I" + self.kind.upper(), self.N, self.l, self.k)

    def transpose(self) -> "IncompleteDyadic":
        kind = {"h": "v", "v": "h", "s": "s"}[self.kind]
        h = None if self.levels_v is None else _swap(self.levels_v)
        v = None if self.levels_h is None else _swap(self.levels_h)
        return IncompleteDyadic(self.N, self.l, kind, h, v)

    @property
    def T(self):
        return self.transpose()

    def to_dense(self) -> np.ndarray:
        from scipy.linalg import block_diag
        return block_diag(*[s.to_dense() for s in self.subs])


def multiply_patterned(X: IncompleteDyadic, E: ElongatedMatrix,
                       counter: FlopCounter | None = None) -> ElongatedMatrix:
    """``X @ E`` for X in IH(N,l) or IV(N,l) and E in ED(N,l); the result is in ED(N,l).

    Blocks of E outside ``E.support`` are skipped, so a refined input
    support produces a refined output support at proportionally lower cost.
    """
    if (X.N, X.l) != (E.N, E.l):
        raise PatternViolationError(f"IH/IV({X.N},{X.l}) does not conform with ED({E.N},{E.l})")
    A, sup = E.halves()
    if X.kind == "h":
        out, osup, mults, contrib = _hd_tall(X.levels_h, A, sup)
    elif X.kind == "v":
        out, osup, mults, contrib = _vd_tall(X.levels_v, A, sup)
    else:
        raise PatternViolationError("only IH and IV factors are supported")
    _count(counter, mults, contrib)
    n = 2 ** (E.N - E.l)
    support = None if sup is None else osup.reshape(n, -1)
    return ElongatedMatrix(E.N, E.l, out.reshape(E.blocks.shape), support)


def gram_ed(E: ElongatedMatrix, counter: FlopCounter | None = None) -> BlockDiagonalMatrix:
    """``E.T @ E``, which is block diagonal with pattern D(N, l)."""
    if E.support is None:
        out = np.einsum("rtia,rtib->rab", E.blocks, E.blocks)
        mults = E.blocks.shape[0] * E.blocks.shape[1]
        adds = mults - E.blocks.shape[0]
    else:
        masked = E.blocks * E.support[:, :, None, None]
        out = np.einsum("rtia,rtib->rab", masked, masked)
        per = E.support.sum(axis=1)
        mults = int(per.sum())
        adds = int(np.maximum(per - 1, 0).sum())
    if counter is not None:
        counter.add(multiplies=mults, adds=adds)
    return BlockDiagonalMatrix(E.N, E.l, out)


def ed_times_diag(E: ElongatedMatrix, D: BlockDiagonalMatrix,
                  counter: FlopCounter | None = None) -> ElongatedMatrix:
    """``E @ D`` for E in ED(N,l) and D in D(N,l); the result is in ED(N,l)."""
    if (E.N, E.l) != (D.N, D.l):
        raise PatternViolationError("ED and D patterns do not conform")
    out = np.matmul(E.blocks, D.blocks[:, None])
    if E.support is not None:
        out *= E.support[:, :, None, None]
        mults = int(E.support.sum())
    else:
        mults = E.blocks.shape[0] * E.blocks.shape[1]
    if counter is not None:
        counter.add(multiplies=mults)
    return ElongatedMatrix(E.N, E.l, out, E.support)


def refined_support_mask(N: int, l: int, prime: bool = False) -> np.ndarray:
    """ED~ (or ED~') support as a boolean array of shape ``(2**(N-l), 2**l - 2)``."""
    h = 2**l - 2
    offs = band_offsets(l) if prime else [0, 1]
    mask = np.zeros((2 ** (N - l), h), dtype=bool)
    for j in range(1, 2 ** (N - l) + 1):
        for t in offs:
            i = s_index(j, l) + t
            mask[j - 1, i - (j - 1) * h - 1] = True
    return mask


def multiply_patterned_band(H: IncompleteDyadic, E: ElongatedMatrix,
                            counter: FlopCounter | None = None,
                            tol: float = TAU_ZERO) -> ElongatedMatrix:
    """``H @ E`` for E supported on the refined pattern ED~(N, l).

    The output is supported on ED~'(N, l), and costs ``O(l)`` block
    products per column instead of ``O(l 2**l)``.
    """
    if H.kind != "h":
        raise PatternViolationError("expected an IH factor")
    ref = refined_support_mask(E.N, E.l)
    if E.support is None:
        outside = ~ref & (np.abs(E.blocks).max(axis=(2, 3)) > tol)
        if outside.any():
            raise PatternViolationError(f"E has blocks outside ED~({E.N},{E.l})")
        E = ElongatedMatrix(E.N, E.l, E.blocks * ref[:, :, None, None], ref)
    elif (E.support & ~ref).any():
        raise PatternViolationError(f"support of E exceeds ED~({E.N},{E.l})")
    return multiply_patterned(H, E, counter)


# ---------------------------------------------------------------------------
# subsampling and embedding

def subsample(S: DyadicMatrix, levels: int = 1) -> DyadicMatrix:
    """Remove the rows and columns of the lowest ``levels`` levels.

    The result is a dyadic matrix of height ``N - levels`` whose blocks are
    the corresponding source blocks.
    """
    if levels < 1:
        raise ValueError("levels must be positive")
    if S.N - levels < 1:
        raise ValueError(f"cannot remove {levels} level(s) from a pyramid of height {S.N}")
    step = 2**levels

    def keep(levs):
        if levs is None:
            return None
        # span entries at multiples of 2**levels survive; offset from span start
        return [levs[m - 1][:, step - 1::step] for m in range(levels + 1, S.N + 1)]

    return DyadicMatrix(DyadicPattern(S.N - levels, S.k, S.kind), keep(S.h), keep(S.v))


def embed_irregular(M, placement, N: int, k: int, tol: float = TAU_ZERO) -> DyadicMatrix:
    """Embed an irregular matrix into a regular symmetric dyadic one.

    Parameters
    ----------
    M : (d', d') array_like
        Source matrix.
    placement : sequence of int
        Strictly increasing 1-based target index for every row of ``M``.
    N, k : int
        Height and breadth of the target pattern.

    Returns
    -------
    DyadicMatrix
        Matrix of size ``k (2**N - 1)`` with ``M`` at the placed rows and
        columns, ones on the remaining diagonal and zeros elsewhere.
    """
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        M = M.reshape(0, 0)
    pattern = DyadicPattern(N, k, "s")
    d = pattern.d
    p = np.asarray(placement, dtype=np.int64).reshape(-1)
    if M.shape != (len(p), len(p)):
        raise ValueError(f"placement has {len(p)} entries for a matrix of shape {M.shape}")
    if len(p) and (p.min() < 1 or p.max() > d):
        raise ValueError(f"placement must lie in 1..{d}")
    if np.any(np.diff(p) <= 0):
        raise ValueError("placement must be strictly increasing")
    out = np.eye(d)
    out[np.ix_(p - 1, p - 1)] = M
    return DyadicMatrix.from_dense(out, pattern, tol=tol)


def detect_parameters(M, tol: float = TAU_ZERO, kind: str = "s") -> tuple[int, int]:
    """Height and breadth ``(N, k)`` of a dyadic pattern containing the support of ``M``.

    Every factorization ``d = k (2**N - 1)`` is checked.  Patterns with
    ``N <= 2`` are full, so they are used only when no taller one fits;
    otherwise the largest fitting ``k`` wins.

    Raises
    ------
    PatternViolationError
        If no candidate contains the support.
    """
    M = np.asarray(M)
    d = M.shape[0]
    if M.shape != (d, d) or d == 0:
        raise ValueError("expected a nonempty square matrix")
    nz = np.abs(M) > tol
    fits = []
    for N in range(1, MAX_HEIGHT + 1):
        m = 2**N - 1
        if m > d:
            break
        if d % m:
            continue
        k = d // m
        mask = np.kron(_pattern_mask(N, kind), np.ones((k, k), dtype=bool))
        if not np.any(nz & ~mask):
            fits.append((N, k))
    if not fits:
        raise PatternViolationError(f"no dyadic pattern of size {d} contains the support")
    tall = [f for f in fits if f[0] >= 3]
    return max(tall or fits, key=lambda f: f[1])
