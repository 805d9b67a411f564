"""Recursive extraction of separators from packed dyadic-like matrices.

After packing, a symmetric dyadic matrix shows its central cross as a
small set of rows through which every nonzero linking the left part to the
right part must pass.  Removing it leaves two independent blocks, each of
which is packed and split again.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import maximum_bipartite_matching

from .graph import NeighborGraph, half_widths, neighborhoods
from .permutation import Permutation
from .pipeline import pack


@dataclass
class SeparatorNode:
    """Node of the recovered block tree (0-based indices into the input).

    A leaf has an empty ``separator`` and lists its rows in ``leaf`` in
    packed order.
    """

    separator: np.ndarray
    left: "SeparatorNode | None" = None
    right: "SeparatorNode | None" = None
    leaf: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def is_leaf(self) -> bool:
        return self.left is None and self.right is None

    def order(self) -> np.ndarray:
        """Rows in left-block, separator, right-block order."""
        if self.is_leaf:
            return self.leaf
        return np.concatenate([self.left.order(), self.separator, self.right.order()])

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())

    def separators(self, level: int = 0) -> list:
        """``(level, separator)`` pairs, breadth-first from the root."""
        out, queue = [], [(0, self)]
        while queue:
            lev, node = queue.pop(0)
            if not node.is_leaf:
                out.append((lev, node.separator))
                queue += [(lev + 1, node.left), (lev + 1, node.right)]
        return out


def min_vertex_cover_bipartite(B: sp.csr_array) -> tuple[np.ndarray, np.ndarray]:
    """Minimum vertex cover of a bipartite graph given by its biadjacency matrix.

    Returns the covered row and column indices (Konig's construction from
    a maximum matching).
    """
    B = sp.csr_array(B, dtype=bool)
    nu, nv = B.shape
    if B.nnz == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    match_u = maximum_bipartite_matching(B, perm_type="column")
    match_v = np.full(nv, -1, dtype=np.int64)
    mu = np.flatnonzero(match_u >= 0)
    match_v[match_u[mu]] = mu
    visited_u = np.zeros(nu, dtype=bool)
    visited_v = np.zeros(nv, dtype=bool)
    stack = list(np.flatnonzero(match_u < 0))
    visited_u[stack] = True
    while stack:
        u = stack.pop()
        for v in B.indices[B.indptr[u]:B.indptr[u + 1]]:
            if not visited_v[v]:
                visited_v[v] = True
                w = match_v[v]
                if w >= 0 and not visited_u[w]:
                    visited_u[w] = True
                    stack.append(w)
    return np.flatnonzero(~visited_u & (np.diff(B.indptr) > 0)), np.flatnonzero(visited_v)


def find_separator(G: NeighborGraph, pi: Permutation, width: int | None = None):
    """Smallest set of rows cutting the packed matrix into a left and a right block.

    Split points ``c`` in the middle third of the packed order are scanned.
    For each, the rows whose neighbor sets straddle ``c`` form a bipartite
    graph whose minimum vertex cover is the separator.  A candidate is kept
    when both remaining blocks are nonempty and the separator is narrower
    than ``width`` (default: the half-bandwidth under ``pi``).  The smallest
    separator wins, ties going to the most central ``c``.

    Returns
    -------
    (left, separator, right) as arrays of rows, or None.
    """
    d = G.d
    if d < 3:
        return None
    pos = pi.image
    order = pi.order()
    if width is None:
        width = int(half_widths(G, pos).max())
    A = G.adjacency().tocoo()
    pu, pv = pos[A.row], pos[A.col]
    best = None
    lo, hi = int(np.ceil(d / 3)), int(np.floor(2 * d / 3))
    for c in range(max(lo, 1), min(hi, d - 1) + 1):
        # edges from positions < c to positions >= c
        cross = (pu < c) & (pv >= c)
        if not cross.any():
            continue
        u, v = pu[cross], pv[cross] - c
        B = sp.csr_array((np.ones(len(u), dtype=bool), (u, v)), shape=(c, d - c))
        cu, cv = min_vertex_cover_bipartite(B)
        size = len(cu) + len(cv)
        if size >= width or size >= c or size >= d - c:
            continue
        left_n, right_n = c - len(cu), d - c - len(cv)
        if left_n == 0 or right_n == 0:
            continue
        key = (size, abs(2 * c - d))
        if best is None or key < best[0]:
            best = (key, c, cu, cv + c)
    if best is None:
        return None
    _, c, cu, cv = best
    sep_pos = np.concatenate([cu, cv])
    in_sep = np.zeros(d, dtype=bool)
    in_sep[sep_pos] = True
    positions = np.arange(d)
    left = order[(positions < c) & ~in_sep]
    right = order[(positions >= c) & ~in_sep]
    return left, order[np.sort(sep_pos)], right


def recursive_dyadic_pack(S, max_depth: int | None = None, seed=None, t: int = 2,
                          min_rows: int = 3):
    """Recover a nested-dissection tree from a permuted dyadic-like pattern.

    Each block is packed with neighborhood orders ``t`` and 1 and split by
    :func:`find_separator`, keeping the smaller separator; the two sides are processed recursively until
    no separator qualifies, the block gets smaller than ``min_rows`` or
    ``max_depth`` separators have been extracted along a branch.

    Returns
    -------
    pi : Permutation
        Rows placed in left-block, separator, right-block order, recursively.
    tree : SeparatorNode
    """
    G = neighborhoods(S)
    G.require_connected()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    def build(rows: np.ndarray, depth: int) -> SeparatorNode:
        sub = G.subgraph(rows) if len(rows) < G.d else G
        if len(rows) < min_rows or not sub.is_connected():
            return SeparatorNode(np.zeros(0, dtype=np.int64), leaf=rows)
        best, packed = None, None
        for tt in dict.fromkeys((t, 1)):
            # a dense cross makes the t-th power full, so order 1 is always tried too
            pi, _ = pack(sub, t=tt, seed=rng)
            if packed is None:
                packed = rows[pi.order()]
            if max_depth is not None and depth >= max_depth:
                break
            split = find_separator(sub, pi)
            if split is not None:
                key = (len(split[1]), abs(len(split[0]) - len(split[2])))
                if best is None or key < best[0]:
                    best = (key, split)
        if best is None:
            return SeparatorNode(np.zeros(0, dtype=np.int64), leaf=packed)
        left, sep, right = best[1]
        return SeparatorNode(rows[sep], build(rows[left], depth + 1), build(rows[right], depth + 1))

    tree = build(np.arange(G.d), 0)
    return Permutation.from_order(tree.order()), tree
