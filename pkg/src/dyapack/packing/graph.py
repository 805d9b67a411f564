"""Neighbor sets of sparse symmetric 0-1 matrices.

Row ``i`` of a symmetric 0-1 matrix defines ``D_i = {j : S_ij != 0} + {i}``.
The t-order neighborhoods ``D_i(t)`` collect the rows within ``t`` steps
of ``i`` in the graph of the matrix, and the outskirts ``L_i(t)`` are the
rows at exactly ``t`` steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from ..errors import DisconnectedError


@dataclass(frozen=True)
class NeighborGraph:
    """Family of sorted neighbor sets in CSR layout (0-based, self included)."""

    indptr: np.ndarray
    indices: np.ndarray

    @property
    def d(self) -> int:
        return len(self.indptr) - 1

    def D(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    @property
    def sizes(self) -> np.ndarray:
        return np.diff(self.indptr)

    def adjacency(self) -> sp.csr_array:
        """Boolean matrix with ones on every ``(i, j)``, ``j`` in ``D_i``."""
        data = np.ones(len(self.indices), dtype=bool)
        return sp.csr_array((data, self.indices, self.indptr), shape=(self.d, self.d))

    def components(self) -> list[np.ndarray]:
        n, labels = csgraph.connected_components(self.adjacency(), directed=False)
        return [np.flatnonzero(labels == c) for c in range(n)]

    def is_connected(self) -> bool:
        return self.d <= 1 or csgraph.connected_components(self.adjacency(), directed=False)[0] == 1

    def require_connected(self):
        comps = self.components()
        if len(comps) > 1:
            sizes = ", ".join(str(len(c)) for c in comps[:10])
            raise DisconnectedError(
                f"matrix splits into {len(comps)} independent blocks (sizes {sizes}"
                f"{', ...' if len(comps) > 10 else ''}); pack each block separately",
                components=comps)

    def subgraph(self, rows) -> "NeighborGraph":
        """Induced graph on ``rows`` (relabelled 0..len(rows)-1)."""
        A = self.adjacency()[rows][:, rows]
        return _from_csr(sp.csr_array(A))


def _from_csr(A) -> NeighborGraph:
    A = sp.csr_array(A, dtype=bool)
    A = (A + sp.eye_array(A.shape[0], dtype=bool, format="csr")).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return NeighborGraph(A.indptr.astype(np.int64), A.indices.astype(np.int64))


def neighborhoods(S, tol: float = 0.0) -> NeighborGraph:
    """Neighbor sets of a symmetric matrix; entries with ``|S_ij| <= tol`` count as zero.

    Raises
    ------
    ValueError
        If the nonzero structure is not symmetric.
    """
    if isinstance(S, NeighborGraph):
        return S
    if sp.issparse(S):
        A = sp.csr_array(S)
        A = sp.csr_array(abs(A) > tol)
    else:
        S = np.asarray(S)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise ValueError("expected a square matrix")
        A = sp.csr_array(np.abs(S) > tol)
    A.eliminate_zeros()
    if (A != A.T).nnz:
        raise ValueError("nonzero structure is not symmetric")
    return _from_csr(A)


def t_order(G: NeighborGraph, t: int) -> NeighborGraph:
    """Neighbor sets ``D_i(t)`` of the t-th power of the matrix."""
    if t < 1:
        raise ValueError("order must be at least 1")
    A = G.adjacency().astype(np.int32)
    P = A
    for _ in range(t - 1):
        P = sp.csr_array((P @ A) > 0).astype(np.int32)
    return _from_csr(P)


def bfs_levels(G: NeighborGraph, i: int) -> np.ndarray:
    """Graph distance from ``i`` to every row (``-1`` when unreachable)."""
    dist = csgraph.shortest_path(G.adjacency(), unweighted=True, directed=False, indices=i)
    out = np.where(np.isinf(dist), -1, dist).astype(np.int64)
    return out


def outskirts(G: NeighborGraph, i: int) -> list[np.ndarray]:
    """``[L_i(0), L_i(1), ...]`` up to the last nonempty level."""
    dist = bfs_levels(G, i)
    return [np.flatnonzero(dist == t) for t in range(dist.max() + 1)]


def symm_diff_distance(G: NeighborGraph, rows=None) -> np.ndarray:
    """``|D_a symmetric-difference D_b| / 2`` for all pairs of ``rows`` (default: all rows)."""
    B = G.adjacency().astype(np.int32)
    if rows is not None:
        rows = np.asarray(rows, dtype=np.int64)
        B = B[rows]
    sizes = np.asarray(B.sum(axis=1)).ravel().astype(float)
    inter = (B @ B.T).toarray().astype(float)
    return 0.5 * (sizes[:, None] + sizes[None, :] - 2.0 * inter)


def half_widths(G: NeighborGraph, image) -> np.ndarray:
    """``l_i = max_{j in D_i} |pi(i) - pi(j)|`` for a position array ``image``."""
    pos = np.asarray(image, dtype=np.int64)
    rows = np.repeat(np.arange(G.d), G.sizes)
    diffs = np.abs(pos[rows] - pos[G.indices])
    return np.maximum.reduceat(diffs, G.indptr[:-1]) if G.d else np.zeros(0, dtype=np.int64)
