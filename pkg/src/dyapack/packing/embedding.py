"""One-dimensional configurations from local distance information.

A skeleton is a sequence of rows whose neighbor sets cover every row and
overlap their predecessors.  Each skeleton row gets a local 1-D
configuration of its neighbor set by classical scaling; the local pieces
are then glued one by one with a reflection and a shift (1-D Procrustes),
and the ranks of the glued coordinates give the packing permutation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import (AlignmentError, DegenerateConfigurationError, IncompleteConfigurationError)
from .graph import NeighborGraph, bfs_levels
from .permutation import Permutation


@dataclass(frozen=True)
class Skeleton:
    """Covering sequence of rows.

    Attributes
    ----------
    members : ndarray
        Skeleton rows in selection order.
    member_labels : ndarray
        Graph distance of each member from the first member.
    labels : ndarray
        Graph distance of every row from the first member (its outskirt).
    """

    members: np.ndarray
    member_labels: np.ndarray
    labels: np.ndarray

    def __len__(self):
        return len(self.members)


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def skeleton_select(G: NeighborGraph, seed=None, start: int | None = None) -> Skeleton:
    """Select a covering skeleton, sweeping outward from a starting row.

    The first member is ``start`` (random if None).  For each outskirt
    ``L(r)``, ``r >= 2``, rows of ``L(r)`` not yet covered are visited in
    random order; each visit adds the row of ``L(r-1)`` adjacent to it that
    has the largest neighbor set (ties at random), and marks that row's
    neighbor set as covered.

    Raises
    ------
    DisconnectedError
        When some rows cannot be reached from the start.
    """
    rng = _rng(seed)
    G.require_connected()
    d = G.d
    first = int(rng.integers(d)) if start is None else int(start)
    if not 0 <= first < d:
        raise ValueError(f"start row {first} out of range")
    dist = bfs_levels(G, first)
    sizes = G.sizes
    members, mlabels = [first], [0]
    for r in range(2, int(dist.max()) + 1):
        todo = dist == r
        while todo.any():
            j = rng.choice(np.flatnonzero(todo))
            Dj = G.D(j)
            W = Dj[dist[Dj] == r - 1]
            best = W[sizes[W] == sizes[W].max()]
            iz = int(best[0]) if len(best) == 1 else int(rng.choice(best))
            members.append(iz)
            mlabels.append(r - 1)
            todo[G.D(iz)] = False
    return Skeleton(np.array(members, dtype=np.int64), np.array(mlabels, dtype=np.int64), dist)


def local_mds(A_sub, tol: float = 1e-12) -> np.ndarray:
    """Classical scaling of a distance matrix onto one coordinate.

    Parameters
    ----------
    A_sub : (m, m) array_like
        Symmetric distance matrix with zero diagonal.

    Returns
    -------
    x : ndarray of shape (m,)
        ``sqrt(lam1) * v1`` for the leading eigenpair of the double-centred
        squared distances.  The sign is fixed so that the entry of largest
        magnitude (first one on ties) is positive.

    Raises
    ------
    DegenerateConfigurationError
        If the leading eigenvalue is not positive.
    """
    A = np.asarray(A_sub, dtype=float)
    m = A.shape[0]
    if A.shape != (m, m):
        raise ValueError("distance matrix must be square")
    if m == 1:
        return np.zeros(1)
    K = A**2
    B = -0.5 * (K - K.mean(axis=0)[None, :] - K.mean(axis=1)[:, None] + K.mean())
    w, V = np.linalg.eigh(B)
    lam, v = w[-1], V[:, -1]
    if lam <= tol * max(1.0, np.abs(B).max()):
        raise DegenerateConfigurationError(f"leading eigenvalue {lam:.3g} is not positive")
    a = np.abs(v)
    # first entry within rounding of the largest magnitude decides the sign
    if v[np.flatnonzero(a >= a.max() * (1 - 1e-9))[0]] < 0:
        v = -v
    return np.sqrt(lam) * v


def flesh_to_body(Y, labels=None, window: int = 2) -> np.ndarray:
    """Glue local configurations into one coordinate per row.

    Parameters
    ----------
    Y : (d, n) array_like
        Column ``c`` holds the local configuration of the ``c``-th skeleton
        member on its neighbor set and NaN elsewhere.
    labels : (n,) array_like, optional
        Outskirt label of each skeleton member.  Column ``c`` is aligned only
        against earlier columns whose label differs by at most ``window``.

    Returns
    -------
    x : ndarray of shape (d,)
        Mean of the aligned values of each row (NaN where no column is defined).

    Raises
    ------
    AlignmentError
        If a column shares no defined row with the earlier columns.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise ValueError("Y must be two-dimensional")
    d, n = Y.shape
    aligned = np.full_like(Y, np.nan)
    if n == 0:
        return np.full(d, np.nan)
    aligned[:, 0] = Y[:, 0]
    labels = None if labels is None else np.asarray(labels)
    for c in range(1, n):
        rows = np.flatnonzero(~np.isnan(Y[:, c]))
        prev = np.arange(c)
        if labels is not None:
            prev = prev[np.abs(labels[:c] - labels[c]) <= window]
        sub = aligned[np.ix_(rows, prev)]
        ok = ~np.isnan(sub)
        if not ok.any():
            raise AlignmentError(f"column {c} shares no row with the columns aligned before it")
        yt = sub[ok]
        y = np.broadcast_to(Y[rows, c][:, None], sub.shape)[ok]
        s = np.sum((yt - yt.mean()) * (y - y.mean()))
        a = -1.0 if s < 0 else 1.0
        b = np.mean(yt - a * y)
        aligned[rows, c] = a * Y[rows, c] + b
    with np.errstate(invalid="ignore"):
        counts = np.sum(~np.isnan(aligned), axis=1)
        total = np.nansum(aligned, axis=1)
        return np.where(counts > 0, total / np.maximum(counts, 1), np.nan)


def configuration_to_permutation(x) -> Permutation:
    """Rank the coordinates: row ``i`` goes to the position of ``x[i]`` in sorted order.

    Ties are broken by row index.
    """
    x = np.asarray(x, dtype=float)
    if np.isnan(x).any():
        missing = np.flatnonzero(np.isnan(x))
        raise IncompleteConfigurationError(f"{len(missing)} coordinate(s) undefined, e.g. row {missing[0]}")
    order = np.lexsort((np.arange(len(x)), x))
    return Permutation.from_order(order)
