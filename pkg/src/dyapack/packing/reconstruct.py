"""Recovering positions from distance matrices.

Two exact reconstructions: a permutation from its distance matrix
``|pi(i) - pi(j)|``, and real points on a line from the distances to their
two nearest bracketing points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NotAPermutationMetricError, ReconstructionError
from .permutation import Permutation


def reconstruct_from_distance(G) -> Permutation:
    """Permutation ``gamma`` with ``|gamma(i) - gamma(j)| = G[i, j]``.

    The chain of unit distances is walked from its lowest-indexed end, so
    the result is either the generating permutation or its reversal.

    Raises
    ------
    NotAPermutationMetricError
        If ``G`` is not the distance matrix of a permutation.
    """
    G = np.asarray(G)
    d = G.shape[0]
    if G.shape != (d, d):
        raise NotAPermutationMetricError("matrix must be square")
    if d == 1:
        return Permutation([0])
    unit = G == 1
    deg = unit.sum(axis=1)
    ends = np.flatnonzero(deg == 1)
    if len(ends) != 2 or np.any(deg > 2):
        raise NotAPermutationMetricError("unit-distance graph is not a simple path")
    alpha = [int(ends[0])]
    prev = -1
    for _ in range(d - 1):
        cur = alpha[-1]
        nxt = [int(j) for j in np.flatnonzero(unit[cur]) if j != prev]
        if len(nxt) != 1:
            raise NotAPermutationMetricError(f"no unique unit neighbor after row {cur}")
        prev = cur
        alpha.append(nxt[0])
    if len(set(alpha)) != d:
        raise NotAPermutationMetricError("unit-distance chain revisits a row")
    gamma = Permutation.from_order(alpha)
    if not np.array_equal(gamma.distance_matrix(), G):
        raise NotAPermutationMetricError("distances disagree with the unit-distance chain")
    return gamma


@dataclass
class NeighborInfo:
    """Nearest-bracket summary of points on a line.

    Attributes
    ----------
    d : int
    endpoints : tuple of int
        The two extreme points.
    brackets : dict
        ``i -> ((j1, rho1), (j2, rho2))``: the closest pair ``j1, j2`` with
        ``i`` between them, and the distances from ``i`` to each.
    gap : float or None
        Distance between the two points when ``d == 2``.
    """

    d: int
    endpoints: tuple
    brackets: dict
    gap: float | None = None


def nearest_neighbor_info(G, rtol: float = 1e-12) -> NeighborInfo:
    """Extract the bracket summary from a distance matrix of distinct points."""
    G = np.asarray(G, dtype=float)
    d = G.shape[0]
    if d == 1:
        return NeighborInfo(1, (0, 0), {})
    if d == 2:
        return NeighborInfo(2, (0, 1), {}, float(G[0, 1]))
    tol = rtol * max(1.0, float(np.abs(G).max()))
    brackets = {}
    ends = []
    for i in range(d):
        between = np.abs(G[i][:, None] + G[i][None, :] - G) <= tol
        between[i, :] = between[:, i] = False
        np.fill_diagonal(between, False)
        if not between.any():
            ends.append(i)
            continue
        cand = np.where(between, G, np.inf)
        a, b = np.unravel_index(np.argmin(cand), cand.shape)
        a, b = min(a, b), max(a, b)
        brackets[i] = ((int(a), float(G[i, a])), (int(b), float(G[i, b])))
    if len(ends) != 2:
        raise ReconstructionError(f"expected two extreme points, found {len(ends)}")
    return NeighborInfo(d, (ends[0], ends[1]), brackets)


def reconstruct_points(info: NeighborInfo) -> np.ndarray:
    """Rebuild coordinates (up to shift and reflection) from a bracket summary.

    Starting at one extreme point, the next point is the unique unused one
    whose bracket contains the current point; it sits at the bracket
    distance.  The far extreme point is placed from the last bracket.
    """
    d = info.d
    if d == 1:
        return np.zeros(1)
    if d == 2:
        if info.gap is None:
            raise ReconstructionError("two-point summary needs the gap")
        y = np.zeros(2)
        y[info.endpoints[1]] = info.gap
        return y
    if len(info.brackets) != d - 2:
        raise ReconstructionError(f"expected {d - 2} bracketed points, got {len(info.brackets)}")
    start, stop = info.endpoints
    y = np.full(d, np.nan)
    y[start] = 0.0
    used = {start}
    prev = start
    for _ in range(d - 2):
        hits = [(i, rho) for i, pair in info.brackets.items() if i not in used
                for j, rho in pair if j == prev]
        if len(hits) != 1:
            raise ReconstructionError(f"no unique successor of point {prev}")
        i, rho = hits[0]
        y[i] = y[prev] + rho
        used.add(i)
        prev = i
    last = [rho for j, rho in info.brackets[prev] if j == stop]
    if not last:
        raise ReconstructionError(f"bracket of point {prev} does not reach the far end")
    y[stop] = y[prev] + last[0]
    return y
