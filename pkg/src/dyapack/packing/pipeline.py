"""Packing pipeline and its diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateConfigurationError
from .embedding import (configuration_to_permutation, flesh_to_body, local_mds,
                        skeleton_select)
from .graph import NeighborGraph, half_widths, neighborhoods, symm_diff_distance, t_order
from .permutation import Permutation


@dataclass
class PackingReport:
    """Bandwidth-type statistics of a matrix under a permutation.

    Attributes
    ----------
    half_width_l1 : int
        Sum of the per-row half-widths ``l_i``.
    half_bandwidth : int
        Largest ``l_i``.
    half_widths : ndarray
    densities : ndarray
        ``|D_i| / (2 l_i + 1)``.
    eta_bar : float
        Mean density.
    fill : float
        Nonzeros of the ``s``-th power over the entries of the band of
        half-bandwidth ``s * lam``.
    s : int
    delta : dict
        ``m -> delta_m`` for the requested ``m``.
    """

    d: int
    half_width_l1: int
    half_bandwidth: int
    half_widths: np.ndarray = field(repr=False)
    densities: np.ndarray = field(repr=False)
    eta_bar: float
    fill: float
    s: int = 1
    delta: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        row = {
            "d": self.d,
            "half_width_l1": self.half_width_l1,
            "half_width_l1_per_row": self.half_width_l1 / self.d,
            "half_bandwidth": self.half_bandwidth,
            "eta_bar": self.eta_bar,
            "s": self.s,
            "fill": self.fill,
        }
        for m, v in sorted(self.delta.items()):
            row[f"delta_{m}"] = v
        return row


def band_count(d: int, w: int) -> int:
    """Number of entries ``(i, j)`` of a ``d x d`` matrix with ``|i - j| <= w``."""
    w = min(max(w, 0), d - 1) if d else 0
    return d * (2 * w + 1) - w * (w + 1)


def delta_m(G: NeighborGraph, pi: Permutation, m: int, A=None) -> float:
    """Mean of ``|G_pi - A|`` over pairs with ``|pi(i) - pi(j)| <= m``, normalized by ``d m``."""
    A = symm_diff_distance(G) if A is None else A
    Gp = pi.distance_matrix()
    mask = Gp <= m
    return float(np.abs(Gp - A)[mask].sum() / (G.d * m))


def report_stats(S, pi: Permutation, m=None, s: int = 1, lam: int | None = None) -> PackingReport:
    """Statistics of ``S`` under ``pi``.

    Parameters
    ----------
    S : array_like, sparse matrix or NeighborGraph
    pi : Permutation
    m : int or sequence of int, optional
        Window(s) for ``delta_m``.
    s : int
        Power used for the fill ratio.
    lam : int, optional
        Half-bandwidth defining the reference band of the fill ratio;
        defaults to the half-bandwidth of ``S`` under ``pi``.
    """
    G = neighborhoods(S)
    d = G.d
    if pi.d != d:
        raise ValueError("permutation and matrix sizes differ")
    l = half_widths(G, pi.image)
    sizes = G.sizes
    eta = sizes / (2 * l + 1)
    linf = int(l.max()) if d else 0
    lam = linf if lam is None else lam
    nnz_s = len(t_order(G, s).indices) if s > 1 else len(G.indices)
    fill = nnz_s / band_count(d, s * lam)
    deltas = {}
    if m is not None:
        A = symm_diff_distance(G)
        for mm in np.atleast_1d(m):
            deltas[int(mm)] = delta_m(G, pi, int(mm), A)
    return PackingReport(d, int(l.sum()), linf, l, eta, float(eta.mean()), float(fill), s, deltas)


@dataclass
class BoundsDiagnostics:
    """Approximation-quality bounds for the symmetric-difference distance.

    Attributes
    ----------
    Q : float
        Upper bound on the mean discrepancy over all pairs.
    Q_terms : tuple of float
        The half-width term and the neighbor-count term of ``Q``.
    delta_d : float
        The quantity ``Q`` bounds.
    m_bound, delta_window : float or None
        Windowed bound and the windowed discrepancy it bounds.
    pair_mask : ndarray of bool
        Pairs ``i != j`` with ``|l_i - l_j| <= |pi(i) - pi(j)| <= l_i + l_j``.
    pair_bound, pair_gap : ndarray
        Per-pair bound and the actual ``|G_pi - A|``.
    """

    Q: float
    Q_terms: tuple
    delta_d: float
    m: int | None
    m_bound: float | None
    delta_window: float | None
    pair_mask: np.ndarray = field(repr=False)
    pair_bound: np.ndarray = field(repr=False)
    pair_gap: np.ndarray = field(repr=False)

    @property
    def pair_bound_holds(self) -> bool:
        return bool(np.all(self.pair_gap[self.pair_mask] <= self.pair_bound[self.pair_mask] + 1e-12))


def bounds_diagnostics(S, pi: Permutation, m: int | None = None) -> BoundsDiagnostics:
    """Evaluate the pairwise, windowed and global discrepancy bounds."""
    G = neighborhoods(S)
    d = G.d
    A = symm_diff_distance(G)
    Gp = pi.distance_matrix().astype(float)
    gap = np.abs(Gp - A)
    l = half_widths(G, pi.image).astype(float)
    n = G.sizes.astype(float)
    excess = 2 * l + 1 - n

    q1 = 2 * (d - 1) / d**2 * l.sum()
    q2 = (d * (d - 1) - (d - 1) * n.sum()) / d**2
    delta_d = float(gap.sum() / d**2)

    m_bound = delta_win = None
    if m is not None:
        p = pi.image + 1
        head = p <= m
        tail = p >= d - m + 1
        corr = np.sum(((m + 1 - p[head]) / m) * excess[head])
        corr += np.sum(((m - d + p[tail]) / m) * excess[tail])
        m_bound = float(4 / d * l.sum() + 2 / d * np.sum(1 - n) - corr / d)
        delta_win = delta_m(G, pi, m, A)

    mask = (np.abs(l[:, None] - l[None, :]) <= Gp) & (Gp <= l[:, None] + l[None, :])
    np.fill_diagonal(mask, False)
    bound = 0.5 * (excess[:, None] + excess[None, :])
    return BoundsDiagnostics(float(q1 + q2), (float(q1), float(q2)), delta_d, m, m_bound,
                             delta_win, mask, bound, gap)


def pack(S, t: int = 1, seed=None, start: int | None = None):
    """Find a permutation that packs the nonzeros of ``S`` close to the diagonal.

    Parameters
    ----------
    S : array_like, sparse matrix or NeighborGraph
        Symmetric 0-1 pattern with a connected graph.
    t : int
        Neighborhood order: distances are built from ``D_i(t)``.
    seed : int or Generator, optional
    start : int, optional
        Force the first skeleton row.

    Returns
    -------
    pi : Permutation
    report : PackingReport
        Statistics of ``S`` under ``pi`` (fill computed for power ``t``).

    Raises
    ------
    DisconnectedError
        With the list of components when ``S`` is reducible.
    """
    G = neighborhoods(S)
    d = G.d
    if d <= 1:
        pi = Permutation.identity(d)
        return pi, report_stats(G, pi, s=t)
    G.require_connected()
    Gt = t_order(G, t) if t > 1 else G
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    sk = skeleton_select(Gt, rng, start)
    Y = np.full((d, len(sk)), np.nan)
    for c, i in enumerate(sk.members):
        Di = Gt.D(i)
        try:
            x = local_mds(symm_diff_distance(Gt, Di))
        except DegenerateConfigurationError:
            # all members share one neighbor set: no ordering information
            x = np.zeros(len(Di))
        Y[Di, c] = x
    x = flesh_to_body(Y, sk.member_labels)
    pi = configuration_to_permutation(x)
    return pi, report_stats(G, pi, s=t)
