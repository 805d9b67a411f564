"""Repeated packing experiments on the generator families.

Each study sweeps a parameter grid and, for every cell, repeats
generate -> randomly permute -> pack, collecting per-replicate statistics
and their mean and standard deviation.  Seeds for replicate ``rep`` of
cell ``cell`` come from ``SeedSequence(seed, spawn_key=(cell, rep))``, so a
cell's results do not depend on the rest of the grid.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import generators as gen
from .errors import DyapackError
from .packing import Permutation, apply_permutation, pack, random_permutation, report_stats
from .packing.separators import recursive_dyadic_pack

STUDIES = ("band", "block_tridiagonal", "dyadic", "banded_dyadic")

DEFAULT_GRIDS = {
    "band": {"d": [255], "lam": [10], "p": [0.25, 0.5, 0.75], "s": [1, 2, 3]},
    "block_tridiagonal": {"N": [4], "k": [10], "p": [0.5, 0.75], "s": [2]},
    "dyadic": {"N": [3], "k": [5], "p": [1.0]},
    "banded_dyadic": {"N": [5], "k": [10], "p": [0.5], "lam": [60], "s": [2]},
}


def _seeds(seed, cell, rep, n=3):
    ss = np.random.SeedSequence(0 if seed is None else int(seed), spawn_key=(cell, rep))
    return [int(x) for x in ss.generate_state(n, dtype=np.uint32)]


def block_fraction(S, pi: Permutation, k: int) -> float:
    """Fraction of nonzeros of ``S`` that land inside the block-tridiagonal structure under ``pi``."""
    S = np.asarray(S) != 0
    i, j = np.nonzero(S)
    bi, bj = pi.image[i] // k, pi.image[j] // k
    return float(np.mean(np.abs(bi - bj) <= 1))


def _central_rows(N, k):
    c = (2 ** (N - 1) - 1) * k
    return np.arange(c, c + k)


def _true_separators(N, k):
    """``level -> set of frozensets`` of the cross rows of SD(N, k) in natural order."""
    out = {}
    for l in range(N, 1, -1):
        for r in range(1, 2 ** (N - l) + 1):
            b = 2 ** (l - 1) * (2 * r - 1) - 1
            out.setdefault(N - l, set()).add(frozenset(range(b * k, (b + 1) * k)))
    return out


def separator_tree_matches(tree, N: int, k: int, pi0: Permutation) -> bool:
    """True when the recovered separators equal the true cross row sets level by level."""
    truth = {lev: {frozenset(pi0.image[list(s)].tolist()) for s in sets}
             for lev, sets in _true_separators(N, k).items()}
    got = {}
    for lev, sep in tree.separators():
        got.setdefault(lev, set()).add(frozenset(sep.tolist()))
    return got == truth


def outer_separator_matches(tree, N: int, k: int, pi0: Permutation) -> bool:
    expected = set(pi0.image[_central_rows(N, k)].tolist())
    return set(tree.separator.tolist()) == expected


def _replicate(study, params, seeds):
    gseed, pseed, kseed = seeds
    p = params["p"]
    if study == "band":
        S = gen.random_band(params["d"], params["lam"], p, gseed)
    elif study == "block_tridiagonal":
        S = gen.block_tridiagonal(params["N"], params["k"], p, gseed)
    elif study == "dyadic":
        S = gen.dyadic_random(params["N"], params["k"], p, gseed)
    else:
        S = gen.banded_dyadic(params["N"], params["k"], p, params["lam"], gseed)
    d = S.shape[0]
    s = params.get("s", 1)
    base = report_stats(S, Permutation.identity(d), s=s)
    pi0 = random_permutation(d, pseed)
    Sp = apply_permutation(S, pi0)
    row = {"orig_l1_per_row": base.half_width_l1 / d, "orig_half_bandwidth": base.half_bandwidth}
    if study in ("band", "block_tridiagonal"):
        pi, rep = pack(Sp, t=s, seed=kseed)
        row.update(l1_per_row=rep.half_width_l1 / d, half_bandwidth=rep.half_bandwidth,
                   eta_bar=rep.eta_bar, fill=rep.fill)
        if study == "block_tridiagonal":
            row["in_structure"] = block_fraction(Sp, pi, params["k"])
        return row
    pi, tree = recursive_dyadic_pack(Sp, seed=kseed, t=s)
    rep = report_stats(Sp, pi, s=s)
    row.update(l1_per_row=rep.half_width_l1 / d, half_bandwidth=rep.half_bandwidth,
               fill=rep.fill, tree_depth=tree.depth(),
               outer_match=float(outer_separator_matches(tree, params["N"], params["k"], pi0)),
               tree_match=float(separator_tree_matches(tree, params["N"], params["k"], pi0)))
    return row


def run_study(study: str, grid: dict | None = None, reps: int = 10, seed=0) -> list[dict]:
    """Run a study and return one summary row per grid cell.

    Parameters
    ----------
    study : {"band", "block_tridiagonal", "dyadic", "banded_dyadic"}
    grid : dict of lists, optional
        Parameter values; missing keys take the study defaults.
    reps : int
    seed : int

    Returns
    -------
    list of dict
        Grid parameters, ``reps``, ``failures`` and ``<stat>_mean`` /
        ``<stat>_sd`` columns.  Replicates raising a library error are
        counted in ``failures`` and skipped.
    """
    if study not in STUDIES:
        raise ValueError(f"unknown study {study!r}; choose from {', '.join(STUDIES)}")
    if reps < 1:
        raise ValueError("reps must be positive")
    g = dict(DEFAULT_GRIDS[study])
    g.update(grid or {})
    keys = list(g)
    rows = []
    for cell, values in enumerate(itertools.product(*(g[k] for k in keys))):
        params = dict(zip(keys, values))
        samples, failures, errors = [], 0, set()
        for rep in range(reps):
            try:
                samples.append(_replicate(study, params, _seeds(seed, cell, rep)))
            except DyapackError as exc:
                failures += 1
                errors.add(type(exc).__name__)
        row = dict(params, reps=reps, failures=failures, errors=";".join(sorted(errors)))
        if samples:
            for key in samples[0]:
                vals = np.array([smp[key] for smp in samples], dtype=float)
                row[f"{key}_mean"] = float(vals.mean())
                row[f"{key}_sd"] = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
        rows.append(row)
    return rows
