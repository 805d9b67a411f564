"""Operation-count scaling of the factorization."""

from __future__ import annotations

import time

import numpy as np
from scipy import stats

from . import generators as gen
from .dyadic_matrix import FlopCounter
from .factorization import local_flops, sequential_orthogonalize


def loglog_fit(x, y) -> dict:
    """Least-squares line through ``(log x, log y)``: slope, intercept and R^2."""
    res = stats.linregress(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)))
    return {"slope": float(res.slope), "intercept": float(res.intercept), "r2": float(res.rvalue**2)}


def flop_scaling(k: int, Ns, family: str = "spd_dyadic", seed=0) -> list[dict]:
    """Count the sweep's operations over a range of heights.

    ``family="spd_dyadic"`` runs the general path on random SPD dyadic
    matrices.  ``family="band"`` uses SPD block-tridiagonal matrices and
    runs both paths, so the two counts can be compared.

    Each row holds ``N, k, d``, the reference sizes ``d_log2 = d log^2(d/k)``
    and ``d_log = d log(d/k)``, and per path the block multiplies, block
    adds, scalar operations, the share of scalar operations spent in the
    local orthonormalizations and the wall time.
    """
    Ns = list(Ns)
    if not Ns:
        raise ValueError("empty range of heights")
    if family not in ("spd_dyadic", "band"):
        raise ValueError("family must be 'spd_dyadic' or 'band'")
    rows = []
    for N in Ns:
        if family == "spd_dyadic":
            sigma = gen.spd_dyadic(N, k, seed).sigma
            paths = {"general": False}
        else:
            sigma = gen.spd_block_tridiagonal(N, k, seed)
            paths = {"general": False, "fast": True}
        d = sigma.d
        row = {"N": N, "k": k, "d": d, "d_log2": float(d * np.log2(d / k) ** 2),
               "d_log": float(d * np.log2(d / k))}
        for name, fp in paths.items():
            fc = FlopCounter(k)
            t0 = time.perf_counter()
            sequential_orthogonalize(sigma, fast_path=fp, counter=fc)
            row[f"{name}_seconds"] = time.perf_counter() - t0
            row[f"{name}_block_multiplies"] = fc.block_multiplies
            row[f"{name}_block_adds"] = fc.block_adds
            row[f"{name}_scalar_ops"] = fc.scalar_ops
            # one local orthonormalization per pyramid position
            row[f"{name}_local_share"] = (2**N - 1) * local_flops(k) / fc.scalar_ops
        rows.append(row)
    return rows


def scaling_summary(rows: list[dict]) -> list[dict]:
    """Log-log fits of the counts in ``rows`` against the reference sizes."""
    out = []
    paths = [p for p in ("general", "fast") if f"{p}_scalar_ops" in rows[0]]
    for path in paths:
        y = [r[f"{path}_scalar_ops"] for r in rows]
        for ref in ("d_log2", "d_log"):
            fit = loglog_fit([r[ref] for r in rows], y)
            out.append({"path": path, "reference": ref, **fit})
    if len(paths) == 2:
        ratio = [r["fast_scalar_ops"] / r["general_scalar_ops"] for r in rows]
        out.append({"path": "fast/general", "reference": "ratio",
                    "monotone_decreasing": bool(np.all(np.diff(ratio) < 0)),
                    "first": ratio[0], "last": ratio[-1]})
    return out
