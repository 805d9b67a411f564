"""Sequential orthogonalization of SPD matrices with a symmetric dyadic pattern.

The level sweep builds ``P`` with ``P.T @ S @ P = I`` one pyramid level at
a time.  Columns of level 1 are local orthonormalizations of the diagonal
blocks.  For a position ``c`` on level ``l``, let ``E`` be the column of
``S`` coupling ``c`` with the rest of its window and ``Q`` the part of
``P`` already built on that window.  Then

    E' = Q.T @ E,  A = Q @ E',  G = G(S_cc - E'.T @ E'),

and the new column of ``P`` is ``-A @ G`` on the window and ``G`` at ``c``.
The columns of ``P`` therefore live in the same windows as those of a
vertically dyadic matrix, and ``R = P^{-1} = P.T @ S`` is vertically
dyadic too, with ``S = R.T @ R`` and ``S^{-1} = P @ P.T``.

When ``S`` is block tridiagonal, ``E`` has only two nonzero blocks and
``Q.T @ E`` only ``2 (l - 1)``; the sweep then skips structurally zero
products, reducing the cost by a logarithmic factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .dyadic_index import DyadicPattern
from .dyadic_matrix import (TAU_ZERO, BlockDiagonalMatrix, DyadicMatrix, ElongatedMatrix,
                            FlopCounter, IncompleteDyadic, _hd_tall, _pattern_mask,
                            ed_times_diag, gram_ed, level_geometry, multiply_hd_tall,
                            multiply_patterned, multiply_vd_tall, multiply_vd_vdt)
from .errors import DefinitenessError, PatternViolationError

TAU_ORTH = 1e-8
TAU_INV = 1e-6
TAU_SOLVE = 1e-8


@lru_cache(maxsize=None)
def local_flops(k: int) -> int:
    """Scalar flops of one local orthonormalization of a k x k gramian.

    Cholesky (multiply-adds, one square root per column, one division per
    subdiagonal entry) followed by inversion of the triangular factor.
    """
    chol = sum((j - 1) + 1 + (k - j) * (j - 1) + (k - j) for j in range(1, k + 1))
    trinv = sum((i - c) + 1 for i in range(1, k + 1) for c in range(1, i + 1))
    return chol + trinv


def _lower_inverse(L: np.ndarray) -> np.ndarray:
    """Inverse of a stack of lower-triangular matrices by forward substitution."""
    n, k, _ = L.shape
    X = np.zeros_like(L)
    for i in range(k):
        rhs = -np.einsum("nj,njc->nc", L[:, i, :i], X[:, :i, :])
        rhs[:, i] += 1.0
        X[:, i, :] = rhs / L[:, i, i][:, None]
    return X


def _orthonormalize_batch(S: np.ndarray, level: int | None = None,
                          counter: FlopCounter | None = None) -> np.ndarray:
    """Upper-triangular G with ``G.T @ S[r] @ G = I`` for each gramian in the stack."""
    S = 0.5 * (S + np.swapaxes(S, -1, -2))
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        for r, blk in enumerate(S, start=1):
            try:
                np.linalg.cholesky(blk)
            except np.linalg.LinAlgError:
                where = f" at pyramid coordinate (r={r}, l={level})" if level else ""
                raise DefinitenessError(f"local gramian is not positive definite{where}",
                                        coord=(r, level) if level else None) from None
        raise
    if counter is not None:
        counter.add(other=len(S) * local_flops(S.shape[-1]))
    return np.swapaxes(_lower_inverse(L), -1, -2)


def local_orthonormalize(S_bar) -> np.ndarray:
    """Return upper-triangular ``G`` with positive diagonal and ``G.T @ S_bar @ G = I``.

    ``G`` is the inverse transpose of the lower Cholesky factor of
    ``S_bar``, i.e. Gram-Schmidt carried out on the gramian.

    Raises
    ------
    DefinitenessError
        If ``S_bar`` is not positive definite.
    """
    S_bar = np.atleast_2d(np.asarray(S_bar, dtype=float))
    if S_bar.ndim != 2 or S_bar.shape[0] != S_bar.shape[1]:
        raise ValueError("local gramian must be square")
    if not np.allclose(S_bar, S_bar.T, rtol=1e-12, atol=1e-14 * max(1.0, np.abs(S_bar).max())):
        raise ValueError("local gramian must be symmetric")
    return _orthonormalize_batch(S_bar[None])[0]


def is_block_tridiagonal(S: DyadicMatrix, tol: float = TAU_ZERO) -> bool:
    """True when every block more than one step off the diagonal is (numerically) zero."""
    for l in range(2, S.N + 1):
        mid = 2 ** (l - 1) - 1
        far = np.ones(2**l - 1, dtype=bool)
        far[[mid - 1, mid, mid + 1]] = False
        for levels in (S.h, S.v):
            if levels is not None and np.abs(levels[l - 1][:, far]).max(initial=0.0) > tol:
                return False
    return True


def _check_input(S: DyadicMatrix):
    if not isinstance(S, DyadicMatrix):
        raise TypeError("expected a DyadicMatrix; use DyadicMatrix.from_dense first")
    if S.kind != "s":
        raise PatternViolationError("sequential orthogonalization needs a symmetric dyadic pattern")


@dataclass
class FactorResult:
    """Outcome of :func:`sequential_orthogonalize`.

    Attributes
    ----------
    P : DyadicMatrix
        Vertically dyadic factor with ``P.T @ sigma @ P = I``.
    flops : FlopCounter
        Operation counts of the sweep.
    fast_path : bool
        Whether the block-tridiagonal shortcut was used.
    sigma : DyadicMatrix
        The factorized matrix.
    """

    P: DyadicMatrix
    flops: FlopCounter
    fast_path: bool
    sigma: DyadicMatrix = field(repr=False)

    @cached_property
    def residual(self) -> float:
        """``max |P.T S P - I|``, computed densely on first access."""
        P = self.P.to_dense()
        return float(np.abs(P.T @ self.sigma.to_dense() @ P - np.eye(self.P.d)).max())


def sequential_orthogonalize(sigma: DyadicMatrix, fast_path="auto", trace: list | None = None,
                             counter: FlopCounter | None = None) -> FactorResult:
    """Factorize a symmetric dyadic SPD matrix by sequential orthogonalization.

    Parameters
    ----------
    sigma : DyadicMatrix
        Symmetric-pattern, positive definite.
    fast_path : {"auto", True, False}
        Use the block-tridiagonal shortcut.  ``"auto"`` enables it when the
        input is block tridiagonal; forcing it on a matrix that is not
        raises :class:`PatternViolationError`.
    trace : list, optional
        If given, one dict per level ``l >= 2`` is appended holding the
        intermediate coupling block, its transformed version and the reduced
        gramian, each recomputed densely for inspection.
    counter : FlopCounter, optional
        Counter to accumulate into; a fresh one is used otherwise.

    Returns
    -------
    FactorResult
    """
    _check_input(sigma)
    N, k = sigma.N, sigma.k
    tri = is_block_tridiagonal(sigma)
    if fast_path == "auto":
        fast = tri
    else:
        fast = bool(fast_path)
        if fast and not tri:
            raise PatternViolationError("fast path requested but the matrix is not block tridiagonal")
    fc = counter if counter is not None else FlopCounter(k)
    fc.k = k

    pv = []  # vertical level arrays of P, filled level by level
    pv.append(_orthonormalize_batch(sigma.h[0][:, 0], 1, fc)[:, None])

    for l in range(2, N + 1):
        n_r = 2 ** (N - l)
        mid = 2 ** (l - 1) - 1
        keep = np.arange(2**l - 1) != mid
        E_blocks = sigma.v[l - 1][:, keep]
        support = None
        if fast:
            support = np.zeros((n_r, 2**l - 2), dtype=bool)
            support[:, mid - 1] = support[:, mid] = True
            E_blocks = E_blocks * support[:, :, None, None]
        E = ElongatedMatrix(N, l, E_blocks, support)

        Q = IncompleteDyadic(N, l, "v", levels_v=[
            pv[m - 1].reshape((2 ** (N - l + 1), -1) + pv[m - 1].shape[1:]) for m in range(1, l)])
        E1 = multiply_patterned(Q.T, E, fc)          # E' = Q.T E
        A = multiply_patterned(Q, E1, fc)            # A = Q E'
        gram = gram_ed(E1, fc)
        fc.add(adds=n_r)
        S_tilde = sigma.h[l - 1][:, mid] - gram.blocks
        G = _orthonormalize_batch(S_tilde, l, fc)
        AG = ed_times_diag(A, BlockDiagonalMatrix(N, l, G), fc)

        col = np.empty((n_r, 2**l - 1, k, k))
        col[:, keep] = -AG.blocks
        col[:, mid] = G
        pv.append(col)

        if trace is not None:
            trace.append(_trace_level(sigma, pv, l, E1, S_tilde))

    P = DyadicMatrix(DyadicPattern(N, k, "v"), None, pv)
    return FactorResult(P, fc.snapshot(), fast, sigma)


def _levels_below(N: int, l: int) -> np.ndarray:
    """0-based block indices of levels ``< l`` in ascending order."""
    idx = np.arange(1, 2**N)
    return idx[idx % 2 ** (l - 1) != 0] - 1


def _trace_level(sigma, pv, l, E1, S_tilde):
    """Dense recomputation of the level-``l`` intermediates for support checks."""
    N, k = sigma.N, sigma.k
    rows = _levels_below(N, l)
    cols, _ = level_geometry(N, l)
    S = sigma.to_dense()
    scal = lambda b: (b[:, None] * k + np.arange(k)).ravel()
    E = S[np.ix_(scal(rows), scal(cols))]
    # dense P restricted to levels < l, assembled from its columns
    Pfull = DyadicMatrix(DyadicPattern(N, k, "v"), None,
                         pv[: l - 1] + [np.zeros((2 ** (N - m), 2**m - 1, k, k)) for m in range(l, N + 1)])
    Q = Pfull.to_dense()[np.ix_(scal(rows), scal(rows))]
    E1_dense = Q.T @ E
    S_ll = S[np.ix_(scal(cols), scal(cols))]
    return {
        "level": l,
        "sigma_check": E,
        "sigma_check_prime": E1_dense,
        "sigma_tilde": S_ll - E1_dense.T @ E1_dense,
        "sigma_check_prime_sweep": E1.to_dense(),
        "sigma_tilde_sweep": BlockDiagonalMatrix(N, l, S_tilde).to_dense(),
    }


def factorize(sigma: DyadicMatrix, fast_path="auto") -> FactorResult:
    """Shorthand for :func:`sequential_orthogonalize` without tracing."""
    return sequential_orthogonalize(sigma, fast_path=fast_path)


def invert(sigma: DyadicMatrix, result: FactorResult | None = None,
           counter: FlopCounter | None = None) -> np.ndarray:
    """Dense inverse ``P @ P.T``."""
    result = result or sequential_orthogonalize(sigma)
    return multiply_vd_vdt(result.P, result.P, counter)


def factor_R(sigma: DyadicMatrix, P: DyadicMatrix, check: bool = True,
             tol: float | None = None) -> DyadicMatrix:
    """``R = P.T @ sigma``, the vertically dyadic inverse of ``P``.

    Only the blocks inside the vertical pattern are computed: the column of
    ``R`` at position ``c`` is the transposed sub-pyramid of ``P`` on the
    window of ``c`` applied to the matching column of ``sigma``.

    With ``check`` (and ``d <= 4096``) the full dense product is formed and
    any entry outside the pattern larger than ``tol`` (default
    ``1e-10 * max(1, max|R|)``) raises :class:`PatternViolationError`.
    """
    _check_input(sigma)
    if P.kind != "v" or (P.N, P.k) != (sigma.N, sigma.k):
        raise ValueError("P must be vertically dyadic with the shape of sigma")
    N, k = sigma.N, sigma.k
    rv = []
    for l in range(1, N + 1):
        n_r = 2 ** (N - l)
        sub = [np.swapaxes(P.v[m - 1], -1, -2).reshape((n_r, -1) + P.v[m - 1].shape[1:])
               for m in range(1, l + 1)]
        out, _, _, _ = _hd_tall(sub, sigma.v[l - 1])
        rv.append(out)
    R = DyadicMatrix(DyadicPattern(N, k, "v"), None, rv)
    if check and sigma.d <= 4096:
        dense = P.to_dense().T @ sigma.to_dense()
        scale = max(1.0, float(np.abs(dense).max()))
        limit = 1e-10 * scale if tol is None else tol
        outside = ~np.kron(_pattern_mask(N, "v"), np.ones((k, k), dtype=bool))
        worst = float(np.abs(dense[outside]).max(initial=0.0))
        if worst > limit:
            raise PatternViolationError(
                f"P.T @ sigma has an entry of size {worst:.3g} outside the vertical pattern")
    return R


def solve(sigma: DyadicMatrix, y, result: FactorResult | None = None,
          counter: FlopCounter | None = None) -> np.ndarray:
    """Solve ``sigma @ x = y`` as ``x = P @ (P.T @ y)``."""
    y = np.asarray(y, dtype=float)
    if y.shape[0] != sigma.d:
        raise ValueError(f"right-hand side has {y.shape[0]} rows, expected {sigma.d}")
    result = result or sequential_orthogonalize(sigma)
    z = multiply_hd_tall(result.P.T, y, counter)
    return multiply_vd_tall(result.P, z, counter)
