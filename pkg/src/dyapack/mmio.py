"""Matrix Market files with dyadic metadata.

Reading and writing go through :mod:`scipy.io`.  Extra metadata lives in
comment lines: ``%%dyadic N=<N> k=<k> kind=<h|v|s>`` for dyadic matrices
and ``%gen <key>=<value>`` for the generator recipe.
"""

from __future__ import annotations

import io
import re
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .dyadic_index import DyadicPattern
from .dyadic_matrix import DyadicMatrix
from .generators import GenSpec

_DYADIC = re.compile(r"%%dyadic\s+N=(\d+)\s+k=(\d+)\s+kind=([hvs])")


def _comments(path) -> list[str]:
    out = []
    with open(path) as fh:
        for line in fh:
            if not line.startswith("%"):
                break
            out.append(line.rstrip("\n"))
    return out


def read_metadata(path) -> dict:
    """Dyadic header ``(N, k, kind)`` and generator recipe found in the comments, if any."""
    meta = {"dyadic": None, "genspec": None}
    gen_lines = []
    for line in _comments(path):
        m = _DYADIC.match(line)
        if m:
            meta["dyadic"] = (int(m.group(1)), int(m.group(2)), m.group(3))
        elif line.startswith("%gen "):
            gen_lines.append(line[5:])
    if gen_lines:
        meta["genspec"] = GenSpec.from_text("\n".join(gen_lines))
    return meta


def read_matrix(path) -> np.ndarray:
    """Dense array from a Matrix Market file (pattern entries read as 1)."""
    M = scipy.io.mmread(str(path))
    return M.toarray() if sp.issparse(M) else np.asarray(M)


def write_matrix(path, M, *, dyadic: tuple | None = None, genspec: GenSpec | None = None,
                 comment: str = "", pattern: bool | None = None):
    """Write ``M`` in coordinate format.

    Parameters
    ----------
    M : array_like, sparse matrix or DyadicMatrix
    dyadic : (N, k, kind), optional
        Taken from ``M`` when it is a DyadicMatrix.
    pattern : bool, optional
        Write a pattern file; defaults to True for 0-1 integer input.
    """
    if isinstance(M, DyadicMatrix):
        dyadic = dyadic or (M.N, M.k, M.kind)
        M = M.to_dense()
    A = sp.coo_array(M)
    if pattern is None:
        pattern = A.dtype.kind in "iub" and bool(np.all(A.data == 1))
    symmetric = A.shape[0] == A.shape[1] and (abs(A - A.T)).count_nonzero() == 0
    lines = []
    if comment:
        lines += comment.splitlines()
    if genspec is not None:
        lines += [f"gen {ln}" for ln in genspec.to_text().splitlines()]
    buf = io.BytesIO()
    scipy.io.mmwrite(buf, A, comment="\n".join(lines), field="pattern" if pattern else "real",
                     symmetry="symmetric" if symmetric else "general")
    text = buf.getvalue().decode()
    if dyadic is not None:
        head, rest = text.split("\n", 1)
        text = f"{head}\n%%dyadic N={dyadic[0]} k={dyadic[1]} kind={dyadic[2]}\n{rest}"
    Path(path).write_text(text)


def read_dyadic(path, N: int | None = None, k: int | None = None, kind: str | None = None,
                tol: float = 0.0) -> DyadicMatrix:
    """Read a file as a DyadicMatrix, using the header unless parameters are given."""
    meta = read_metadata(path)["dyadic"]
    if N is None or k is None:
        if meta is None:
            raise ValueError(f"{path}: no dyadic header; pass N and k")
        N, k = meta[0], meta[1]
    kind = kind or (meta[2] if meta else "s")
    return DyadicMatrix.from_dense(read_matrix(path), DyadicPattern(N, k, kind), tol=tol)


def write_permutation(path, pi):
    """One-based image, one entry per line."""
    Path(path).write_text("".join(f"{x}\n" for x in pi.one_based()))


def read_permutation(path):
    from .packing import Permutation
    vals = [int(x) for x in Path(path).read_text().split()]
    return Permutation.from_one_based(vals)
