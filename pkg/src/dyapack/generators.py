"""Seeded test-matrix families.

Randomness comes from PCG64 streams derived with
``numpy.random.SeedSequence(seed, spawn_key=(attempt, region))``: every
super-diagonal offset of a 0-1 pattern (or every level of a random dyadic
factor) draws from its own stream, and ``attempt`` counts redraws after a
disconnected result.  The same seed therefore gives the same matrix on any
platform numpy supports, and changing one region's size leaves the other
regions' draws untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csgraph

from .dyadic_index import DyadicPattern
from .dyadic_matrix import DyadicMatrix, _pattern_mask
from .errors import DisconnectedError
from .packing.permutation import Permutation, apply_permutation, random_permutation

MAX_ATTEMPTS = 100

FAMILIES = ("full_band", "random_band", "full_block_tridiagonal", "random_block_tridiagonal",
            "dyadic_random", "banded_dyadic", "spd_dyadic", "spd_block_tridiagonal")


def _stream(seed, *key) -> np.random.Generator:
    seed = 0 if seed is None else int(seed)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def _check_p(p):
    if not 0 < p <= 1:
        raise ValueError(f"fill probability must lie in (0, 1], got {p}")


def _check_dims(N, k):
    if N < 1 or k < 1:
        raise ValueError("height and breadth must be positive")


def _is_connected(M) -> bool:
    return csgraph.connected_components(M, directed=False)[0] == 1


def _bernoulli_fill(support: np.ndarray, p: float, seed, attempt: int) -> np.ndarray:
    """Symmetric 0-1 matrix: unit diagonal, Bernoulli(p) on the upper support, mirrored."""
    d = support.shape[0]
    M = np.zeros((d, d), dtype=np.int8)
    for o in range(1, d):
        diag = np.diagonal(support, o)
        if not diag.any():
            continue
        keep = diag & (_stream(seed, attempt, o).random(d - o) < p)
        i = np.flatnonzero(keep)
        M[i, i + o] = 1
    M |= M.T
    np.fill_diagonal(M, 1)
    return M


def _random_pattern(support, p, seed, connected=True):
    for attempt in range(MAX_ATTEMPTS):
        M = _bernoulli_fill(support, p, seed, attempt)
        if not connected or p == 1 or _is_connected(M):
            return M
    raise DisconnectedError(f"no connected draw in {MAX_ATTEMPTS} attempts")


def _band_support(d, lam):
    i = np.arange(d)
    return np.abs(i[:, None] - i[None, :]) <= lam


def full_band(d: int, lam: int) -> np.ndarray:
    """0-1 matrix with ones exactly where ``|i - j| <= lam``."""
    if d < 1 or not 0 <= lam <= d - 1:
        raise ValueError(f"need d >= 1 and 0 <= lam <= d - 1, got d={d}, lam={lam}")
    return _band_support(d, lam).astype(np.int8)


def random_band(d: int, lam: int, p: float, seed=None, connected: bool = True) -> np.ndarray:
    """Band of half-bandwidth ``lam`` with off-diagonal entries kept with probability ``p``."""
    if d < 1 or not 0 <= lam <= d - 1:
        raise ValueError(f"need d >= 1 and 0 <= lam <= d - 1, got d={d}, lam={lam}")
    _check_p(p)
    return _random_pattern(_band_support(d, lam), p, seed, connected)


def _block_tridiagonal_support(N, k):
    nb = 2**N - 1
    b = np.arange(nb * k) // k
    return np.abs(b[:, None] - b[None, :]) <= 1


def block_tridiagonal(N: int, k: int, p: float = 1.0, seed=None, connected: bool = True) -> np.ndarray:
    """Block-tridiagonal 0-1 pattern of size ``k (2**N - 1)`` with Bernoulli(p) fill."""
    _check_dims(N, k)
    _check_p(p)
    return _random_pattern(_block_tridiagonal_support(N, k), p, seed, connected)


def dyadic_support(N: int, k: int) -> np.ndarray:
    """Entry-level boolean mask of SD(N, k)."""
    return np.kron(_pattern_mask(N, "s"), np.ones((k, k), dtype=bool))


def dyadic_random(N: int, k: int, p: float = 1.0, seed=None, connected: bool = True) -> np.ndarray:
    """0-1 matrix supported on SD(N, k) with Bernoulli(p) fill."""
    _check_dims(N, k)
    _check_p(p)
    return _random_pattern(dyadic_support(N, k), p, seed, connected)


def banded_dyadic(N: int, k: int, p: float, lam: int, seed=None, connected: bool = True) -> np.ndarray:
    """Dyadic 0-1 pattern intersected with the band ``|i - j| <= lam``."""
    _check_dims(N, k)
    _check_p(p)
    if lam < 0:
        raise ValueError("lam must be non-negative")
    sup = dyadic_support(N, k)
    return _random_pattern(sup & _band_support(sup.shape[0], lam), p, seed, connected)


@dataclass
class SPDDyadic:
    """SPD matrix ``sigma = R.T @ R`` together with its generating factor."""

    sigma: DyadicMatrix
    R: DyadicMatrix


def spd_dyadic(N: int, k: int, seed=None, cond_target: float | None = None,
               scale: float = 1.0) -> SPDDyadic:
    """Random SPD matrix with SD(N, k) pattern, built from a vertical factor.

    Entries of ``R`` in VD(N, k) are standard normal times ``scale``, and
    ``sqrt(k)`` is added to the diagonal of every diagonal block, so ``R``
    is invertible and ``sigma = R.T @ R`` is SPD.  The shift alone does not
    bound the condition number (it grows quickly with N).  With
    ``cond_target`` the random part is halved until ``cond(sigma)`` is at
    most the target; the draws themselves do not change.
    """
    _check_dims(N, k)
    pat = DyadicPattern(N, k, "v")
    noise = [_stream(seed, 0, l).standard_normal((2 ** (N - l), 2**l - 1, k, k))
             for l in range(1, N + 1)]
    shift = np.sqrt(k) * np.eye(k)
    for _ in range(64):
        levels = [scale * z for z in noise]
        for l, a in enumerate(levels, start=1):
            a[:, 2 ** (l - 1) - 1] += shift
        R = DyadicMatrix(pat, None, levels)
        Rd = R.to_dense()
        S = Rd.T @ Rd
        S = 0.5 * (S + S.T)
        if cond_target is None or np.linalg.cond(S) <= cond_target:
            break
        scale *= 0.5
    sigma = DyadicMatrix.from_dense(S, DyadicPattern(N, k, "s"), tol=1e-10 * max(1.0, np.abs(S).max()))
    return SPDDyadic(sigma, R)


def spd_block_tridiagonal(N: int, k: int, seed=None) -> DyadicMatrix:
    """Random SPD block-tridiagonal matrix (symmetric normal entries, diagonal shift)."""
    _check_dims(N, k)
    d = k * (2**N - 1)
    sup = _block_tridiagonal_support(N, k)
    X = _stream(seed, 0, 0).standard_normal((d, d)) * sup
    X = 0.5 * (X + X.T)
    X += (np.abs(X).sum(axis=1).max() + 1.0) * np.eye(d)
    return DyadicMatrix.from_dense(X, DyadicPattern(N, k, "s"))


@dataclass
class GenSpec:
    """Serializable recipe for one generated matrix."""

    family: str
    params: dict = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")

    def to_text(self) -> str:
        """Flat ``key=value`` lines."""
        lines = [f"family={self.family}"]
        lines += [f"{k}={v}" for k, v in sorted(self.params.items())]
        lines.append(f"seed={self.seed}")
        return "\n".join(lines)

    @classmethod
    def from_text(cls, text: str) -> "GenSpec":
        kv = dict(line.split("=", 1) for line in text.strip().splitlines() if "=" in line)
        family = kv.pop("family")
        seed = kv.pop("seed", "None")
        params = {k: _parse_scalar(v) for k, v in kv.items()}
        return cls(family, params, None if seed == "None" else int(seed))

    def generate(self):
        p = dict(self.params)
        f = self.family
        if f == "full_band":
            return full_band(p["d"], p["lam"])
        if f == "random_band":
            return random_band(p["d"], p["lam"], p["p"], self.seed)
        if f == "full_block_tridiagonal":
            return block_tridiagonal(p["N"], p["k"], 1.0, self.seed)
        if f == "random_block_tridiagonal":
            return block_tridiagonal(p["N"], p["k"], p["p"], self.seed)
        if f == "dyadic_random":
            return dyadic_random(p["N"], p["k"], p.get("p", 1.0), self.seed)
        if f == "banded_dyadic":
            return banded_dyadic(p["N"], p["k"], p["p"], p["lam"], self.seed)
        if f == "spd_dyadic":
            return spd_dyadic(p["N"], p["k"], self.seed, p.get("cond_target")).sigma
        return spd_block_tridiagonal(p["N"], p["k"], self.seed)


def _parse_scalar(v: str):
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    return None if v == "None" else v


__all__ = ["full_band", "random_band", "block_tridiagonal", "dyadic_random", "banded_dyadic",
           "dyadic_support", "spd_dyadic", "spd_block_tridiagonal", "SPDDyadic", "GenSpec",
           "apply_permutation", "random_permutation", "Permutation", "FAMILIES"]
