import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dyapack.dyadic_matrix import DyadicMatrix
from dyapack.errors import DisconnectedError
from dyapack.factorization import sequential_orthogonalize
from dyapack.generators import (FAMILIES, GenSpec, banded_dyadic, block_tridiagonal,
                                dyadic_random, dyadic_support, full_band, random_band,
                                spd_block_tridiagonal, spd_dyadic)
from dyapack.packing import Permutation, report_stats


def test_full_band_examples():
    assert np.array_equal(full_band(5, 0), np.eye(5))
    T = full_band(5, 1)
    assert np.array_equal(T, np.eye(5) + np.eye(5, k=1) + np.eye(5, k=-1))
    with pytest.raises(ValueError):
        full_band(5, 5)
    with pytest.raises(ValueError):
        full_band(5, -1)


def test_random_band_p_one_is_full():
    assert np.array_equal(random_band(40, 4, 1.0, seed=3), full_band(40, 4))
    with pytest.raises(ValueError):
        random_band(40, 4, 0.0, seed=3)
    with pytest.raises(ValueError):
        random_band(40, 4, 1.5, seed=3)


def test_random_band_binomial_count():
    d, lam, p = 500, 10, 0.5
    slots = d * lam - lam * (lam + 1) // 2
    mean, sd = p * slots, np.sqrt(slots * p * (1 - p))
    for seed in range(50):
        count = np.triu(random_band(d, lam, p, seed), 1).sum()
        assert abs(count - mean) <= 3 * sd


def test_random_band_fill_slightly_above_p():
    fills = [report_stats(random_band(300, 10, 0.5, s), Permutation.identity(300)).fill
             for s in range(10)]
    assert 0.5 < np.mean(fills) < 0.6


@given(st.integers(2, 80), st.integers(1, 8), st.floats(0.3, 1.0), st.integers(0, 10**6))
def test_band_symmetric_unit_diagonal_deterministic(d, lam, p, seed):
    lam = min(lam, d - 1)
    try:
        A = random_band(d, lam, p, seed)
    except DisconnectedError:
        return
    assert np.array_equal(A, A.T)
    assert np.all(np.diag(A) == 1)
    assert not np.any(A[np.abs(np.subtract.outer(range(d), range(d))) > lam])
    assert np.array_equal(A, random_band(d, lam, p, seed))


def test_disconnected_allowed_on_request():
    A = random_band(30, 1, 0.3, seed=1, connected=False)
    assert A.shape == (30, 30)
    with pytest.raises(DisconnectedError):
        random_band(200, 1, 0.3, seed=1)


def test_block_tridiagonal_full_small():
    A = block_tridiagonal(2, 2, 1.0, seed=0)
    want = np.kron(np.eye(3) + np.eye(3, k=1) + np.eye(3, k=-1), np.ones((2, 2)))
    assert np.array_equal(A, want)


def test_block_tridiagonal_support():
    N, k = 3, 4
    A = block_tridiagonal(N, k, 0.6, seed=2)
    b = np.arange(A.shape[0]) // k
    assert A.shape == (28, 28)
    assert not np.any(A[np.abs(b[:, None] - b[None, :]) > 1])


def test_dyadic_families():
    N, k = 3, 2
    sup = dyadic_support(N, k)
    A = dyadic_random(N, k, 0.7, seed=5)
    assert not np.any(A & ~sup)
    assert np.array_equal(banded_dyadic(N, k, 1.0, 100, seed=0), dyadic_random(N, k, 1.0))
    assert banded_dyadic(5, 10, 0.5, 60, seed=1).shape == (310, 310)
    B = banded_dyadic(4, 3, 0.8, 10, seed=1)
    i = np.arange(B.shape[0])
    assert not np.any(B[np.abs(i[:, None] - i[None, :]) > 10])
    assert not np.any(B & ~dyadic_support(4, 3))


def test_spd_dyadic_support_and_oracle():
    for N, k in [(1, 2), (2, 3), (4, 2)]:
        inst = spd_dyadic(N, k, seed=N)
        S = inst.sigma.to_dense()
        assert not np.any((np.abs(S) > 0) & ~dyadic_support(N, k))
        R = inst.R.to_dense()
        assert np.allclose(R.T @ R, S, atol=1e-10)
        assert np.linalg.eigvalsh(S).min() > 0


def test_spd_dyadic_factorization_round_trip():
    for N in range(1, 6):
        for k in range(1, 5):
            sigma = spd_dyadic(N, k, seed=10 * N + k, cond_target=1e8).sigma
            res = sequential_orthogonalize(sigma)
            assert res.residual <= 1e-9


def test_spd_dyadic_cond_target():
    S = spd_dyadic(5, 3, seed=0, cond_target=1e6).sigma.to_dense()
    assert np.linalg.cond(S) <= 1e6
    a = spd_dyadic(4, 2, seed=9).sigma.to_dense()
    assert np.array_equal(a, spd_dyadic(4, 2, seed=9).sigma.to_dense())


def test_spd_block_tridiagonal():
    M = spd_block_tridiagonal(3, 2, seed=0)
    D = M.to_dense()
    assert isinstance(M, DyadicMatrix)
    assert np.array_equal(D, D.T)
    assert np.linalg.eigvalsh(D).min() > 0
    b = np.arange(14) // 2
    assert not np.any(D[np.abs(b[:, None] - b[None, :]) > 1])


def test_genspec_round_trip():
    spec = GenSpec("random_band", {"d": 50, "lam": 3, "p": 0.5}, seed=11)
    back = GenSpec.from_text(spec.to_text())
    assert back == spec
    assert np.array_equal(back.generate(), spec.generate())
    with pytest.raises(ValueError):
        GenSpec("nonsense")
    for fam in FAMILIES:
        assert GenSpec(fam).family == fam
