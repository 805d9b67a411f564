"""Factorize a symmetric dyadic SPD matrix and use the factor.

A random SPD matrix with the symmetric dyadic pattern SD(N, k) is built as
R.T @ R from a vertically dyadic R.  The level sweep returns a vertically
dyadic P with P.T S P = I, which gives the inverse (P P.T) and a solver.
"""

import numpy as np

from dyapack import sequential_orthogonalize
from dyapack.dyadic_index import DyadicPattern
from dyapack.dyadic_matrix import FlopCounter
from dyapack.factorization import factor_R, invert, solve
from dyapack.generators import spd_block_tridiagonal, spd_dyadic

N, k = 4, 3
inst = spd_dyadic(N, k, seed=7, cond_target=1e8)
sigma = inst.sigma
print(f"sigma: d={sigma.d}, {sigma.stored_blocks} stored {k}x{k} blocks "
      f"(dense would hold {(2**N - 1) ** 2})")

res = sequential_orthogonalize(sigma)
print(f"max |P'SP - I| = {res.residual:.2e}, block multiplies {res.flops.block_multiplies}")

# P stays inside the vertical pattern; so does R = P' S
P = res.P.to_dense()
outside = ~DyadicPattern(N, k, "v").materialize().scalar_mask()
print("P has no entries outside the vertical pattern:", not P[outside].any())
R = factor_R(sigma, res.P)
print(f"|R'R - S| = {np.abs(R.to_dense().T @ R.to_dense() - sigma.to_dense()).max():.2e}")

S_inv = invert(sigma, res)
print(f"|PP' - inv(S)| relative = "
      f"{np.abs(S_inv - np.linalg.inv(sigma.to_dense())).max() / np.abs(S_inv).max():.1e}")

y = np.random.default_rng(0).standard_normal(sigma.d)
x = solve(sigma, y, res)
print(f"solve residual |Sx - y| = {np.abs(sigma.to_dense() @ x - y).max():.2e}")

# block-tridiagonal input takes the shortcut automatically
tri = spd_block_tridiagonal(7, 2, seed=1)
for fast in (False, True):
    fc = FlopCounter(2)
    r = sequential_orthogonalize(tri, fast_path=fast, counter=fc)
    print(f"block tridiagonal d={tri.d}, fast_path={fast}: scalar ops {fc.scalar_ops}, "
          f"residual {r.residual:.1e}")
