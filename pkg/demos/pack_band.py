"""Recover a band ordering from a scrambled sparse pattern.

A random band pattern is scrambled by a random permutation.  Packing only
sees which entries are nonzero; it compares neighbor sets, embeds each
local neighborhood on a line and glues the pieces into one ordering.
"""

from dyapack.generators import full_band, random_band
from dyapack.packing import Permutation, apply_permutation, pack, random_permutation, report_stats

d, lam = 255, 10
for p in (0.25, 0.5, 0.75, 1.0):
    S = full_band(d, lam) if p == 1 else random_band(d, lam, p, seed=3)
    before = report_stats(S, Permutation.identity(d))
    scrambled = apply_permutation(S, random_permutation(d, seed=4))
    mixed = report_stats(scrambled, Permutation.identity(d))
    print(f"p={p:<4}  original |l|_1/d={before.half_width_l1 / d:6.1f}  "
          f"scrambled {mixed.half_width_l1 / d:6.1f}", end="")
    for t in (1, 2):
        _, rep = pack(scrambled, t=t, seed=5)
        print(f"  packed(t={t}) {rep.half_width_l1 / d:6.1f} [bw {rep.half_bandwidth}]", end="")
    print()
print("a full band comes back with half-bandwidth exactly", lam)
