import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st
from scipy.sparse.csgraph import maximum_bipartite_matching

from dyapack.errors import (AlignmentError, DegenerateConfigurationError, DisconnectedError,
                            IncompleteConfigurationError, NotAPermutationMetricError,
                            ReconstructionError)
from dyapack.generators import dyadic_random, full_band, random_band
from dyapack.packing import (Permutation, apply_permutation, band_count, bounds_diagnostics,
                             configuration_to_permutation, delta_m, find_separator,
                             flesh_to_body, half_widths, local_mds, nearest_neighbor_info,
                             neighborhoods, outskirts, pack, random_permutation,
                             reconstruct_from_distance, reconstruct_points,
                             recursive_dyadic_pack, report_stats, skeleton_select,
                             symm_diff_distance, t_order)
from dyapack.packing.separators import min_vertex_cover_bipartite

TRI5 = full_band(5, 1)


def one_based(a):
    return sorted(int(x) + 1 for x in a)


# ---------------------------------------------------------------- neighbor sets

def test_tridiagonal_neighbors():
    G = neighborhoods(TRI5)
    assert one_based(G.D(2)) == [2, 3, 4]
    assert one_based(t_order(G, 2).D(2)) == [1, 2, 3, 4, 5]
    assert np.array_equal(t_order(G, 1).indices, G.indices)


def test_identity_flagged_disconnected():
    G = neighborhoods(np.eye(4))
    assert [one_based(G.D(i)) for i in range(4)] == [[1], [2], [3], [4]]
    assert not G.is_connected()
    with pytest.raises(DisconnectedError) as exc:
        G.require_connected()
    assert len(exc.value.components) == 4


def test_diagonal_added_and_asymmetry_rejected():
    S = np.zeros((3, 3))
    S[0, 1] = S[1, 0] = 1
    S[1, 2] = S[2, 1] = 1
    assert one_based(neighborhoods(S).D(0)) == [1, 2]
    S[0, 2] = 1
    with pytest.raises(ValueError):
        neighborhoods(S)
    assert neighborhoods(sp.csr_array(TRI5)).indices.tolist() == neighborhoods(TRI5).indices.tolist()


def test_outskirts_trace():
    L = outskirts(neighborhoods(TRI5), 2)
    assert [one_based(x) for x in L] == [[3], [2, 4], [1, 5]]
    with pytest.raises(ValueError):
        t_order(neighborhoods(TRI5), 0)


@given(st.integers(5, 60), st.integers(3, 6), st.floats(0.5, 1.0), st.integers(0, 10**5))
def test_outskirt_layers(d, lam, p, seed):
    lam = min(lam, d - 1)
    G = neighborhoods(random_band(d, lam, p, seed))
    i = seed % d
    L = outskirts(G, i)
    allrows = np.concatenate(L)
    assert sorted(allrows.tolist()) == list(range(d))
    for t, layer in enumerate(L):
        near = set(np.concatenate(L[max(t - 1, 0):t + 2]).tolist())
        for j in layer:
            assert set(G.D(j).tolist()) <= near


@pytest.mark.parametrize("lam,t", [(3, 1), (3, 2), (5, 3)])
def test_power_of_full_band(lam, t):
    G = t_order(neighborhoods(full_band(60, lam)), t)
    assert np.array_equal(G.adjacency().toarray(), full_band(60, min(t * lam, 59)).astype(bool))


# ---------------------------------------------------------------- distances

def test_symmetric_difference_tridiagonal():
    d = 12
    A = symm_diff_distance(neighborhoods(full_band(d, 1)))
    for i in range(1, d - 2):
        assert A[i, i + 1] == 1
    assert A.max() <= 3
    assert np.all(np.diag(A) == 0)


@given(st.integers(3, 40), st.integers(1, 5), st.floats(0.1, 1.0), st.integers(0, 10**5))
def test_symmetric_difference_is_metric(d, lam, p, seed):
    A = symm_diff_distance(neighborhoods(random_band(d, min(lam, d - 1), p, seed, connected=False)))
    assert np.array_equal(A, A.T) and not np.diag(A).any()
    assert np.all(A[:, :, None] <= A[:, None, :] + A.T[None, :, :] + 1e-12)


def test_lemma_set_identity_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(200):
        a, b = rng.integers(0, 40, size=2)
        li, lj = rng.integers(0, 10, size=2)
        g = abs(a - b)
        if not (abs(li - lj) <= g <= li + lj):
            continue
        X = set(range(a - li, a + li + 1))
        Y = set(range(b - lj, b + lj + 1))
        assert g == len(X ^ Y) / 2


# ---------------------------------------------------------------- skeleton and MDS

def test_skeleton_tridiagonal_from_middle():
    sk = skeleton_select(neighborhoods(TRI5), seed=0, start=2)
    assert sk.members[0] == 2
    assert sorted(sk.members.tolist()) == [1, 2, 3]
    assert sk.labels.tolist() == [2, 1, 0, 1, 2]


def test_skeleton_single_row():
    sk = skeleton_select(neighborhoods(np.ones((1, 1))), seed=0)
    assert sk.members.tolist() == [0]


def test_skeleton_coverage_random_band():
    for seed in range(50):
        G = neighborhoods(random_band(200, 10, 0.5, seed))
        sk = skeleton_select(G, seed=seed)
        covered = np.unique(np.concatenate([G.D(i) for i in sk.members]))
        assert len(covered) == 200


def test_skeleton_refuses_disconnected():
    with pytest.raises(DisconnectedError):
        skeleton_select(neighborhoods(np.eye(3)), seed=0)


def test_mds_hand_example():
    x = np.array([0.0, 1.0, 2.0])
    conf = local_mds(np.abs(x[:, None] - x[None, :]))
    assert np.allclose(conf, [1.0, 0.0, -1.0], atol=1e-12)
    assert local_mds(np.zeros((1, 1))).tolist() == [0.0]
    with pytest.raises(DegenerateConfigurationError):
        local_mds(np.zeros((3, 3)))


@given(st.lists(st.floats(-100, 100), min_size=2, max_size=20, unique=True))
def test_mds_reproduces_collinear_distances(pts):
    x = np.array(pts)
    if np.ptp(x) < 1e-3:
        return
    D = np.abs(x[:, None] - x[None, :])
    y = local_mds(D)
    assert np.abs(np.abs(y[:, None] - y[None, :]) - D).max() <= 1e-8 * max(1.0, D.max())


def test_flesh_to_body_cases():
    y = np.array([0.0, 1.0, 2.0, np.nan])
    assert np.array_equal(flesh_to_body(y[:, None])[:3], y[:3])
    # second column is the first reflected and shifted on the overlap
    Y = np.full((4, 2), np.nan)
    Y[:3, 0] = [0.0, 1.0, 2.0]
    Y[1:, 1] = [5.0, 4.0, 3.0]
    x = flesh_to_body(Y)
    assert np.allclose(x, [0.0, 1.0, 2.0, 3.0])
    # a single overlapping row carries no orientation: keep the column as is
    Y = np.full((3, 2), np.nan)
    Y[:2, 0] = [1.0, 1.0]
    Y[1:, 1] = [0.0, 2.0]
    assert np.allclose(flesh_to_body(Y), [1.0, 1.0, 3.0])
    Y = np.full((4, 2), np.nan)
    Y[:2, 0] = [0.0, 1.0]
    Y[2:, 1] = [0.0, 1.0]
    with pytest.raises(AlignmentError):
        flesh_to_body(Y)


def test_tridiagonal_skeleton_without_ends():
    d = 9
    G = neighborhoods(full_band(d, 1))
    members = list(range(1, d - 1))
    Y = np.full((d, len(members)), np.nan)
    for c, i in enumerate(members):
        Di = G.D(i)
        Y[Di, c] = local_mds(symm_diff_distance(G, Di))
    pi = configuration_to_permutation(flesh_to_body(Y))
    assert pi in (Permutation.identity(d), Permutation.reversal(d))


def test_ranking_examples():
    assert configuration_to_permutation([3.2, -1.0, 0.0]).one_based().tolist() == [3, 1, 2]
    assert configuration_to_permutation([0.0, 1.0, 5.0]) == Permutation.identity(3)
    assert configuration_to_permutation([1.0, 0.0, -1.0]) == Permutation.reversal(3)
    assert configuration_to_permutation([1.0, 1.0, 0.0]).one_based().tolist() == [2, 3, 1]
    with pytest.raises(IncompleteConfigurationError):
        configuration_to_permutation([0.0, np.nan])


# ---------------------------------------------------------------- permutations

def test_permutation_algebra():
    pi = random_permutation(20, 1)
    S = random_band(20, 3, 0.6, 2)
    assert np.array_equal(apply_permutation(S, Permutation.identity(20)), S)
    assert np.array_equal(apply_permutation(apply_permutation(S, pi), pi.inverse()), S)
    assert pi.compose(pi.inverse()) == Permutation.identity(20)
    Sp = apply_permutation(S, pi)
    i, j = 3, 7
    assert Sp[pi(i), pi(j)] == S[i, j]
    assert np.array_equal(apply_permutation(sp.csr_array(S), pi).toarray(), Sp)
    with pytest.raises(ValueError):
        apply_permutation(S, Permutation.identity(19))
    with pytest.raises(ValueError):
        Permutation([0, 0, 1])


@given(st.integers(2, 60), st.integers(0, 10**5))
def test_half_width_invariance(d, seed):
    S = random_band(d, min(4, d - 1), 0.7, seed)
    pi = random_permutation(d, seed + 1)
    a = report_stats(S, pi)
    b = report_stats(apply_permutation(S, pi), Permutation.identity(d))
    assert (a.half_width_l1, a.half_bandwidth) == (b.half_width_l1, b.half_bandwidth)
    r = report_stats(S, Permutation.reversal(d).compose(pi))
    assert (a.half_width_l1, a.half_bandwidth) == (r.half_width_l1, r.half_bandwidth)


# ---------------------------------------------------------------- statistics

def test_report_tridiagonal():
    rep = report_stats(TRI5, Permutation.identity(5))
    assert rep.half_width_l1 == 5 and rep.half_bandwidth == 1
    assert rep.fill == 1.0
    band = report_stats(full_band(30, 4), Permutation.identity(30))
    assert np.all(band.densities[4:-4] == 1.0)
    assert band.fill == 1.0


def test_band_count():
    for d, w in [(5, 1), (10, 3), (7, 0), (6, 5)]:
        assert band_count(d, w) == int(full_band(d, w).sum())


def test_full_band_l1_matches_row_maximum():
    d, lam = 17, 4
    rep = report_stats(full_band(d, lam), Permutation.identity(d))
    rows = [max(min(i, lam), min(d - 1 - i, lam)) for i in range(d)]
    assert rep.half_width_l1 == sum(rows)


def test_delta_window_normalization():
    G = neighborhoods(TRI5)
    pi = Permutation.identity(5)
    A = symm_diff_distance(G)
    Gp = pi.distance_matrix()
    want = np.abs(Gp - A)[Gp <= 2].sum() / (5 * 2)
    assert delta_m(G, pi, 2) == pytest.approx(want)


def test_bounds_tridiagonal_interior():
    d = 10
    diag = bounds_diagnostics(full_band(d, 1), Permutation.identity(d), m=3)
    for i in range(1, d - 2):
        assert diag.pair_mask[i, i + 1]
        assert diag.pair_bound[i, i + 1] == 0 and diag.pair_gap[i, i + 1] == 0
    assert diag.pair_bound_holds
    # far pairs break the premise, so the global bound is not implied here
    assert not diag.pair_mask[0, d - 1]


def test_global_bounds_when_premise_holds_everywhere():
    d = 9
    diag = bounds_diagnostics(np.ones((d, d)), Permutation.identity(d), m=3)
    assert np.all(diag.pair_mask | np.eye(d, dtype=bool))
    assert diag.delta_d <= diag.Q + 1e-12
    assert diag.delta_window <= diag.m_bound + 1e-12


def test_bounds_full_band_second_term():
    d, lam = 40, 3
    diag = bounds_diagnostics(full_band(d, lam), Permutation.identity(d))
    n = neighborhoods(full_band(d, lam)).sizes
    assert diag.Q_terms[1] == pytest.approx((d * (d - 1) - (d - 1) * n.sum()) / d**2)
    interior = slice(lam, d - lam)
    assert np.all(diag.pair_bound[interior, interior][diag.pair_mask[interior, interior]] == 0)


def test_bounds_random_band_all_pairs():
    for seed in range(20):
        S = random_band(80, 6, 0.5, seed)
        pi = Permutation.identity(80)
        diag = bounds_diagnostics(S, pi, m=6)
        assert diag.pair_bound_holds
        near = pi.distance_matrix() <= 6
        np.fill_diagonal(near, False)
        if np.all(diag.pair_mask[near]):
            assert diag.delta_window <= diag.m_bound + 1e-12


def test_shared_neighbor_premise():
    for seed in range(10):
        S = random_band(60, 5, 0.5, seed)
        G = neighborhoods(S)
        pi = random_permutation(60, seed)
        Sp = apply_permutation(S, pi)
        Gp = neighborhoods(Sp)
        l = half_widths(Gp, np.arange(60))
        A = Gp.adjacency().astype(int)
        share = (A @ A.T).toarray() > 0
        dist = np.abs(np.arange(60)[:, None] - np.arange(60)[None, :])
        assert np.all(dist[share] <= (l[:, None] + l[None, :])[share])
        assert G.d == 60


# ---------------------------------------------------------------- pipeline

def test_pack_full_band_optimal():
    S = full_band(127, 5)
    Sp = apply_permutation(S, random_permutation(127, 3))
    pi, rep = pack(Sp, seed=3)
    assert rep.half_bandwidth == 5
    assert rep.half_width_l1 == report_stats(S, Permutation.identity(127)).half_width_l1


def test_pack_banded_not_worse():
    S = full_band(50, 3)
    _, rep = pack(S, seed=0)
    assert rep.half_width_l1 <= report_stats(S, Permutation.identity(50)).half_width_l1


def test_pack_trivial_and_disconnected():
    pi, _ = pack(np.ones((1, 1)))
    assert pi == Permutation.identity(1)
    with pytest.raises(DisconnectedError) as exc:
        pack(np.eye(5))
    assert len(exc.value.components) == 5


def test_pack_deterministic():
    S = apply_permutation(random_band(150, 6, 0.5, 1), random_permutation(150, 2))
    a, _ = pack(S, t=2, seed=7)
    b, _ = pack(S, t=2, seed=7)
    assert a == b


# ---------------------------------------------------------------- reconstruction

def test_reconstruct_small():
    pi = Permutation.from_one_based([2, 1, 3])
    gamma = reconstruct_from_distance(pi.distance_matrix())
    assert gamma.one_based().tolist() in ([2, 1, 3], [2, 3, 1])
    for d in (1, 2, 7):
        g = reconstruct_from_distance(Permutation.identity(d).distance_matrix())
        assert g in (Permutation.identity(d), Permutation.reversal(d))


@given(st.integers(1, 50), st.integers(0, 10**6))
def test_reconstruct_random(d, seed):
    pi = random_permutation(d, seed)
    g = reconstruct_from_distance(pi.distance_matrix())
    assert g in (pi, Permutation.reversal(d).compose(pi))


def test_reconstruct_rejects_non_metric():
    G = np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]])
    with pytest.raises(NotAPermutationMetricError):
        reconstruct_from_distance(G)


def test_reconstruct_points_examples():
    x = np.array([0.0, 5.0, 2.0])
    y = reconstruct_points(nearest_neighbor_info(np.abs(x[:, None] - x[None, :])))
    assert np.diff(np.sort(y)).tolist() == [2.0, 3.0]
    y = reconstruct_points(nearest_neighbor_info(np.array([[0.0, 4.5], [4.5, 0.0]])))
    assert y.tolist() == [0.0, 4.5]


@given(st.lists(st.integers(-1000, 1000), min_size=1, max_size=40, unique=True))
def test_reconstruct_integer_points(pts):
    x = np.array(pts, dtype=float)
    Gx = np.abs(x[:, None] - x[None, :])
    y = reconstruct_points(nearest_neighbor_info(Gx))
    assert np.array_equal(np.abs(y[:, None] - y[None, :]), Gx)


def test_reconstruct_points_malformed():
    x = np.array([0.0, 1.0, 3.0, 7.0])
    info = nearest_neighbor_info(np.abs(x[:, None] - x[None, :]))
    info.brackets.pop(next(iter(info.brackets)))
    with pytest.raises(ReconstructionError):
        reconstruct_points(info)


# ---------------------------------------------------------------- separators

@given(st.integers(1, 8), st.integers(1, 8), st.floats(0.05, 0.8), st.integers(0, 10**5))
def test_min_vertex_cover_matches_matching(nu, nv, p, seed):
    rng = np.random.default_rng(seed)
    B = sp.csr_array(rng.random((nu, nv)) < p)
    cu, cv = min_vertex_cover_bipartite(B)
    dense = B.toarray()
    covered = np.zeros_like(dense)
    covered[cu, :] = True
    covered[:, cv] = True
    assert not np.any(dense & ~covered)
    match = maximum_bipartite_matching(B, perm_type="column") if B.nnz else np.full(nu, -1)
    assert len(cu) + len(cv) == int(np.sum(match >= 0))


def test_separator_of_unpermuted_dyadic():
    S = dyadic_random(3, 5, 1.0)
    G = neighborhoods(S)
    left, sep, right = find_separator(G, Permutation.identity(35))
    assert sep.tolist() == list(range(15, 20))
    assert left.tolist() == list(range(15)) and right.tolist() == list(range(20, 35))


def test_recursive_recovers_dyadic_tree():
    N, k = 3, 5
    S = dyadic_random(N, k, 1.0)
    pi0 = random_permutation(35, 4)
    _, tree = recursive_dyadic_pack(apply_permutation(S, pi0), seed=4)
    levels = {}
    for lev, sep in tree.separators():
        levels.setdefault(lev, set()).add(frozenset(sep.tolist()))
    truth = {0: {frozenset(pi0.image[15:20].tolist())},
             1: {frozenset(pi0.image[5:10].tolist()), frozenset(pi0.image[25:30].tolist())}}
    assert levels == truth
    assert tree.depth() == 2


def test_recursive_band_stays_flat():
    S = apply_permutation(full_band(60, 5), random_permutation(60, 1))
    pi, tree = recursive_dyadic_pack(S, seed=1)
    assert tree.is_leaf and tree.depth() == 0
    assert sorted(pi.image.tolist()) == list(range(60))
