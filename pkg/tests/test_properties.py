import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import matrix_instance
from oracles import random_irreducible_chain, random_weights
from patrolgame.instance import PolyUtility, cumulative_utility, travel_matrix
from patrolgame.markov import (
    compute_first_visit,
    compute_hitting_times,
    hitting_times_exact,
    kemeny_constant,
    payoff_tensor,
    stationary_distribution,
)
from patrolgame.oracle import collect_attack_stats
from patrolgame.report import Visibility
from patrolgame.schedule import sample_trace
from patrolgame.schedulers import (
    bwalk_random_spanning_tree,
    bwalk_transition,
    expected_rounds_beta,
    tree_preorder,
    tspb_generator,
    tspb_next_distribution,
)
from patrolgame.tours import inorder_group_order, tour_length, tsp_order

def metric_closure(W):
    """Shortest-path distances, so the triangle inequality holds."""
    W = np.array(W)
    for k in range(len(W)):
        W = np.minimum(W, W[:, [k]] + W[[k], :])
    return W


FAST = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
seeds = st.integers(0, 2**32 - 1)
coeffs = st.lists(st.floats(0, 5, allow_nan=False), min_size=1, max_size=3)


@FAST
@given(st.lists(st.tuples(st.floats(-50, 50), st.floats(-50, 50)), min_size=1, max_size=7))
def test_travel_matrix_is_metric(points):
    W = travel_matrix(np.array(points))
    n = len(points)
    assert np.array_equal(W, W.T) and np.all(np.diag(W) == 0)
    off = ~np.eye(n, dtype=bool)
    assert np.all(W[off] >= 1)
    for k in range(n):
        assert np.all(W <= W[:, [k]] + W[[k], :] + 1e-9 + (W == 0))


@FAST
@given(coeffs, st.integers(0, 30))
def test_cumulative_is_monotone(c, T):
    u = PolyUtility(tuple(c))
    table = u.cumulative_table(T)
    assert np.all(np.diff(table) >= 0)
    assert np.isclose(table[T], cumulative_utility(u, T), rtol=1e-12)


@FAST
@given(seeds, st.integers(2, 5), st.integers(1, 3))
def test_first_visit_mass_and_hitting_times(seed, n, max_w):
    rng = np.random.default_rng(seed)
    P = random_irreducible_chain(rng, n)
    W = random_weights(rng, n, max_w)
    F = compute_first_visit(P, W, k_max=200 * n * max_w)
    mass = F.f.sum(axis=0)
    assert np.all(mass <= 1 + 1e-9)
    A = compute_hitting_times(F).a
    assert np.allclose(A, hitting_times_exact(P, W).a, rtol=1e-4)


@FAST
@given(seeds, st.integers(2, 7))
def test_kemeny_unit_invariance(seed, n):
    P = random_irreducible_chain(np.random.default_rng(seed), n)
    res = kemeny_constant(P)
    assert np.max(np.abs(res.per_start - res.kappa)) <= 1e-9
    pi = stationary_distribution(P)
    assert np.allclose(pi @ P, pi)


@FAST
@given(seeds, st.integers(2, 4), st.floats(0, 10))
def test_payoff_tensor_bounds(seed, n, M):
    rng = np.random.default_rng(seed)
    P = random_irreducible_chain(rng, n)
    F = compute_first_visit(P, k_max=30)
    H = [PolyUtility((float(rng.uniform(0, 2)),)) for _ in range(n)]
    Z = payoff_tensor(F, H, M, 20)
    cum = np.array([[cumulative_utility(u, T) for T in range(21)] for u in H])
    assert np.all(Z <= cum[None, :, :] + 1e-9)
    assert np.all(Z >= -M - 1e-9)


@FAST
@given(st.floats(0.01, 1.0), st.integers(1, 30))
def test_gamma_is_distribution(alpha, n):
    g = tspb_next_distribution(alpha, n)
    assert abs(g.sum() - 1) < 1e-9 and np.all(g >= 0)
    if n > 1:
        assert np.all(np.diff(g[1:]) <= 1e-15)


@FAST
@given(st.floats(0.05, 1.0), st.integers(1, 20))
def test_beta_grows_with_n_and_skipping(alpha, n):
    b = expected_rounds_beta(alpha, n)
    assert b >= 1 - 1e-12
    assert expected_rounds_beta(alpha, n + 1) >= b - 1e-12


@FAST
@given(seeds, st.integers(2, 7), st.floats(1.0, 3.0))
def test_random_tree_spans(seed, n, alpha):
    rng = np.random.default_rng(seed)
    W = metric_closure(random_weights(rng, n, 4))
    P = bwalk_transition(W, alpha)
    assert np.allclose(P.sum(axis=1), 1) and np.allclose(np.diag(P), 0)
    edges = bwalk_random_spanning_tree(P, rng, root=0)
    assert len(edges) == n - 1
    assert sorted(b for _, b in edges) == list(range(1, n))
    order = tree_preorder(edges, 0)
    assert sorted(order) == list(range(n))
    # preorder round length is at most twice the tree weight
    tree_w = sum(W[a, b] for a, b in edges)
    path = sum(W[order[k], order[k + 1]] for k in range(n - 1))
    assert path <= 2 * tree_w


@FAST
@given(seeds, st.integers(2, 8))
def test_tsp_order_is_a_permutation(seed, n):
    W = random_weights(np.random.default_rng(seed), n, 9)
    order = tsp_order(W)
    assert sorted(order) == list(range(n))
    assert tour_length(W, order) >= n


@FAST
@given(st.lists(st.integers(0, 9), min_size=1, max_size=5, unique=True))
def test_inorder_frequencies_double_per_level(groups):
    order = inorder_group_order(groups)
    assert len(order) == 2 ** len(groups) - 1
    for depth, g in enumerate(groups):
        assert order.count(g) == 2**depth


@settings(max_examples=15, deadline=None)
@given(seeds, st.floats(0.2, 1.0))
def test_trace_and_oracle_invariants(seed, alpha):
    rng = np.random.default_rng(seed)
    inst = matrix_instance(metric_closure(random_weights(rng, 4, 3)))
    g = tspb_generator(inst, alpha, seed=seed)
    tr = sample_trace(g, 300, seed)
    assert tr.times[0] == 0 and np.all(np.diff(tr.times) >= 1) and tr.times[-1] <= 300
    stats = collect_attack_stats(g, 300, 2, 10, seed=seed)
    full = stats.best_response(inst.utilities, 0.0, Visibility.FULL).value
    for model in (Visibility.LOCAL, Visibility.NONE):
        assert stats.best_response(inst.utilities, 0.0, model).value <= full + 1e-9
