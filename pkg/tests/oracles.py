"""Independent brute-force oracles used by the tests.

None of these share code with the package beyond plain data types.
"""

import itertools
import math

import numpy as np


def cumulative(coeffs, T):
    return sum(sum(c * t**k for k, c in enumerate(coeffs)) for t in range(1, T + 1))


def eq1_by_paths(P, W, coeffs_j, M, i, j, T):
    """Expected attack payoff by enumerating every patroller walk from ``i`` of
    duration up to ``T``.  Self-loops take one slot."""
    P = np.asarray(P, dtype=float)
    W = np.array(W, dtype=int)
    n = len(P)
    np.fill_diagonal(W, 1)
    total = 0.0

    def walk(site, elapsed, prob):
        nonlocal total
        for nxt in range(n):
            p = P[site, nxt]
            if p == 0:
                continue
            t = elapsed + W[site, nxt]
            if t > T:
                total += prob * p * cumulative(coeffs_j, T)
            elif nxt == j:
                total += prob * p * (cumulative(coeffs_j, t) - M)
            else:
                walk(nxt, t, prob * p)

    walk(i, 0, 1.0)
    return total


def hitting_times_mc(P, W, i, j, walks, rng):
    P = np.asarray(P, dtype=float)
    W = np.ones(P.shape, dtype=int) if W is None else np.array(W, dtype=int)
    np.fill_diagonal(W, 1)
    out = np.empty(walks)
    for r in range(walks):
        site, t = i, 0
        while True:
            nxt = rng.choice(len(P), p=P[site])
            t += W[site, nxt]
            site = nxt
            if site == j:
                break
        out[r] = t
    return out.mean()


def periodic_bottleneck(sequence, W, coeff_list):
    """Worst cumulative utility over the longest cyclic gap between arrivals, for the
    schedule repeating ``sequence``; ``inf`` if a site with utility is never visited."""
    L = len(sequence)
    arrivals = [0]
    for k in range(1, L + 1):
        arrivals.append(arrivals[-1] + W[sequence[k - 1], sequence[k % L]])
    period = arrivals[-1]
    times = {s: [] for s in range(len(W))}
    for k in range(L):
        # site sequence[k] is arrived at arrivals[k] (mod period)
        times[sequence[k]].append(arrivals[k])
    worst = 0.0
    for s, ts in times.items():
        if all(c == 0 for c in coeff_list[s]):
            continue
        if not ts:
            return math.inf
        gaps = [b - a for a, b in zip(ts, ts[1:])] + [ts[0] + period - ts[-1]]
        worst = max(worst, cumulative(coeff_list[s], max(gaps)))
    return worst


def exhaustive_periodic_optimum(W, coeff_list, max_period):
    n = len(W)
    best = math.inf
    for L in range(2, max_period + 1):
        for seq in itertools.product(range(n), repeat=L):
            if any(seq[k] == seq[(k + 1) % L] for k in range(L)):
                continue
            best = min(best, periodic_bottleneck(seq, W, coeff_list))
    return best


def spanning_trees(n):
    """All spanning trees of K_n as frozensets of undirected edges."""
    edges = list(itertools.combinations(range(n), 2))
    out = []
    for combo in itertools.combinations(edges, n - 1):
        parent = list(range(n))

        def find(a):
            while parent[a] != a:
                a = parent[a]
            return a

        ok = True
        for a, b in combo:
            ra, rb = find(a), find(b)
            if ra == rb:
                ok = False
                break
            parent[ra] = rb
        if ok:
            out.append(frozenset(frozenset(e) for e in combo))
    return out


def tree_law(n, wprime):
    trees = spanning_trees(n)
    weights = np.array([np.prod([wprime[tuple(sorted(e))] for e in t]) for t in trees])
    return trees, weights / weights.sum()


def brute_force_tsp(W):
    n = len(W)
    if n < 2:
        return 0
    best = math.inf
    for perm in itertools.permutations(range(1, n)):
        order = (0,) + perm
        length = sum(W[order[k], order[(k + 1) % n]] for k in range(n))
        best = min(best, length)
    return best


def random_irreducible_chain(rng, n, zero_prob=0.3):
    while True:
        P = rng.random((n, n))
        P[rng.random((n, n)) < zero_prob] = 0.0
        # keep a Hamiltonian cycle so the chain is irreducible
        perm = rng.permutation(n)
        for k in range(n):
            P[perm[k], perm[(k + 1) % n]] += 0.1
        P /= P.sum(axis=1, keepdims=True)
        return P


def random_weights(rng, n, max_w):
    W = rng.integers(1, max_w + 1, size=(n, n))
    W = np.triu(W, 1)
    W = W + W.T
    return W
