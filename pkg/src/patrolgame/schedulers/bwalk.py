"""Bwalk: repeated depth-first traversals of random spanning trees drawn by a biased
random walk (short edges preferred as ``alpha`` grows)."""

from __future__ import annotations

import numpy as np

from ..errors import DomainError, ResourceLimitError, ValidationError
from ..instance import GraphInstance
from ..schedule import ScheduleGenerator
from ..tours import BgtPlan, SegmentSequence, bgt_plan

MAX_WALK_STEPS = 10_000_000


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not alpha >= 1:
        raise DomainError(f"Bwalk bias must satisfy alpha >= 1, got {alpha}")
    return alpha


def bwalk_transition(W, alpha: float, scale: float = 1.0) -> np.ndarray:
    """``P'(i, j) = w'(i, j) / sum_j' w'(i, j')`` with ``w'(i, j) = alpha^(-w(i, j) / scale)``,
    no self-loops.

    Computed in log space relative to each row's shortest edge so large ``alpha`` or
    long edges do not underflow.
    """
    alpha = _check_alpha(alpha)
    if not scale > 0:
        raise DomainError(f"weight scale must be > 0, got {scale}")
    W = np.asarray(W, dtype=float) / scale
    n = W.shape[0]
    if W.shape != (n, n):
        raise ValidationError(f"weight matrix must be square, got shape {W.shape}")
    if n == 1:
        return np.ones((1, 1))
    off = ~np.eye(n, dtype=bool)
    Wm = np.where(off, W, np.inf)
    shift = Wm.min(axis=1, keepdims=True)
    logw = -np.where(off, Wm - shift, 0.0) * np.log(alpha)
    P = np.where(off, np.exp(logw), 0.0)
    return P / P.sum(axis=1, keepdims=True)


def bwalk_random_spanning_tree(P, rng, root: int = 0, max_steps: int = MAX_WALK_STEPS) -> list[tuple[int, int]]:
    """First-entry tree of a walk driven by ``P`` from ``root``.

    Returns the ``n - 1`` edges ``(parent, child)`` in the order the children were
    first reached.  A walk that has not covered every site after ``max_steps`` moves
    raises :class:`ResourceLimitError` (strong bias can make cover times astronomical).
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    cum = np.cumsum(P, axis=1)
    seen = np.zeros(n, dtype=bool)
    seen[root] = True
    left = n - 1
    edges = []
    cur = root
    steps = 0
    while left:
        if steps > max_steps:
            raise ResourceLimitError(
                f"biased walk did not cover all sites within {max_steps} steps; lower alpha", steps)
        steps += max(16, 4 * left)
        # draw in batches to keep the Python loop light
        for u in rng.random(max(16, 4 * left)):
            nxt = int(np.searchsorted(cum[cur], u * cum[cur, -1], side="right"))
            nxt = min(nxt, n - 1)
            if not seen[nxt]:
                seen[nxt] = True
                edges.append((cur, nxt))
                left -= 1
                if not left:
                    break
            cur = nxt
    return edges


def tree_preorder(edges, root: int) -> list[int]:
    """Depth-first preorder with children in the order they appear in ``edges``; this is the
    Euler traversal of the tree with repeated sites short-cut."""
    children: dict[int, list[int]] = {}
    for a, b in edges:
        children.setdefault(a, []).append(b)
    order = []
    stack = [root]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(reversed(children.get(v, [])))
    return order


def bwalk_round(P, rng, root: int = 0) -> list[int]:
    """One round: a fresh random tree rooted at ``root`` traversed depth first."""
    return tree_preorder(bwalk_random_spanning_tree(P, rng, root), root)


class RandomTreeSupplier:
    """Serves one class of sites round by round, each round a fresh random tree rooted at
    the last site served.  The first site of every later round is drawn directly from
    the biased walk's row, and that row is reported as its distribution."""

    def __init__(self, sites, P, rng, n: int):
        self.sites = np.asarray(sites, dtype=np.int64)
        self.P = np.asarray(P, dtype=float)
        self.rng = rng
        self.n = n
        self.queue: list[tuple[int, np.ndarray | None]] = []
        self.last: int | None = None

    def _global(self, row: np.ndarray) -> np.ndarray:
        p = np.zeros(self.n)
        p[self.sites] = row
        return p

    def _refill(self):
        k = len(self.sites)
        if k == 1:
            self.queue.append((0, None))
            return
        first = self.last is None
        root = 0 if first else self.last
        order = bwalk_round(self.P, self.rng, root)
        seq = order if first else order[1:]
        for pos, v in enumerate(seq):
            dist = None
            if (first and pos == 1) or (not first and pos == 0):
                dist = self._global(self.P[root])
            self.queue.append((v, dist))

    def peek(self):
        if not self.queue:
            self._refill()
        v, dist = self.queue[0]
        return int(self.sites[v]), dist

    def advance(self):
        if not self.queue:
            self._refill()
        v, _ = self.queue.pop(0)
        self.last = v


def single_class_plan(instance: GraphInstance) -> BgtPlan:
    """Every site in one class with an unlimited segment budget: a plain sequence of rounds."""
    n = instance.n
    everyone = tuple(range(n))
    budget = int(instance.travel.sum()) + 1
    return BgtPlan(n, np.full(n, 1.0 / n), ((), everyone), {1: everyone}, (1,), budget,
                   np.array(instance.travel), 0, "single")


class BwalkGenerator(ScheduleGenerator):
    """Grouped schedule whose in-class tours are random-tree traversals.

    Travel times are divided by the instance diameter before biasing, so ``alpha`` acts
    on a unit-free scale where the longest edge has weight 1.
    """

    def __init__(self, instance: GraphInstance, alpha: float, seed: int | None = 0, plan: BgtPlan | None = None):
        self.alpha = _check_alpha(alpha)
        if instance.n < 2:
            raise ValidationError("Bwalk needs at least two sites")
        self.instance = instance
        if plan is None:
            plan = single_class_plan(instance) if instance.uniform_utilities() else bgt_plan(instance)
        self.plan = plan
        self.class_P = {}
        for g, members in enumerate(plan.groups):
            if g == 0 or not members:
                continue
            idx = np.asarray(members)
            self.class_P[g] = bwalk_transition(instance.travel[np.ix_(idx, idx)], self.alpha, max(instance.diameter, 1))
        self.sequence = None
        super().__init__(instance.travel, seed=seed, start=0)

    def _restart(self):
        suppliers = {
            g: RandomTreeSupplier(self.plan.groups[g], P, self.rng, self.n)
            for g, P in self.class_P.items()
        }
        self.sequence = SegmentSequence(self.plan, suppliers)
        self.start = self.position = self.sequence[0]
        self.index = 0

    def _next_site(self):
        self.index += 1
        return self.sequence[self.index]

    def next_distribution(self):
        dist = self.sequence.distribution(self.index + 1)
        if dist is not None:
            return dist
        p = np.zeros(self.n)
        p[self.sequence[self.index + 1]] = 1.0
        return p

    def describe(self):
        return {"kind": "bwalk", "alpha": self.alpha, "seed": self.seed}


def bwalk_generator(instance: GraphInstance, alpha: float, seed: int = 0, plan: BgtPlan | None = None) -> BwalkGenerator:
    return BwalkGenerator(instance, alpha, seed, plan)
