"""Deterministic backbone routes.

* ``tsp_tour`` - nearest-neighbour construction polished by first-improvement 2-opt.
* ``bgt_plan`` / ``bgt_generator`` - bamboo-garden-trimming style schedule for
  sites of unequal importance.  Sites are bucketed by (normalised) leading
  utility coefficient into geometric weight classes; each class gets its own
  tour, and classes are served in segments of bounded travel time following the
  inorder traversal of a complete binary tree, so heavier classes come round
  more often.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .instance import GraphInstance
from .schedule import ScheduleGenerator


@dataclass(frozen=True)
class Tour:
    order: tuple[int, ...]
    length: int

    def to_dict(self) -> dict:
        return {"order": list(self.order), "length": self.length}


def tour_length(travel, order: Sequence[int]) -> int:
    if len(order) < 2:
        return 0
    o = np.asarray(order)
    W = np.asarray(travel)
    return int(W[o, np.roll(o, -1)].sum())


def nearest_neighbor_order(travel, start: int = 0) -> list[int]:
    W = np.asarray(travel)
    n = W.shape[0]
    order = [start]
    unvisited = np.ones(n, dtype=bool)
    unvisited[start] = False
    for _ in range(n - 1):
        row = np.where(unvisited, W[order[-1]], np.iinfo(np.int64).max)
        nxt = int(np.argmin(row))  # ties -> lowest index
        order.append(nxt)
        unvisited[nxt] = False
    return order


def two_opt(travel, order: Sequence[int]) -> list[int]:
    """First-improvement 2-opt until no exchange of two tour edges shortens the tour.

    The first site stays in place.
    """
    W = np.asarray(travel)
    t = list(order)
    n = len(t)
    if n < 4:
        return t
    improved = True
    while improved:
        improved = False
        arr = np.asarray(t)
        nxt = np.roll(arr, -1)
        edge = W[arr, nxt]
        for i in range(n - 2):
            a, b = arr[i], arr[i + 1]
            # candidate j in i+2 .. n-1, excluding the edge adjacent to (a, b) around the wrap
            j = np.arange(i + 2, n if i > 0 else n - 1)
            if len(j) == 0:
                continue
            c, d = arr[j], nxt[j]
            delta = W[a, c] + W[b, d] - edge[i] - edge[j]
            hits = np.flatnonzero(delta < 0)
            if len(hits):
                jj = int(j[hits[0]])
                t[i + 1 : jj + 1] = t[i + 1 : jj + 1][::-1]
                improved = True
                break
    return t


def tsp_order(travel, start: int = 0) -> list[int]:
    return two_opt(travel, nearest_neighbor_order(travel, start))


def tsp_tour(instance: GraphInstance) -> Tour:
    """Approximate TSP tour starting at site 0 (deterministic)."""
    order = tsp_order(instance.travel, 0)
    return Tour(tuple(order), tour_length(instance.travel, order))


# ---------------------------------------------------------------------------
# grouped schedule


def inorder_group_order(groups: Sequence[int]) -> list[int]:
    """Inorder traversal of a complete binary tree whose level ``d`` is filled with
    ``groups[d]``: the first entry sits at the root, the last one fills the leaves."""
    groups = list(groups)
    if not groups:
        return []

    def walk(depth):
        if depth == len(groups) - 1:
            return [groups[depth]]
        below = walk(depth + 1)
        return below + [groups[depth]] + below

    return walk(0)


def weight_class(w: float, n: int, s: int) -> int:
    """Class index: 0 for ``w <= n^-2``, else ``i`` with ``2^(i-1) n^-2 < w <= 2^i n^-2``."""
    base = 1.0 / (n * n)
    if w <= base:
        return 0
    for i in range(1, s + 1):
        if w <= (2**i) * base:
            return i
    return s


@dataclass(frozen=True)
class BgtPlan:
    """Weight classes, their tours and one period of the class visiting order.

    ``groups[0]`` holds the negligible-weight sites; they have no tour of their
    own and are slotted in one at a time after every segment, drawn from a
    seeded random permutation (redrawn when exhausted).
    """

    n: int
    weights: np.ndarray
    groups: tuple[tuple[int, ...], ...]
    tours: dict = field(repr=False)
    visit_order: tuple[int, ...]
    diameter: int
    travel: np.ndarray = field(repr=False)
    seed: int = 0
    group_order: str = "tree"

    @property
    def nonempty(self) -> list[int]:
        return [i for i in range(1, len(self.groups)) if self.groups[i]]

    def to_dict(self) -> dict:
        return {
            "groups": [list(g) for g in self.groups],
            "tours": {str(k): list(v) for k, v in sorted(self.tours.items())},
            "visit_order": list(self.visit_order),
            "weights": [repr(float(w)) for w in self.weights],
            "diameter": self.diameter,
            "group_order": self.group_order,
        }


def bgt_plan(instance: GraphInstance, group_order: str = "tree", seed: int = 0) -> BgtPlan:
    n = instance.n
    if n < 2:
        raise ValidationError("a grouped schedule needs at least two sites")
    if group_order not in ("tree", "roundrobin"):
        raise ValidationError(f"group_order must be 'tree' or 'roundrobin', got {group_order!r}")
    d = instance.max_degree
    raw = np.array([u.coefficient(d) for u in instance.utilities])
    if raw.sum() <= 0:
        raise ValidationError("all leading utility coefficients are zero; nothing to weight the sites by")
    weights = raw / raw.sum()
    s = math.ceil(2 * math.log2(n))
    members: list[list[int]] = [[] for _ in range(s + 1)]
    for j, w in enumerate(weights):
        members[weight_class(float(w), n, s)].append(j)
    groups = tuple(tuple(m) for m in members)
    tours = {}
    W = instance.travel
    for i in range(1, s + 1):
        if groups[i]:
            idx = np.array(groups[i])
            local = tsp_order(W[np.ix_(idx, idx)], 0)
            tours[i] = tuple(int(idx[k]) for k in local)
    nonempty = [i for i in range(1, s + 1) if groups[i]]
    if group_order == "tree":
        visit = inorder_group_order(nonempty)
    else:
        visit = list(reversed(nonempty))
    return BgtPlan(n, weights, groups, tours, tuple(visit), instance.diameter,
                   np.array(W), seed, group_order)


class CyclicSupplier:
    """Serves a group's sites along a fixed tour, resuming where it stopped."""

    def __init__(self, tour: Sequence[int]):
        self.tour = tuple(tour)
        self.pos = 0

    def peek(self) -> tuple[int, np.ndarray | None]:
        return self.tour[self.pos], None

    def advance(self) -> None:
        self.pos = (self.pos + 1) % len(self.tour)


class SegmentSequence:
    """Lazily materialised infinite site sequence of a grouped schedule.

    Each visit of a class serves sites from that class's supplier until the
    next site would push the segment's travel time past the plan diameter; a
    segment always serves at least one site and at most one per class member.
    ``dists[k]`` is the distribution ``sites[k]`` was drawn from, or ``None``
    when it was already determined.
    """

    def __init__(self, plan: BgtPlan, suppliers: dict | None = None):
        self.plan = plan
        self.sites: list[int] = []
        self.dists: list[np.ndarray | None] = []
        self._slot = 0
        if suppliers is None:
            suppliers = {g: CyclicSupplier(t) for g, t in plan.tours.items()}
        self.suppliers = suppliers
        self._rng = np.random.default_rng(plan.seed)
        self._perm: list[int] = []

    def _zero_class_site(self) -> int | None:
        v0 = self.plan.groups[0]
        if not v0:
            return None
        if not self._perm:
            self._perm = [int(v) for v in self._rng.permutation(v0)]
        return self._perm.pop(0)

    def _extend(self) -> None:
        plan = self.plan
        W = plan.travel
        g = plan.visit_order[self._slot % len(plan.visit_order)]
        self._slot += 1
        supplier = self.suppliers[g]
        size = len(plan.groups[g])
        site, dist = supplier.peek()
        supplier.advance()
        seg, dists = [site], [dist]
        used = 0
        while len(seg) < size:
            site, dist = supplier.peek()
            step = int(W[seg[-1], site])
            if used + step > plan.diameter:
                break
            supplier.advance()
            used += step
            seg.append(site)
            dists.append(dist)
        extra = self._zero_class_site()
        if extra is not None:
            seg.append(extra)
            dists.append(None)
        self.sites.extend(seg)
        self.dists.extend(dists)

    def __getitem__(self, k: int) -> int:
        while k >= len(self.sites):
            self._extend()
        return self.sites[k]

    def distribution(self, k: int) -> np.ndarray | None:
        self[k]
        return self.dists[k]


class BgtGenerator(ScheduleGenerator):
    """Deterministic schedule realising a :class:`BgtPlan`."""

    deterministic = True

    def __init__(self, plan: BgtPlan):
        self.plan = plan
        self.sequence = SegmentSequence(plan)
        super().__init__(plan.travel, seed=0, start=self.sequence[0])

    def _restart(self):
        self.index = 0

    def _next_site(self):
        self.index += 1
        return self.sequence[self.index]

    def next_distribution(self):
        p = np.zeros(self.n)
        p[self.sequence[self.index + 1]] = 1.0
        return p

    def describe(self):
        return {"kind": "bgt", "group_order": self.plan.group_order}


def bgt_generator(plan: BgtPlan) -> BgtGenerator:
    return BgtGenerator(plan)
