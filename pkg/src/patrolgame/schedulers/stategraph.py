"""SG: schedules as walks on a state machine.

A state records, for every site, the slots elapsed since the patroller last
arrived there, plus the patroller's position.  Moving ``x -> y`` advances every
clock by the travel time and resets the clock of the arrival site.  The utility
component of site ``i`` is its cumulative utility over the elapsed time, and an
arc weighs the largest component seen along it, including the arrival site's
completed gap just before its reset.  The best deterministic schedule is the
cycle with the smallest bottleneck arc.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ..errors import DomainError, NoFeasibleScheduleError, ResourceLimitError, ValidationError
from ..instance import GraphInstance
from ..schedule import CyclicGenerator, ScheduleGenerator, emr_estimate

DEFAULT_MAX_STATES = 200_000


class CumulativeTables:
    """``value(i, e) = sum_{t<=e} h_i(t)``, grown on demand."""

    def __init__(self, utilities):
        self.utilities = list(utilities)
        self.zero = np.array([u.is_zero() for u in self.utilities])
        self.tables = [u.cumulative_table(16) for u in self.utilities]

    def _ensure(self, i: int, e: int):
        t = self.tables[i]
        if e >= len(t):
            self.tables[i] = self.utilities[i].cumulative_table(max(e, 2 * (len(t) - 1)))

    def value(self, i: int, e: int) -> float:
        self._ensure(i, e)
        return float(self.tables[i][e])

    def values(self, elapsed) -> np.ndarray:
        return np.array([self.value(i, int(e)) for i, e in enumerate(elapsed)])


@dataclass(frozen=True)
class StateNode:
    elapsed: tuple[int, ...]
    position: int


def _advance(tables: CumulativeTables, elapsed: tuple, d: int, y: int) -> tuple[tuple, float, np.ndarray]:
    """Successor clocks after a move of ``d`` slots into ``y``, the arc weight and the
    successor's utility components."""
    pre = [0 if tables.zero[i] else e + d for i, e in enumerate(elapsed)]
    arc = max(tables.value(i, e) for i, e in enumerate(pre))
    pre[y] = 0
    comps = tables.values(pre)
    return tuple(pre), arc, comps


@dataclass
class StateGraph:
    instance: GraphInstance
    cap: float
    nodes: list[StateNode]
    arcs_from: np.ndarray
    arcs_to: np.ndarray
    arcs_weight: np.ndarray
    index: dict = field(repr=False, default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.nodes)

    def components(self, k: int) -> np.ndarray:
        return CumulativeTables(self.instance.utilities).values(self.nodes[k].elapsed)

    def weight_matrix(self) -> np.ndarray:
        """Dense arc weights, ``inf`` where there is no arc."""
        M = np.full((self.size, self.size), np.inf)
        M[self.arcs_from, self.arcs_to] = self.arcs_weight
        return M

    def summary(self) -> dict:
        return {"states": self.size, "arcs": int(len(self.arcs_weight)), "cap": self.cap}


def sg_build(instance: GraphInstance, cap: float | None = None, max_states: int = DEFAULT_MAX_STATES) -> StateGraph:
    """Closure of the move rule from the all-zero clock state at every position, keeping
    only states and arcs whose utility components stay within ``cap``."""
    if cap is None:
        cap = default_cap(instance)
    cap = float(cap)
    if not cap > 0:
        raise DomainError(f"state cap must be > 0, got {cap}")
    n = instance.n
    W = instance.travel
    tables = CumulativeTables(instance.utilities)
    nodes: list[StateNode] = []
    index: dict[StateNode, int] = {}
    queue: deque[int] = deque()

    def add(node):
        k = index.get(node)
        if k is None:
            if len(nodes) >= max_states:
                raise ResourceLimitError(
                    f"state graph exceeds {max_states} states at cap {cap}; lower the cap or raise the limit",
                    len(nodes) + 1,
                )
            k = len(nodes)
            index[node] = k
            nodes.append(node)
            queue.append(k)
        return k

    for p in range(n):
        add(StateNode((0,) * n, p))
    src, dst, wts = [], [], []
    while queue:
        k = queue.popleft()
        x = nodes[k]
        for y in range(n):
            if y == x.position:
                continue
            elapsed, arc, _ = _advance(tables, x.elapsed, int(W[x.position, y]), y)
            if arc > cap:
                continue
            v = add(StateNode(elapsed, y))
            src.append(k)
            dst.append(v)
            wts.append(arc)
    return StateGraph(instance, cap, nodes, np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64),
                      np.array(wts, dtype=float), index)


def default_cap(instance: GraphInstance, slack: float = 1.5) -> float:
    """``slack`` times the EMR of the grouped (BGT) schedule, a feasible upper bound."""
    from ..tours import bgt_generator, bgt_plan

    if instance.n < 2:
        return 1.0
    g = bgt_generator(bgt_plan(instance))
    horizon = max(64, 40 * instance.n * max(instance.diameter, 1))
    emr = emr_estimate(g, instance.utilities, 1, horizon).emr
    return slack * max(emr, 1e-12)


def minimax_closure(weights: np.ndarray) -> np.ndarray:
    """All-pairs minimum-bottleneck path weights by minimax Floyd-Warshall relaxation."""
    D = np.array(weights, dtype=float, copy=True)
    for k in range(D.shape[0]):
        D = np.minimum(D, np.maximum(D[:, k : k + 1], D[k : k + 1, :]))
    return D


@dataclass(frozen=True)
class SgSchedule:
    sites: tuple[int, ...]
    bottleneck: float
    states: tuple[int, ...]

    def generator(self, travel) -> CyclicGenerator:
        return CyclicGenerator(travel, self.sites)

    def to_dict(self) -> dict:
        return {"sites": list(self.sites), "bottleneck": repr(self.bottleneck)}


def _has_cycle(size, src, dst) -> tuple[bool, np.ndarray]:
    g = csr_matrix((np.ones(len(src)), (src, dst)), shape=(size, size))
    _, labels = connected_components(g, directed=True, connection="strong")
    counts = np.bincount(labels)
    return bool(np.any(counts >= 2)), labels


def sg_optimal_deterministic(sg: StateGraph) -> SgSchedule:
    """Minimum-bottleneck cycle of the state graph as a periodic site schedule.

    The bottleneck value equals ``min_u`` of the minimax closure's diagonal; it is found
    as the smallest arc weight whose sub-graph of lighter-or-equal arcs has a cycle
    (a strongly connected component with two or more states).
    """
    if sg.size == 0 or len(sg.arcs_weight) == 0:
        raise NoFeasibleScheduleError("state graph has no cycle within the cap; raise the cap")
    levels = np.unique(sg.arcs_weight)
    ok, _ = _has_cycle(sg.size, sg.arcs_from, sg.arcs_to)
    if not ok:
        raise NoFeasibleScheduleError(f"no cycle survives pruning at cap {sg.cap}; raise the cap")
    lo, hi = 0, len(levels) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        keep = sg.arcs_weight <= levels[mid]
        if _has_cycle(sg.size, sg.arcs_from[keep], sg.arcs_to[keep])[0]:
            hi = mid
        else:
            lo = mid + 1
    b = float(levels[lo])
    keep = sg.arcs_weight <= b
    src, dst = sg.arcs_from[keep], sg.arcs_to[keep]
    _, labels = _has_cycle(sg.size, src, dst)
    counts = np.bincount(labels)
    u = int(np.flatnonzero(counts[labels] >= 2)[0])
    # shortest cycle through u inside its component, by BFS over the kept arcs
    adj: dict[int, list[int]] = {}
    for a, c in zip(src.tolist(), dst.tolist()):
        if labels[a] == labels[u] and labels[c] == labels[u]:
            adj.setdefault(a, []).append(c)
    parent = {u: None}
    dq = deque([u])
    end = None
    while dq and end is None:
        a = dq.popleft()
        for c in sorted(adj.get(a, [])):
            if c == u:
                end = a
                break
            if c not in parent:
                parent[c] = a
                dq.append(c)
    path = [end]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    states = tuple(reversed(path))
    sites = tuple(sg.nodes[k].position for k in states)
    return SgSchedule(sites, b, states)


class SgRandomGenerator(ScheduleGenerator):
    """Walk on the state machine with ``P(x, y) proportional to 1 / (max_i y_i)^alpha``.

    ``y_i`` are the successor's utility components; a successor whose components are all
    zero gets weight 1.  Successors are computed locally from the current state, so no
    graph is materialised.  With ``cap`` set, successors whose arc exceeds it are avoided
    unless no other move remains.
    """

    def __init__(self, instance: GraphInstance, alpha: float, seed: int | None = 0, cap: float | None = None, start: int = 0):
        alpha = float(alpha)
        if not alpha >= 0:
            raise DomainError(f"SG walk exponent must satisfy alpha >= 0, got {alpha}")
        if instance.n < 2:
            raise ValidationError("a state-graph walk needs at least two sites")
        self.alpha = alpha
        self.instance = instance
        self.cap = cap
        self.tables = CumulativeTables(instance.utilities)
        super().__init__(instance.travel, seed=seed, start=start)

    def _restart(self):
        self.elapsed = (0,) * self.n
        self._cache = None

    def successors(self) -> tuple[np.ndarray, list[tuple], np.ndarray]:
        """Candidate sites, their clock tuples and move probabilities from the current state."""
        if self._cache is not None:
            return self._cache
        sites, states, logc, arcs = [], [], [], []
        for y in range(self.n):
            if y == self.position:
                continue
            elapsed, arc, comps = _advance(self.tables, self.elapsed, int(self.moves[self.position, y]), y)
            top = float(comps.max())
            sites.append(y)
            states.append(elapsed)
            arcs.append(arc)
            logc.append(0.0 if top <= 0 else -self.alpha * math.log(top))
        logc = np.array(logc)
        if self.cap is not None:
            over = np.array(arcs) > self.cap
            if not over.all():
                logc[over] = -np.inf
        p = np.exp(logc - logc.max())
        p /= p.sum()
        self._cache = (np.array(sites), states, p)
        return self._cache

    def _next_site(self):
        sites, states, p = self.successors()
        k = int(self.rng.choice(len(sites), p=p))
        self.elapsed = states[k]
        self._cache = None
        return int(sites[k])

    def next_distribution(self):
        sites, _, p = self.successors()
        out = np.zeros(self.n)
        out[sites] = p
        return out

    def describe(self):
        return {"kind": "sg_rand", "alpha": self.alpha, "seed": self.seed, "cap": self.cap}


def sg_random_generator(source, alpha: float, seed: int = 0, cap: float | None = None) -> SgRandomGenerator:
    """``source`` is a :class:`StateGraph` (its instance and cap are reused) or an instance."""
    if isinstance(source, StateGraph):
        return SgRandomGenerator(source.instance, alpha, seed, cap if cap is not None else source.cap)
    return SgRandomGenerator(source, alpha, seed, cap)
