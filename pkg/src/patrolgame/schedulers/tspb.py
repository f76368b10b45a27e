"""TSP-b: follow a backbone route but keep each upcoming site only with probability
``alpha``, travelling straight to the next kept site."""

from __future__ import annotations

import math

import numpy as np

from ..errors import DomainError
from ..instance import GraphInstance
from ..schedule import ScheduleGenerator
from ..tours import BgtPlan, SegmentSequence, Tour, bgt_plan, tsp_tour

# lookahead for non-periodic backbones stops once the remaining mass is below this
_LOOKAHEAD_TAIL = 1e-15


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0 < alpha <= 1:
        raise DomainError(f"TSP-b keep probability must satisfy 0 < alpha <= 1, got {alpha}")
    return alpha


def tspb_next_distribution(alpha: float, n: int) -> np.ndarray:
    """``gamma[j - 1] = P(next kept tour position is q_j | currently at q_1)``.

    ``gamma[0]`` is the full-loop return to the current site.
    """
    alpha = _check_alpha(alpha)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    q = 1.0 - alpha
    norm = -math.expm1(n * math.log(q)) if q > 0 else 1.0  # 1 - q**n
    gamma = np.empty(n)
    gamma[0] = alpha * q ** (n - 1) / norm
    if n > 1:
        gamma[1:] = alpha * q ** np.arange(0, n - 1) / norm
    return gamma


def expected_rounds_beta(alpha: float, n: int, tol: float = 1e-12) -> float:
    """``E[max_i beta_i] = sum_{k>=1} (1 - (1 - (1-alpha)^(k-1))^n)``, the expected number of
    rounds until every site has been kept again."""
    alpha = _check_alpha(alpha)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    q = 1.0 - alpha
    if q == 0.0:
        return 1.0
    total = 0.0
    k = 1
    while True:
        qk = q ** (k - 1)
        total += -math.expm1(n * math.log1p(-qk)) if qk < 1 else 1.0
        # remaining terms are each <= n q^(k) and shrink geometrically
        if n * q**k / (1.0 - q) < tol / 10:
            return total
        k += 1


class TspbGenerator(ScheduleGenerator):
    """Randomly thinned walk along a backbone.

    ``backbone`` is either a tuple (one period of a cyclic route) or an
    indexable infinite sequence such as :class:`~patrolgame.tours.SegmentSequence`.
    The number of backbone positions advanced per visit is geometric with
    success probability ``alpha``: each upcoming site is kept independently with
    probability ``alpha``.
    """

    def __init__(self, moves, backbone, alpha: float, seed: int | None = 0):
        self.alpha = _check_alpha(alpha)
        self.backbone = backbone
        self.period = len(backbone) if isinstance(backbone, tuple) else None
        super().__init__(moves, seed=seed, start=int(backbone[0]))
        if self.alpha == 1.0:
            self.deterministic = True

    def _restart(self):
        self.index = 0

    def _site(self, k: int) -> int:
        if self.period is not None:
            return self.backbone[k % self.period]
        return self.backbone[k]

    def _next_site(self):
        self.index += int(self.rng.geometric(self.alpha))
        if self.period is not None:
            self.index %= self.period
        return self._site(self.index)

    def next_distribution(self):
        a, q = self.alpha, 1.0 - self.alpha
        if self.period is not None:
            L = self.period
            offsets = np.arange(1, L + 1)
            norm = 1.0 - q**L
        else:
            K = 1 if q == 0 else max(1, math.ceil(math.log(_LOOKAHEAD_TAIL) / math.log(q)))
            offsets = np.arange(1, K + 1)
            norm = 1.0 - q**K
        probs = a * q ** (offsets - 1) / norm
        sites = np.array([self._site(self.index + r) for r in offsets])
        p = np.zeros(self.n)
        np.add.at(p, sites, probs)
        return p

    def describe(self):
        return {"kind": "tspb", "alpha": self.alpha, "seed": self.seed}


def tspb_generator(
    instance: GraphInstance,
    alpha: float,
    seed: int = 0,
    tour: Tour | None = None,
    plan: BgtPlan | None = None,
) -> TspbGenerator:
    """TSP-b over a TSP tour when all sites share one utility, else over the grouped
    (BGT) schedule."""
    if tour is not None:
        backbone = tuple(tour.order)
    elif plan is None and (instance.n < 2 or instance.uniform_utilities()):
        backbone = tuple(tsp_tour(instance).order)
    else:
        backbone = SegmentSequence(plan or bgt_plan(instance))
    return TspbGenerator(instance.travel, backbone, alpha, seed)
