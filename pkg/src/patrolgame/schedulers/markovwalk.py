"""A first-order Markov chain as a schedule generator."""

from __future__ import annotations

import numpy as np

from ..markov import check_transition, move_times
from ..schedule import ScheduleGenerator


class MarkovChainGenerator(ScheduleGenerator):
    """Moves ``i -> j`` with probability ``P[i, j]``, taking ``W[i, j]`` slots (one slot
    to stay put)."""

    def __init__(self, P, W=None, seed: int | None = 0, start: int = 0):
        self.P = check_transition(P)
        self.cum = np.cumsum(self.P, axis=1)
        super().__init__(move_times(W, self.P.shape[0]), seed=seed, start=start)

    def _next_site(self):
        row = self.cum[self.position]
        k = int(np.searchsorted(row, self.rng.random() * row[-1], side="right"))
        return min(k, self.n - 1)

    def next_distribution(self):
        return self.P[self.position].copy()

    def describe(self):
        return {"kind": "markov", "seed": self.seed}
