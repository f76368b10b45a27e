"""Patrol schedules as seeded stochastic processes, and the two criteria used to
compare them: expected maximum reward (EMR) and entropy rate.

Seed splitting
--------------
Independent samples are driven by ``derive_seed(master, *keys)``, which feeds
``master`` as entropy and ``keys`` as the spawn key of a
:class:`numpy.random.SeedSequence` and takes its first 64-bit word.  The rule is
stable across numpy versions, so every sample is reproducible from the master
seed alone.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, UnsupportedError, ValidationError
from .instance import PolyUtility


def derive_seed(master: int, *keys: int) -> int:
    seq = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(k) for k in keys))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def dwell_matrix(travel) -> np.ndarray:
    """Move times with a one-slot dwell for staying put."""
    W = np.array(travel, dtype=np.int64, copy=True)
    np.fill_diagonal(W, 1)
    return W


def shannon_entropy(p, base: float = math.e) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)) / math.log(base))


class ScheduleGenerator:
    """Base class for patrol schedules.

    A generator emits an infinite sequence of ``(site, arrival_slot)`` visits.
    The gap between consecutive arrivals is the travel time between the two
    sites (one slot when the patroller stays put).  Subclasses implement
    :meth:`_next_site` and :meth:`next_distribution`; :meth:`reset` restarts the
    process from its initial state with a fresh random stream.
    """

    deterministic = False

    def __init__(self, moves, seed: int | None = None, start: int = 0):
        self.moves = dwell_matrix(moves)
        self.n = self.moves.shape[0]
        if not 0 <= start < self.n:
            raise ValidationError(f"start site {start} out of range for {self.n} sites")
        self.start = start
        self.seed = seed
        self.reset(seed)

    def reset(self, seed: int | None = None) -> None:
        if seed is not None:
            self.seed = seed
        self.rng = np.random.default_rng(self.seed)
        self.position = self.start
        self.time = 0
        self._restart()

    def _restart(self) -> None:
        pass

    def _next_site(self) -> int:
        raise NotImplementedError

    def next_distribution(self) -> np.ndarray:
        """Probability of each site being the next one emitted, given the current state."""
        raise UnsupportedError(f"{type(self).__name__} does not expose next-site distributions")

    def step(self) -> tuple[int, int]:
        nxt = self._next_site()
        self.time += int(self.moves[self.position, nxt])
        self.position = nxt
        return nxt, self.time

    def describe(self) -> dict:
        return {"kind": type(self).__name__}


class CyclicGenerator(ScheduleGenerator):
    """Deterministic periodic schedule repeating ``sequence`` forever."""

    deterministic = True

    def __init__(self, moves, sequence: Sequence[int]):
        self.sequence = [int(s) for s in sequence]
        if not self.sequence:
            raise ValidationError("a cyclic schedule needs at least one site")
        super().__init__(moves, seed=0, start=self.sequence[0])

    def _restart(self):
        self.index = 0

    def _next_site(self):
        self.index = (self.index + 1) % len(self.sequence)
        return self.sequence[self.index]

    def next_distribution(self):
        p = np.zeros(self.n)
        p[self.sequence[(self.index + 1) % len(self.sequence)]] = 1.0
        return p

    def describe(self):
        return {"kind": "cyclic", "sequence": list(self.sequence)}


@dataclass(frozen=True)
class ScheduleTrace:
    """Finite realisation: every visit with arrival slot ``<= horizon``."""

    sites: np.ndarray
    times: np.ndarray
    horizon: int

    def __post_init__(self):
        if len(self.sites) != len(self.times):
            raise ValidationError("sites and times must have equal length")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValidationError("arrival times must be strictly increasing")

    def __len__(self):
        return len(self.sites)

    @property
    def events(self) -> list[tuple[int, int]]:
        return list(zip(self.sites.tolist(), self.times.tolist()))

    def visit_times(self, j: int) -> np.ndarray:
        return self.times[self.sites == j]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,site\n")
        for s, t in zip(self.sites.tolist(), self.times.tolist()):
            buf.write(f"{t},{s}\n")
        return buf.getvalue()

    @classmethod
    def from_events(cls, events: Iterable[tuple[int, int]], horizon: int) -> "ScheduleTrace":
        events = list(events)
        sites = np.array([e[0] for e in events], dtype=np.int64)
        times = np.array([e[1] for e in events], dtype=np.int64)
        return cls(sites, times, int(horizon))


def sample_trace(g: ScheduleGenerator, horizon: int, seed: int | None = None) -> ScheduleTrace:
    """Restart ``g`` with ``seed`` and record every visit up to slot ``horizon``."""
    horizon = int(horizon)
    if horizon < 1:
        raise DomainError(f"horizon must be >= 1, got {horizon}")
    g.reset(seed)
    sites = [g.position]
    times = [g.time]
    step = g.step
    while True:
        s, t = step()
        if t > horizon:
            break
        sites.append(s)
        times.append(t)
    return ScheduleTrace(np.array(sites, dtype=np.int64), np.array(times, dtype=np.int64), horizon)


def max_return_time(trace: ScheduleTrace, j: int) -> int | None:
    """Longest gap between consecutive visits to ``j``; ``None`` with fewer than two visits."""
    u = trace.visit_times(j)
    if len(u) < 2:
        return None
    return int(np.max(np.diff(u)))


@dataclass(frozen=True)
class EmrReport:
    emr: float
    site: int
    per_site: np.ndarray
    stderr: np.ndarray
    samples: int
    horizon: int
    lower_bound_sites: tuple[int, ...] = ()

    @property
    def lower_bound(self) -> bool:
        """True when the maximising site was not revisited in some sample, so its value is
        only a horizon-limited lower bound."""
        return self.site in self.lower_bound_sites

    def to_dict(self) -> dict:
        return {
            "emr": repr(float(self.emr)),
            "site": self.site,
            "per_site": [repr(float(v)) for v in self.per_site],
            "stderr": [repr(float(v)) for v in self.stderr],
            "samples": self.samples,
            "horizon": self.horizon,
            "lower_bound_sites": list(self.lower_bound_sites),
        }


def _stderr(x: np.ndarray, axis=0) -> np.ndarray:
    m = x.shape[axis]
    if m < 2:
        return np.zeros(np.delete(x.shape, axis))
    return np.std(x, axis=axis, ddof=1) / math.sqrt(m)


def trace_max_rewards(trace: ScheduleTrace, H: Sequence[PolyUtility]) -> tuple[np.ndarray, list[int]]:
    """Per-site cumulative utility over the worst inter-visit gap of one trace."""
    n = len(H)
    phi = np.empty(n, dtype=np.int64)
    censored = []
    for j in range(n):
        gap = max_return_time(trace, j)
        if gap is None:
            gap = trace.horizon
            censored.append(j)
        phi[j] = gap
    rewards = np.array([H[j].cumulative_table(int(phi[j]))[-1] for j in range(n)])
    return rewards, censored


def emr_estimate(g: ScheduleGenerator, H: Sequence[PolyUtility], samples: int, horizon: int, seed: int = 0) -> EmrReport:
    """``max_j E[sum_{t<=phi_j} h_j(t)]`` estimated from ``samples`` traces of length ``horizon``.

    Deterministic generators need a single trace.
    """
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")
    if len(H) != g.n:
        raise ValidationError(f"{len(H)} utilities for {g.n} sites")
    runs = 1 if g.deterministic else samples
    values = np.empty((runs, g.n))
    censored: set[int] = set()
    for r in range(runs):
        trace = sample_trace(g, horizon, derive_seed(seed, r))
        values[r], cens = trace_max_rewards(trace, H)
        censored.update(cens)
    mean = values.mean(axis=0)
    err = _stderr(values)
    site = int(np.argmax(mean))
    return EmrReport(float(mean[site]), site, mean, err, runs, int(horizon), tuple(sorted(censored)))


@dataclass(frozen=True)
class EntropyReport:
    rate: float
    stderr: float
    samples: int
    steps: int
    base: float = math.e

    def to_dict(self) -> dict:
        return {"rate": repr(self.rate), "stderr": repr(self.stderr), "samples": self.samples, "steps": self.steps}


def entropy_rate_estimate(
    g: ScheduleGenerator, steps: int, samples: int = 1, seed: int = 0, base: float = math.e
) -> EntropyReport:
    """Average Shannon entropy of the exposed next-site distribution over ``steps`` steps,
    averaged again over ``samples`` independent runs."""
    if g.deterministic:
        return EntropyReport(0.0, 0.0, samples, steps, base)
    if steps < 1 or samples < 1:
        raise DomainError("steps and samples must be >= 1")
    per_run = np.empty(samples)
    for r in range(samples):
        g.reset(derive_seed(seed, r))
        total = 0.0
        for _ in range(steps):
            total += shannon_entropy(g.next_distribution(), base)
            g.step()
        per_run[r] = total / steps
    return EntropyReport(float(per_run.mean()), float(_stderr(per_run[:, None])[0]), samples, steps, base)
