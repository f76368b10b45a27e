"""Empirical attacker best response against any schedule generator.

Attacks start at patroller arrival events.  For an attack on site ``j`` started at
an arrival at slot ``tau`` the only thing that matters is ``d``, the delay until
the patroller next arrives at ``j`` strictly after ``tau``: an attack of ``T``
slots collects ``sum_{t<=min(d, T)} h_j(t)`` and pays ``M`` if ``d <= T``.  So
each trace is reduced to histograms of ``d`` per (observed site, target), from
which every penalty, duration and visibility model is evaluated exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import DomainError, HorizonError, ValidationError
from .instance import GraphInstance, PolyUtility
from .markov import start_slack
from .report import PayoffReport, Visibility, normalize
from .schedule import ScheduleGenerator, ScheduleTrace, derive_seed, sample_trace

__all__ = [
    "AttackStats",
    "attack_payoff",
    "best_response_empirical",
    "bgt_zeta",
    "collect_attack_stats",
    "default_t_max",
    "normalize",
    "trace_delay_histogram",
]


def attack_payoff(trace: ScheduleTrace, j: int, t_s: int, T: int, H: Sequence[PolyUtility], M: float) -> float:
    """Realised payoff of attacking ``j`` during slots ``t_s + 1 .. t_s + T``.

    A patroller arrival at ``j`` at slot ``t_s + t`` (``1 <= t <= T``) captures the
    attacker after collecting ``h_j(1..t)``; otherwise all ``T`` slots are collected.
    """
    if T < 1:
        raise DomainError(f"attack duration must be >= 1, got {T}")
    if t_s < 0 or t_s + T > trace.horizon:
        raise HorizonError(f"attack window ({t_s}, {t_s + T}] exceeds the trace horizon {trace.horizon}")
    visits = trace.visit_times(j)
    k = int(np.searchsorted(visits, t_s, side="right"))
    cum = H[j].cumulative_table(T)
    if k < len(visits) and visits[k] - t_s <= T:
        d = int(visits[k] - t_s)
        return float(cum[d] - M)
    return float(cum[T])


def default_t_max(instance: GraphInstance) -> int:
    return 4 * max(instance.diameter, 1)


def trace_delay_histogram(trace: ScheduleTrace, n: int, T_max: int) -> tuple[np.ndarray, np.ndarray]:
    """``hist[i, j, d]`` counts attack starts at arrivals to ``i`` whose next arrival at
    ``j`` comes ``d`` slots later (``d = T_max + 1`` for "not within ``T_max``");
    ``starts[i]`` counts the usable arrivals (those leaving room for a ``T_max`` attack)."""
    hist = np.zeros((n, n, T_max + 2), dtype=np.int64)
    usable = trace.times <= trace.horizon - T_max
    tau = trace.times[usable]
    src = trace.sites[usable]
    starts = np.bincount(src, minlength=n).astype(np.int64)
    if len(tau) == 0:
        return hist, starts
    for j in range(n):
        visits = trace.visit_times(j)
        k = np.searchsorted(visits, tau, side="right")
        d = np.full(len(tau), T_max + 1, dtype=np.int64)
        has = k < len(visits)
        d[has] = np.minimum(visits[k[has]] - tau[has], T_max + 1)
        np.add.at(hist[:, j, :], (src, d), 1)
    return hist, starts


@dataclass(frozen=True)
class AttackStats:
    """Per-trace delay histograms ``hist[r, i, j, d]`` and start counts ``starts[r, i]``."""

    hist: np.ndarray
    starts: np.ndarray
    T_max: int
    horizon: int

    @property
    def traces(self) -> int:
        return self.hist.shape[0]

    @property
    def n(self) -> int:
        return self.hist.shape[1]

    def sums(self, H: Sequence[PolyUtility], M: float) -> np.ndarray:
        """``S[r, i, j, T - 1]``: total payoff over all starts in trace ``r`` at ``i`` attacking
        ``j`` for ``T`` slots."""
        if len(H) != self.n:
            raise ValidationError(f"{len(H)} utilities for {self.n} sites")
        T_max = self.T_max
        cum = np.stack([u.cumulative_table(T_max) for u in H])  # [j, 0..T_max]
        c = self.hist[..., 1:].astype(float)  # d = 1 .. T_max + 1
        caught_gain = c[..., :T_max] * (cum[None, None, :, 1:] - M)
        A = np.cumsum(caught_gain, axis=-1)
        seen = np.cumsum(c[..., :T_max], axis=-1)
        B = c.sum(axis=-1, keepdims=True) - seen
        return A + B * cum[None, None, :, 1:]

    def best_response(self, H: Sequence[PolyUtility], M: float, model) -> PayoffReport:
        model = Visibility.parse(model)
        S = self.sums(H, M)  # [r, i, j, T]
        N = self.starts.astype(float)  # [r, i]
        n = self.n
        if model is Visibility.FULL:
            tot = S.sum(axis=0)  # [i, j, T]
            cnt = N.sum(axis=0)[:, None, None]
            per_trace_num, per_trace_den = S, N[:, :, None, None]
        elif model is Visibility.LOCAL:
            idx = np.arange(n)
            tot = S.sum(axis=0)[idx, idx][None]  # [1, j, T]
            cnt = N.sum(axis=0)[None, :, None]
            per_trace_num = S[:, idx, idx][:, None]
            per_trace_den = N[:, None, :, None]
        else:
            tot = S.sum(axis=(0, 1))[None]  # [1, j, T]
            cnt = np.full((1, 1, 1), N.sum())
            per_trace_num = S.sum(axis=1)[:, None]
            per_trace_den = N.sum(axis=1)[:, None, None, None]
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = np.where(cnt > 0, tot / cnt, -np.inf)
        warnings = ()
        empty = np.flatnonzero(self.starts.sum(axis=0) == 0)
        if len(empty) and model is not Visibility.NONE:
            label = "observed sites" if model is Visibility.FULL else "targets"
            warnings = (f"no attack starts at {label} {empty.tolist()}; cells conditioned on them were excluded",)
        if not np.isfinite(mean).any():
            return PayoffReport(model, float("nan"), None, None, samples=self.traces,
                                warnings=warnings)
        # cells ordered [condition, j, T]; ties go to the smallest (j, condition, T)
        order = np.transpose(mean, (1, 0, 2))
        j, i, t = np.unravel_index(int(np.argmax(order)), order.shape)
        value = float(order[j, i, t])
        den = np.broadcast_to(per_trace_den, per_trace_num.shape)[:, i, j, t]
        num = per_trace_num[:, i, j, t]
        ok = den > 0
        stderr = 0.0
        if ok.sum() >= 2:
            means = num[ok] / den[ok]
            stderr = float(np.std(means, ddof=1) / np.sqrt(ok.sum()))
        return PayoffReport(
            model, value, int(j), int(t) + 1,
            site_from=int(i) if model is Visibility.FULL else None,
            samples=self.traces, stderr=stderr, warnings=warnings,
        )


def collect_attack_stats(
    g: ScheduleGenerator, horizon: int, samples: int, T_max: int, seed: int = 0,
    traces: Sequence[ScheduleTrace] | None = None,
) -> AttackStats:
    """Sample ``samples`` traces (one for a deterministic generator) and histogram them."""
    T_max = int(T_max)
    if T_max < 1:
        raise DomainError(f"T_max must be >= 1, got {T_max}")
    if T_max >= horizon:
        raise DomainError(f"T_max ({T_max}) must be smaller than the horizon ({horizon})")
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")
    if traces is None:
        runs = 1 if g.deterministic else samples
        traces = [sample_trace(g, horizon, derive_seed(seed, r)) for r in range(runs)]
    hs, ss = zip(*(trace_delay_histogram(tr, g.n, T_max) for tr in traces))
    return AttackStats(np.stack(hs), np.stack(ss), T_max, int(horizon))


def best_response_empirical(
    g: ScheduleGenerator,
    model,
    H: Sequence[PolyUtility],
    M: float,
    horizon: int,
    samples: int,
    T_max: int,
    seed: int = 0,
    zeta: float | None = None,
) -> PayoffReport:
    """Attacker's best response estimated from sampled traces.

    full  - condition on the site where the patroller just arrived; maximise over
            (observed site, target, duration)
    local - attack ``j`` right after the patroller leaves it
    none  - attack at an arrival event regardless of site
    """
    stats = collect_attack_stats(g, horizon, samples, T_max, seed)
    report = replace(stats.best_response(H, M, model), start_slack=start_slack(g.moves, H))
    if zeta is not None:
        report = normalize(report, zeta)
    return report


def bgt_zeta(instance: GraphInstance, model, T_max: int, horizon: int, M: float = 0.0) -> float:
    """Attacker payoff against the grouped (BGT) base schedule, the normalisation constant."""
    from .tours import bgt_generator, bgt_plan

    g = bgt_generator(bgt_plan(instance))
    rep = best_response_empirical(g, model, instance.utilities, M, horizon, 1, T_max)
    if not rep.value > 0:
        raise DomainError(f"BGT payoff {rep.value} is not positive; cannot normalise by it")
    return rep.value
