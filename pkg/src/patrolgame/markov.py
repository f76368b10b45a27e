"""Closed-form analysis of first-order Markov-chain patrol strategies.

The patroller moves along a transition matrix ``P`` and a move ``i -> h`` takes
``W[i, h]`` slots (a self-loop takes one slot).  Everything here derives from
the first-visit distribution ``F_k(i, j)``: the probability that a patroller
observed at ``i`` arrives at ``j`` for the first time exactly ``k`` slots later.
For ``i == j`` that is the first *return*.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.sparse.csgraph import breadth_first_order

from .errors import (
    DomainError,
    ReducibleChainError,
    ResourceLimitError,
    TruncationError,
    UnsupportedError,
    ValidationError,
)
from .instance import PolyUtility
from .report import PayoffReport, Visibility

DEFAULT_MAX_ENTRIES = 50_000_000
DEFAULT_TAIL_TOL = 1e-6


# ---------------------------------------------------------------------------
# validation helpers


def check_transition(P, atol: float = 1e-12) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        raise ValidationError(f"transition matrix must be square and non-empty, got shape {P.shape}")
    if np.any(P < 0) or np.any(P > 1):
        raise ValidationError("transition probabilities must lie in [0, 1]")
    rows = P.sum(axis=1)
    if np.any(np.abs(rows - 1.0) > atol):
        bad = int(np.argmax(np.abs(rows - 1.0)))
        raise ValidationError(f"row {bad} of the transition matrix sums to {rows[bad]!r}, not 1")
    return P


def move_times(W, n: int) -> np.ndarray:
    """Integer slot cost of every move; ``None`` means unit weights. Self-loops cost one slot."""
    if W is None:
        Wd = np.ones((n, n), dtype=np.int64)
    else:
        Wd = np.array(W, dtype=np.int64, copy=True)
        if Wd.shape != (n, n):
            raise ValidationError(f"weight matrix has shape {Wd.shape}, expected {(n, n)}")
    np.fill_diagonal(Wd, 1)
    if np.any(Wd < 1):
        raise ValidationError("move times must be >= 1 slot")
    return Wd


def unreachable_pair(P) -> tuple[int, int] | None:
    """First (i, j) in row-major order such that j is never reached from i, else None."""
    P = np.asarray(P)
    n = P.shape[0]
    adj = (P > 0).astype(np.int8)
    for i in range(n):
        reach = breadth_first_order(adj, i, directed=True, return_predecessors=False)
        # i itself counts as reached only if some cycle returns to it
        returned = bool(np.any(adj[reach, i]))
        seen = set(int(v) for v in reach)
        for j in range(n):
            if j == i:
                if not returned:
                    return (i, i)
            elif j not in seen:
                return (i, j)
    return None


def is_irreducible(P) -> bool:
    return unreachable_pair(P) is None


# ---------------------------------------------------------------------------
# first-visit tensor and hitting times


@dataclass(frozen=True)
class FirstVisitTensor:
    """``f[k, i, j] = F_k(i, j)`` for ``k = 0..k_max`` (``f[0]`` is identically zero)."""

    f: np.ndarray
    k_max: int

    @property
    def n(self) -> int:
        return self.f.shape[1]

    @property
    def mass(self) -> np.ndarray:
        return self.f.sum(axis=0)

    @property
    def tail_mass(self) -> np.ndarray:
        """Probability mass of first visits later than ``k_max`` (assuming an irreducible chain)."""
        return np.clip(1.0 - self.mass, 0.0, None)

    def survival(self) -> np.ndarray:
        """``S[t, i, j] = P(first visit later than t)`` for ``t = 0..k_max``."""
        return np.clip(1.0 - np.cumsum(self.f, axis=0), 0.0, None)


def default_k_max(n: int, W=None) -> int:
    Wd = move_times(W, n)
    return int(200 * n * Wd.max())


def compute_first_visit(P, W=None, k_max: int | None = None, max_entries: int = DEFAULT_MAX_ENTRIES) -> FirstVisitTensor:
    """Evaluate the first-visit recursion up to ``k_max`` slots.

    ``F_k(i, j) = p_ij [w_ij = k] + sum_{h != j} p_ih F_{k - w_ih}(h, j)``, with
    ``F_k = 0`` for ``k <= 0``.
    """
    P = check_transition(P)
    n = P.shape[0]
    Wd = move_times(W, n)
    if k_max is None:
        k_max = default_k_max(n, Wd)
    k_max = int(k_max)
    if k_max < 1:
        raise DomainError(f"k_max must be >= 1, got {k_max}")
    entries = (k_max + 1) * n * n
    if entries > max_entries:
        raise ResourceLimitError(
            f"first-visit tensor needs {entries} entries (cap {max_entries}); lower k_max or raise the cap",
            count=entries,
        )
    support = P > 0
    weights = np.unique(Wd[support])
    # one masked copy of P per distinct move time
    by_weight = [(int(w), np.where(support & (Wd == w), P, 0.0)) for w in weights]
    f = np.zeros((k_max + 1, n, n))
    f_off = np.zeros_like(f)  # F with the h == j terms removed
    off_diag = ~np.eye(n, dtype=bool)
    for k in range(1, k_max + 1):
        acc = np.zeros((n, n))
        for w, Pw in by_weight:
            if w == k:
                acc += Pw
            elif w < k:
                acc += Pw @ f_off[k - w]
        f[k] = acc
        f_off[k] = acc * off_diag
    f.setflags(write=False)
    return FirstVisitTensor(f, k_max)


@dataclass(frozen=True)
class HittingTimeMatrix:
    """``a[i, j]`` expected first-hit time, with expected first-return times on the diagonal."""

    a: np.ndarray
    tail_mass: np.ndarray | None = None


def compute_hitting_times(F: FirstVisitTensor, tol: float = DEFAULT_TAIL_TOL) -> HittingTimeMatrix:
    tail = F.tail_mass
    worst = np.unravel_index(int(np.argmax(tail)), tail.shape)
    if tail[worst] > tol:
        raise TruncationError(
            f"k_max={F.k_max} leaves tail mass {tail[worst]:.3g} for pair {tuple(map(int, worst))} "
            f"(tolerance {tol:g}); increase k_max",
            pair=tuple(map(int, worst)),
            tail_mass=float(tail[worst]),
        )
    k = np.arange(F.k_max + 1, dtype=float)
    a = np.tensordot(k, F.f, axes=(0, 0))
    return HittingTimeMatrix(a, tail)


def hitting_times_exact(P, W=None) -> HittingTimeMatrix:
    """Solve ``a_ij = sum_h p_ih (w_ih + [h != j] a_hj)`` for every target ``j``."""
    P = check_transition(P)
    n = P.shape[0]
    Wd = move_times(W, n)
    pair = unreachable_pair(P)
    if pair is not None:
        raise ReducibleChainError(f"site {pair[1]} is never reached from site {pair[0]}", pair=pair)
    mean_step = np.sum(P * Wd, axis=1)
    a = np.empty((n, n))
    eye = np.eye(n)
    for j in range(n):
        Pj = P.copy()
        Pj[:, j] = 0.0
        a[:, j] = np.linalg.solve(eye - Pj, mean_step)
    return HittingTimeMatrix(a)


def stationary_distribution(P) -> np.ndarray:
    """Unique ``pi`` with ``pi P = pi`` and ``sum(pi) = 1`` (periodic chains allowed)."""
    P = check_transition(P)
    n = P.shape[0]
    pair = unreachable_pair(P)
    if pair is not None:
        raise ReducibleChainError(
            f"chain is reducible (site {pair[1]} unreachable from {pair[0]}); stationary distribution is not unique",
            pair=pair,
        )
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


class KemenyResult(NamedTuple):
    kappa: float
    per_start: np.ndarray
    pi: np.ndarray


def kemeny_constant(P, W=None) -> KemenyResult:
    """``kappa_i = sum_j a_ij pi_j`` per start site and ``kappa = pi^T A pi``.

    The diagonal of ``A`` holds return times, so for unit move times ``kappa`` is
    the classical Kemeny constant plus one.
    """
    pi = stationary_distribution(P)
    A = hitting_times_exact(P, W).a
    per_start = A @ pi
    return KemenyResult(float(pi @ per_start), per_start, pi)


# ---------------------------------------------------------------------------
# attacker payoff


def _utility_arrays(H: Sequence[PolyUtility], n: int, t_max: int) -> tuple[np.ndarray, np.ndarray]:
    if len(H) != n:
        raise ValidationError(f"{len(H)} utilities for {n} sites")
    t = np.arange(t_max + 1)
    values = np.stack([u.values(t) for u in H])
    values[:, 0] = 0.0
    return values, np.cumsum(values, axis=1)


def payoff_tensor(F: FirstVisitTensor, H: Sequence[PolyUtility], M: float, T_max: int) -> np.ndarray:
    """``Z[i, j, T]`` for ``T = 0..T_max``: expected payoff of attacking ``j`` for ``T``
    slots starting when the patroller is at ``i``.

    Per slot ``t`` the attacker gains ``h_j(t)`` if not caught before ``t`` and pays
    ``M`` if caught exactly at ``t``.  The not-yet-caught probability is taken as
    ``1 - sum_{k<=t} F_k``, which equals the tail sum of ``F`` for an irreducible
    chain and is exact for every ``t <= k_max``.
    """
    T_max = int(T_max)
    if T_max < 1:
        raise DomainError(f"attack horizon must be >= 1, got {T_max}")
    if T_max > F.k_max:
        raise DomainError(f"attack horizon {T_max} exceeds the first-visit horizon k_max={F.k_max}")
    n = F.n
    h, _ = _utility_arrays(H, n, T_max)
    f = F.f[: T_max + 1]
    later = np.clip(1.0 - np.cumsum(f, axis=0), 0.0, None)
    # z[t, i, j]
    z = (h.T[:, None, :] - M) * f + h.T[:, None, :] * later
    z[0] = 0.0
    Z = np.cumsum(z, axis=0)
    return np.moveaxis(Z, 0, -1)


class PayoffValue(NamedTuple):
    value: float
    truncation_bound: float


def payoff_full_visibility(F: FirstVisitTensor, H: Sequence[PolyUtility], M: float, i: int, j: int, T: int) -> PayoffValue:
    """``Z_{i,j,T}``, the expected payoff of attacking ``j`` for ``T`` slots when the
    patroller has just arrived at ``i``."""
    if T < 1:
        raise DomainError(f"attack duration must be >= 1, got {T}")
    if T > F.k_max:
        raise DomainError(f"attack duration {T} exceeds k_max={F.k_max}")
    h = H[j].values(np.arange(1, T + 1))
    f = F.f[1 : T + 1, i, j]
    later = np.clip(1.0 - np.cumsum(f), 0.0, None)
    value = float(np.sum((h - M) * f + h * later))
    return PayoffValue(value, 0.0)


def start_slack(W, H: Sequence[PolyUtility]) -> float:
    """Largest utility an attack started mid-edge could gain over a site-aligned start:
    ``max_{i,j} sum_{t <= w_ij} h_j(t)``."""
    W = np.asarray(W, dtype=np.int64)
    wmax = int(W.max())
    if wmax < 1:
        return 0.0
    _, cum = _utility_arrays(H, len(H), wmax)
    return float(np.max(cum[np.arange(len(H))[None, :], W]))


def best_response_markov(
    P,
    F: FirstVisitTensor,
    H: Sequence[PolyUtility],
    M: float,
    model: Visibility | str = Visibility.FULL,
    T_max: int | None = None,
    W=None,
) -> PayoffReport:
    """Attacker's best response to the chain ``P`` under a visibility model.

    full  - maximise ``Z[i, j, T]`` over all ``(i, j, T)``
    local - maximise ``Z[j, j, T]`` (attack right after the patroller leaves ``j``)
    none  - maximise ``sum_i pi_i Z[i, j, T]``

    Ties break toward the lexicographically smallest ``(j, i, T)``.
    """
    model = Visibility.parse(model)
    P = check_transition(P)
    n = P.shape[0]
    T_max = F.k_max if T_max is None else int(T_max)
    slack = start_slack(move_times(W, n) if W is not None else np.ones((n, n), dtype=np.int64), H)
    pair = unreachable_pair(P)
    if pair is not None:
        return PayoffReport(
            model, float("inf"), site_attacked=pair[1], duration=None,
            site_from=pair[0] if model is Visibility.FULL else None,
            witness=pair, start_slack=slack,
        )
    Z = payoff_tensor(F, H, M, T_max)[:, :, 1:]
    if model is Visibility.FULL:
        cells = np.transpose(Z, (1, 0, 2))  # [j, i, T]
        j, i, t = np.unravel_index(int(np.argmax(cells)), cells.shape)
        return PayoffReport(model, float(cells[j, i, t]), int(j), int(t) + 1, site_from=int(i), start_slack=slack)
    if model is Visibility.LOCAL:
        cells = Z[np.arange(n), np.arange(n), :]
    else:
        pi = stationary_distribution(P)
        cells = np.tensordot(pi, Z, axes=(0, 0))
    j, t = np.unravel_index(int(np.argmax(cells)), cells.shape)
    return PayoffReport(model, float(cells[j, t]), int(j), int(t) + 1, start_slack=slack)


class HighPenaltyResult(NamedTuple):
    value: float
    site_from: int
    site_attacked: int
    duration: int
    at_horizon: bool


def high_penalty_objective(
    F: FirstVisitTensor,
    H: Sequence[PolyUtility],
    M: float,
    T_max: int,
    pairs: Sequence[tuple[int, int]] | None = None,
) -> HighPenaltyResult:
    """Score ``max (h_j T - (M + 1) sum_{t<=T} F_t(i, j))`` over ``T <= T_max`` and the given
    ``(i, j)`` pairs (all pairs by default).

    The expression keeps growing with ``T`` once capture probability saturates, so
    ``at_horizon`` flags a maximum attained at ``T_max``; treat such values as
    horizon-limited diagnostics rather than payoffs.
    """
    if not all(u.is_constant() for u in H):
        raise UnsupportedError("the high-penalty objective is defined for constant utilities only")
    T_max = int(T_max)
    if T_max < 1 or T_max > F.k_max:
        raise DomainError(f"T_max must lie in [1, {F.k_max}], got {T_max}")
    n = F.n
    if pairs is None:
        pairs = [(i, j) for j in range(n) for i in range(n)]
    pairs = sorted(pairs, key=lambda p: (p[1], p[0]))
    h = np.array([u.coefficients[0] for u in H])
    T = np.arange(1, T_max + 1)
    caught = np.cumsum(F.f[1 : T_max + 1], axis=0)  # [T-1, i, j]
    best = None
    for i, j in pairs:
        scores = h[j] * T - (M + 1.0) * caught[:, i, j]
        t = int(np.argmax(scores))
        if best is None or scores[t] > best[0]:
            best = (float(scores[t]), i, j, t + 1)
    value, i, j, t = best
    return HighPenaltyResult(value, i, j, t, t == T_max)
