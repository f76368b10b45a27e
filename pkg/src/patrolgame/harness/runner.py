"""Grid experiments: EMR/entropy frontier, payoff sweeps and scalability.

Every cell is an independent job.  Jobs run serially or on a process pool
(``PATROLGAME_WORKERS``) and results are merged in grid order, so output does
not depend on the worker count.  Trace seeds are
``derive_seed(master, generator index, alpha index, replication)``; the same
traces serve every penalty and visibility model of a cell.
"""

from __future__ import annotations

import csv
import io
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import PatrolGameError
from ..instance import GraphInstance
from ..oracle import collect_attack_stats
from ..report import Visibility
from ..schedule import derive_seed, emr_estimate, entropy_rate_estimate, sample_trace
from .config import ExperimentConfig, build_generator

log = logging.getLogger(__name__)

WORKERS_ENV = "PATROLGAME_WORKERS"

PAYOFF_COLUMNS = ["generator", "alpha", "model", "penalty", "value", "normalized", "stderr", "site", "duration", "error"]
BEST_COLUMNS = ["generator", "model", "penalty", "alpha", "normalized", "stderr"]
FRONTIER_COLUMNS = ["generator", "alpha", "emr", "emr_normalized", "emr_stderr", "entropy", "entropy_stderr", "error"]
SCALE_COLUMNS = ["n", "generator", "alpha", "value", "normalized", "stderr", "error"]


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_jobs(fn, jobs: list) -> list:
    workers = min(worker_count(), max(len(jobs), 1))
    if workers <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def to_csv(columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def error_code(e: Exception) -> str:
    return type(e).__name__


# ---------------------------------------------------------------------------
# payoff sweep


@dataclass(frozen=True)
class PayoffJob:
    instance: GraphInstance
    kind: str
    alpha: float | None
    cap: float | None
    gen_index: int
    alpha_index: int
    models: tuple
    penalties: tuple
    horizon: int
    samples: int
    t_max: int
    seed: int
    zetas: dict


def run_payoff_job(job: PayoffJob) -> list[dict]:
    base = {"generator": job.kind, "alpha": job.alpha}
    try:
        g = build_generator(job.instance, job.kind, job.alpha, derive_seed(job.seed, job.gen_index, job.alpha_index), job.cap)
        runs = 1 if g.deterministic else job.samples
        traces = [
            sample_trace(g, job.horizon, derive_seed(job.seed, job.gen_index, job.alpha_index, r))
            for r in range(runs)
        ]
        stats = collect_attack_stats(g, job.horizon, runs, job.t_max, traces=traces)
    except PatrolGameError as e:
        log.warning("%s alpha=%s failed: %s", job.kind, job.alpha, e)
        return [dict(base, model=m.value, penalty=M, error=error_code(e)) for m in job.models for M in job.penalties]
    rows = []
    for m in job.models:
        zeta = job.zetas.get(m.value)
        for M in job.penalties:
            rep = stats.best_response(job.instance.utilities, M, m)
            rows.append(dict(
                base, model=m.value, penalty=float(M), value=rep.value,
                normalized=None if zeta is None else rep.value / zeta,
                stderr=None if zeta is None else rep.stderr / zeta,
                site=rep.site_attacked, duration=rep.duration, error="",
                raw_stderr=rep.stderr,
            ))
    return rows


def bgt_zetas(instance: GraphInstance, models, horizon: int, t_max: int) -> dict:
    """BGT payoff at zero penalty per visibility model (the normalisation constants)."""
    try:
        g = build_generator(instance, "bgt")
        stats = collect_attack_stats(g, horizon, 1, t_max)
    except PatrolGameError as e:
        log.warning("BGT normalisation unavailable: %s", e)
        return {}
    out = {}
    for m in models:
        v = stats.best_response(instance.utilities, 0.0, m).value
        if v > 0:
            out[m.value] = v
    return out


def payoff_jobs(cfg: ExperimentConfig, instance: GraphInstance) -> list[PayoffJob]:
    t_max = cfg.t_max_for(instance)
    horizon = cfg.horizon_for(instance, t_max)
    zetas = bgt_zetas(instance, cfg.models, horizon, t_max)
    jobs = []
    for gi, spec in enumerate(cfg.generators):
        for ai, alpha in enumerate(spec.alphas):
            jobs.append(PayoffJob(instance, spec.kind, alpha, spec.cap, gi, ai, cfg.models, cfg.penalties,
                                  horizon, cfg.samples, t_max, cfg.seed, zetas))
    return jobs


def best_alpha_rows(rows: list[dict]) -> list[dict]:
    """Per (generator, model, penalty): the alpha giving the attacker the least
    (normalised) payoff, i.e. the defender's best setting."""
    best: dict[tuple, dict] = {}
    order = []
    for r in rows:
        if r.get("error") or r.get("normalized") is None:
            continue
        key = (r["generator"], r["model"], r["penalty"])
        if key not in best:
            order.append(key)
            best[key] = r
        elif r["normalized"] < best[key]["normalized"]:
            best[key] = r
    return [
        {"generator": k[0], "model": k[1], "penalty": k[2], "alpha": best[k]["alpha"],
         "normalized": best[k]["normalized"], "stderr": best[k]["stderr"]}
        for k in order
    ]


def payoff_sweep(cfg: ExperimentConfig, instance: GraphInstance | None = None) -> tuple[list[dict], list[dict]]:
    instance = instance or cfg.instance.load()
    rows = [r for chunk in run_jobs(run_payoff_job, payoff_jobs(cfg, instance)) for r in chunk]
    return rows, best_alpha_rows(rows)


# ---------------------------------------------------------------------------
# frontier


@dataclass(frozen=True)
class FrontierJob:
    instance: GraphInstance
    kind: str
    alpha: float | None
    cap: float | None
    gen_index: int
    alpha_index: int
    horizon: int
    samples: int
    steps: int
    seed: int
    emr_bgt: float | None


def run_frontier_job(job: FrontierJob) -> dict:
    row = {"generator": job.kind, "alpha": job.alpha}
    seed = derive_seed(job.seed, job.gen_index, job.alpha_index)
    try:
        g = build_generator(job.instance, job.kind, job.alpha, seed, job.cap)
        emr = emr_estimate(g, job.instance.utilities, job.samples, job.horizon, seed)
        ent = entropy_rate_estimate(g, job.steps, job.samples, seed)
    except PatrolGameError as e:
        log.warning("%s alpha=%s failed: %s", job.kind, job.alpha, e)
        return dict(row, error=error_code(e))
    norm = None if not job.emr_bgt else emr.emr / job.emr_bgt
    err = float(emr.stderr[emr.site])
    return dict(row, emr=emr.emr, emr_normalized=norm,
                emr_stderr=None if not job.emr_bgt else err / job.emr_bgt,
                entropy=ent.rate, entropy_stderr=ent.stderr, error="")


def frontier(cfg: ExperimentConfig, instance: GraphInstance | None = None) -> list[dict]:
    instance = instance or cfg.instance.load()
    t_max = cfg.t_max_for(instance)
    horizon = cfg.horizon_for(instance, t_max)
    try:
        emr_bgt = emr_estimate(build_generator(instance, "bgt"), instance.utilities, 1, horizon).emr
    except PatrolGameError as e:
        log.warning("BGT EMR unavailable: %s", e)
        emr_bgt = None
    specs = list(cfg.generators)
    jobs = []
    if not any(s.kind == "bgt" for s in specs):
        jobs.append(FrontierJob(instance, "bgt", None, None, len(specs), 0, horizon, cfg.samples, cfg.entropy_steps, cfg.seed, emr_bgt))
    for gi, spec in enumerate(specs):
        for ai, alpha in enumerate(spec.alphas):
            jobs.append(FrontierJob(instance, spec.kind, alpha, spec.cap, gi, ai, horizon, cfg.samples,
                                    cfg.entropy_steps, cfg.seed, emr_bgt))
    return run_jobs(run_frontier_job, jobs)


# ---------------------------------------------------------------------------
# scalability


@dataclass(frozen=True)
class ScaleJob:
    n: int
    instance: GraphInstance
    kind: str
    alpha: float | None
    cap: float | None
    gen_index: int
    alpha_index: int
    horizon: int
    samples: int
    t_max: int
    seed: int
    zeta: float | None


def run_scale_job(job: ScaleJob) -> tuple[dict, float]:
    start = time.perf_counter()
    pj = PayoffJob(job.instance, job.kind, job.alpha, job.cap, job.gen_index, job.alpha_index,
                   (Visibility.FULL,), (0.0,), job.horizon, job.samples, job.t_max, job.seed,
                   {} if job.zeta is None else {"full": job.zeta})
    r = run_payoff_job(pj)[0]
    row = {"n": job.n, "generator": job.kind, "alpha": job.alpha, "value": r.get("value"),
           "normalized": r.get("normalized"), "stderr": r.get("stderr"), "error": r.get("error", "")}
    return row, time.perf_counter() - start


def scalability(cfg: ExperimentConfig) -> tuple[list[dict], list[dict]]:
    """Full visibility, zero penalty, constant utilities, one instance per size.

    Returns the CSV rows and, separately, wall-clock timings (kept out of the CSV so
    the table is reproducible byte for byte)."""
    jobs = []
    for n in cfg.sizes:
        instance = cfg.instance.at_size(n, derive_seed(cfg.seed, n), degree=0)
        t_max = cfg.t_max_for(instance)
        horizon = cfg.horizon_for(instance, t_max)
        zeta = bgt_zetas(instance, (Visibility.FULL,), horizon, t_max).get("full")
        for gi, spec in enumerate(cfg.generators):
            for ai, alpha in enumerate(spec.alphas):
                jobs.append(ScaleJob(n, instance, spec.kind, alpha, spec.cap, gi, ai, horizon, cfg.samples,
                                     t_max, derive_seed(cfg.seed, n), zeta))
    results = run_jobs(run_scale_job, jobs)
    rows = [r for r, _ in results]
    times = [{"n": r["n"], "generator": r["generator"], "alpha": r["alpha"], "seconds": t} for r, t in results]
    return rows, times
