"""Experiment configuration (JSON or TOML) and generator construction."""

from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DomainError, ValidationError
from ..instance import GraphInstance, UtilitySpec, generate_random_instance, load_instance, load_sites_csv
from ..report import Visibility
from ..schedule import CyclicGenerator, ScheduleGenerator
from ..schedulers import bwalk_generator, sg_build, sg_optimal_deterministic, sg_random_generator, tspb_generator
from ..tours import bgt_generator, bgt_plan

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

KINDS = ("bgt", "tspb", "bwalk", "sg_det", "sg_rand")
ALPHA_KINDS = ("tspb", "bwalk", "sg_rand")

# (low, high, low_open) validity domain and the grid used when none is given
ALPHA_DOMAIN = {
    "tspb": (0.0, 1.0, True),
    "bwalk": (1.0, math.inf, False),
    "sg_rand": (0.0, math.inf, False),
}
DOMAIN_TEXT = {
    "tspb": "0 < alpha <= 1 (default grid 0.1..1)",
    "bwalk": "alpha >= 1 (default grid 1..1.5)",
    "sg_rand": "alpha >= 0 (default grid 0..80)",
}
DEFAULT_GRID = {
    "tspb": tuple(float(a) for a in np.round(np.linspace(0.1, 1.0, 10), 10)),
    "bwalk": tuple(float(a) for a in np.round(np.linspace(1.0, 1.5, 9), 10)),
    "sg_rand": tuple(float(a) for a in np.linspace(0.0, 80.0, 9)),
}
DEFAULT_ALPHA = {"tspb": 0.5, "bwalk": 1.25, "sg_rand": 40.0}


def check_alpha(kind: str, alpha: float) -> float:
    lo, hi, open_lo = ALPHA_DOMAIN[kind]
    alpha = float(alpha)
    ok = (alpha > lo if open_lo else alpha >= lo) and alpha <= hi
    if not ok:
        raise ConfigError(f"alpha {alpha} outside the {kind} domain: {DOMAIN_TEXT[kind]}")
    return alpha


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    alphas: tuple[float | None, ...] = (None,)
    cap: float | None = None

    @property
    def label(self) -> str:
        return self.kind

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorSpec":
        if not isinstance(d, dict) or "kind" not in d:
            raise ConfigError(f"generator entry needs a 'kind': {d!r}")
        kind = str(d["kind"])
        if kind not in KINDS:
            raise ConfigError(f"unknown generator kind {kind!r}; expected one of {', '.join(KINDS)}")
        cap = d.get("cap")
        if cap is not None and not float(cap) > 0:
            raise ConfigError(f"{kind}: cap must be > 0, got {cap}")
        if kind in ALPHA_KINDS:
            if "alphas" in d:
                alphas = d["alphas"]
            elif "alpha" in d:
                alphas = [d["alpha"]]
            else:
                alphas = DEFAULT_GRID[kind]
            if not isinstance(alphas, (list, tuple)) or not alphas:
                raise ConfigError(f"{kind}: alphas must be a non-empty list")
            alphas = tuple(check_alpha(kind, a) for a in alphas)
        else:
            if d.get("alphas") or d.get("alpha") is not None:
                raise ConfigError(f"{kind} takes no alpha")
            alphas = (None,)
        return cls(kind, alphas, None if cap is None else float(cap))


def build_generator(instance: GraphInstance, kind: str, alpha: float | None = None, seed: int = 0,
                    cap: float | None = None) -> ScheduleGenerator:
    """Construct one schedule generator from its JSON-level description."""
    if kind == "bgt":
        return bgt_generator(bgt_plan(instance))
    if kind == "tspb":
        return tspb_generator(instance, alpha, seed)
    if kind == "bwalk":
        return bwalk_generator(instance, alpha, seed)
    if kind == "sg_rand":
        return sg_random_generator(instance, alpha, seed, cap)
    if kind == "sg_det":
        sched = sg_optimal_deterministic(sg_build(instance, cap))
        return CyclicGenerator(instance.travel, sched.sites)
    raise ConfigError(f"unknown generator kind {kind!r}")


def generator_from_json(instance: GraphInstance, text_or_dict) -> ScheduleGenerator:
    d = json.loads(text_or_dict) if isinstance(text_or_dict, str) else dict(text_or_dict)
    kind = d.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"unknown generator kind {kind!r}; expected one of {', '.join(KINDS)}")
    alpha = d.get("alpha")
    if kind in ALPHA_KINDS:
        alpha = check_alpha(kind, DEFAULT_ALPHA[kind] if alpha is None else alpha)
    return build_generator(instance, kind, alpha, int(d.get("seed", 0)), d.get("cap"))


@dataclass(frozen=True)
class InstanceSource:
    kind: str  # random | csv | json
    n: int = 10
    side: float = 1000.0
    seed: int = 0
    degree: int = 0
    penalty: float = 0.0
    path: Path | None = None

    def load(self) -> GraphInstance:
        spec = UtilitySpec(degree=self.degree)
        if self.kind == "random":
            return generate_random_instance(self.n, self.side, self.seed, spec, self.penalty)
        if self.kind == "csv":
            return load_sites_csv(self.path, spec, self.seed, self.penalty)
        return load_instance(self.path)

    def at_size(self, n: int, seed: int, degree: int | None = None) -> GraphInstance:
        degree = self.degree if degree is None else degree
        return generate_random_instance(n, self.side, seed, UtilitySpec(degree=degree), self.penalty)


@dataclass(frozen=True)
class ExperimentConfig:
    instance: InstanceSource
    generators: tuple[GeneratorSpec, ...]
    models: tuple[Visibility, ...] = (Visibility.FULL, Visibility.LOCAL, Visibility.NONE)
    penalties: tuple[float, ...] = (0.0,)
    horizon: int | None = None
    samples: int = 10
    t_max: int | None = None
    entropy_steps: int = 500
    seed: int = 0
    sizes: tuple[int, ...] = (10, 20, 40)
    output: Path | None = None

    def horizon_for(self, instance: GraphInstance, t_max: int) -> int:
        if self.horizon is not None:
            if self.horizon <= t_max:
                raise ConfigError(f"horizon {self.horizon} must exceed t_max {t_max}")
            return self.horizon
        return max(10 * t_max, 25 * instance.n * max(instance.diameter, 1))

    def t_max_for(self, instance: GraphInstance) -> int:
        return self.t_max if self.t_max is not None else 4 * max(instance.diameter, 1)


def _positive_int(d, key, default):
    v = d.get(key, default)
    if v is None:
        return None
    try:
        v = int(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {d.get(key)!r}") from None
    if v < 1:
        raise ConfigError(f"{key} must be >= 1, got {v}")
    return v


def parse_config(data: dict, base: Path | None = None) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a table/object")
    base = base or Path(".")
    inst = data.get("instance", {"random": {}})
    if "random" in inst:
        r = inst["random"] or {}
        n = int(r.get("n", 10))
        if n < 1:
            raise ConfigError(f"instance n must be >= 1, got {n}")
        source = InstanceSource("random", n, float(r.get("side", 1000.0)), int(r.get("seed", 0)),
                                int(r.get("degree", 0)), float(r.get("penalty", 0.0)))
    elif "csv" in inst:
        source = InstanceSource("csv", path=base / inst["csv"], seed=int(inst.get("seed", 0)),
                                degree=int(inst.get("degree", 0)))
    elif "json" in inst:
        source = InstanceSource("json", path=base / inst["json"])
    else:
        raise ConfigError("instance must give one of 'random', 'csv' or 'json'")
    gens = data.get("generators")
    if not gens:
        raise ConfigError("config needs a non-empty 'generators' list")
    generators = tuple(GeneratorSpec.from_dict(g) for g in gens)
    try:
        models = tuple(Visibility.parse(m) for m in data.get("models", ["full", "local", "none"]))
    except ValidationError as e:
        raise ConfigError(str(e)) from None
    penalties = tuple(float(m) for m in data.get("penalties", [0.0]))
    if any(m < 0 for m in penalties):
        raise ConfigError(f"penalties must be >= 0, got {list(penalties)}")
    if list(penalties) != sorted(penalties):
        raise ConfigError(f"penalties must be ascending, got {list(penalties)}")
    sizes = tuple(int(s) for s in data.get("sizes", [10, 20, 40]))
    if list(sizes) != sorted(sizes) or any(s < 2 for s in sizes):
        raise ConfigError(f"sizes must be ascending and >= 2, got {list(sizes)}")
    out = data.get("output")
    return ExperimentConfig(
        instance=source,
        generators=generators,
        models=models,
        penalties=penalties,
        horizon=_positive_int(data, "horizon", None),
        samples=_positive_int(data, "samples", 10),
        t_max=_positive_int(data, "t_max", None),
        entropy_steps=_positive_int(data, "entropy_steps", 500),
        seed=int(data.get("seed", 0)),
        sizes=sizes,
        output=None if out is None else base / out,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    try:
        if path.suffix.lower() == ".toml":
            data = tomllib.loads(raw.decode())
        else:
            data = json.loads(raw)
    except (ValueError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"cannot parse config {path}: {e}") from None
    try:
        return parse_config(data, path.parent)
    except (DomainError, ValidationError, TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from None
