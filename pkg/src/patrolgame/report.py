"""Visibility models and the attacker best-response report shared by the analytic
and empirical evaluators."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum

from .errors import DomainError, ValidationError


class Visibility(str, Enum):
    FULL = "full"
    LOCAL = "local"
    NONE = "none"

    @classmethod
    def parse(cls, value) -> "Visibility":
        if isinstance(value, cls):
            return value
        aliases = {"no": "none", "no-visibility": "none", "full-visibility": "full"}
        key = aliases.get(str(value).lower(), str(value).lower())
        try:
            return cls(key)
        except ValueError:
            raise ValidationError(
                f"unknown visibility model {value!r}; expected one of full, local, none"
            ) from None


def _num(x):
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return repr(x)


@dataclass(frozen=True)
class PayoffReport:
    """Attacker's maximised expected payoff and the maximising attack.

    ``site_from`` is the patroller site observed at the attack start (full
    visibility only), ``site_attacked`` the target and ``duration`` the attack
    length in slots.  ``value`` is ``inf`` when the defender strategy leaves some
    site unreachable; ``witness`` then names an unreachable (from, to) pair.
    """

    model: Visibility
    value: float
    site_attacked: int | None
    duration: int | None
    site_from: int | None = None
    samples: int = 0
    stderr: float = 0.0
    zeta: float | None = None
    truncation_bound: float = 0.0
    start_slack: float = 0.0
    witness: tuple[int, int] | None = None
    warnings: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "model", Visibility.parse(self.model))
        if self.stderr < 0:
            raise ValidationError("stderr must be >= 0")

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.value)

    @property
    def normalized_value(self) -> float | None:
        if self.zeta is None:
            return None
        return self.value / self.zeta

    @property
    def normalized_stderr(self) -> float | None:
        if self.zeta is None:
            return None
        return self.stderr / self.zeta

    def to_dict(self) -> dict:
        d = {
            "model": self.model.value,
            "value": _num(self.value),
            "site_from": self.site_from,
            "site_attacked": self.site_attacked,
            "duration": self.duration,
            "truncation_bound": _num(self.truncation_bound),
            "samples": self.samples,
            "stderr": _num(self.stderr),
            "zeta": _num(self.zeta),
            "normalized_value": _num(self.normalized_value),
            "start_slack": _num(self.start_slack),
        }
        if self.witness is not None:
            d["witness"] = list(self.witness)
        if self.warnings:
            d["warnings"] = list(self.warnings)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def normalize(report: PayoffReport, zeta: float) -> PayoffReport:
    """Attach normalisation constant ``zeta`` (value and stderr are reported relative to it)."""
    if not zeta > 0:
        raise DomainError(f"normalisation constant must be > 0, got {zeta}")
    return replace(report, zeta=float(zeta))
