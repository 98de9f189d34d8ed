"""Event-window pre-scan: percentile screening of candidate variables.

Each rule compares one scalar candidate (a station value or an area
aggregate, reduced upstream) against a climatological sample set.  The
report names the most exceptional matching event type; percentile ties
fall back to the event-type declaration order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Mapping, Sequence

import numpy as np

MIN_CLIMATOLOGY_SAMPLES = 30


class AnomalyError(ValueError):
    """Raised for unusable climatology or malformed rule configuration."""


class EventType(str, Enum):
    GALE = "Gale"
    RAINSTORM = "Rainstorm"
    COLD_WAVE = "ColdWave"
    HEAT_WAVE = "HeatWave"
    SNOWSTORM = "Snowstorm"


_EVENT_ORDER = {event: pos for pos, event in enumerate(EventType)}


@dataclass(frozen=True)
class AnomalyRule:
    event: EventType
    variable: str
    percentile: float
    tail: str = "upper"
    conditions: tuple[dict, ...] = ()
    season: str = ""
    note: str = ""

    def __post_init__(self) -> None:
        if self.tail not in ("upper", "lower"):
            raise AnomalyError(f"rule tail must be upper/lower, got {self.tail!r}")
        if not 0.0 < self.percentile < 100.0:
            raise AnomalyError(f"rule percentile outside (0, 100): {self.percentile}")


@dataclass(frozen=True)
class AnomalyReport:
    event: EventType
    variable: str
    value: float
    exceedance_percentile: float
    threshold_percentile: float
    matches: tuple[dict, ...] = field(default_factory=tuple)

    def as_mapping(self) -> dict:
        return {"event": self.event.value, "variable": self.variable,
                "value": self.value,
                "exceedance_percentile": self.exceedance_percentile,
                "threshold_percentile": self.threshold_percentile,
                "matches": [dict(m) for m in self.matches]}

    @classmethod
    def from_mapping(cls, data: Mapping) -> "AnomalyReport":
        return cls(event=EventType(data["event"]), variable=data["variable"],
                   value=float(data["value"]),
                   exceedance_percentile=float(data["exceedance_percentile"]),
                   threshold_percentile=float(data["threshold_percentile"]),
                   matches=tuple(dict(m) for m in data.get("matches", ())))


def load_rules(path: str | None = None) -> tuple[AnomalyRule, ...]:
    if path is None:
        raw = resources.files("wxdiag.resources").joinpath("anomaly_rules.json").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read()
    data = json.loads(raw)
    if data.get("schema") != "anomaly-rules/1":
        raise AnomalyError(f"unsupported rules schema {data.get('schema')!r}")
    rules = []
    for rec in data["rules"]:
        rules.append(AnomalyRule(event=EventType(rec["event"]), variable=rec["variable"],
                                 percentile=float(rec["percentile"]),
                                 tail=rec.get("tail", "upper"),
                                 conditions=tuple(rec.get("conditions", ())),
                                 season=rec.get("season", ""),
                                 note=rec.get("note", "")))
    return tuple(rules)


_DEFAULT_RULES: tuple[AnomalyRule, ...] | None = None


def default_rules() -> tuple[AnomalyRule, ...]:
    global _DEFAULT_RULES
    if _DEFAULT_RULES is None:
        _DEFAULT_RULES = load_rules()
    return _DEFAULT_RULES


def percentile_rank(value: float, samples: Sequence[float]) -> float:
    """Percentile standing of `value`: strictly-below fraction x 100, ties half."""
    arr = np.asarray(samples, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise AnomalyError("empty climatology sample")
    if not np.isfinite(arr).all() or not np.isfinite(value):
        raise AnomalyError("non-finite values in percentile ranking")
    below = float(np.count_nonzero(arr < value))
    equal = float(np.count_nonzero(arr == value))
    return (below + 0.5 * equal) / arr.size * 100.0


def _condition_holds(cond: Mapping, candidates: Mapping[str, float]) -> bool:
    var = cond["variable"]
    if var not in candidates:
        return False
    value = float(candidates[var])
    bound = float(cond["value"])
    op = cond.get("op", "le")
    if op == "le":
        return value <= bound
    if op == "ge":
        return value >= bound
    raise AnomalyError(f"unknown condition op {op!r}")


def check_anomaly(candidates: Mapping[str, float],
                  climatology: Mapping[str, Sequence[float]],
                  rules: Sequence[AnomalyRule] | None = None) -> AnomalyReport | None:
    """Screen candidates against every rule; report the strongest event or None.

    The winner is the matching rule with the highest exceedance percentile;
    exact ties resolve in event-type declaration order.
    """
    rules = tuple(rules) if rules is not None else default_rules()
    matches = []
    for rule in rules:
        if rule.variable not in candidates or rule.variable not in climatology:
            continue
        samples = np.asarray(climatology[rule.variable], dtype=np.float64).reshape(-1)
        if samples.size < MIN_CLIMATOLOGY_SAMPLES:
            raise AnomalyError(
                f"climatology for {rule.variable!r} holds {samples.size} samples; "
                f"need at least {MIN_CLIMATOLOGY_SAMPLES}")
        value = float(candidates[rule.variable])
        rank = percentile_rank(value, samples)
        exceedance = rank if rule.tail == "upper" else 100.0 - rank
        if exceedance < rule.percentile:
            continue
        if any(not _condition_holds(c, candidates) for c in rule.conditions):
            continue
        matches.append({"event": rule.event, "variable": rule.variable,
                        "value": value, "exceedance": exceedance,
                        "threshold": rule.percentile})
    if not matches:
        return None
    best = min(matches, key=lambda m: (-m["exceedance"], _EVENT_ORDER[m["event"]]))
    return AnomalyReport(event=best["event"], variable=best["variable"],
                         value=best["value"],
                         exceedance_percentile=best["exceedance"],
                         threshold_percentile=best["threshold"],
                         matches=tuple({**m, "event": m["event"].value} for m in matches))
