"""Domain types shared across the package.

Trajectories are stored column-wise (one numpy array per field) so the hot
kernels can consume them without per-timepoint Python objects; the
``timepoints`` view materialises :class:`TimePoint` records on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Optional, Sequence

import numpy as np


class Mode(str, Enum):
    SILENT = "silent"
    ACTIVE = "active"


class Strategy(str, Enum):
    AGGREGATED_TIME = "aggregated_time"
    FIXED_TIME = "fixed_time"
    FIRST_ALERT = "first_alert"


class Unit(str, Enum):
    PATIENT_TIMEPOINT = "patient_timepoint"
    PATIENT = "patient"


class AtRiskRule(str, Enum):
    EXCLUDE_PRIOR_OUTCOME = "exclude_prior_outcome"


STRATEGY_UNIT = {
    Strategy.AGGREGATED_TIME: Unit.PATIENT_TIMEPOINT,
    Strategy.FIXED_TIME: Unit.PATIENT,
    Strategy.FIRST_ALERT: Unit.PATIENT,
}


@dataclass(frozen=True)
class TimePoint:
    t: int
    position: float
    velocity: float
    acceleration: float
    score: Optional[float]
    alert: bool
    outcome: bool

    def __post_init__(self):
        if self.score is not None and not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score {self.score} outside [0, 1]")


def _frozen(arr, dtype) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One encounter. Covariates are NaN for score-only (ingested) streams,
    and ``score`` is NaN wherever no score was computed."""

    patient_id: str
    time: np.ndarray
    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    score: np.ndarray
    alert: np.ndarray
    outcome: np.ndarray

    def __post_init__(self):
        n = len(self.time)
        object.__setattr__(self, "time", _frozen(self.time, np.int64))
        for name in ("position", "velocity", "acceleration", "score"):
            object.__setattr__(self, name, _frozen(getattr(self, name), np.float64))
        for name in ("alert", "outcome"):
            object.__setattr__(self, name, _frozen(getattr(self, name), bool))
        for name in ("position", "velocity", "acceleration", "score", "alert", "outcome"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{self.patient_id}: field {name!r} has wrong length")
        if n == 0:
            raise ValueError(f"{self.patient_id}: empty trajectory")
        if n > 1 and np.any(np.diff(self.time) <= 0):
            raise ValueError(f"{self.patient_id}: times must be strictly increasing")
        if self.time[0] < 0:
            raise ValueError(f"{self.patient_id}: negative time index")
        s = self.score[~np.isnan(self.score)]
        if np.any((s < 0.0) | (s > 1.0)):
            raise ValueError(f"{self.patient_id}: score outside [0, 1]")
        hits = np.flatnonzero(self.outcome)
        if len(hits) > 1:
            raise ValueError(f"{self.patient_id}: more than one outcome")
        if len(hits) == 1:
            k = hits[0]
            if np.any(self.alert[k:]):
                raise ValueError(f"{self.patient_id}: alert at or after the outcome")
            for name in ("position", "velocity", "acceleration"):
                col = getattr(self, name)
                if not np.array_equal(col[k:], np.full(n - k, col[k]), equal_nan=True):
                    raise ValueError(f"{self.patient_id}: {name} changes after the outcome")

    @classmethod
    def from_scores(cls, patient_id: str, time, score, outcome, alert=None) -> "Trajectory":
        n = len(time)
        nan = np.full(n, np.nan)
        return cls(
            patient_id=patient_id,
            time=time,
            position=nan,
            velocity=nan,
            acceleration=nan,
            score=score,
            alert=np.zeros(n, bool) if alert is None else alert,
            outcome=outcome,
        )

    def __len__(self) -> int:
        return len(self.time)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        return self.patient_id == other.patient_id and all(
            np.array_equal(getattr(self, k), getattr(other, k), equal_nan=True)
            for k in _ARRAY_FIELDS
        )

    __hash__ = None

    @property
    def outcome_index(self) -> Optional[int]:
        hits = np.flatnonzero(self.outcome)
        return int(hits[0]) if len(hits) else None

    @property
    def outcome_time(self) -> Optional[int]:
        k = self.outcome_index
        return None if k is None else int(self.time[k])

    @property
    def first_alert_time(self) -> Optional[int]:
        hits = np.flatnonzero(self.alert)
        return int(self.time[hits[0]]) if len(hits) else None

    @property
    def n_live(self) -> int:
        """Timepoints strictly before the outcome (all of them if none)."""
        k = self.outcome_index
        return len(self) if k is None else k

    @property
    def has_covariates(self) -> bool:
        return not np.all(np.isnan(self.position))

    def covariates(self) -> np.ndarray:
        """(len, 3) matrix of position, velocity, previous acceleration."""
        return np.column_stack([self.position, self.velocity, self.acceleration])

    @property
    def timepoints(self) -> tuple[TimePoint, ...]:
        out = []
        for i in range(len(self)):
            sc = self.score[i]
            out.append(
                TimePoint(
                    t=int(self.time[i]),
                    position=float(self.position[i]),
                    velocity=float(self.velocity[i]),
                    acceleration=float(self.acceleration[i]),
                    score=None if math.isnan(sc) else float(sc),
                    alert=bool(self.alert[i]),
                    outcome=bool(self.outcome[i]),
                )
            )
        return tuple(out)

    def with_alerts(self, alert, score=None) -> "Trajectory":
        return Trajectory(
            patient_id=self.patient_id,
            time=self.time,
            position=self.position,
            velocity=self.velocity,
            acceleration=self.acceleration,
            score=self.score if score is None else score,
            alert=alert,
            outcome=self.outcome,
        )

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"patient_id": self.patient_id}
        for k in _ARRAY_FIELDS:
            col = getattr(self, k)
            if col.dtype == np.float64:
                d[k] = [None if math.isnan(v) else float(v) for v in col]
            else:
                d[k] = col.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Trajectory":
        kw = {"patient_id": d["patient_id"]}
        for k in _ARRAY_FIELDS:
            v = d[k]
            if k in ("position", "velocity", "acceleration", "score"):
                v = [np.nan if x is None else x for x in v]
            kw[k] = v
        return cls(**kw)


_ARRAY_FIELDS = ("time", "position", "velocity", "acceleration", "score", "alert", "outcome")


@dataclass(frozen=True, eq=False)
class Cohort:
    trajectories: tuple[Trajectory, ...]
    mode: Mode = Mode.SILENT
    base_seed: int = 0
    config_digest: str = ""

    def __post_init__(self):
        object.__setattr__(self, "trajectories", tuple(self.trajectories))
        object.__setattr__(self, "mode", Mode(self.mode))
        if not (0 <= int(self.base_seed) < 2**64):
            raise ValueError("base_seed must fit in an unsigned 64-bit integer")
        ids = [tr.patient_id for tr in self.trajectories]
        if len(set(ids)) != len(ids):
            raise ValueError("patient ids must be unique")

    def __len__(self) -> int:
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Cohort):
            return NotImplemented
        return (
            self.mode == other.mode
            and int(self.base_seed) == int(other.base_seed)
            and self.config_digest == other.config_digest
            and self.trajectories == other.trajectories
        )

    __hash__ = None

    @property
    def n_outcomes(self) -> int:
        return sum(tr.outcome_index is not None for tr in self.trajectories)

    @property
    def n_alerts(self) -> int:
        return int(sum(tr.alert.sum() for tr in self.trajectories))

    @cached_property
    def flat(self) -> "FlatCohort":
        return FlatCohort.from_trajectories(self.trajectories)

    def replace_trajectories(self, trajectories: Sequence[Trajectory]) -> "Cohort":
        return Cohort(tuple(trajectories), self.mode, self.base_seed, self.config_digest)

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode.value,
            "base_seed": int(self.base_seed),
            "config_digest": self.config_digest,
            "trajectories": [tr.to_dict() for tr in self.trajectories],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Cohort":
        return cls(
            trajectories=tuple(Trajectory.from_dict(t) for t in d["trajectories"]),
            mode=Mode(d["mode"]),
            base_seed=int(d["base_seed"]),
            config_digest=d["config_digest"],
        )


@dataclass(frozen=True)
class FlatCohort:
    """Concatenated per-timepoint arrays plus patient offsets, kernel input."""

    time: np.ndarray
    alert: np.ndarray
    offsets: np.ndarray
    outcome_index: np.ndarray  # local index of the outcome, -1 if none

    @classmethod
    def from_trajectories(cls, trajectories: Sequence[Trajectory]) -> "FlatCohort":
        lengths = np.array([len(tr) for tr in trajectories], dtype=np.int64)
        offsets = np.zeros(len(lengths) + 1, dtype=np.int64)
        np.cumsum(lengths, out=offsets[1:])
        if len(trajectories):
            time = np.concatenate([tr.time for tr in trajectories])
            alert = np.concatenate([tr.alert for tr in trajectories])
        else:
            time = np.zeros(0, np.int64)
            alert = np.zeros(0, bool)
        oi = np.array(
            [-1 if tr.outcome_index is None else tr.outcome_index for tr in trajectories],
            dtype=np.int64,
        )
        return cls(time=time, alert=alert, offsets=offsets, outcome_index=oi)


@dataclass(frozen=True)
class EvalConfig:
    strategy: Strategy
    lookahead: Optional[int] = None
    t_star: Optional[int] = None
    threshold: Optional[float] = None
    at_risk_rule: Optional[AtRiskRule] = None

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.at_risk_rule is not None:
            object.__setattr__(self, "at_risk_rule", AtRiskRule(self.at_risk_rule))
        if self.lookahead is not None and self.lookahead < 1:
            raise ValueError("lookahead must be >= 1")
        if self.strategy is Strategy.AGGREGATED_TIME and self.lookahead is None:
            raise ValueError("aggregated time evaluation requires a lookahead window")
        if self.strategy is Strategy.FIXED_TIME:
            if self.t_star is None:
                raise ValueError("fixed time evaluation requires t_star")
            if self.at_risk_rule is None:
                object.__setattr__(self, "at_risk_rule", AtRiskRule.EXCLUDE_PRIOR_OUTCOME)
        if self.strategy is Strategy.FIRST_ALERT and self.lookahead is not None:
            raise ValueError(
                "first alert evaluation takes no lookahead window: it cannot be "
                "placed for patients who never alert"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "strategy": self.strategy.value,
            "lookahead": self.lookahead,
            "t_star": self.t_star,
            "threshold": self.threshold,
            "at_risk_rule": None if self.at_risk_rule is None else self.at_risk_rule.value,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EvalConfig":
        return cls(**d)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int
    strategy: Strategy
    unit: Unit = field(default=None)  # type: ignore[assignment]
    config: Optional[EvalConfig] = None

    def __post_init__(self):
        for k in ("tp", "fp", "fn", "tn"):
            v = getattr(self, k)
            if int(v) != v or v < 0:
                raise ValueError(f"{k} must be a non-negative integer, got {v!r}")
            object.__setattr__(self, k, int(v))
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        expected = STRATEGY_UNIT[self.strategy]
        if self.unit is None:
            object.__setattr__(self, "unit", expected)
        elif Unit(self.unit) is not expected:
            raise ValueError(f"{self.strategy.value} counts are per {expected.value}")
        else:
            object.__setattr__(self, "unit", Unit(self.unit))

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def positives(self) -> int:
        return self.tp + self.fp

    @property
    def threshold(self) -> Optional[float]:
        return None if self.config is None else self.config.threshold

    def to_dict(self) -> dict[str, Any]:
        return {
            "strategy": self.strategy.value,
            "unit": self.unit.value,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
            "config": None if self.config is None else self.config.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ConfusionCounts":
        cfg = d.get("config")
        return cls(
            tp=d["tp"],
            fp=d["fp"],
            fn=d["fn"],
            tn=d["tn"],
            strategy=Strategy(d["strategy"]),
            unit=Unit(d["unit"]),
            config=None if cfg is None else EvalConfig.from_dict(cfg),
        )


@dataclass(frozen=True)
class Metrics:
    sensitivity: Optional[float]
    specificity: Optional[float]
    ppv: Optional[float]
    positives: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "ppv": self.ppv,
            "positives": self.positives,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Metrics":
        return cls(**d)


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den > 0 else None


def confusion_metrics(counts: ConfusionCounts) -> Metrics:
    """Sensitivity, specificity and PPV; a ratio with an empty denominator is None."""
    return Metrics(
        sensitivity=_ratio(counts.tp, counts.tp + counts.fn),
        specificity=_ratio(counts.tn, counts.tn + counts.fp),
        ppv=_ratio(counts.tp, counts.tp + counts.fp),
        positives=counts.positives,
    )
