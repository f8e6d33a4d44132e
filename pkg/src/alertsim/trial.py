"""Simulated multi-arm randomized trial of alert policies.

Every arm runs its policy live in the simulator; one arm has no policy and
serves as the control. With ``paired=True`` (the default) every arm sees the
same patient seeds, so arms differ only through what the alerts did.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import kernels
from .core import ConfusionCounts, EvalConfig, Strategy
from .risk_model import AlertPolicy, LogisticModel
from .simulator import (
    DynamicsConfig, InterventionSpec, NO_INTERVENTION, mix, patient_seeds, simulate_arrays,
)

# seed streams: unpaired arm a uses stream a + 1; replicate seeds and the
# independent evaluation cohort get their own.
EVAL_STREAM = 0
REPLICATE_STREAM = 2**31


@dataclass(frozen=True)
class Arm:
    label: str
    policy: Optional[AlertPolicy] = None


@dataclass(frozen=True)
class TrialConfig:
    arms: tuple[Arm, ...]
    n_per_arm: int
    base_seed: int = 0
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    intervention: InterventionSpec = NO_INTERVENTION
    paired: bool = True

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        controls = [a for a in self.arms if a.policy is None]
        if len(controls) != 1:
            raise ValueError("a trial needs exactly one control arm (policy=None)")
        labels = [a.label for a in self.arms]
        if len(set(labels)) != len(labels):
            raise ValueError("arm labels must be unique")
        if int(self.n_per_arm) != self.n_per_arm or self.n_per_arm < 1:
            raise ValueError("n_per_arm must be a positive integer")


@dataclass(frozen=True)
class ArmResult:
    label: str
    n: int
    total_outcomes: int
    total_alerts: int
    threshold: Optional[float] = None

    def to_dict(self) -> dict:
        return {"label": self.label, "n": self.n, "total_outcomes": self.total_outcomes,
                "total_alerts": self.total_alerts, "threshold": self.threshold}

    @classmethod
    def from_dict(cls, d: dict) -> "ArmResult":
        return cls(**d)


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    threshold: Optional[float]
    prevented: int
    alerts: int
    n: int
    control_outcomes: int
    arm_outcomes: int

    @property
    def prevented_per_patient(self) -> float:
        return self.prevented / self.n

    @property
    def alerts_per_patient(self) -> float:
        return self.alerts / self.n


@dataclass(frozen=True)
class TrialResult:
    arms: tuple[ArmResult, ...]
    control_label: str
    paired: bool = True

    @property
    def control(self) -> ArmResult:
        return next(a for a in self.arms if a.label == self.control_label)

    def arm(self, label: str) -> ArmResult:
        return next(a for a in self.arms if a.label == label)

    def prevented(self, label: str) -> int:
        """Control outcomes minus arm outcomes; negative means the arm did harm."""
        return self.control.total_outcomes - self.arm(label).total_outcomes

    def to_dict(self) -> dict:
        return {"arms": [a.to_dict() for a in self.arms], "control_label": self.control_label,
                "paired": self.paired}

    @classmethod
    def from_dict(cls, d: dict) -> "TrialResult":
        return cls(arms=tuple(ArmResult.from_dict(a) for a in d["arms"]),
                   control_label=d["control_label"], paired=d["paired"])


def arm_seeds(config: TrialConfig, arm_index: int) -> list[int]:
    stream = None if config.paired else arm_index + 1
    return patient_seeds(config.n_per_arm, config.base_seed, stream)


def run_trial(config: TrialConfig) -> TrialResult:
    results = []
    control = None
    for i, arm in enumerate(config.arms):
        sim = simulate_arrays(arm_seeds(config, i), config.dynamics, arm.policy,
                              config.intervention)
        results.append(ArmResult(
            label=arm.label, n=config.n_per_arm, total_outcomes=sim.n_outcomes,
            total_alerts=sim.n_alerts,
            threshold=None if arm.policy is None else arm.policy.threshold,
        ))
        if arm.policy is None:
            control = arm.label
    return TrialResult(arms=tuple(results), control_label=control, paired=config.paired)


def _label_key(row: ComparisonRow):
    if row.threshold is not None:
        return (0, row.threshold, row.label)
    try:
        return (0, float(row.label), row.label)
    except ValueError:
        return (1, 0.0, row.label)


def compare_arms(result: TrialResult) -> list[ComparisonRow]:
    ctrl = result.control
    rows = [
        ComparisonRow(
            label=a.label, threshold=a.threshold, prevented=result.prevented(a.label),
            alerts=a.total_alerts, n=a.n, control_outcomes=ctrl.total_outcomes,
            arm_outcomes=a.total_outcomes,
        )
        for a in result.arms if a.label != result.control_label
    ]
    return sorted(rows, key=_label_key)


def threshold_arms(model: LogisticModel, thresholds: Sequence[float], snooze: bool = True
                   ) -> tuple[Arm, ...]:
    arms = [Arm("control")]
    arms += [Arm(f"{th:g}", AlertPolicy(model, th, snooze)) for th in thresholds]
    return tuple(arms)


def silent_first_alert(policy: AlertPolicy, n: int, base_seed: int, dynamics: DynamicsConfig,
                       stream: int | None = None) -> ConfusionCounts:
    """First-alert counts on a silent cohort drawn with the given seeds.

    Runs the policy inside the simulator with no intervention, which yields
    the same snoozed alerts as ``apply_policy_silent`` on the generated
    cohort without building per-patient trajectories.
    """
    sim = simulate_arrays(patient_seeds(n, base_seed, stream), dynamics, policy, NO_INTERVENTION)
    horizon = sim.alert.shape[1]
    offsets = np.arange(0, (n + 1) * horizon, horizon, dtype=np.int64)
    tp, fp, fn, tn, bad = kernels.first_alert_counts(sim.alert.reshape(-1), offsets,
                                                     sim.outcome_index)
    assert bad < 0, "live snoozed alerts always satisfy the first-alert contract"
    return ConfusionCounts(tp, fp, fn, tn, Strategy.FIRST_ALERT,
                           config=EvalConfig(Strategy.FIRST_ALERT, threshold=policy.threshold))


@dataclass(frozen=True)
class ReplicateRow:
    replicate: int
    threshold: float
    first_alert_tp: int
    first_alert_positives: int
    prevented: int
    alerts: int


def replicate_study(model: LogisticModel, thresholds: Sequence[float], n_per_arm: int,
                    n_replicates: int, base_seed: int, dynamics: DynamicsConfig,
                    intervention: InterventionSpec, paired: bool = True,
                    independent_eval: bool = True) -> list[ReplicateRow]:
    """Repeat evaluation + trial with fresh seeds.

    With ``independent_eval`` the silent evaluation cohort is a separate
    sample from the trial patients, as a real retrospective test set would be;
    otherwise it shares the trial's (paired) seeds.
    """
    rows = []
    arms = threshold_arms(model, thresholds)
    for r in range(n_replicates):
        seed = mix(base_seed, r, REPLICATE_STREAM)
        cfg = TrialConfig(arms, n_per_arm, seed, dynamics, intervention, paired)
        result = run_trial(cfg)
        stream = EVAL_STREAM if independent_eval else None
        for arm in arms[1:]:
            fa = silent_first_alert(arm.policy, n_per_arm, seed, dynamics, stream)
            rows.append(ReplicateRow(r, arm.policy.threshold, fa.tp, fa.positives,
                                     result.prevented(arm.label),
                                     result.arm(arm.label).total_alerts))
    return rows


@dataclass(frozen=True)
class BoundCheck:
    threshold: float
    mean_prevented: float
    mean_tp: float
    upper: float  # one-sided upper confidence bound on mean(prevented - tp)
    violations: int  # replicates with prevented > tp

    @property
    def holds(self) -> bool:
        return self.upper <= 0.0


def bound_checks(rows: Sequence[ReplicateRow], level: float = 0.99, n_resamples: int = 9999,
                 seed: int = 0) -> list[BoundCheck]:
    """Per threshold, bootstrap an upper bound on mean(prevented - first-alert tp)."""
    out = []
    for th in sorted({r.threshold for r in rows}):
        sel = [r for r in rows if r.threshold == th]
        diff = np.array([r.prevented - r.first_alert_tp for r in sel], float)
        if len(diff) < 2 or np.ptp(diff) == 0:
            upper = float(diff.mean())
        else:
            res = stats.bootstrap((diff,), np.mean, confidence_level=level, alternative="less",
                                  method="percentile", n_resamples=n_resamples,
                                  random_state=np.random.default_rng(seed))
            upper = float(res.confidence_interval.high)
        out.append(BoundCheck(
            threshold=th,
            mean_prevented=float(np.mean([r.prevented for r in sel])),
            mean_tp=float(np.mean([r.first_alert_tp for r in sel])),
            upper=upper if math.isfinite(upper) else float(diff.mean()),
            violations=int(np.sum(diff > 0)),
        ))
    return out
