"""End-to-end simulation study: train, evaluate retrospectively, run the trial,
and check how the retrospective counts line up with the trial.

Train, test and trial patients come from disjoint seed streams under one
base seed. The trial is paired, so its patients are exactly the cohort the
silent first-alert evaluation in the checks runs on.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

from .core import ConfusionCounts
from .evaluators import aggregated_time, first_alert, fixed_time
from .risk_model import (
    AlertPolicy, FitConfig, LogisticModel, apply_policy_silent, fit_logistic_arrays, label_arrays,
)
from .simulator import DynamicsConfig, InterventionKind, InterventionSpec, generate_cohort
from .trial import (
    TrialConfig, TrialResult, bound_checks, compare_arms, replicate_study, run_trial, silent_first_alert,
    threshold_arms,
)

TRAIN_STREAM = 101
TEST_STREAM = 102


@dataclass(frozen=True)
class StudyConfig:
    seed: int = 0
    n_train: int = 500
    n_test: int = 500
    lookahead: int = 5
    t_star: int = 10
    thresholds: tuple[float, ...] = (0.2, 0.4, 0.6, 0.8)
    n_per_arm: int = 1000
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    magnitude: float = 0.2
    replicates: int = 50
    replicate_n_per_arm: int = 500
    confidence: float = 0.99

    def to_dict(self) -> dict:
        d = asdict(self)
        d["thresholds"] = list(self.thresholds)
        return d


def train_model(cohort, lookahead: int, fit: FitConfig = FitConfig()) -> LogisticModel:
    X, y = label_arrays(cohort, lookahead)
    return fit_logistic_arrays(X, y, lookahead, fit)


def evaluation_table(cohort, model: LogisticModel, thresholds: Sequence[float], lookahead: int,
                     t_star: int) -> list[ConfusionCounts]:
    """Aggregated-time rows, then fixed-time, then first-alert, each by threshold."""
    agg, fixed, first = [], [], []
    for th in thresholds:
        policy = AlertPolicy(model, th)
        alerted = apply_policy_silent(policy, cohort)
        agg.append(aggregated_time(alerted, lookahead, th))
        fixed.append(fixed_time(cohort, policy, t_star))
        first.append(first_alert(alerted, th))
    return agg + fixed + first


@dataclass(frozen=True)
class TrialRow:
    label: str
    prevented: int
    alerts: int
    first_alert_tp: int
    first_alert_positives: int


TRIAL_TABLE_COLUMNS = ("label", "prevented", "alerts", "first_alert_tp", "first_alert_positives")


def trial_table(result: TrialResult, silent: dict[str, ConfusionCounts]) -> list[TrialRow]:
    """Trial arms next to the silent first-alert counts on the same patients."""
    return [TrialRow(r.label, r.prevented, r.alerts, silent[r.label].tp, silent[r.label].positives)
            for r in compare_arms(result)]


def paired_trial(model: LogisticModel, thresholds: Sequence[float], n_per_arm: int, seed: int,
                 dynamics: DynamicsConfig, intervention: InterventionSpec, paired: bool = True
                 ) -> tuple[TrialResult, dict[str, ConfusionCounts]]:
    """Run the trial; alongside it, first-alert counts on the silent control
    patients (arm 0's seeds, which every arm shares when paired)."""
    arms = threshold_arms(model, thresholds)
    result = run_trial(TrialConfig(arms, n_per_arm, seed, dynamics, intervention, paired))
    stream = None if paired else 1
    silent = {a.label: silent_first_alert(a.policy, n_per_arm, seed, dynamics, stream)
              for a in arms[1:]}
    return result, silent


@dataclass(frozen=True)
class Check:
    name: str
    threshold: Optional[float]
    holds: bool
    detail: str

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class StudyResult:
    config: StudyConfig
    model: LogisticModel
    evaluation: list[ConfusionCounts]
    trial: TrialResult
    trial_rows: list[TrialRow]
    checks: list[Check]

    @property
    def ok(self) -> bool:
        return all(c.holds for c in self.checks)


def _nonincreasing(values: Sequence[int]) -> bool:
    return all(a >= b for a, b in zip(values, values[1:]))


def run_study(config: StudyConfig = StudyConfig()) -> StudyResult:
    dyn = config.dynamics
    ths = tuple(sorted(config.thresholds))
    train = generate_cohort(config.n_train, config.seed, dyn, stream=TRAIN_STREAM)
    test = generate_cohort(config.n_test, config.seed, dyn, stream=TEST_STREAM)
    model = train_model(train, config.lookahead)
    evaluation = evaluation_table(test, model, ths, config.lookahead, config.t_star)
    k = len(ths)
    agg, first = evaluation[:k], evaluation[2 * k:]

    force = InterventionSpec(InterventionKind.LEFTWARD_FORCE, config.magnitude)
    trial, silent = paired_trial(model, ths, config.n_per_arm, config.seed, dyn, force)
    perfect, _ = paired_trial(model, ths, config.n_per_arm, config.seed, dyn,
                              InterventionSpec(InterventionKind.PERFECT))
    null, _ = paired_trial(model, ths, config.n_per_arm, config.seed, dyn, InterventionSpec())

    checks = []
    for th, a, f in zip(ths, agg, first):
        checks.append(Check("snooze identity", th, a.positives == f.positives,
                            f"aggregated positives {a.positives}, first-alert positives {f.positives}"))
    for th in ths:
        label = f"{th:g}"
        fa = silent[label]
        alerts = trial.arm(label).total_alerts
        checks.append(Check("workload identity", th, alerts == fa.positives,
                            f"trial alerts {alerts}, first-alert positives {fa.positives}"))
        got = perfect.prevented(label)
        checks.append(Check("perfect attainment", th, got == fa.tp,
                            f"prevented {got}, first-alert tp {fa.tp}"))
        prev = trial.prevented(label)
        checks.append(Check("paired bound", th, prev <= fa.tp,
                            f"prevented {prev}, first-alert tp {fa.tp}"))
        zero = null.prevented(label)
        checks.append(Check("null intervention", th, zero == 0, f"prevented {zero}"))
    checks.append(Check("monotone positives", None, _nonincreasing([f.positives for f in first]),
                        " ".join(str(f.positives) for f in first)))
    checks.append(Check("monotone tp", None, _nonincreasing([f.tp for f in first]),
                        " ".join(str(f.tp) for f in first)))

    if config.replicates > 0:
        rows = replicate_study(model, ths, config.replicate_n_per_arm, config.replicates,
                               config.seed, dyn, force, paired=False,
                               independent_eval=True)
        for bc in bound_checks(rows, level=config.confidence):
            checks.append(Check(
                "replicate bound", bc.threshold, bc.holds,
                f"mean prevented {bc.mean_prevented:.2f}, mean tp {bc.mean_tp:.2f}, "
                f"upper {config.confidence:g} bound on difference {bc.upper:.2f}, "
                f"replicates above tp {bc.violations}/{config.replicates}"))

    return StudyResult(config, model, evaluation, trial, trial_table(trial, silent), checks)
