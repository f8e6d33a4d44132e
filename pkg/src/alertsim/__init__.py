"""Counterfactual simulation and retrospective evaluation of repeated-prediction alert systems."""

from .core import (
    AtRiskRule, Cohort, ConfusionCounts, EvalConfig, Metrics, Mode, Strategy, TimePoint,
    Trajectory, Unit, confusion_metrics,
)
from .estimators import (
    AggregatedTimeError, model_comparison, outcome_estimate, prevented_upper_bound,
    rho_sensitivity, workload_estimate,
)
from .evaluators import SnoozeViolationError, aggregated_time, evaluate, first_alert, fixed_time
from .risk_model import (
    AlertPolicy, ConvergenceError, FitConfig, LogisticModel, ScoreThresholdPolicy,
    apply_policy_silent, build_labels, fit_logistic, predict,
)
from .simulator import (
    DynamicsConfig, InterventionKind, InterventionSpec, generate_cohort, simulate_encounter, step,
)
from .trial import Arm, TrialConfig, TrialResult, compare_arms, run_trial

__version__ = "0.1.0"
