"""Lookahead labels, logistic regression, and snoozed alert policies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit, log_expit

from .core import Cohort, Mode, Trajectory
from .kernels import linear_predictor

FEATURE_NAMES = ("position", "velocity", "acceleration")


class ConvergenceError(RuntimeError):
    def __init__(self, iterations: int, grad_norm: float):
        super().__init__(
            f"logistic fit did not converge in {iterations} iterations "
            f"(final gradient norm {grad_norm:.3g})"
        )
        self.iterations = iterations
        self.grad_norm = grad_norm


@dataclass(frozen=True)
class LabeledExample:
    covariates: tuple[float, ...]
    label: bool


def _window_labels(tr: Trajectory, lookahead: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices of live timepoints and whether the outcome falls in (t, t+lookahead]."""
    live = np.arange(tr.n_live)
    ot = tr.outcome_time
    if ot is None:
        return live, np.zeros(len(live), bool)
    return live, (ot - tr.time[live]) <= lookahead


def label_arrays(cohort: Cohort, lookahead: int) -> tuple[np.ndarray, np.ndarray]:
    """Covariate matrix and boolean labels over every live patient-timepoint."""
    if cohort.mode is not Mode.SILENT:
        raise ValueError("labels must come from a silent cohort; active data is contaminated "
                         "by the intervention")
    if int(lookahead) != lookahead or lookahead < 1:
        raise ValueError("lookahead must be a positive integer")
    xs, ys = [], []
    for tr in cohort:
        if not tr.has_covariates:
            raise ValueError(f"{tr.patient_id}: no covariates to train on")
        idx, lab = _window_labels(tr, lookahead)
        xs.append(tr.covariates()[idx])
        ys.append(lab)
    if not xs:
        return np.zeros((0, 3)), np.zeros(0, bool)
    return np.concatenate(xs), np.concatenate(ys)


def build_labels(cohort: Cohort, lookahead: int) -> list[LabeledExample]:
    X, y = label_arrays(cohort, lookahead)
    return [LabeledExample(tuple(map(float, row)), bool(lab)) for row, lab in zip(X, y)]


@dataclass(frozen=True)
class FitConfig:
    max_iters: int = 20000
    l2_penalty: float = 1e-4
    tolerance: float = 1e-8
    armijo: float = 1e-4


def objective(theta: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float) -> float:
    """Mean negative log-likelihood plus (l2/2)*|theta|^2; theta = (intercept, weights)."""
    z = theta[0] + X @ theta[1:]
    nll = -np.mean(y * log_expit(z) + (1.0 - y) * log_expit(-z)) if len(y) else 0.0
    return float(nll + 0.5 * l2 * theta @ theta)


def gradient(theta: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float) -> np.ndarray:
    z = theta[0] + X @ theta[1:]
    r = expit(z) - y
    n = max(len(y), 1)
    g = np.empty_like(theta)
    g[0] = r.sum() / n
    g[1:] = X.T @ r / n
    return g + l2 * theta


@dataclass(frozen=True)
class LogisticModel:
    weights: tuple[float, ...]
    intercept: float
    lookahead: int
    feature_names: tuple[str, ...] = FEATURE_NAMES
    iterations: int = field(default=0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "intercept", float(self.intercept))
        if len(self.weights) != len(self.feature_names):
            raise ValueError("one weight per feature")
        if not all(math.isfinite(w) for w in self.weights) or not math.isfinite(self.intercept):
            raise ValueError("model coefficients must be finite")

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "weights": list(self.weights),
            "intercept": self.intercept,
            "lookahead": self.lookahead,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticModel":
        return cls(weights=d["weights"], intercept=d["intercept"], lookahead=d["lookahead"],
                   feature_names=d.get("feature_names", FEATURE_NAMES))


def fit_logistic_arrays(X: np.ndarray, y: np.ndarray, lookahead: int = 1,
                        config: FitConfig = FitConfig(),
                        feature_names: Sequence[str] = FEATURE_NAMES) -> LogisticModel:
    """Full-batch gradient descent with Armijo backtracking.

    Each iteration starts its line search from the Barzilai-Borwein step and
    halves until sufficient decrease. The intercept is penalised along with
    the weights so single-class data still has a finite minimiser.
    """
    X = np.asarray(X, float)
    y = np.asarray(y, float)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be (n, d) with one label per row")
    if config.l2_penalty <= 0 and (len(y) < 2 or y.min() == y.max()):
        raise ValueError("need both classes present, or a positive l2_penalty")
    l2 = config.l2_penalty
    theta = np.zeros(X.shape[1] + 1)
    f = objective(theta, X, y, l2)
    g = gradient(theta, X, y, l2)
    lr = 1.0
    prev_theta = prev_g = None
    for it in range(1, config.max_iters + 1):
        gnorm = float(np.linalg.norm(g))
        if gnorm <= config.tolerance:
            break
        if prev_theta is not None:
            s = theta - prev_theta
            dg = g - prev_g
            sy = float(s @ dg)
            if sy > 0:
                lr = float(s @ s) / sy
        while True:
            cand = theta - lr * g
            fc = objective(cand, X, y, l2)
            if fc <= f - config.armijo * lr * gnorm**2 or lr < 1e-16:
                break
            lr *= 0.5
        prev_theta, prev_g = theta, g
        theta, f = cand, fc
        g = gradient(theta, X, y, l2)
    else:
        gnorm = float(np.linalg.norm(g))
        if gnorm > config.tolerance:
            raise ConvergenceError(config.max_iters, gnorm)
        it = config.max_iters
    return LogisticModel(weights=tuple(theta[1:]), intercept=float(theta[0]),
                         lookahead=lookahead, feature_names=tuple(feature_names), iterations=it)


def fit_logistic(examples: Sequence[LabeledExample], config: FitConfig = FitConfig(),
                 lookahead: int = 1, feature_names: Sequence[str] = FEATURE_NAMES) -> LogisticModel:
    X = np.array([ex.covariates for ex in examples], float).reshape(len(examples), -1)
    y = np.array([ex.label for ex in examples], float)
    return fit_logistic_arrays(X, y, lookahead, config, feature_names)


def predict(model: LogisticModel, covariates) -> float | np.ndarray:
    x = np.asarray(covariates, float)
    if x.shape[-1] != len(model.weights):
        raise ValueError(f"expected {len(model.weights)} covariates, got {x.shape[-1]}")
    z = linear_predictor(model.weights, model.intercept, np.moveaxis(x, -1, 0))
    p = expit(z)
    return float(p) if p.ndim == 0 else p


def _logit(p: float) -> float:
    return math.log(p) - math.log1p(-p)


def snooze_alerts(raw: np.ndarray, outcome_index: Optional[int], snooze: bool) -> np.ndarray:
    """Drop alerts at or after the outcome; with snooze keep only the first."""
    out = np.asarray(raw, bool).copy()
    if outcome_index is not None:
        out[outcome_index:] = False
    if snooze:
        hits = np.flatnonzero(out)
        if len(hits) > 1:
            out[hits[1:]] = False
    return out


@dataclass(frozen=True)
class AlertPolicy:
    """Logistic model plus threshold. Fires where the predicted risk is at or
    above ``threshold``; the test is carried out on the linear predictor
    against logit(threshold)."""

    model: LogisticModel
    threshold: float
    snooze: bool = True

    def __post_init__(self):
        if not (0.0 < self.threshold < 1.0):
            raise ValueError("threshold must lie in (0, 1)")

    @property
    def logit_threshold(self) -> float:
        return _logit(self.threshold)

    def _z(self, tr: Trajectory) -> np.ndarray:
        return linear_predictor(self.model.weights, self.model.intercept,
                                (tr.position, tr.velocity, tr.acceleration))

    def raw_alerts(self, tr: Trajectory) -> np.ndarray:
        if not tr.has_covariates:
            raise ValueError(f"{tr.patient_id}: model policy needs covariates")
        return self._z(tr) >= self.logit_threshold

    def scores(self, tr: Trajectory) -> np.ndarray:
        return expit(self._z(tr))

    def to_dict(self) -> dict:
        return {"model": self.model.to_dict(), "threshold": self.threshold, "snooze": self.snooze}


@dataclass(frozen=True)
class ScoreThresholdPolicy:
    """Alerts on a precomputed score stream: fires where score >= threshold."""

    threshold: float
    snooze: bool = True

    def __post_init__(self):
        if not (0.0 < self.threshold < 1.0):
            raise ValueError("threshold must lie in (0, 1)")

    def raw_alerts(self, tr: Trajectory) -> np.ndarray:
        k = tr.outcome_index
        if np.isnan(tr.score[:len(tr) if k is None else k]).any():
            raise ValueError(f"{tr.patient_id}: missing scores before the outcome")
        with np.errstate(invalid="ignore"):
            return tr.score >= self.threshold

    def scores(self, tr: Trajectory) -> np.ndarray:
        return tr.score

    def to_dict(self) -> dict:
        return {"threshold": self.threshold, "snooze": self.snooze}


def apply_policy_silent(policy, cohort: Cohort) -> Cohort:
    """Fill in the alerts the policy would have raised; the physics is untouched."""
    if cohort.mode is not Mode.SILENT:
        raise ValueError("virtual alerts are only meaningful on a silent cohort")
    out = []
    for tr in cohort:
        k = tr.outcome_index
        alerts = snooze_alerts(policy.raw_alerts(tr), k, policy.snooze)
        score = np.array(policy.scores(tr), float)
        if isinstance(policy, AlertPolicy) and k is not None:
            score[k:] = np.nan
        out.append(tr.with_alerts(alerts, score))
    return cohort.replace_trajectories(out)
