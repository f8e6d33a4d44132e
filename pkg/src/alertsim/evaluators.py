"""Retrospective evaluation strategies for repeated-prediction alert systems.

All three read a silent cohort: the alerts in it are virtual and had no
effect on the data.

* aggregated time -- every live patient-timepoint is one cell; truth is an
  outcome inside the lookahead window (t, t+lookahead].
* fixed time -- one cell per at-risk patient; the policy is queried only at
  ``t_star`` and truth is a later outcome (optionally inside a window).
* first alert -- one cell per patient; alerts after the first are dropped
  and any outcome after the first alert counts as predicted.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from . import kernels
from .core import Cohort, ConfusionCounts, EvalConfig, Mode, Strategy
from .risk_model import apply_policy_silent


class SnoozeViolationError(ValueError):
    """Alert stream has more than one alert, or an alert at/after the outcome."""


def _require_silent(cohort: Cohort):
    if cohort.mode is not Mode.SILENT:
        raise ValueError("retrospective evaluations need a silent cohort")


def aggregated_time(cohort: Cohort, lookahead: int, threshold: Optional[float] = None
                    ) -> ConfusionCounts:
    config = EvalConfig(Strategy.AGGREGATED_TIME, lookahead=lookahead, threshold=threshold)
    _require_silent(cohort)
    fc = cohort.flat
    tp, fp, fn, tn = kernels.aggregated_counts(fc.time, fc.alert, fc.offsets,
                                               fc.outcome_index, lookahead)
    return ConfusionCounts(tp, fp, fn, tn, Strategy.AGGREGATED_TIME, config=config)


def horizon_of(cohort: Cohort) -> int:
    return int(max(tr.time[-1] for tr in cohort)) + 1 if len(cohort) else 0


def fixed_time(cohort: Cohort, policy, t_star: int, lookahead: Optional[int] = None
               ) -> ConfusionCounts:
    """Patients with an outcome at or before ``t_star``, or with no record at
    ``t_star``, are not at risk and are left out. Earlier virtual alerts are
    ignored: the system is switched on only at ``t_star``."""
    config = EvalConfig(Strategy.FIXED_TIME, lookahead=lookahead, t_star=t_star,
                        threshold=getattr(policy, "threshold", None))
    _require_silent(cohort)
    if not (0 <= t_star < horizon_of(cohort)):
        raise ValueError(f"t_star={t_star} outside the cohort's time range")
    tp = fp = fn = tn = 0
    for tr in cohort:
        i = int(np.searchsorted(tr.time, t_star))
        if i >= len(tr) or tr.time[i] != t_star:
            continue
        ot = tr.outcome_time
        if ot is not None and ot <= t_star:
            continue
        w = bool(policy.raw_alerts(tr)[i])
        y = ot is not None and (lookahead is None or ot <= t_star + lookahead)
        if w and y:
            tp += 1
        elif w:
            fp += 1
        elif y:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fp, fn, tn, Strategy.FIXED_TIME, config=config)


def first_alert(cohort: Cohort, threshold: Optional[float] = None) -> ConfusionCounts:
    config = EvalConfig(Strategy.FIRST_ALERT, threshold=threshold)
    _require_silent(cohort)
    fc = cohort.flat
    tp, fp, fn, tn, bad = kernels.first_alert_counts(fc.alert, fc.offsets, fc.outcome_index)
    if bad >= 0:
        pid = cohort.trajectories[bad].patient_id
        raise SnoozeViolationError(
            f"{pid}: first-alert evaluation needs snoozed alerts (at most one, "
            "strictly before any outcome)"
        )
    return ConfusionCounts(tp, fp, fn, tn, Strategy.FIRST_ALERT, config=config)


def evaluate(cohort: Cohort, policy, config: EvalConfig) -> ConfusionCounts:
    """Apply ``policy`` to a silent cohort and run the configured strategy."""
    if config.strategy is Strategy.FIXED_TIME:
        return fixed_time(cohort, policy, config.t_star, config.lookahead)
    alerted = apply_policy_silent(policy, cohort)
    threshold = getattr(policy, "threshold", None)
    if config.strategy is Strategy.AGGREGATED_TIME:
        return aggregated_time(alerted, config.lookahead, threshold)
    return first_alert(alerted, threshold)
