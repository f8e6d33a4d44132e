"""Slow reference implementations built straight from the definitions.

They walk ``Trajectory.timepoints`` one record at a time and share no code
with the kernels, so agreement between the two is evidence for both.
"""

from __future__ import annotations

import random
from typing import Optional

import numpy as np

from alertsim.core import Cohort, Mode, Trajectory


def _label(w: bool, y: bool) -> str:
    return {(True, True): "tp", (True, False): "fp", (False, True): "fn",
            (False, False): "tn"}[(w, y)]


def _tally(labels) -> tuple[int, int, int, int]:
    labels = list(labels)
    return tuple(labels.count(k) for k in ("tp", "fp", "fn", "tn"))


def aggregated(cohort: Cohort, lookahead: int):
    labels = []
    for tr in cohort:
        pts = tr.timepoints
        outcome_t = next((p.t for p in pts if p.outcome), None)
        for p in pts:
            if outcome_t is not None and p.t >= outcome_t:
                break
            y = outcome_t is not None and p.t < outcome_t <= p.t + lookahead
            labels.append(_label(p.alert, y))
    return _tally(labels)


def fixed(cohort: Cohort, alert_at, t_star: int, lookahead: Optional[int] = None):
    """``alert_at(tr, i)`` gives the raw policy decision at record i."""
    labels = []
    for tr in cohort:
        pts = tr.timepoints
        outcome_t = next((p.t for p in pts if p.outcome), None)
        idx = [i for i, p in enumerate(pts) if p.t == t_star]
        if not idx or (outcome_t is not None and outcome_t <= t_star):
            continue
        y = outcome_t is not None and (lookahead is None or outcome_t <= t_star + lookahead)
        labels.append(_label(bool(alert_at(tr, idx[0])), y))
    return _tally(labels)


def first(cohort: Cohort):
    """Find the first alert, then look for an outcome after it."""
    labels = []
    for tr in cohort:
        pts = tr.timepoints
        first_alert = next((p.t for p in pts if p.alert), None)
        outcome_t = next((p.t for p in pts if p.outcome), None)
        if first_alert is None:
            labels.append("fn" if outcome_t is not None else "tn")
        else:
            labels.append("tp" if outcome_t is not None and outcome_t > first_alert else "fp")
    return _tally(labels)


def random_cohort(rng: random.Random, max_patients: int = 10, max_steps: int = 10,
                  snoozed: bool = False, gaps: bool = False) -> Cohort:
    """Small score-only cohort with random alerts and at most one outcome each."""
    trs = []
    for i in range(rng.randint(1, max_patients)):
        n = rng.randint(1, max_steps)
        if gaps:
            time = sorted(rng.sample(range(2 * max_steps), n))
        else:
            time = list(range(n))
        k = rng.randrange(n) if rng.random() < 0.5 else None
        outcome = [j == k for j in range(n)]
        live = n if k is None else k
        alert = [j < live and rng.random() < 0.3 for j in range(n)]
        if snoozed:
            hits = [j for j, a in enumerate(alert) if a]
            alert = [j == hits[0] if hits else False for j in range(n)]
        score = [rng.random() for _ in range(n)]
        trs.append(Trajectory.from_scores(f"r{i}", time, score, outcome, alert))
    return Cohort(tuple(trs), Mode.SILENT)


def window_labels(tr: Trajectory, lookahead: int) -> list[Optional[bool]]:
    """Per record: True/False label, or None if the record is excluded."""
    out = []
    outcome_t = next((p.t for p in tr.timepoints if p.outcome), None)
    for p in tr.timepoints:
        if outcome_t is not None and p.t >= outcome_t:
            out.append(None)
        else:
            out.append(outcome_t is not None and outcome_t - p.t <= lookahead)
    return out


def euler(force: list[float]) -> list[tuple[float, float, float]]:
    """State (x, v, previous a) before each step under the given forces."""
    x = v = a = 0.0
    states = []
    for f in force:
        states.append((x, v, a))
        a = f
        v = v + a
        x = x + v
    return states


def central_difference(fn, theta: np.ndarray, h: float = 1e-6) -> np.ndarray:
    g = np.empty_like(theta)
    for j in range(len(theta)):
        e = np.zeros_like(theta)
        e[j] = h
        g[j] = (fn(theta + e) - fn(theta - e)) / (2 * h)
    return g
