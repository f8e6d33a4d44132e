import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from alertsim.core import (
    Cohort, ConfusionCounts, EvalConfig, Metrics, Mode, Strategy, Trajectory, Unit,
    confusion_metrics,
)


def _traj(pid="a", n=4, outcome_at=None, alert_at=()):
    outcome = [i == outcome_at for i in range(n)]
    alert = [i in alert_at for i in range(n)]
    return Trajectory.from_scores(pid, list(range(n)), [0.5] * n, outcome, alert)


def test_metrics_from_aggregated_example_counts():
    m = confusion_metrics(ConfusionCounts(1, 2, 1, 4, Strategy.AGGREGATED_TIME))
    assert m.sensitivity == 0.5
    assert m.ppv == pytest.approx(1 / 3)
    assert m.positives == 3


def test_metrics_absent_when_denominator_empty():
    m = confusion_metrics(ConfusionCounts(0, 0, 0, 10, Strategy.FIRST_ALERT))
    assert m.sensitivity is None and m.ppv is None
    assert m.specificity == 1.0
    assert m.positives == 0


def test_metrics_symmetric_counts():
    m = confusion_metrics(ConfusionCounts(5, 5, 5, 5, Strategy.FIXED_TIME))
    assert (m.sensitivity, m.specificity, m.ppv) == (0.5, 0.5, 0.5)


@given(st.tuples(*[st.integers(0, 50)] * 4))
def test_metrics_lie_in_unit_interval(cells):
    m = confusion_metrics(ConfusionCounts(*cells, Strategy.FIRST_ALERT))
    for v in (m.sensitivity, m.specificity, m.ppv):
        assert v is None or 0.0 <= v <= 1.0
    assert m.positives == cells[0] + cells[1]


def test_counts_unit_follows_strategy():
    assert ConfusionCounts(0, 0, 0, 0, Strategy.AGGREGATED_TIME).unit is Unit.PATIENT_TIMEPOINT
    assert ConfusionCounts(0, 0, 0, 0, Strategy.FIRST_ALERT).unit is Unit.PATIENT
    with pytest.raises(ValueError):
        ConfusionCounts(0, 0, 0, 0, Strategy.FIXED_TIME, unit=Unit.PATIENT_TIMEPOINT)


@pytest.mark.parametrize("bad", [-1, 1.5])
def test_counts_reject_non_counts(bad):
    with pytest.raises(ValueError):
        ConfusionCounts(bad, 0, 0, 0, Strategy.FIRST_ALERT)


def test_counts_dict_round_trip():
    cfg = EvalConfig(Strategy.FIXED_TIME, t_star=10, threshold=0.4)
    c = ConfusionCounts(3, 1, 2, 7, Strategy.FIXED_TIME, config=cfg)
    assert ConfusionCounts.from_dict(c.to_dict()) == c
    assert c.threshold == 0.4 and c.total == 13


def test_eval_config_rules():
    with pytest.raises(ValueError, match="lookahead"):
        EvalConfig(Strategy.AGGREGATED_TIME)
    with pytest.raises(ValueError, match="t_star"):
        EvalConfig(Strategy.FIXED_TIME)
    with pytest.raises(ValueError, match="no lookahead"):
        EvalConfig(Strategy.FIRST_ALERT, lookahead=5)
    with pytest.raises(ValueError):
        EvalConfig(Strategy.AGGREGATED_TIME, lookahead=0)
    assert EvalConfig(Strategy.FIXED_TIME, t_star=3).at_risk_rule is not None


def test_trajectory_properties():
    tr = _traj(n=6, outcome_at=4, alert_at=(1, 2))
    assert tr.outcome_index == 4 and tr.outcome_time == 4
    assert tr.first_alert_time == 1
    assert tr.n_live == 4
    assert not tr.has_covariates
    assert [p.t for p in tr.timepoints] == list(range(6))


@pytest.mark.parametrize("kwargs, match", [
    (dict(time=[0, 2, 1]), "increasing"),
    (dict(time=[-1, 0, 1]), "negative"),
    (dict(score=[0.1, 1.2, 0.3]), "score"),
    (dict(outcome=[True, False, True]), "more than one"),
    (dict(outcome=[False, True, False], alert=[False, True, False]), "after the outcome"),
])
def test_trajectory_rejects_invalid(kwargs, match):
    base = dict(time=[0, 1, 2], score=[0.1, 0.2, 0.3], outcome=[False] * 3, alert=[False] * 3)
    base.update(kwargs)
    with pytest.raises(ValueError, match=match):
        Trajectory.from_scores("x", **base)


def test_trajectory_must_freeze_after_outcome():
    with pytest.raises(ValueError, match="changes after"):
        Trajectory("x", [0, 1, 2], [0.0, 1.5, 1.6], [0, 0, 0], [0, 0, 0], [np.nan] * 3,
                   [False] * 3, [False, True, False])


def test_trajectory_arrays_are_read_only():
    tr = _traj()
    with pytest.raises(ValueError):
        tr.alert[0] = True


def test_trajectory_dict_round_trip_keeps_nan():
    tr = _traj(n=5, outcome_at=3, alert_at=(1,))
    back = Trajectory.from_dict(tr.to_dict())
    assert back == tr
    assert math.isnan(back.position[0])


def test_cohort_rejects_duplicate_ids_and_round_trips():
    with pytest.raises(ValueError):
        Cohort((_traj("a"), _traj("a")))
    c = Cohort((_traj("a", outcome_at=2), _traj("b", alert_at=(0,))), Mode.SILENT, 7, "abc")
    assert Cohort.from_dict(c.to_dict()) == c
    assert c.n_outcomes == 1 and c.n_alerts == 1


def test_flat_cohort_offsets():
    c = Cohort((_traj("a", n=3, outcome_at=1), _traj("b", n=2)))
    fc = c.flat
    assert fc.offsets.tolist() == [0, 3, 5]
    assert fc.outcome_index.tolist() == [1, -1]
    assert fc.time.tolist() == [0, 1, 2, 0, 1]


def test_metrics_dict_round_trip():
    m = Metrics(0.5, None, 0.25, 4)
    assert Metrics.from_dict(m.to_dict()) == m
