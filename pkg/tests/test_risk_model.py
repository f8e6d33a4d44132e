import numpy as np
import pytest
from hypothesis import given, strategies as st

from alertsim.core import Cohort, Mode, Trajectory
from alertsim.risk_model import (
    AlertPolicy, ConvergenceError, FitConfig, LabeledExample, LogisticModel, ScoreThresholdPolicy,
    apply_policy_silent, build_labels, fit_logistic, fit_logistic_arrays, gradient, label_arrays,
    objective, predict, snooze_alerts,
)
from alertsim.simulator import generate_cohort
import oracles


def _covariate_traj(pid, n=20, outcome_at=None):
    x = np.linspace(0.0, 0.5, n)
    if outcome_at is not None:
        x[outcome_at:] = x[outcome_at]
    z = np.zeros(n)
    outcome = [i == outcome_at for i in range(n)]
    return Trajectory(pid, np.arange(n), x, z, z, np.full(n, np.nan), np.zeros(n, bool), outcome)


def test_window_labels_around_outcome_at_seven():
    tr = _covariate_traj("a", outcome_at=7)
    X, y = label_arrays(Cohort((tr,)), lookahead=5)
    assert len(y) == 7
    assert y.tolist() == [False, False, True, True, True, True, True]
    assert oracles.window_labels(tr, 5)[:7] == y.tolist()
    assert all(lab is None for lab in oracles.window_labels(tr, 5)[7:])


def test_window_labels_without_outcome_are_all_false():
    _, y = label_arrays(Cohort((_covariate_traj("a"),)), lookahead=5)
    assert len(y) == 20 and not y.any()


def test_window_covering_horizon_labels_everything_true():
    _, y = label_arrays(Cohort((_covariate_traj("a", outcome_at=12),)), lookahead=20)
    assert len(y) == 12 and y.all()


def test_labels_match_oracle_on_simulated_cohort():
    c = generate_cohort(60, 2)
    X, y = label_arrays(c, 5)
    expected = [lab for tr in c for lab in oracles.window_labels(tr, 5) if lab is not None]
    assert y.tolist() == expected
    assert X.shape == (len(expected), 3)
    assert len(build_labels(c, 5)) == len(expected)


def test_labels_reject_active_cohorts_and_bad_lookahead():
    c = generate_cohort(3, 0)
    with pytest.raises(ValueError, match="silent"):
        label_arrays(Cohort(c.trajectories, Mode.ACTIVE), 5)
    with pytest.raises(ValueError):
        label_arrays(c, 0)


def test_labels_need_covariates():
    tr = Trajectory.from_scores("s", [0, 1], [0.1, 0.2], [False, False])
    with pytest.raises(ValueError, match="covariates"):
        label_arrays(Cohort((tr,)), 5)


@pytest.mark.parametrize("seed", range(10))
def test_gradient_matches_central_differences(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(40, 3))
    y = (rng.random(40) < 0.4).astype(float)
    theta = rng.normal(size=4)
    analytic = gradient(theta, X, y, 1e-3)
    numeric = oracles.central_difference(lambda t: objective(t, X, y, 1e-3), theta)
    rel = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-12)
    assert rel < 1e-5


def test_symmetric_pair_has_zero_intercept():
    ex = [LabeledExample((-1.0,), False), LabeledExample((1.0,), True)]
    m = fit_logistic(ex, FitConfig(l2_penalty=0.1), feature_names=("x",))
    assert m.weights[0] > 0
    assert abs(m.intercept) < 1e-3


def test_single_class_with_penalty_gives_negative_intercept():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(50, 3))
    X -= X.mean(axis=0)  # centred, so zero weights are exactly stationary
    m = fit_logistic_arrays(X, np.zeros(50), config=FitConfig(l2_penalty=0.1))
    assert np.allclose(m.weights, 0.0, atol=1e-6)
    assert m.intercept < 0


def test_single_class_without_penalty_is_rejected():
    with pytest.raises(ValueError):
        fit_logistic_arrays(np.zeros((4, 3)), np.zeros(4), config=FitConfig(l2_penalty=0.0))


def test_non_convergence_reports_gradient_norm():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(100, 3))
    y = (X[:, 0] > 0).astype(float)
    with pytest.raises(ConvergenceError) as info:
        fit_logistic_arrays(X, y, config=FitConfig(max_iters=2))
    assert info.value.grad_norm > 0 and "gradient norm" in str(info.value)


def test_fit_reaches_stationary_point_and_is_deterministic():
    c = generate_cohort(200, 11)
    X, y = label_arrays(c, 5)
    m1 = fit_logistic_arrays(X, y, 5)
    m2 = fit_logistic_arrays(X, y, 5)
    assert m1 == m2
    theta = np.array([m1.intercept, *m1.weights])
    assert np.linalg.norm(gradient(theta, X, y.astype(float), 1e-4)) <= 1e-8
    assert m1.weights[0] > 0  # further right means riskier


def test_predict_basics():
    assert predict(LogisticModel((0.0, 0.0, 0.0), 0.0, 1), [1.0, 2.0, 3.0]) == 0.5
    assert predict(LogisticModel((0.0, 0.0, 0.0), 20.0, 1), [0.0, 0.0, 0.0]) > 0.999
    with pytest.raises(ValueError):
        predict(LogisticModel((1.0, 1.0, 1.0), 0.0, 1), [1.0, 2.0])


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.integers(0, 2), st.floats(0.01, 3))
def test_predict_monotone_in_positively_weighted_covariate(x, j, bump):
    m = LogisticModel((0.7, 1.3, 0.2), -0.5, 1)
    up = list(x)
    up[j] += bump
    assert predict(m, up) >= predict(m, x)


def test_snooze_keeps_first_and_drops_post_outcome():
    raw = np.array([False, True, True, False, True])
    assert snooze_alerts(raw, None, True).tolist() == [False, True, False, False, False]
    assert snooze_alerts(raw, 2, False).tolist() == [False, True, False, False, False]
    assert snooze_alerts(raw, None, False).tolist() == raw.tolist()


def test_apply_policy_silent_snooze_properties():
    c = generate_cohort(100, 5)
    m = LogisticModel((3.0, 8.0, 2.0), -2.0, 5)
    snoozed = apply_policy_silent(AlertPolicy(m, 0.3), c)
    loud = apply_policy_silent(AlertPolicy(m, 0.3, snooze=False), c)
    assert all(tr.alert.sum() <= 1 for tr in snoozed)
    assert [t.first_alert_time for t in snoozed] == [t.first_alert_time for t in loud]
    assert loud.n_alerts >= snoozed.n_alerts
    for s, orig in zip(snoozed, c):
        np.testing.assert_array_equal(s.position, orig.position)


def test_near_one_threshold_never_alerts():
    c = generate_cohort(50, 5)
    m = LogisticModel((0.0, 0.0, 0.0), 2.0, 5)  # p = 0.88 everywhere
    assert apply_policy_silent(AlertPolicy(m, 1 - 1e-9), c).n_alerts == 0


def test_threshold_must_be_open_unit_interval():
    m = LogisticModel((0.0, 0.0, 0.0), 0.0, 5)
    for bad in (0.0, 1.0):
        with pytest.raises(ValueError):
            AlertPolicy(m, bad)
        with pytest.raises(ValueError):
            ScoreThresholdPolicy(bad)


def test_score_threshold_fires_at_equality():
    tr = Trajectory.from_scores("s", [0, 1, 2], [0.005, 0.01, 0.02], [False] * 3)
    assert ScoreThresholdPolicy(0.01).raw_alerts(tr).tolist() == [False, True, True]


def test_model_dict_round_trip():
    m = LogisticModel((1.0, -2.0, 0.5), 0.25, 5)
    assert LogisticModel.from_dict(m.to_dict()) == m
