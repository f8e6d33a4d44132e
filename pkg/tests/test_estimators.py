import pytest
from hypothesis import given, strategies as st

from alertsim.core import ConfusionCounts, Strategy
from alertsim.estimators import (
    AggregatedTimeError, model_comparison, outcome_estimate, prevented_upper_bound,
    rho_sensitivity, workload_estimate,
)
from alertsim.evaluators import first_alert
import fixtures


def test_half_effective_intervention_prevents_half_the_true_positives():
    assert 300 - outcome_estimate(300, 100, 0.5) == 50


def test_no_effect_and_perfect_effect():
    assert outcome_estimate(120, 40, 1.0) == 120
    assert outcome_estimate(40, 40, 0.0) == 0


def test_outcome_estimate_rejects_impossible_inputs():
    with pytest.raises(ValueError):
        outcome_estimate(10, 11, 0.5)
    with pytest.raises(ValueError):
        outcome_estimate(10, 5, 1.5)


def test_model_comparison_worked_numbers():
    # 100 vs 80 true positives at a 50% risk ratio: the first averts 10 more
    assert model_comparison(100, 80, 0.5) == -10
    assert model_comparison(55, 55, 0.3) == 0
    assert model_comparison(100, 20, 1.0) == 0


@given(st.integers(0, 500), st.integers(0, 500), st.floats(0, 1))
def test_model_comparison_is_difference_of_outcome_estimates(tp_f, tp_g, rho):
    n = max(tp_f, tp_g)
    diff = outcome_estimate(n, tp_f, rho) - outcome_estimate(n, tp_g, rho)
    assert model_comparison(tp_f, tp_g, rho) == pytest.approx(diff, abs=1e-9)


def test_first_alert_example_bounds():
    counts = first_alert(fixtures.first_alert_example())
    assert prevented_upper_bound(counts) == 1
    assert workload_estimate(counts) == 2
    assert rho_sensitivity(counts, [0.25]) == [(0.25, 0.75)]


def test_zero_counts():
    c = ConfusionCounts(0, 0, 3, 5, Strategy.FIRST_ALERT)
    assert prevented_upper_bound(c) == 0
    assert workload_estimate(c) == 0


def test_sensitivity_table_is_linear_in_rho():
    c = ConfusionCounts(100, 20, 30, 50, Strategy.FIRST_ALERT)
    assert rho_sensitivity(c, [0, 0.5, 1]) == [(0.0, 100.0), (0.5, 50.0), (1.0, 0.0)]
    assert rho_sensitivity(c, [0])[0][1] == prevented_upper_bound(c)
    with pytest.raises(ValueError):
        rho_sensitivity(c, [1.1])


def test_aggregated_counts_are_refused_unless_forced():
    c = ConfusionCounts(5, 5, 5, 5, Strategy.AGGREGATED_TIME)
    with pytest.raises(AggregatedTimeError, match="not useful"):
        prevented_upper_bound(c)
    with pytest.raises(AggregatedTimeError):
        workload_estimate(c)
    assert prevented_upper_bound(c, allow_aggregated=True) == 5
    assert workload_estimate(c, allow_aggregated=True) == 10


def test_fixed_time_counts_are_accepted():
    c = ConfusionCounts(4, 2, 1, 9, Strategy.FIXED_TIME)
    assert prevented_upper_bound(c) == 4 and workload_estimate(c) == 6


def test_sensitivity_table_needs_first_alert_counts():
    with pytest.raises(ValueError):
        rho_sensitivity(ConfusionCounts(1, 1, 1, 1, Strategy.FIXED_TIME), [0.5])
