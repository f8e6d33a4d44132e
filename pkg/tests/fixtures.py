"""Hand-encoded worked examples for the three evaluation strategies."""

from alertsim.core import Cohort, Mode, Trajectory
from alertsim.risk_model import ScoreThresholdPolicy

HIGH, LOW = 0.9, 0.1
THRESHOLD = 0.5


def aggregated_example() -> tuple[Cohort, int]:
    """Eight live patient-timepoints: patient 1 at times 1-5 with an outcome at
    time 6, patient 2 at times 1-3 with none. Lookahead 2 puts the outcome in
    the window of times 4 and 5 only."""
    p1 = Trajectory.from_scores(
        "1", [1, 2, 3, 4, 5, 6], [LOW, LOW, HIGH, LOW, HIGH, LOW],
        outcome=[False] * 5 + [True],
        alert=[False, False, True, False, True, False])
    p2 = Trajectory.from_scores(
        "2", [1, 2, 3], [LOW, LOW, HIGH], outcome=[False] * 3, alert=[False, False, True])
    return Cohort((p1, p2), Mode.SILENT), 2


def fixed_example() -> tuple[Cohort, ScoreThresholdPolicy, int]:
    """Four patients evaluated at time 5: alert/outcome-later pairs
    (1, 0), (1, 1), (0, 0), (0, 1)."""
    def patient(pid, alert_at_5, later_outcome):
        n = 8 if later_outcome else 7
        score = [LOW] * n
        score[5] = HIGH if alert_at_5 else LOW
        outcome = [False] * n
        if later_outcome:
            outcome[7] = True
        return Trajectory.from_scores(pid, list(range(n)), score, outcome)

    trs = (patient("1", True, False), patient("2", True, True), patient("3", False, False),
           patient("4", False, True))
    return Cohort(trs, Mode.SILENT), ScoreThresholdPolicy(THRESHOLD), 5


def first_alert_example() -> Cohort:
    """Four patients: neither, alert only, outcome only, alert then outcome."""
    trs = (
        Trajectory.from_scores("1", [0, 1, 2], [LOW] * 3, [False] * 3),
        Trajectory.from_scores("2", [0, 1, 2], [LOW, HIGH, LOW], [False] * 3,
                               alert=[False, True, False]),
        Trajectory.from_scores("3", [0, 1, 2], [LOW] * 3, [False, False, True]),
        Trajectory.from_scores("4", [0, 1, 2], [HIGH, LOW, LOW], [False, False, True],
                               alert=[True, False, False]),
    )
    return Cohort(trs, Mode.SILENT)
