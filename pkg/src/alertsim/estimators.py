"""Potential-outcomes estimators on retrospective confusion counts.

Retrospective data only ever show outcomes under no intervention. Given a
constant risk ratio ``rho`` (outcome probability with the intervention over
without it), the expected outcome count under a model-triggered intervention
is ``n_outcomes - (1 - rho) * tp``. With ``rho = 0`` this gives the upper bound
on preventable outcomes, ``tp``.

Aggregated-time counts are refused: once a real alert fires the patient's
later data change, so per-timepoint tallies estimate neither outcomes nor
workload of a live system. Pass ``allow_aggregated=True`` to compute them
anyway for demonstration.
"""

from __future__ import annotations

from typing import Sequence

from .core import ConfusionCounts, Strategy

AGGREGATED_OBJECTION = (
    "aggregated-time counts are not useful in estimating any meaningful quantity: "
    "virtual alerts never acted on the retrospective data, so the timepoints after "
    "them are not what a live system would see"
)


class AggregatedTimeError(ValueError):
    pass


def check_rho(rho: float) -> float:
    rho = float(rho)
    if not (0.0 <= rho <= 1.0):
        raise ValueError(f"risk ratio must lie in [0, 1], got {rho}")
    return rho


def _refuse_aggregated(counts: ConfusionCounts, allow_aggregated: bool):
    if counts.strategy is Strategy.AGGREGATED_TIME and not allow_aggregated:
        raise AggregatedTimeError(AGGREGATED_OBJECTION)


def outcome_estimate(n_outcomes: int, tp: int, rho: float) -> float:
    """Expected outcomes among the same patients with the model running."""
    rho = check_rho(rho)
    if tp > n_outcomes:
        raise ValueError("true positives cannot exceed observed outcomes")
    return n_outcomes - (1.0 - rho) * tp


def prevented_upper_bound(counts: ConfusionCounts, allow_aggregated: bool = False) -> int:
    """Most outcomes an alert-triggered intervention could avert.

    Fixed time: system switched on only at ``t_star``. First alert: running
    continuously until the first alert or outcome.
    """
    _refuse_aggregated(counts, allow_aggregated)
    return counts.tp


def model_comparison(tp_f: int, tp_g: int, rho: float) -> float:
    """Expected outcomes with f minus outcomes with g; negative favours f."""
    rho = float(rho)
    return (rho - 1.0) * (tp_f - tp_g)


def workload_estimate(counts: ConfusionCounts, allow_aggregated: bool = False) -> int:
    """Alerts a live system would raise: at ``t_star`` only (fixed time), or
    patients ever alerted when later alerts are snoozed (first alert)."""
    _refuse_aggregated(counts, allow_aggregated)
    return counts.positives


def rho_sensitivity(counts: ConfusionCounts, rho_grid: Sequence[float]
                    ) -> list[tuple[float, float]]:
    if counts.strategy is not Strategy.FIRST_ALERT:
        raise ValueError("risk-ratio sensitivity tables are defined for first-alert counts")
    return [(check_rho(r), (1.0 - check_rho(r)) * counts.tp) for r in rho_grid]
