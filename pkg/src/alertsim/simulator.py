"""Point-mass patient dynamics with optional alert-triggered interventions.

Each patient is a unit mass on a line, starting at rest at the origin. Every
step it feels a constant rightward propulsion plus a Gaussian wind gust; an
outcome occurs once its position exceeds ``outcome_boundary``, after which the
trajectory is frozen.

The gust sequence of a patient depends only on its seed, never on the policy
or intervention, so a silent run and an active run of the same seed share
their noise (common random numbers) and coincide until the first alert.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .core import Cohort, Mode, Trajectory
from .risk_model import AlertPolicy


@dataclass(frozen=True)
class DynamicsConfig:
    propulsion: float = 0.005
    wind_sd: float = 0.10
    outcome_boundary: float = 1.0
    horizon: int = 20
    dt: float = 1.0

    def __post_init__(self):
        if not (self.wind_sd >= 0):
            raise ValueError("wind_sd must be >= 0")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValueError("horizon must be a positive integer")
        if not (self.outcome_boundary > 0):
            raise ValueError("outcome_boundary must be > 0")
        if self.dt != 1.0:
            raise ValueError("dt is fixed at 1.0")
        if not math.isfinite(self.propulsion):
            raise ValueError("propulsion must be finite")


class InterventionKind(str, Enum):
    NONE = "none"
    LEFTWARD_FORCE = "force"
    PERFECT = "perfect"


_KIND_CODE = {
    InterventionKind.NONE: kernels.KIND_NONE,
    InterventionKind.LEFTWARD_FORCE: kernels.KIND_LEFTWARD,
    InterventionKind.PERFECT: kernels.KIND_PERFECT,
}


@dataclass(frozen=True)
class InterventionSpec:
    """``PERFECT`` makes an alerted patient immune to the outcome from the
    alert onward; ``LEFTWARD_FORCE`` subtracts ``magnitude`` from the force of
    the alert step only."""

    kind: InterventionKind = InterventionKind.NONE
    magnitude: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "kind", InterventionKind(self.kind))
        if self.kind is InterventionKind.LEFTWARD_FORCE and not (self.magnitude > 0):
            raise ValueError("leftward force magnitude must be > 0")


NO_INTERVENTION = InterventionSpec()


def step(state: tuple[float, float], applied_force: float, dt: float = 1.0):
    """One semi-implicit Euler step. Returns (position, velocity, acceleration)."""
    position, velocity = state
    if not all(math.isfinite(v) for v in (position, velocity, applied_force)):
        raise ValueError("step requires finite state and force")
    acceleration = applied_force
    velocity = velocity + acceleration * dt
    position = position + velocity * dt
    return position, velocity, acceleration


def mix(base_seed: int, index: int, stream: int | None = None) -> int:
    """Patient seed for ``index`` under ``base_seed``.

    Hashes ``(base_seed, [stream,] index)`` with numpy's SeedSequence and takes
    the first 64-bit word. ``stream`` separates unpaired trial arms.
    """
    key = (int(index),) if stream is None else (int(stream), int(index))
    ss = np.random.SeedSequence(int(base_seed), spawn_key=key)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def wind(patient_seed: int, horizon: int, sd: float = 1.0) -> np.ndarray:
    """Gusts for steps ``0..horizon-1``; entry t depends only on (seed, t).

    A Philox stream keyed by the seed is read in order, so any prefix of a
    longer draw equals the shorter draw.
    """
    gen = np.random.Generator(np.random.Philox(key=int(patient_seed)))
    return sd * gen.standard_normal(int(horizon))


def wind_matrix(seeds: Sequence[int], horizon: int, sd: float) -> np.ndarray:
    out = np.empty((len(seeds), horizon))
    for i, s in enumerate(seeds):
        out[i] = wind(s, horizon, sd)
    return out


@dataclass(frozen=True)
class SimArrays:
    """Raw kernel output for a batch of encounters, indexed [patient, t]."""

    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    score: np.ndarray
    alert: np.ndarray
    outcome_index: np.ndarray

    @property
    def n_outcomes(self) -> int:
        return int(np.sum(self.outcome_index >= 0))

    @property
    def n_alerts(self) -> int:
        return int(self.alert.sum())


def _policy_params(policy):
    if policy is None:
        return np.zeros(3), 0.0, 0.0, True, False
    if not isinstance(policy, AlertPolicy):
        raise TypeError("only model-backed AlertPolicy objects can run live in the simulator")
    if len(policy.model.weights) != 3:
        raise ValueError("simulator covariates are (position, velocity, acceleration)")
    return (np.asarray(policy.model.weights, float), policy.model.intercept,
            policy.logit_threshold, policy.snooze, True)


def simulate_arrays(seeds: Sequence[int], dynamics: DynamicsConfig, policy=None,
                    intervention: InterventionSpec = NO_INTERVENTION) -> SimArrays:
    weights, intercept, logit_thr, snooze, on = _policy_params(policy)
    gusts = wind_matrix(seeds, dynamics.horizon, dynamics.wind_sd)
    pos, vel, acc, score, alert, oi = kernels.simulate(
        gusts, dynamics.propulsion, dynamics.outcome_boundary, dynamics.dt,
        weights, intercept, logit_thr, snooze, _KIND_CODE[intervention.kind],
        intervention.magnitude, on,
    )
    return SimArrays(pos, vel, acc, score, alert, oi)


def _trajectories(ids: Sequence[str], sim: SimArrays) -> list[Trajectory]:
    horizon = sim.position.shape[1]
    time = np.arange(horizon)
    out = []
    for i, pid in enumerate(ids):
        outcome = np.zeros(horizon, bool)
        if sim.outcome_index[i] >= 0:
            outcome[sim.outcome_index[i]] = True
        out.append(Trajectory(
            patient_id=pid, time=time, position=sim.position[i], velocity=sim.velocity[i],
            acceleration=sim.acceleration[i], score=sim.score[i], alert=sim.alert[i],
            outcome=outcome,
        ))
    return out


def simulate_encounter(patient_seed: int, dynamics: DynamicsConfig, policy=None,
                       intervention: InterventionSpec = NO_INTERVENTION,
                       patient_id: str | None = None) -> Trajectory:
    sim = simulate_arrays([patient_seed], dynamics, policy, intervention)
    pid = patient_id if patient_id is not None else f"seed-{int(patient_seed)}"
    return _trajectories([pid], sim)[0]


def is_active(policy, intervention: InterventionSpec) -> bool:
    return policy is not None and intervention.kind is not InterventionKind.NONE


def config_digest(n: int, base_seed: int, dynamics: DynamicsConfig, policy,
                  intervention: InterventionSpec, stream: int | None = None) -> str:
    payload = {
        "n": int(n),
        "base_seed": int(base_seed),
        "stream": stream,
        "dynamics": asdict(dynamics),
        "intervention": {"kind": intervention.kind.value, "magnitude": intervention.magnitude},
        "policy": None if policy is None else policy.to_dict(),
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def patient_seeds(n: int, base_seed: int, stream: int | None = None) -> list[int]:
    return [mix(base_seed, i, stream) for i in range(n)]


def generate_cohort(n: int, base_seed: int, dynamics: Optional[DynamicsConfig] = None,
                    policy=None, intervention: InterventionSpec = NO_INTERVENTION,
                    stream: int | None = None) -> Cohort:
    """Simulate ``n`` patients; patient i uses seed ``mix(base_seed, i)``.

    The cohort is ``Active`` only when a policy is live and its alerts trigger
    a physical intervention.
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    dynamics = dynamics or DynamicsConfig()
    seeds = patient_seeds(n, base_seed, stream)
    sim = simulate_arrays(seeds, dynamics, policy, intervention)
    width = len(str(n - 1))
    ids = [f"p{i:0{width}d}" for i in range(n)]
    mode = Mode.ACTIVE if is_active(policy, intervention) else Mode.SILENT
    return Cohort(
        trajectories=tuple(_trajectories(ids, sim)),
        mode=mode,
        base_seed=int(base_seed),
        config_digest=config_digest(n, base_seed, dynamics, policy, intervention, stream),
    )


def calibrate(propulsions: Sequence[float], wind_sds: Sequence[float], n: int = 500,
              base_seed: int = 0, horizon: int = 20) -> list[dict]:
    """Pilot runs: silent outcome rate for each (propulsion, wind_sd) pair."""
    rows = []
    seeds = patient_seeds(n, base_seed)
    for c in propulsions:
        for sd in wind_sds:
            dyn = DynamicsConfig(propulsion=c, wind_sd=sd, horizon=horizon)
            sim = simulate_arrays(seeds, dyn)
            rows.append({"propulsion": c, "wind_sd": sd, "outcome_rate": sim.n_outcomes / n})
    return rows
