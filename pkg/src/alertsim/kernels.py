"""Hot loops: encounter dynamics, aggregated-time tallies, first-alert tallies.

Each kernel has a scalar-loop form compiled with ``numba.njit`` and a numpy
form vectorised across patients. Both must agree exactly on every integer and
boolean output; alert decisions compare the linear predictor against the
threshold's logit so no transcendental function sits on the decision path.
"""

import math

import numpy as np

from . import _backend

KIND_NONE = 0
KIND_LEFTWARD = 1
KIND_PERFECT = 2


def _maybe_njit(fn):
    if not _backend.HAVE_NUMBA:
        return None
    import numba

    return numba.njit(cache=True, nogil=True)(fn)


# --------------------------------------------------------------------------
# encounter simulation


def _simulate_loop(wind, propulsion, boundary, dt, policy_on, weights, intercept,
                   logit_threshold, snooze, kind, magnitude):
    n, horizon = wind.shape
    nf = weights.shape[0]
    pos = np.empty((n, horizon))
    vel = np.empty((n, horizon))
    acc = np.empty((n, horizon))
    score = np.full((n, horizon), np.nan)
    alert = np.zeros((n, horizon), dtype=np.bool_)
    outcome_idx = np.full(n, -1, dtype=np.int64)
    feats = np.empty(3)
    for p in range(n):
        x = 0.0
        v = 0.0
        a = 0.0
        alerted = False
        immune = False
        done = False
        for t in range(horizon):
            pos[p, t] = x
            vel[p, t] = v
            acc[p, t] = a
            if done:
                continue
            if x > boundary and not immune:
                outcome_idx[p] = t
                done = True
                continue
            extra = 0.0
            if policy_on:
                feats[0] = x
                feats[1] = v
                feats[2] = a
                z = intercept
                for j in range(nf):
                    z = z + weights[j] * feats[j]
                if z >= 0.0:
                    score[p, t] = 1.0 / (1.0 + math.exp(-z))
                else:
                    ez = math.exp(z)
                    score[p, t] = ez / (1.0 + ez)
                if (not snooze or not alerted) and z >= logit_threshold:
                    alert[p, t] = True
                    alerted = True
                    if kind == 1:
                        extra = -magnitude
                    elif kind == 2:
                        immune = True
            a = propulsion + wind[p, t] + extra
            v = v + a * dt
            x = x + v * dt
    return pos, vel, acc, score, alert, outcome_idx


_simulate_numba = _maybe_njit(_simulate_loop)


def linear_predictor(weights, intercept, columns):
    """intercept + sum_j w_j * column_j, accumulated left to right."""
    z = np.full(np.shape(columns[0]), float(intercept))
    for w, col in zip(weights, columns):
        z = z + w * col
    return z


def _simulate_numpy(wind, propulsion, boundary, dt, policy_on, weights, intercept,
                    logit_threshold, snooze, kind, magnitude):
    n, horizon = wind.shape
    pos = np.empty((n, horizon))
    vel = np.empty((n, horizon))
    acc = np.empty((n, horizon))
    score = np.full((n, horizon), np.nan)
    alert = np.zeros((n, horizon), dtype=bool)
    outcome_idx = np.full(n, -1, dtype=np.int64)
    x = np.zeros(n)
    v = np.zeros(n)
    a = np.zeros(n)
    alerted = np.zeros(n, bool)
    immune = np.zeros(n, bool)
    done = np.zeros(n, bool)
    for t in range(horizon):
        pos[:, t] = x
        vel[:, t] = v
        acc[:, t] = a
        hit = ~done & (x > boundary) & ~immune
        outcome_idx[hit] = t
        done |= hit
        live = ~done
        extra = np.zeros(n)
        if policy_on:
            z = linear_predictor(weights, intercept, (x, v, a))
            with np.errstate(over="ignore"):
                sc = np.where(z >= 0.0, 1.0 / (1.0 + np.exp(-np.abs(z))),
                              np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))
            score[live, t] = sc[live]
            fire = live & (z >= logit_threshold)
            if snooze:
                fire &= ~alerted
            alert[:, t] = fire
            alerted |= fire
            if kind == KIND_LEFTWARD:
                extra[fire] = -magnitude
            elif kind == KIND_PERFECT:
                immune |= fire
        # frozen patients keep their state
        a = np.where(live, propulsion + wind[:, t] + extra, a)
        v = np.where(live, v + a * dt, v)
        x = np.where(live, x + v * dt, x)
    return pos, vel, acc, score, alert, outcome_idx


def simulate(wind, propulsion, boundary, dt, weights, intercept, logit_threshold,
             snooze, kind, magnitude, policy_on):
    """Run ``n`` encounters given their (n, horizon) force noise."""
    args = (
        np.ascontiguousarray(wind, dtype=np.float64),
        float(propulsion),
        float(boundary),
        float(dt),
        bool(policy_on),
        np.ascontiguousarray(weights, dtype=np.float64),
        float(intercept),
        float(logit_threshold),
        bool(snooze),
        int(kind),
        float(magnitude),
    )
    if _backend.get_backend() == "numba":
        return _simulate_numba(*args)
    return _simulate_numpy(*args)


# --------------------------------------------------------------------------
# aggregated-time tallies


def _aggregated_loop(time, alert, offsets, outcome_index, lookahead):
    tp = 0
    fp = 0
    fn = 0
    tn = 0
    for p in range(offsets.shape[0] - 1):
        s = offsets[p]
        e = offsets[p + 1]
        k = outcome_index[p]
        end = e
        ot = 0
        if k >= 0:
            end = s + k
            ot = time[s + k]
        for i in range(s, end):
            truth = k >= 0 and ot - time[i] <= lookahead
            if alert[i]:
                if truth:
                    tp += 1
                else:
                    fp += 1
            elif truth:
                fn += 1
            else:
                tn += 1
    return tp, fp, fn, tn


_aggregated_numba = _maybe_njit(_aggregated_loop)


def _aggregated_numpy(time, alert, offsets, outcome_index, lookahead):
    n = len(offsets) - 1
    if n == 0:
        return 0, 0, 0, 0
    pid = np.repeat(np.arange(n), np.diff(offsets))
    local = np.arange(len(time)) - offsets[:-1][pid]
    k = outcome_index[pid]
    live = (k < 0) | (local < k)
    ot = time[offsets[:-1] + np.maximum(outcome_index, 0)][pid]
    truth = (k >= 0) & (ot - time <= lookahead)
    w = alert[live]
    y = truth[live]
    return int(np.sum(w & y)), int(np.sum(w & ~y)), int(np.sum(~w & y)), int(np.sum(~w & ~y))


def aggregated_counts(time, alert, offsets, outcome_index, lookahead):
    args = (
        np.ascontiguousarray(time, dtype=np.int64),
        np.ascontiguousarray(alert, dtype=np.bool_),
        np.ascontiguousarray(offsets, dtype=np.int64),
        np.ascontiguousarray(outcome_index, dtype=np.int64),
        int(lookahead),
    )
    if _backend.get_backend() == "numba":
        return tuple(int(c) for c in _aggregated_numba(*args))
    return _aggregated_numpy(*args)


# --------------------------------------------------------------------------
# first-alert tallies


def _first_alert_loop(alert, offsets, outcome_index):
    """Returns (tp, fp, fn, tn, bad) where bad is the first patient whose alert
    stream breaks snooze semantics, or -1."""
    tp = 0
    fp = 0
    fn = 0
    tn = 0
    for p in range(offsets.shape[0] - 1):
        s = offsets[p]
        e = offsets[p + 1]
        first = -1
        count = 0
        for i in range(s, e):
            if alert[i]:
                count += 1
                if first < 0:
                    first = i - s
        k = outcome_index[p]
        if count > 1 or (first >= 0 and k >= 0 and first >= k):
            return tp, fp, fn, tn, p
        if first >= 0:
            if k >= 0:
                tp += 1
            else:
                fp += 1
        elif k >= 0:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn, -1


_first_alert_numba = _maybe_njit(_first_alert_loop)


def _first_alert_numpy(alert, offsets, outcome_index):
    n = len(offsets) - 1
    if n == 0:
        return 0, 0, 0, 0, -1
    lengths = np.diff(offsets)
    pid = np.repeat(np.arange(n), lengths)
    local = np.arange(len(alert)) - offsets[:-1][pid]
    count = np.bincount(pid, weights=alert, minlength=n).astype(np.int64)
    first = np.full(n, np.iinfo(np.int64).max)
    np.minimum.at(first, pid[alert], local[alert])
    has = count > 0
    k = outcome_index
    bad = (count > 1) | (has & (k >= 0) & (first >= k))
    stop = -1
    if bad.any():
        stop = int(np.flatnonzero(bad)[0])
        has, k = has[:stop], k[:stop]
    y = k >= 0
    return (int(np.sum(has & y)), int(np.sum(has & ~y)), int(np.sum(~has & y)),
            int(np.sum(~has & ~y)), stop)


def first_alert_counts(alert, offsets, outcome_index):
    args = (
        np.ascontiguousarray(alert, dtype=np.bool_),
        np.ascontiguousarray(offsets, dtype=np.int64),
        np.ascontiguousarray(outcome_index, dtype=np.int64),
    )
    if _backend.get_backend() == "numba":
        return tuple(int(c) for c in _first_alert_numba(*args))
    return _first_alert_numpy(*args)
