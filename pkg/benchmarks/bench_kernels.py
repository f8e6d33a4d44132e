"""Time the numba kernels against the numpy fallbacks on identical inputs.

    python benchmarks/bench_kernels.py [--patients 20000] [--repeats 5]

The numba timings exclude the first (compiling) call.
"""

import argparse
import time

import numpy as np

from alertsim import _backend, kernels
from alertsim.risk_model import _logit


def _inputs(n, horizon, seed):
    rng = np.random.default_rng(seed)
    wind = 0.1 * rng.standard_normal((n, horizon))
    weights = np.array([3.0, 8.0, 2.0])
    return wind, weights


def _best(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def run(n, horizon, repeats, seed=0):
    wind, weights = _inputs(n, horizon, seed)

    def sim():
        return kernels.simulate(wind, 0.005, 1.0, 1.0, weights, -2.0, _logit(0.4), True,
                                kernels.KIND_LEFTWARD, 0.2, True)

    rows = []
    results = {}
    for backend in _backend.BACKENDS:
        if backend == "numba" and not _backend.HAVE_NUMBA:
            continue
        with _backend.use_backend(backend):
            sim()  # warm-up / compile
            t_sim, out = _best(sim, repeats)
            pos, vel, acc, score, alert, oi = out
            offsets = np.arange(0, (n + 1) * horizon, horizon, dtype=np.int64)
            time_grid = np.tile(np.arange(horizon), n)
            flat_alert = alert.reshape(-1)
            kernels.aggregated_counts(time_grid, flat_alert, offsets, oi, 5)
            t_agg, agg = _best(lambda: kernels.aggregated_counts(time_grid, flat_alert, offsets,
                                                                 oi, 5), repeats)
            kernels.first_alert_counts(flat_alert, offsets, oi)
            t_fa, fa = _best(lambda: kernels.first_alert_counts(flat_alert, offsets, oi), repeats)
        results[backend] = (out, agg, fa)
        rows.append((backend, t_sim, t_agg, t_fa))

    if len(results) == 2:
        a, b = results["numba"], results["numpy"]
        # exp differs by an ulp between backends, so scores match to rounding only
        same = all(np.array_equal(x, y) for i, (x, y) in enumerate(zip(a[0], b[0])) if i != 3)
        same = same and np.allclose(a[0][3], b[0][3], rtol=1e-12, atol=0, equal_nan=True)
        same = same and a[1] == b[1] and a[2] == b[2]
        print(f"backends agree: {same}")
    print(f"{n} patients x {horizon} steps, best of {repeats}")
    print(f"{'backend':>8} {'simulate':>10} {'aggregated':>11} {'first alert':>12}")
    for backend, *ts in rows:
        print(f"{backend:>8} " + " ".join(f"{t * 1e3:>9.2f}ms" for t in ts))
    return rows


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--patients", type=int, default=20000)
    p.add_argument("--horizon", type=int, default=20)
    p.add_argument("--repeats", type=int, default=5)
    args = p.parse_args()
    run(args.patients, args.horizon, args.repeats)


if __name__ == "__main__":
    main()
