"""Compare the compiled and pure-Python simulation kernels.

    python3 benchmarks/bench_kernels.py [--trials 4000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from onebitdet import kernels
from onebitdet.detector import detector_coeffs
from onebitdet.model import default_params
from onebitdet.simulator import ExperimentConfig, run_trials


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=4000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    params = default_params()
    rng = np.random.default_rng(0)
    m, n = 256, params.n
    u, w, v = rng.random((m, n)), rng.standard_normal((m, n)), rng.standard_normal((m, n))
    c = detector_coeffs(params)
    ga, gd = np.stack([c.gain_agree] * 5), np.stack([c.gain_disagree] * 5)
    cfg = ExperimentConfig(trials_per_point=args.trials)

    rows = []
    results = {}
    for name in kernels.available_backends():
        kernels.use_backend(name)
        bits = kernels.h1_bits(params, u, w, v)
        results[name] = run_trials(cfg, "H1").statistics.tobytes()
        rows.append((name,
                     best_of(lambda: kernels.h1_bits(params, u, w, v), args.repeat),
                     best_of(lambda: kernels.scores(bits, ga, gd), args.repeat),
                     best_of(lambda: run_trials(cfg, "H1"), args.repeat)))
    print(f"{'backend':<8} {'h1_bits/256':>12} {'scores/256x5':>13} {'run_trials':>11}")
    for name, a, b, t in rows:
        print(f"{name:<8} {a * 1e3:10.2f}ms {b * 1e3:11.2f}ms {t:10.3f}s")
    if len(rows) == 2:
        (_, a0, b0, t0), (_, a1, b1, t1) = sorted(rows)  # cython, python
        print(f"speedup  {a1 / a0:11.1f}x {b1 / b0:12.1f}x {t1 / t0:10.1f}x")
        same = len(set(results.values())) == 1
        print(f"identical run_trials output across backends: {same}")


if __name__ == "__main__":
    main()
