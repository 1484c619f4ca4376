"""Compare the numba-compiled kernels against the pure numpy path.

Each mode runs in its own interpreter because the backend is chosen at import
time from GRASSAVG_DISABLE_NUMBA. Usage:

    python benchmarks/bench_kernels.py [--n 20000] [--d 50] [--k 2] [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def worker(args):
    from grassavg import LearnerConfig, make_learner
    from grassavg._accel import USE_NUMBA
    from grassavg import kernels

    rng = np.random.default_rng(0)
    x = rng.standard_normal((args.n, args.d)) * np.sqrt(np.r_[10.0, 5.0, np.ones(args.d - 2)])
    res = {"numba": USE_NUMBA}

    a = np.linalg.qr(rng.standard_normal((args.d, args.k)))[0]
    b = np.linalg.qr(a + 0.3 * rng.standard_normal((args.d, args.k)))[0]
    kernels.geodesic_core(a, b, 0.5)
    t0 = time.perf_counter()
    for _ in range(2000):
        kernels.geodesic_core(a, b, 0.5)
    res["geodesic_us"] = (time.perf_counter() - t0) / 2000 * 1e6

    for algo in ("riga", "rriga", "oja", "empca"):
        make_learner(LearnerConfig(algo, args.k)).partial_fit(x[:100])  # compile outside the timer
        best = np.inf
        for _ in range(args.repeat):
            learner = make_learner(LearnerConfig(algo, args.k))
            t0 = time.perf_counter()
            learner.partial_fit(x)
            learner.finish()
            best = min(best, time.perf_counter() - t0)
        res[algo] = best
    print(json.dumps(res))


def run_mode(disable, argv):
    env = dict(os.environ, GRASSAVG_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run([sys.executable, __file__, "--worker", *argv], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=20000)
    p.add_argument("--d", type=int, default=50)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = p.parse_args()
    if args.worker:
        return worker(args)
    argv = ["--n", str(args.n), "--d", str(args.d), "--k", str(args.k), "--repeat", str(args.repeat)]
    fast, pure = run_mode(False, argv), run_mode(True, argv)
    if not fast["numba"]:
        print("numba is not installed; both columns use the numpy path")
    print(f"N={args.n} D={args.d} K={args.k}, best of {args.repeat}")
    print(f"{'kernel':<16}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    print(f"{'geodesic (us)':<16}{fast['geodesic_us']:>12.1f}{pure['geodesic_us']:>12.1f}"
          f"{pure['geodesic_us'] / fast['geodesic_us']:>9.1f}x")
    for algo in ("riga", "rriga", "oja", "empca"):
        print(f"{algo + ' (s)':<16}{fast[algo]:>12.3f}{pure[algo]:>12.3f}{pure[algo] / fast[algo]:>9.1f}x")


if __name__ == "__main__":
    main()
