"""Time the compiled kernels against the pure-Python fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat N]

Kernel timings call both backends in-process. The end-to-end row runs the same
selective-test workload in a subprocess per backend, since the backend is fixed at import.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from groupsel import kernels
from groupsel.geometry import _f_probes, theta_grid

WORKLOAD = """
import time, numpy as np
from groupsel import GroupedDesign, StepwiseConfig, forward_stepwise, test_all_active
rng = np.random.default_rng(0)
X = rng.standard_normal((100, 100))
D = GroupedDesign.from_sizes(X, [2] * 50)
start = time.perf_counter()
for known in (True, False):
    for _ in range(10):
        y = X[:, :4] @ np.ones(4) * 0.3 + rng.standard_normal(100)
        cfg = StepwiseConfig(k=np.log(100), sigma=1.0 if known else None, max_steps=20,
                             stop="aic", intercept=True)
        test_all_active(forward_stepwise(D, y, cfg), 1.0 if known else None)
print(time.perf_counter() - start)
"""


def kernel_cases(rng):
    m = 2000
    # every row holds at t = 0 so the running intersection never empties early
    a2, a1 = rng.standard_normal((2, m))
    a0 = 1.0 + np.abs(rng.standard_normal(m))
    X = rng.standard_normal((60, 6))
    r, c = 1.7, 0.8
    flat, offsets = _f_probes(X, r)
    grid = theta_grid()
    a = np.sort(rng.uniform(0, 100, 400)).reshape(-1, 2)
    b = np.sort(rng.uniform(0, 100, 400)).reshape(-1, 2)
    return {
        "quadratic_region (2000 rows)": lambda be: be.quadratic_region(a2, a1, a0),
        "fslice_region (60 rows)": lambda be: be.fslice_region(X, r, c, grid, flat, offsets),
        "intersect_intervals (200x200)": lambda be: be.intersect_intervals(a, b),
    }


def best_of(fn, repeat):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def end_to_end(pure: bool) -> float:
    env = dict(os.environ)
    env["GROUPSEL_PURE_PYTHON"] = "1" if pure else "0"
    out = subprocess.run([sys.executable, "-c", WORKLOAD], env=env, check=True,
                         capture_output=True, text=True)
    return float(out.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    py, cy = kernels.python_backend, kernels.compiled_backend
    if cy is None:
        print("compiled extension not built; only the fallback can be timed", file=sys.stderr)
    print(f"{'kernel':34s} {'python':>12s} {'cython':>12s} {'speedup':>8s}")
    for name, call in kernel_cases(np.random.default_rng(0)).items():
        tp = best_of(lambda: call(py), args.repeat)
        if cy is None:
            print(f"{name:34s} {tp * 1e6:10.1f}us {'-':>12s} {'-':>8s}")
            continue
        tc = best_of(lambda: call(cy), args.repeat)
        print(f"{name:34s} {tp * 1e6:10.1f}us {tc * 1e6:10.1f}us {tp / tc:7.1f}x")

    tp = end_to_end(pure=True)
    if cy is None:
        print(f"{'20 fits + tests (end to end)':34s} {tp:11.2f}s")
        return
    tc = end_to_end(pure=False)
    print(f"{'20 fits + tests (end to end)':34s} {tp:11.2f}s {tc:11.2f}s {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
