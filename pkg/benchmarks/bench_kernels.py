"""Time the numba and numpy kernel paths on the same workloads.

Usage: python3 benchmarks/bench_kernels.py [--reps N] [--repeat K]

Each workload runs once per backend to warm up (this includes numba JIT
compilation). Then it is timed ``--repeat`` times, and the best time is
reported. The script also checks that both paths return identical episode logs.
"""
import argparse
import time

from mnlexplore import kernels
from mnlexplore.instances import instance_I, instance_J
from mnlexplore.simulate import run_episodes

WORKLOADS = [
    ("ts I(2,0.1)", instance_I(2, 0.1), "ts", {}),
    ("ts J(16,2,.25,.1)", instance_J(16, 2, 0.25, 0.1), "ts", {}),
    ("efa realized I(2,0.1)", instance_I(2, 0.1), "efa", {"estimator": "realized"}),
]


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    before = kernels.backend()
    print(f"{'workload':<24}{'numba s':>10}{'numpy s':>10}{'speedup':>9}  identical")
    try:
        for name, inst, policy, kw in WORKLOADS:
            times, logs = {}, {}
            for b in ("numba", "numpy"):
                kernels.set_backend(b)
                fn = lambda: run_episodes(inst, policy, args.reps, args.seed, **kw)  # noqa: E731
                fn()
                times[b], logs[b] = _best(fn, args.repeat)
            same = logs["numba"] == logs["numpy"]
            print(f"{name:<24}{times['numba']:>10.3f}{times['numpy']:>10.3f}"
                  f"{times['numpy'] / times['numba']:>8.1f}x  {same}")
    finally:
        kernels.set_backend(before)


if __name__ == "__main__":
    main()
