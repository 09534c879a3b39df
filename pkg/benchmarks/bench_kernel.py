"""Compiled vs pure-Python trial kernel on the default cluster (K=M=20, r=3).

    python benchmarks/bench_kernel.py [--trials N]
"""

import argparse
import time

import numpy as np

from codedgrad import kernel
from codedgrad.schedule import Delivery, build_schedule
from codedgrad.simulation import EventPlan, draw_speeds
from codedgrad.straggler import StragglerParams

CASES = [("CPGC", Delivery.MMC), ("UC_MMC", Delivery.MMC), ("MCC", Delivery.BUNDLED)]


def bench(plan, times, thresholds, force_python):
    start = time.perf_counter()
    out = plan.replay(times, thresholds, force_python=force_python)
    return time.perf_counter() - start, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=2000)
    args = ap.parse_args()
    params = StragglerParams()
    print(f"compiled kernel available: {kernel.COMPILED}")
    print(f"{'scheme':8s} {'trials':>7s} {'python s':>9s} {'compiled s':>11s} {'speedup':>8s}  agree")
    for name, mode in CASES:
        s = build_schedule(name, 20, 20, 3)
        plan = EventPlan.build(s, mode)
        x = draw_speeds(np.random.default_rng(0), args.trials, s.cols, params)
        times = plan.arrival_times(x, params)
        thr = [17, 18, 19, 20]
        t_py, out_py = bench(plan, times, thr, True)
        if kernel.COMPILED:
            t_c, out_c = bench(plan, times, thr, False)
            agree = all(np.array_equal(a, b) for a, b in zip(out_py, out_c))
            print(f"{name:8s} {args.trials:7d} {t_py:9.3f} {t_c:11.3f} {t_py / t_c:7.1f}x  {agree}")
        else:
            print(f"{name:8s} {args.trials:7d} {t_py:9.3f} {'-':>11s} {'-':>8s}  -")


if __name__ == "__main__":
    main()
