"""Time the numba and numpy marching backends on the reference network.

    python3 benchmarks/bench_kernels.py [--duration 60] [--repeat 5]

Each backend integrates the same 100 r/min, three-roller run; the report
lists the best wall time per backend and the largest disagreement with the
plain Python loop (run on a shortened window, it is slow).
"""

import argparse
import time

import numpy as np

from peripump import _kernels
from peripump.displacement import reference_curve
from peripump.geometry import MotorSpeed, reference_geometry
from peripump.network import reference_params, simulate, trapezoid_operators
from peripump.pulses import build_train


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--duration", type=float, default=60.0, help="simulated seconds")
    ap.add_argument("--step", type=float, default=1e-4)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    params = reference_params()
    geom = reference_geometry(3)
    speed = MotorSpeed.from_rpm(100)
    train = build_train(reference_curve(), geom, speed, args.step, args.duration)
    print(f"{len(train):,} steps of {args.step:g} s")

    simulate(params, geom, train, speed, backend="numba")  # compile outside the timing
    results = {}
    for backend in ("numba", "numpy"):
        elapsed = best_time(lambda: simulate(params, geom, train, speed, backend=backend),
                            args.repeat)
        results[backend] = simulate(params, geom, train, speed, backend=backend)
        print(f"{backend:>6}: {elapsed * 1e3:9.2f} ms  "
              f"({len(train) / elapsed / 1e6:.1f} Msteps/s)")

    diff = np.max(np.abs(results["numba"].p_in - results["numpy"].p_in))
    print(f"max |p_in numba - numpy| = {diff:.2e} Pa")

    # reference loop on the first 20k steps
    P, W, B_s = trapezoid_operators(params, args.step)
    n = min(len(train), 20_000)
    u = np.column_stack([train.q_ed_in[:n], train.q_ed_out[:n]]) @ B_s.T
    w = (u[:-1] + u[1:]) @ W.T
    y0 = np.zeros(4)
    t0 = time.perf_counter()
    ref = _kernels._march_loop(P, w, y0)
    loop_s = time.perf_counter() - t0
    for backend in ("numba", "numpy"):
        err = np.max(np.abs(_kernels.march(P, w, y0, backend) - ref))
        print(f"{backend:>6} vs python loop ({n:,} steps, loop {loop_s:.2f} s): "
              f"max |dy| = {err:.2e} (kPa, mL/s units)")


if __name__ == "__main__":
    main()
