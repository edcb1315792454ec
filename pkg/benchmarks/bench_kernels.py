"""Time the numba-compiled kernels against the pure-numpy fallback.

Run with ``python benchmarks/bench_kernels.py``. The numpy timings come from
a child process started with ``HILLSIM_DISABLE_NUMBA=1`` so that nested
kernel calls are not compiled either. Compilation happens in a warm-up call
and is reported separately.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from hillsim import kernels as K
from hillsim._accel import USE_NUMBA
from hillsim.control import GainSet
from hillsim.cw import OrbitalContext, build_continuous_system, discrete_transition, nmt_initial_conditions
from hillsim.plant import DroneParams


def _best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases():
    ctx = OrbitalContext()
    A = np.ascontiguousarray(build_continuous_system(ctx).A)
    y0 = np.array(nmt_initial_conditions(800.0, 0.16, ctx=ctx))
    tr = discrete_transition(ctx, ctx.period / 1000)
    Ak, Bk = np.ascontiguousarray(tr.A_k), np.ascontiguousarray(tr.B_k)
    U = np.zeros((3000, 3))

    p, g = DroneParams(), GainSet()
    kp, ki, kd, kpa, kda = g.arrays()
    t = np.arange(480) / 48.0
    pts = np.column_stack([0.2 * np.cos(t), 0.4 * np.sin(t), np.ones_like(t)])
    s0 = np.zeros(12)
    s0[:3] = pts[0]
    s0[8] = np.pi / 2

    return {
        "dp45_lti (3 periods)": (K.dp45_lti, (A, np.zeros(6), y0, 0.0, 3 * ctx.period, ctx.period / 1e4,
                                             1e-9, 1e-12, 1_000_000, K.DP_A, K.DP_B5, K.DP_E)),
        "discrete_rollout (3000 steps)": (K.discrete_rollout, (Ak, Bk, y0, U)),
        "tracking_loop (480 ticks x 5)": (K.tracking_loop, (
            s0, pts, 48.0, 5, np.pi / 2, True, kp, ki, kd, kpa, kda, g.i_clamp, g.thrust_cap,
            g.moment_cap, p.mass, p.Ixx, p.Iyy, p.Izz, p.g)),
    }


def time_all(repeat: int) -> dict:
    out = {}
    for name, (fn, a) in cases().items():
        t0 = time.perf_counter()
        fn(*a)
        warm = time.perf_counter() - t0
        out[name] = (warm, _best_of(lambda: fn(*a), repeat))
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5, help="timed repetitions per kernel (best is reported)")
    ap.add_argument("--json", action="store_true", help="print this backend's timings as JSON and exit")
    args = ap.parse_args(argv)
    if args.json:
        print(json.dumps(time_all(args.repeat)))
        return 0
    if not USE_NUMBA:
        print("numba is disabled or missing; nothing to compare")
        return 1
    fast = time_all(args.repeat)
    env = dict(os.environ, HILLSIM_DISABLE_NUMBA="1")
    child = subprocess.run([sys.executable, __file__, "--json", "--repeat", str(args.repeat)],
                           capture_output=True, text=True, env=env, check=True)
    slow = json.loads(child.stdout)
    print(f"{'kernel':32s} {'warm-up s':>10s} {'numba s':>10s} {'numpy s':>10s} {'speed-up':>9s}")
    for name, (warm, t_fast) in fast.items():
        t_slow = slow[name][1]
        print(f"{name:32s} {warm:10.4f} {t_fast:10.5f} {t_slow:10.5f} {t_slow / t_fast:8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
