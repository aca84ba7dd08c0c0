"""Compare the compiled and pure-Python plant kernels.

Times one RK4 plant step with each backend, checks that both give the same
state, and times a full default scenario run with each.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time
import timeit

import numpy as np

from intermittent_attitude import kernels
from intermittent_attitude.config import default_config
from intermittent_attitude.plant import RigidBodyState
from intermittent_attitude.simkit import run_scenario


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=2000, help="step calls per timing")
    args = parser.parse_args()

    sc = default_config().build()
    state = RigidBodyState.initial(sc.q_s0, sc.omega_s0, sc.reference)
    y = state.packed()
    u = np.array([0.01, -0.02, 0.03])
    J, Ji = sc.inertia.J, sc.inertia.J_inv
    ref, dist = sc.reference.params, sc.disturbance.params

    results = {}
    for name in kernels.available():
        kernels.set_backend(name)
        step = kernels.rk4_plant_step
        out = step(y, u, 0.0, 0.1, J, Ji, ref, dist)
        per_step = min(timeit.repeat(lambda: step(y, u, 0.0, 0.1, J, Ji, ref, dist), number=args.repeat, repeat=3)) / args.repeat
        t0 = time.perf_counter()
        run_scenario(sc)
        full = time.perf_counter() - t0
        results[name] = (out, per_step, full)
        print(f"{name:7s} step {per_step * 1e6:9.2f} us   full 150 s run {full:7.3f} s")

    if len(results) == 2:
        diff = np.max(np.abs(results["cython"][0] - results["python"][0]))
        print(f"max |cython - python| after one step: {diff:.3g}")
        print(f"step speedup: {results['python'][1] / results['cython'][1]:.1f}x   "
              f"run speedup: {results['python'][2] / results['cython'][2]:.1f}x")
    else:
        print("compiled kernel not built; only the fallback was timed")


if __name__ == "__main__":
    main()
