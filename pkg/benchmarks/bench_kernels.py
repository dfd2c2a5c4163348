"""Benchmark the numba kernels against the pure-numpy fallback.

Runs the two hot kernels (`e0_sum`, `batch_cond_mi`) in-process, then
re-runs them in a subprocess with RELAYEXP_NO_NUMBA=1 and prints a timing
comparison.  Usage:

    python3 benchmarks/bench_kernels.py
"""

import json
import os
import subprocess
import sys
import time

import numpy as np


def _inputs(seed=0):
    rng = np.random.default_rng(seed)
    qs = rng.dirichlet(np.ones(6))
    qxs = rng.dirichlet(np.ones(4), size=6)
    w = rng.dirichlet(np.ones(5), size=(6, 4))
    joints = rng.dirichlet(np.ones(2 * 3 * 3), size=2000).reshape(2000, 2, 3, 3)
    return qs, qxs, w, joints


def run_once(repeats=200):
    from relayexp._kernels import USE_NUMBA, batch_cond_mi, e0_sum

    qs, qxs, w, joints = _inputs()
    # warm-up (numba JIT compilation happens here, outside the timed loop)
    e0_sum(qs, qxs, w, 0.5)
    batch_cond_mi(joints)

    t0 = time.perf_counter()
    for _ in range(repeats * 50):
        e0_sum(qs, qxs, w, 0.5)
    t_e0 = (time.perf_counter() - t0) / (repeats * 50)

    t0 = time.perf_counter()
    for _ in range(repeats):
        batch_cond_mi(joints)
    t_mi = (time.perf_counter() - t0) / repeats

    return {"numba": bool(USE_NUMBA), "e0_sum_s": t_e0, "batch_cond_mi_s": t_mi}


def main():
    here = run_once()
    env = dict(os.environ, RELAYEXP_NO_NUMBA="1")
    out = subprocess.run(
        [sys.executable, __file__, "--emit-json"], env=env,
        capture_output=True, text=True, check=True)
    other = json.loads(out.stdout)
    fast, slow = (here, other) if here["numba"] else (other, here)
    print(f"{'kernel':<16}{'numba (s)':>14}{'numpy (s)':>14}{'speedup':>10}")
    for key, label in (("e0_sum_s", "e0_sum"),
                       ("batch_cond_mi_s", "batch_cond_mi")):
        ratio = slow[key] / fast[key] if fast[key] > 0 else float("inf")
        print(f"{label:<16}{fast[key]:>14.3e}{slow[key]:>14.3e}{ratio:>9.1f}x")


if __name__ == "__main__":
    if "--emit-json" in sys.argv:
        print(json.dumps(run_once()))
    else:
        main()
