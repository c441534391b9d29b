"""Benchmark the accelerated kernels against the pure numpy/scipy fallback.

Run ``python bench/bench_kernels.py``. The script re-executes itself in a
subprocess with FBAEC_NO_NUMBA=1 (kernel selection happens at import time)
and prints a side-by-side table.
"""

import json
import os
import subprocess
import sys
import time

import numpy as np


def time_call(fn, *args, repeats=20):
    fn(*args)  # warm-up (includes jit compilation on the accelerated path)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def run_measurements() -> dict:
    from fbaec import kernels
    from fbaec.evalkit import make_source
    from fbaec.masking import IdentityEstimator
    from fbaec.pipeline import PipelineConfig, process_stream

    rng = np.random.default_rng(0)
    x = rng.standard_normal(480000)
    segs = rng.standard_normal((754, 1272))

    mic = make_source("lowband", 1, 10.0, 48000)
    far = make_source("highband", 2, 10.0, 48000)
    cfg = PipelineConfig(aec_estimator=IdentityEstimator(),
                         pf_estimator=IdentityEstimator())

    return {
        "numba_enabled": kernels.NUMBA_ENABLED,
        "iir_10s_48k_s": time_call(
            kernels.iir_first_order, x, 0.9967, -0.9967, -0.9935),
        "overlap_add_10s_s": time_call(kernels.overlap_add, segs, 636),
        "pipeline_10s_s": time_call(
            process_stream, cfg, mic, far, repeats=3),
    }


def main():
    if "--emit-json" in sys.argv:
        print(json.dumps(run_measurements()))
        return

    fast = run_measurements()
    env = dict(os.environ, FBAEC_NO_NUMBA="1")
    out = subprocess.run([sys.executable, __file__, "--emit-json"],
                         env=env, capture_output=True, text=True, check=True)
    slow = json.loads(out.stdout)

    label_fast = "numba" if fast["numba_enabled"] else "fallback"
    print(f"{'kernel':<22}{label_fast:>12}{'fallback':>12}{'speedup':>10}")
    for key in ("iir_10s_48k_s", "overlap_add_10s_s", "pipeline_10s_s"):
        a, b = fast[key], slow[key]
        print(f"{key:<22}{a:>11.4f}s{b:>11.4f}s{b / a:>9.2f}x")


if __name__ == "__main__":
    main()
