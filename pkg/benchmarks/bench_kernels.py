"""Compare the numba and pure-numpy kernel backends.

Each backend runs in its own interpreter because the choice is made at
import time from ``RGMCA_DISABLE_NUMBA``.

    python benchmarks/bench_kernels.py [--repeat 50]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
import rgmca
from rgmca import _kernels
from rgmca.datagen import OutlierSpec, SourceSpec, gen_scene
from rgmca.model import SolverParams

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
M = rng.standard_normal((16, 1024)) * 10
lam = rng.uniform(0, 5, 16)
_kernels.soft_threshold_rows(M, lam)  # compile outside the timed region
_kernels.column_l1(M)

def best(fn):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)

scene = gen_scene(16, 8, 1024, SourceSpec(), OutlierSpec(160, 10, 100.0), 0.1, np.random.default_rng(1))
params = SolverParams(outer_iters=2, inner_iters=50)
rgmca.rgmca(scene.X, 8, params)
t0 = time.perf_counter()
rgmca.rgmca(scene.X, 8, params)
solve = time.perf_counter() - t0
print(json.dumps({
    "backend": rgmca.BACKEND,
    "soft_threshold_us": 1e6 * best(lambda: _kernels.soft_threshold_rows(M, lam)),
    "column_l1_us": 1e6 * best(lambda: _kernels.column_l1(M)),
    "rgmca_2x50_s": solve,
}))
"""


def run(disable, repeat):
    env = dict(os.environ)
    if disable:
        env["RGMCA_DISABLE_NUMBA"] = "1"
    else:
        env.pop("RGMCA_DISABLE_NUMBA", None)
    out = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=50)
    args = parser.parse_args()
    rows = [run(False, args.repeat), run(True, args.repeat)]
    keys = ["soft_threshold_us", "column_l1_us", "rgmca_2x50_s"]
    print(f"{'backend':<8}" + "".join(f"{k:>20}" for k in keys))
    for r in rows:
        print(f"{r['backend']:<8}" + "".join(f"{r[k]:>20.4g}" for k in keys))


if __name__ == "__main__":
    main()
