"""Time the numba and numpy backends on the hot kernels.

    python benchmarks/bench_backends.py [--rows N] [--repeat R]

Each backend runs in its own interpreter (the backend is fixed at import), and
the numba timings exclude the first, compiling call.
"""
import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
import numpy as np
from hessianlab import _accel, _kernels
from hessianlab.cone import ConeContext
from hessianlab.identities import batch
from hessianlab.search import Problem, SearchConfig
from hessianlab.pde.grid import grid_solve, square_field

rows, repeat = int(sys.argv[1]), int(sys.argv[2])

def best(fn):
    fn()
    ts = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t)
    return min(ts)

L = np.ascontiguousarray(batch(6, 4, rows, 0))
prob = Problem(SearchConfig("main", ConeContext(5, 3, A=1.0), restarts=1, max_iters=1))
V = -np.sort(-batch(5, 3, 500, 1), axis=1)
V = V[V[:, 0] > 0]

def gaps():
    for v in V:
        prob.evaluate(v)

res = {"backend": _accel.BACKEND,
       "esp_rows": best(lambda: _kernels.esp_rows(L)),
       "deleted2_rows": best(lambda: _kernels.deleted2_rows(L)),
       "gap_objective_500": best(gaps),
       "grid_solve_2d_33": best(lambda: grid_solve(square_field(2, 2, 33)))}
print(json.dumps(res))
"""


def run(env_extra, rows, repeat):
    env = {k: v for k, v in os.environ.items() if not k.startswith("HESSIANLAB_")}
    env.update(env_extra)
    out = subprocess.run([sys.executable, "-c", CHILD, str(rows), str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--rows", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    nb = run({}, args.rows, args.repeat)
    npy = run({"HESSIANLAB_BACKEND": "numpy"}, args.rows, args.repeat)
    print(f"{'kernel':<22}{nb['backend']:>12}{npy['backend']:>12}{'speedup':>10}")
    for key in nb:
        if key == "backend":
            continue
        print(f"{key:<22}{nb[key]:>11.4f}s{npy[key]:>11.4f}s{npy[key] / nb[key]:>9.1f}x")


if __name__ == "__main__":
    main()
