"""Acceptance protocols shared by the fixture generator, the test suite and the CLI.

Every protocol is a pure function of its arguments (seeds included), so a run
re-executed from its archived config reproduces the same numbers.
"""
import numpy as np

from .cone import ConeContext
from .identities import batch
from .search import (SearchConfig, fit_constant, geometric_grid, maximize_kstar,
                     minimize_gap, threshold_scan, worst_directions)

MAIN_CONFIGS = [(4, 3), (5, 3), (5, 4), (6, 4)]
A_VALUES = (1.0, 5.0)
SCAN_GRID = geometric_grid(0.5, 3000.0, 2 ** 0.5)
SCAN_BUDGET = (20, 300)          # (restarts, iterations) per grid point
FULL_BUDGET = (200, 500)

LU_CONFIGS = [(n, k, l) for n, k in MAIN_CONFIGS for l in range(1, k)]
LU_DELTA = 0.5
LU_DELTA_PRIMES = [0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001]
LU_SWEEP_BUDGET = (40, 300)

RW_CONFIGS = [(4, 3), (5, 4), (6, 5)]
RW_NEGATIVE = (5, 3)
RW_DELTA, RW_EPSILON = 0.5, 0.1
RW_NEGATIVE_K = 1e3              # "K large": a witness here defeats every smaller K too


def main_config(ineq, n, k, A, T, seed=0, budget=FULL_BUDGET, workers=1):
    """lambda_1 in [T, 1e4 T], sigma_k in [0.9, 1.1], default K and delta_0."""
    r, it = budget
    return SearchConfig(ineq, ConeContext(n, k, A=float(A)), restarts=r, max_iters=it, seed=seed,
                        lambda1_threshold=float(T), workers=workers)


def scan_main(ineq, n, k, A, seed=0, grid=SCAN_GRID, budget=SCAN_BUDGET, workers=1):
    return threshold_scan(main_config(ineq, n, k, A, grid[0], seed, budget, workers), grid)


def calibrate_threshold(ineq, n, k, A, seed=0, workers=1, log=None):
    """Scan for T*, then confirm it with the full-budget search; a violation at
    the full budget moves T* one grid step up (at most six times)."""
    frontier = scan_main(ineq, n, k, A, seed, workers=workers)
    grid = list(SCAN_GRID)
    T = frontier.threshold
    if T is None:
        return frontier, None, None, []
    j = grid.index(T)
    bumps = []
    while True:
        res = minimize_gap(main_config(ineq, n, k, A, T, seed, workers=workers))
        if log:
            log(f"{ineq} n={n} k={k} A={A} T={T:.6g} best={res.best.normalized:.3e}")
        if res.best.normalized >= -1e-9 or j + 1 >= len(grid) or len(bumps) >= 6:
            return frontier, T, res, bumps
        bumps.append({"T": T, "normalized": res.best.normalized, "witness": res.best.to_dict()})
        j += 1
        T = grid[j]


def lu_config(n, k, l, delta_prime, seed=0, budget=FULL_BUDGET, workers=1):
    """Lu's stratum: lambda_l >= delta lambda_1, lambda_{l+1} <= delta' lambda_1.
    The inequality is homogeneous, so lambda_1 ranges freely over [1, 1e4]."""
    r, it = budget
    params = {"l": l, "delta": LU_DELTA, "delta_prime": float(delta_prime)}
    return SearchConfig("lu", ConeContext(n, k, A=None), restarts=r, max_iters=it, seed=seed,
                        params=params, workers=workers)


def lu_sweep(n, k, l, seed=0, grid=LU_DELTA_PRIMES, budget=LU_SWEEP_BUDGET, workers=1):
    """Minimum normalized gap per delta'; delta'* is the largest grid value from
    which every smaller grid value is violation-free."""
    rows = []
    for dp in grid:
        res = minimize_gap(lu_config(n, k, l, dp, seed, budget, workers))
        rows.append({"delta_prime": dp, "normalized": res.best.normalized,
                     "witness": res.best.to_dict()})
    star = None
    for j in range(len(rows)):
        if all(r["normalized"] >= -1e-9 for r in rows[j:]):
            star = rows[j]["delta_prime"]
            break
    return rows, star


def calibrate_lu(n, k, l, seed=0, workers=1, log=None):
    """Sweep for delta'*, then confirm it at the full budget; a violation there
    moves delta'* one grid step down (None once the grid is exhausted)."""
    rows, star = lu_sweep(n, k, l, seed, workers=workers)
    grid = list(LU_DELTA_PRIMES)
    steps, res = [], None
    j = None if star is None else grid.index(star)
    while j is not None and j < len(grid):
        res = minimize_gap(lu_config(n, k, l, grid[j], seed, workers=workers))
        if log:
            log(f"lu n={n} k={k} l={l} delta'={grid[j]:g} best={res.best.normalized:.3e}")
        if res.best.normalized >= -1e-9:
            return rows, grid[j], res, steps
        steps.append({"delta_prime": grid[j], "normalized": res.best.normalized,
                      "witness": res.best.to_dict()})
        j += 1
    return rows, None, res, steps


def rw_config(n, k, K, seed=0, budget=FULL_BUDGET, workers=1, objective="gap"):
    """kappa_1 in [1, 1e4], sigma_k in [0.9, 1.1], every index i with kappa_i >= delta kappa_1."""
    r, it = budget
    params = {"K": float(K), "delta": RW_DELTA, "epsilon": RW_EPSILON}
    return SearchConfig("rw", ConeContext(n, k, A=None), restarts=r, max_iters=it, seed=seed,
                        params=params, workers=workers, objective=objective)


def rw_fit_K(n, k, seed=0, budget=FULL_BUDGET, workers=1):
    """Fitted K = 1.05 x the largest K* found by the adversarial search."""
    res = maximize_kstar(rw_config(n, k, 1.0, seed, budget, workers, objective="kstar"))
    ok = [r for r in res.trace if r.get("status") == "ok"]
    fit = fit_constant("rw_kstar", [r["lambda"] for r in ok], k,
                       params={"delta": RW_DELTA, "epsilon": RW_EPSILON})
    return res, fit


def fit_ratio(quantity, n, k, seed, count=4000):
    """C fit over an interior + near-boundary batch; the quotient-chain and
    decomposition ratios use each sample's worst direction (a generalized
    eigenvector), so the batch is adversarial in gamma."""
    L = batch(n, k, count, seed)
    D = None if quantity == "sigma_km1" else worst_directions(quantity, L, k)
    return fit_constant(quantity, L, k, directions=D)


FIT_CASES = [("sigma_km1", 4, 3), ("quotient_chain", 4, 2), ("quotient_chain", 4, 3),
             ("quotient_chain", 5, 3), ("quotient_chain", 5, 4), ("decomposition", 4, 3),
             ("decomposition", 5, 3), ("decomposition", 5, 4)]
FIT_SEEDS = (11, 12)


def strip_volatile(d):
    """Drop timing-like keys before comparing two reports."""
    if isinstance(d, dict):
        return {k: strip_volatile(v) for k, v in d.items() if k not in ("timestamp", "elapsed")}
    if isinstance(d, list):
        return [strip_volatile(v) for v in d]
    return d


def as_float_list(x):
    return [float(t) for t in np.asarray(x, dtype=float)]


# -- one-parameter families -----------------------------------------------------

def scaled_family(n, k, t, last=None):
    """(t, 1, ..., 1[, last]) scaled so that sigma_k = 1."""
    from .symfun import sigma
    v = np.ones(n)
    v[0] = t
    if last is not None:
        v[-1] = last
    s = sigma(v, k)
    if not s > 0:
        raise ValueError("sigma_k <= 0 on the family")
    return v / s ** (1.0 / k)


def e1_sweep(ineq="main", n=5, k=3, A=1.0, grid=None):
    """Gap at xi = e_1 along (t, 1, ..., 1, -1/2) (main) or (t, 1, ..., 1) (weak),
    scaled to sigma_k = 1; returns rows and the smallest grid t from which every
    later gap is nonnegative."""
    from .concavity import GAP_FUNCTIONS
    from .search import resolve_params
    grid = list(np.geomspace(1.0, 1e4, 41)) if grid is None else list(grid)
    p = resolve_params(ineq, n, k, {"A": A})
    rows = []
    e1 = np.eye(n)[0]
    for t in grid:
        lam = scaled_family(n, k, t, -0.5 if ineq == "main" else None)
        rep = GAP_FUNCTIONS[ineq](lam, e1, p)
        rows.append((float(t), rep.gap, rep.normalized))
    star = None
    for j in range(len(rows)):
        if all(r[1] >= 0 for r in rows[j:]):
            star = rows[j][0]
            break
    return rows, star
