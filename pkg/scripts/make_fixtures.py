"""Regenerate the archived acceptance fixtures under tests/fixtures.

    python scripts/make_fixtures.py [main weak lu rw fits]

Each phase writes one JSON file holding the measured values together with the
configs that produced them, so the acceptance tests can re-run them.
"""
import json
import sys
import time
from pathlib import Path

from hessianlab import experiments as ex

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def log(msg):
    print(msg, flush=True)


def dump(name, obj):
    OUT.mkdir(parents=True, exist_ok=True)
    with open(OUT / name, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")
    log(f"wrote {OUT / name}")


def phase_thresholds(ineq):
    rows = []
    for n, k in ex.MAIN_CONFIGS:
        for A in ex.A_VALUES:
            t0 = time.time()
            fr, T, res, bumps = ex.calibrate_threshold(ineq, n, k, A, log=log)
            below = None
            if T is not None:
                # most negative scan point below T*: the witness that T* is needed
                neg = [(g, t, w) for g, t, w in zip(fr.min_gaps, fr.grid, fr.witnesses)
                       if g is not None and t < T and g < -1e-9]
                if neg:
                    g, t, w = min(neg, key=lambda r: r[0])
                    below = {"lambda1": t, "normalized": g, "witness": w}
            rows.append({
                "n": n, "k": k, "A": A, "T_star": T, "scan_threshold": fr.threshold,
                "monotone": fr.monotone, "bumps": bumps,
                "frontier": {"grid": fr.grid, "min_gaps": fr.min_gaps},
                "below_witness": below,
                "full_best": None if res is None else res.best.normalized,
                "full_config": None if res is None else res.config,
            })
            log(f"{ineq} ({n},{k}) A={A}: T*={T} scan={fr.threshold} monotone={fr.monotone} "
                f"({time.time() - t0:.0f}s)")
    dump(f"thresholds_{ineq}.json", {"inequality": ineq, "scan_budget": ex.SCAN_BUDGET,
                                      "full_budget": ex.FULL_BUDGET, "configs": rows})


def phase_lu():
    rows = []
    for n, k, l in ex.LU_CONFIGS:
        t0 = time.time()
        sweep, star, res, steps = ex.calibrate_lu(n, k, l, log=log)
        full = None if star is None else {"normalized": res.best.normalized, "config": res.config}
        rows.append({"n": n, "k": k, "l": l, "delta_prime_star": star,
                     "sweep": [{"delta_prime": r["delta_prime"], "normalized": r["normalized"]}
                               for r in sweep],
                     "violations": [r["witness"] for r in sweep if r["normalized"] < -1e-9],
                     "full_budget_steps": steps, "full": full})
        log(f"lu ({n},{k}) l={l}: delta'*={star} steps={len(steps)} ({time.time() - t0:.0f}s)")
    dump("lu_sweep.json", {"delta": ex.LU_DELTA, "grid": ex.LU_DELTA_PRIMES, "configs": rows})


def phase_rw():
    rows = []
    for n, k in ex.RW_CONFIGS:
        t0 = time.time()
        res, fit = ex.rw_fit_K(n, k)
        K = fit.constant
        check = ex.minimize_gap(ex.rw_config(n, k, K))
        rows.append({"n": n, "k": k, "kstar_sup": fit.extremum, "K_fit": K,
                     "kstar_witness": fit.witness, "kstar_config": res.config,
                     "full_best": check.best.normalized, "full_config": check.config})
        log(f"rw ({n},{k}): sup K*={fit.extremum:.6g} K_fit={K:.6g} best={check.best.normalized:.3e} "
            f"({time.time() - t0:.0f}s)")
    n, k = ex.RW_NEGATIVE
    t0 = time.time()
    neg = ex.minimize_gap(ex.rw_config(n, k, ex.RW_NEGATIVE_K))
    log(f"rw ({n},{k}) K={ex.RW_NEGATIVE_K}: best={neg.best.normalized:.3e} ({time.time() - t0:.0f}s)")
    dump("rw.json", {"delta": ex.RW_DELTA, "epsilon": ex.RW_EPSILON, "configs": rows,
                     "negative": {"n": n, "k": k, "K": ex.RW_NEGATIVE_K, "status": neg.status,
                                  "best": neg.best.to_dict(), "config": neg.config}})


def phase_fits():
    rows = []
    for q, n, k in ex.FIT_CASES:
        fits = [ex.fit_ratio(q, n, k, s) for s in ex.FIT_SEEDS]
        rows.append({"quantity": q, "n": n, "k": k, "seeds": list(ex.FIT_SEEDS),
                     "fits": [f.to_dict() for f in fits]})
        log(f"fit {q} ({n},{k}): " + ", ".join(f"{f.extremum:.6g}" for f in fits))
    dump("constants.json", {"count": 4000, "cases": rows})


PHASES = {"main": lambda: phase_thresholds("main"), "weak": lambda: phase_thresholds("weak"),
          "lu": phase_lu, "rw": phase_rw, "fits": phase_fits}

if __name__ == "__main__":
    for name in sys.argv[1:] or list(PHASES):
        PHASES[name]()
