"""Command-line front end.

    hessianlab <command> [--config PATH] [--seed N] [--out DIR] [--workers N]
                         [--tolerance-scale X] [--svg]

Commands: identities, inequality, search, solve-radial, solve-grid, rigidity.
Each run writes report.json, witnesses.jsonl where relevant, CSV plot data
and the fully resolved config.ini to --out. Exit codes: 0 ran to completion
with a verdict, 1 numerical failure or tolerance breach, 2 usage/config error.
"""
import argparse
import datetime
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .io import ConfigError, read_config, write_config, write_csv, write_json, write_jsonl, write_svg

COMMANDS = ("identities", "inequality", "search", "solve-radial", "solve-grid", "rigidity")
PARAM_KEYS = ("K", "delta0", "epsilon", "delta", "delta_prime", "l", "i", "include_j1", "A")


class NumericalFailure(RuntimeError):
    pass


# -- value parsing ----------------------------------------------------------------

def _int_list(s):
    s = str(s).strip()
    if ".." in s:
        a, b = s.split("..")
        return list(range(int(a), int(b) + 1))
    return [int(t) for t in s.replace(" ", "").split(",") if t]


def _float_list(s):
    return [float(t) for t in str(s).replace(" ", "").split(",") if t]


def _opt_float(s):
    s = str(s).strip().lower()
    return None if s in ("", "none", "null") else float(s)


def _bool(s):
    s = str(s).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _get(sec, key, conv, default):
    if key not in sec:
        return default
    try:
        return conv(sec[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {sec[key]!r} ({exc})") from exc


_SAFE = {name: getattr(np, name) for name in
         ("sin", "cos", "exp", "log", "sqrt", "abs", "pi", "tanh", "cosh", "sinh", "maximum", "minimum")}


def _expr(src, names):
    """Callable from an arithmetic expression in the given variable names."""
    code = compile(src, "<config>", "eval")
    bad = [n for n in code.co_names if n not in names and n not in _SAFE and n != "np"]
    if bad:
        raise ConfigError(f"unknown names in expression {src!r}: {bad}")

    def fn(**kw):
        return eval(code, {"__builtins__": {}, "np": np, **_SAFE}, kw)
    return fn


# -- commands ----------------------------------------------------------------------

def _resolve_identities(sec):
    return {"n": ",".join(str(v) for v in _get(sec, "n", _int_list, list(range(3, 7)))),
            "count": _get(sec, "count", int, 10_000),
            "concavity": _get(sec, "concavity", _bool, True),
            "fault": sec.get("fault", "").strip()}


def cmd_identities(r, run, out, opts):
    from .identities import LABELS, concavity_suite, identity_suite
    ns = _int_list(r["n"])
    pairs = [(n, k) for n in ns for k in range(2, n + 1)]
    fault = r["fault"] or None
    res = identity_suite(pairs, r["count"], run["seed"], run["tolerance_scale"], fault=fault)
    if r["concavity"]:
        res += concavity_suite(pairs, r["count"], run["seed"], run["tolerance_scale"])
    failed = [x for x in res if not x.passed]
    summary = {}
    for x in res:
        s = summary.setdefault(x.name, {"label": LABELS[x.name], "max_residual": 0.0, "samples": 0,
                                        "passed": True})
        s["samples"] += x.samples
        s["passed"] &= x.passed
        key = "max_residual"
        s[key] = max(s[key], abs(x.worst))
    report = {"summary": summary, "checks": [x.to_dict() for x in res],
              "failures": [{"identity": LABELS[x.name], "name": x.name, "n": x.n, "k": x.k,
                            "worst": x.worst, "witness_lambda": x.witness_lambda,
                            "witness_xi": x.witness_xi} for x in failed],
              "verdict": "all identities within tolerance" if not failed else
              "tolerance breach: " + "; ".join(sorted({LABELS[x.name] for x in failed}))}
    write_csv(out / "identities.csv", ["name", "n", "k", "samples", "worst", "tolerance", "passed"],
              [(x.name, x.n, x.k, x.samples, x.worst, x.tolerance, x.passed) for x in res])
    if failed:
        write_jsonl(report["failures"], out / "witnesses.jsonl")
    return report, (1 if failed else 0)


def _params(sec):
    p = {}
    for key in PARAM_KEYS:
        if key in sec:
            if key in ("l", "i"):
                p[key] = _get(sec, key, int, None)
            elif key == "include_j1":
                p[key] = _get(sec, key, _bool, False)
            elif key == "A" and sec[key].strip().lower() == "tight":
                p[key] = "tight"
            else:
                p[key] = _get(sec, key, float, None)
    return p


def _resolve_inequality(sec):
    for key in ("inequality", "n", "k", "lambda"):
        if key not in sec:
            raise ConfigError(f"[inequality] needs {key}")
    r = {"inequality": sec["inequality"].strip(), "n": _get(sec, "n", int, None),
         "k": _get(sec, "k", int, None), "lambda": ",".join(repr(v) for v in _get(sec, "lambda", _float_list, None)),
         "exact": _get(sec, "exact", _bool, True)}
    if "xi" in sec:
        r["xi"] = ",".join(repr(v) for v in _get(sec, "xi", _float_list, None))
    r.update(_params(sec))
    return r


def cmd_inequality(r, run, out, opts):
    from .concavity import GAP_FUNCTIONS, INEQUALITIES, build_terms
    from .search import min_ratio, resolve_params
    ineq = r["inequality"]
    if ineq not in INEQUALITIES:
        raise ConfigError(f"unknown inequality {ineq!r}")
    lam = np.array(_float_list(r["lambda"]))
    if lam.size != r["n"]:
        raise ConfigError("lambda must have n entries")
    p = resolve_params(ineq, r["n"], r["k"], {k: v for k, v in r.items() if k in PARAM_KEYS})
    if ineq == "rw" and "i" not in p:
        p["i"] = 1
    if "xi" in r:
        xi = np.array(_float_list(r["xi"]))
        how = "given"
    else:
        xi = min_ratio(build_terms(ineq, np.sort(lam)[::-1], p), r["n"])[1]
        how = "worst (generalized eigenvector)"
    try:
        rep = GAP_FUNCTIONS[ineq](lam, xi, p, exact=r["exact"])
    except ValueError as exc:
        raise NumericalFailure(f"infeasible configuration: {exc}") from exc
    write_jsonl([rep.to_dict()], out / "witnesses.jsonl")
    verdict = "inequality holds at this point" if rep.normalized >= -1e-9 else "negative gap"
    return {"gap": rep.to_dict(), "xi_source": how, "verdict": verdict}, 0


def _resolve_search(sec):
    for key in ("inequality", "n", "k"):
        if key not in sec:
            raise ConfigError(f"[search] needs {key}")
    r = {"inequality": sec["inequality"].strip(), "n": _get(sec, "n", int, None),
         "k": _get(sec, "k", int, None),
         "floor_A": _get(sec, "floor_A", _opt_float, 1.0),
         "sigma_k_range": ",".join(repr(v) for v in _get(sec, "sigma_k_range", _float_list, [0.9, 1.1])),
         "restarts": _get(sec, "restarts", int, 200), "max_iters": _get(sec, "max_iters", int, 500),
         "lambda1_threshold": sec.get("lambda1_threshold", "free").strip(),
         "lambda1_mode": sec.get("lambda1_mode", "at-least").strip(),
         "lambda1_span": _get(sec, "lambda1_span", float, 1e4),
         "objective": sec.get("objective", "gap").strip(),
         "hypothesis": _get(sec, "hypothesis", _bool, True)}
    if r["lambda1_threshold"] != "free":
        _get(r, "lambda1_threshold", float, None)
    if "xi" in sec:
        r["xi"] = ",".join(repr(v) for v in _get(sec, "xi", _float_list, None))
    for key in ("scan_start", "scan_stop", "scan_ratio"):
        if key in sec:
            r[key] = _get(sec, key, float, None)
    r.update(_params(sec))
    return r


def _search_config(r, run):
    from .cone import ConeContext
    from .search import SearchConfig
    t = r["lambda1_threshold"]
    try:
        ctx = ConeContext(r["n"], r["k"], A=r["floor_A"], sigma_k_range=tuple(_float_list(r["sigma_k_range"])))
        return SearchConfig(
            r["inequality"], ctx, restarts=r["restarts"], max_iters=r["max_iters"], seed=run["seed"],
            lambda1_threshold=t if t == "free" else float(t), lambda1_mode=r["lambda1_mode"],
            lambda1_span=r["lambda1_span"],
            xi_constraint="fixed" if "xi" in r else "unit-sphere",
            xi=_float_list(r["xi"]) if "xi" in r else None,
            params={k: v for k, v in r.items() if k in PARAM_KEYS},
            objective=r["objective"], hypothesis=r["hypothesis"], workers=run["workers"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_search(r, run, out, opts):
    from .concavity import GAP_FUNCTIONS
    from .search import (Problem, SearchError, geometric_grid, maximize_kstar, minimize_gap,
                         threshold_scan, write_frontier_csv)
    cfg = _search_config(r, run)
    try:
        if "scan_start" in r:
            grid = geometric_grid(r["scan_start"], r.get("scan_stop", 1e3 * r["scan_start"]),
                                  r.get("scan_ratio", 2 ** 0.5))
            fr = threshold_scan(cfg, grid)
            write_frontier_csv(fr, out / "frontier.csv")
            if opts.svg:
                write_svg(out / "frontier.svg", fr.grid, [fr.min_gaps], ["min normalized gap"],
                          "lambda_1", "gap", logx=True)
            wits = [w for w, g in zip(fr.witnesses, fr.min_gaps) if g is not None and g < -1e-9]
            write_jsonl(wits, out / "witnesses.jsonl")
            verdict = (f"threshold estimate {fr.threshold}" if fr.threshold is not None
                       else "no nonnegative tail on the grid")
            return {"frontier": fr.to_dict(), "threshold_estimate": fr.threshold,
                    "monotone": fr.monotone, "verdict": verdict}, 0
        if r["objective"] == "kstar":
            res = maximize_kstar(cfg)
        else:
            res = minimize_gap(cfg)
    except SearchError as exc:
        raise NumericalFailure(str(exc)) from exc
    prob = Problem(cfg)
    wits = [res.best.to_dict()]
    for e in res.trace:
        if e.get("status") == "ok" and e.get("normalized", 0.0) < -1e-9 and "xi" in e:
            p = prob.params_for(e.get("i"))
            rep = GAP_FUNCTIONS[prob.ineq](np.array(e["lambda"]), np.array(e["xi"]), p, exact=True)
            rep.flags.update({"restart": e["restart"], "verified": rep.gap < 0})
            wits.append(rep.to_dict())
    write_jsonl(wits, out / "witnesses.jsonl")
    ok = [e for e in res.trace if e.get("status") == "ok"]
    key = "kstar" if r["objective"] == "kstar" else "normalized"
    write_csv(out / "trace.csv", ["restart", "lambda1", key],
              [(e["restart"], e["lambda"][0], e.get(key)) for e in ok])
    rep = res.to_dict()
    rep["verdict"] = res.status if r["objective"] == "gap" else f"sup K* = {res.kstar}"
    return rep, 0


def _resolve_radial(sec):
    return {"n": _get(sec, "n", int, 3), "k": _get(sec, "k", int, 2), "R": _get(sec, "R", float, 1.0),
            "nodes": _get(sec, "nodes", int, 1000), "f": sec.get("f", "1").strip(),
            "alphas": ",".join(repr(v) for v in _get(sec, "alphas", _float_list, [0.0, 0.5, 1.0, 2.0]))}


def cmd_solve_radial(r, run, out, opts):
    from .pde import diagnostics as dg
    from .pde.radial import radial_closed_form, radial_residual, radial_solve
    fe = _expr(r["f"], ("r",))
    unit = r["f"] == "1"
    f = None if unit else (lambda x: fe(r=x))
    try:
        prof = radial_solve(r["n"], r["k"], r["R"], f, r["nodes"])
    except ValueError as exc:
        raise NumericalFailure(str(exc)) from exc
    res, _ = radial_residual(prof)
    rep = {"n": r["n"], "k": r["k"], "R": r["R"], "nodes": r["nodes"], "f": r["f"],
           "residual": res}
    from .pde.grid import admissible
    rep["admissible"] = admissible(prof.eigenvalues(), r["k"])
    if unit:
        cf = radial_closed_form(r["n"], r["k"], r["R"], r["nodes"])
        rep["closed_form_sup_error"] = float(np.max(np.abs(cf.u - prof.u)))
        rep["closed_form_match"] = rep["closed_form_sup_error"] <= 1e-10
    alphas = _float_list(r["alphas"])
    rep["pogorelov"] = dg.alpha_sweep(prof, alphas)
    write_csv(out / "profile.csv", ["r", "u", "du", "d2u"],
              zip(prof.nodes, prof.u, prof.up, prof.upp))
    write_csv(out / "pogorelov.csv", ["alpha", "value"], zip(alphas, rep["pogorelov"]["value"]))
    if opts.svg:
        write_svg(out / "profile.svg", prof.nodes, [prof.u], ["u"], "r", "u")
    ok = res <= 1e-8 * run["tolerance_scale"] and rep["admissible"]
    rep["verdict"] = ("closed form reproduced" if rep.get("closed_form_match") else
                      "solved" if ok else "residual above tolerance")
    return rep, 0 if ok and rep.get("closed_form_match", True) else 1


def _resolve_grid(sec):
    r = {"n": _get(sec, "n", int, 2), "k": _get(sec, "k", int, 2), "nodes": _get(sec, "nodes", int, 65),
         "half_width": _get(sec, "half_width", float, 1.0), "f": sec.get("f", "1").strip(),
         "tol": _get(sec, "tol", float, 1e-6), "max_iter": _get(sec, "max_iter", int, 100),
         "alphas": ",".join(repr(v) for v in _get(sec, "alphas", _float_list, [0.0, 0.5, 1.0, 2.0]))}
    if "ball" in sec:
        r["ball"] = _get(sec, "ball", float, None)
    if "mesh" in sec:
        r["mesh"] = ",".join(str(v) for v in _get(sec, "mesh", _int_list, None))
    return r


def cmd_solve_grid(r, run, out, opts):
    from .pde import diagnostics as dg
    from .pde.grid import grid_solve, mesh_study, node_eigenvalues, sandwich, square_field
    fe = _expr(r["f"], ("x", "r"))
    f = None if r["f"] == "1" else (lambda x: fe(x=x, r=np.sqrt(np.sum(x * x, axis=-1))))
    try:
        fld = square_field(r["n"], r["k"], r["nodes"], r["half_width"], r.get("ball"))
        sol = grid_solve(fld, f, tol=r["tol"] * run["tolerance_scale"], max_iter=r["max_iter"])
    except ValueError as exc:
        raise NumericalFailure(str(exc)) from exc
    info = dict(sol.info)
    lower, upper = sandwich(sol, f)
    rep = {"solve": info, "sandwich_lower": lower, "sandwich_upper": upper,
           "mesh_h": sol.h, "shape": list(sol.u.shape)}
    if sol.info["converged"]:
        rep["pogorelov"] = dg.alpha_sweep(sol, _float_list(r["alphas"]))
    if "mesh" in r:
        _, diffs, ratios = mesh_study(r["n"], r["k"], tuple(_int_list(r["mesh"])), f, tol=r["tol"])
        rep["mesh_study"] = {"sizes": _int_list(r["mesh"]), "sup_differences": diffs, "ratios": ratios}
    lam, _ = node_eigenvalues(sol)
    x = sol.coords()[sol.interior]
    rows = [tuple(xx) + (uu,) + tuple(ll) for xx, uu, ll in zip(x, sol.u[sol.interior], lam)]
    hdr = [f"x{j}" for j in range(sol.n)] + ["u"] + [f"lambda{j}" for j in range(sol.n)]
    write_csv(out / "solution.csv", hdr, rows)
    write_csv(out / "convergence.csv", ["iteration", "max_residual"], enumerate(info["history"]))
    rep["verdict"] = "converged" if info["converged"] else f"not converged ({info['status']})"
    return rep, 0 if info["converged"] else 1


def _resolve_rigidity(sec):
    return {"n": _get(sec, "n", int, 2), "k": _get(sec, "k", int, 2),
            "surrogate": sec.get("surrogate", "quadratic").strip(),
            "eps": _get(sec, "eps", float, 0.01), "p": _get(sec, "p", float, 1.5),
            "R": ",".join(repr(v) for v in _get(sec, "R", _float_list, [1.0, 2.0, 4.0, 8.0])),
            "alpha": _get(sec, "alpha", float, 1.0),
            "half_width": _get(sec, "half_width", float, 3.0), "grid": _get(sec, "grid", int, 121)}


def cmd_rigidity(r, run, out, opts):
    from .pde import diagnostics as dg
    kinds = {"quadratic": lambda: dg.Quadratic(r["n"], r["k"]),
             "perturbed": lambda: dg.PerturbedQuadratic(r["n"], r["k"], r["eps"]),
             "power": lambda: dg.PowerGrowth(r["n"], r["k"], r["p"])}
    if r["surrogate"] not in kinds:
        raise ConfigError(f"unknown surrogate {r['surrogate']!r}")
    u = kinds[r["surrogate"]]()
    try:
        fam = dg.rescale_family(u, _float_list(r["R"]), r["alpha"], r["half_width"], r["grid"])
    except dg.GrowthViolation as exc:
        write_jsonl([exc.certificate], out / "witnesses.jsonl")
        return {"verdict": "growth hypothesis rejected", "certificate": exc.certificate}, 0
    write_csv(out / "rescale.csv", ["R", "hess_sup", "pogorelov"], zip(fam.R, fam.hess_sup, fam.pogorelov))
    rep = fam.to_dict()
    rep["verdict"] = f"Hessian spread {fam.spread:.3e} across R"
    return rep, 0


HANDLERS = {
    "identities": (_resolve_identities, cmd_identities),
    "inequality": (_resolve_inequality, cmd_inequality),
    "search": (_resolve_search, cmd_search),
    "solve-radial": (_resolve_radial, cmd_solve_radial),
    "solve-grid": (_resolve_grid, cmd_solve_grid),
    "rigidity": (_resolve_rigidity, cmd_rigidity),
}


def build_parser():
    ap = argparse.ArgumentParser(prog="hessianlab", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI file with a [%s] section and optional [run]" % name)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", default=f"hessianlab-{name}")
        p.add_argument("--workers", type=int)
        p.add_argument("--tolerance-scale", type=float)
        p.add_argument("--svg", action="store_true", help="also write SVG plots (needs matplotlib)")
    return ap


def _run_section(cfg, args):
    sec = cfg.get("run", {})
    seed = args.seed if args.seed is not None else _get(sec, "seed", int, 0)
    env = os.environ.get("HESSIANLAB_WORKERS")
    workers = args.workers or _get(sec, "workers", int, None) or (int(env) if env else None) or (os.cpu_count() or 1)
    ts = args.tolerance_scale if args.tolerance_scale is not None else _get(sec, "tolerance_scale", float, 1.0)
    if seed < 0 or seed >= 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if workers < 1 or not ts > 0:
        raise ConfigError("workers must be >= 1 and tolerance scale > 0")
    return {"seed": seed, "workers": workers, "tolerance_scale": ts}


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = read_config(args.config) if args.config else {}
        run = _run_section(cfg, args)
        resolve, handler = HANDLERS[args.command]
        resolved = resolve(cfg.get(args.command, {}))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_config({"run": run, args.command: resolved}, out / "config.ini")
    try:
        report, code = handler(resolved, run, out, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        report, code = {"verdict": f"failure: {exc}"}, 1
    report = {"command": args.command, "config": {"run": run, args.command: resolved},
              "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(), **report}
    write_json(report, out / "report.json")
    print(f"{args.command}: {report.get('verdict', '')}")
    return code


if __name__ == "__main__":
    sys.exit(main())
