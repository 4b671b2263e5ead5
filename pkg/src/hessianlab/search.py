"""Adversarial minimization of inequality gaps over (lambda, xi).

lambda is parameterized without constraints: lambda_1 (fixed or log-ranged),
n-2 tail entries clipped into boxes, and sigma_k clipped into its range; the
last entry is solved from sigma_k, so every decoded point hits the sigma_k
range exactly. Sorting and the cone/floor/hypothesis predicates are then
checked exactly; infeasible points score 1 + violation. For a feasible lambda
the minimum over xi is exact: every gap is a quadratic form in xi, so the
normalized minimum is a generalized symmetric eigenvalue.
"""
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.optimize import minimize

from . import _kernels
from ._accel import HAVE_NUMBA
from .concavity import (GAP_FUNCTIONS, GapReport, build_terms, default_constants,
                        term_system)
from .cone import ConeContext
from .ddouble import DD

if HAVE_NUMBA:
    from . import _gapkern

TOL = 1e-9
INFEASIBLE = 1.0


def squash(z):
    """Clipped linear map R -> [0, 1]; box edges (ties with lambda_1, the floor,
    the ends of the sigma_k range) are reached exactly at finite z."""
    return np.clip(0.5 + np.asarray(z, dtype=float) / 6.0, 0.0, 1.0)


def unsquash(u):
    return 6.0 * (np.asarray(u, dtype=float) - 0.5)


class SearchError(RuntimeError):
    pass


@dataclass
class SearchConfig:
    inequality_id: str
    ctx: ConeContext
    restarts: int = 200
    max_iters: int = 500
    seed: int = 0
    lambda1_threshold: object = "free"   # "free" or a positive real
    lambda1_mode: str = "at-least"       # "at-least": lambda_1 in [t, t*span]; "exact": lambda_1 = t
    lambda1_span: float = 1e4
    xi_constraint: str = "unit-sphere"   # or "fixed"
    xi: list = None
    normalize: bool = True
    params: dict = field(default_factory=dict)
    objective: str = "gap"               # or "kstar"
    hypothesis: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        t = self.lambda1_threshold
        if t != "free" and not float(t) > 0:
            raise ValueError("lambda1_threshold must be positive or 'free'")
        if self.xi_constraint not in ("unit-sphere", "fixed"):
            raise ValueError("xi_constraint must be 'unit-sphere' or 'fixed'")
        if self.xi_constraint == "fixed" and self.xi is None:
            raise ValueError("fixed xi needs a direction")
        if self.objective not in ("gap", "kstar"):
            raise ValueError("objective must be 'gap' or 'kstar'")

    def to_dict(self):
        d = asdict(self)
        d["ctx"] = self.ctx.to_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        c = d.pop("ctx")
        ctx = ConeContext(c["n"], c["k"], c["A"], tuple(c["sigma_k_range"]))
        return cls(ctx=ctx, **d)


@dataclass
class SearchResult:
    best: GapReport
    trace: list
    converged: bool
    threshold_estimate: float = None
    status: str = ""
    config: dict = None
    kstar: float = None

    def to_dict(self):
        return {
            "best": self.best.to_dict() if self.best is not None else None,
            "trace": self.trace,
            "converged": self.converged,
            "threshold_estimate": self.threshold_estimate,
            "status": self.status,
            "kstar": self.kstar,
            "config": self.config,
        }


def resolve_params(ineq, n, k, params, ctx=None):
    """Fill in the constants each inequality needs."""
    p = dict(params)
    p.setdefault("n", n)
    p.setdefault("k", k)
    if ineq in ("main", "weak", "lu"):
        K, d0, eps = default_constants(k)
        p.setdefault("delta0", d0)
        if ineq == "lu":
            p.setdefault("epsilon", eps)
            p.setdefault("l", 1)
            p.setdefault("delta", 0.5)
            p.setdefault("delta_prime", 0.1)
        else:
            p.setdefault("K", K)
            if "A" not in p:
                p["A"] = ctx.A if ctx is not None and ctx.A is not None else "tight"
    elif ineq == "rw":
        p.setdefault("epsilon", 0.1)
        p.setdefault("delta", 0.5)
        p.setdefault("K", float((k + 1) ** 2))
    elif ineq == "conj15":
        p.setdefault("K", float((k + 1) ** 2))
        p.setdefault("include_j1", False)
    else:
        raise ValueError(f"unknown inequality {ineq!r}")
    return p


# -- exact minimum over xi ---------------------------------------------------------

def _householder(h):
    """Symmetric orthogonal Q with Q h = -|h| e_1 (up to sign)."""
    a = np.linalg.norm(h)
    u = h.astype(float).copy()
    u[0] += a if u[0] >= 0 else -a
    nu = float(u @ u)
    if nu == 0.0:
        return np.eye(h.size), a
    return np.eye(h.size) - (2.0 / nu) * np.outer(u, u), a


def min_ratio(terms, n):
    """min over xi of gap(xi) / bound(xi), bound = xi^T S xi + |c| (g.xi)^2 >= sum |term(xi)|.

    Scaling by S^{-1/2} and rotating h = S^{-1/2} g onto e_1 turns the
    denominator into diag(1 + |c||h|^2, 1, ..., 1), leaving a plain symmetric
    eigenproblem. Returns (value, unit xi).
    """
    M, S, r1 = term_system(terms, n)
    Sd = np.diag(S)
    s = 1.0 / np.sqrt(np.maximum(Sd, max(1e-30 * Sd.max(), 1e-300)))
    Mb = s[:, None] * M * s[None, :]
    if r1:
        (c, g), = r1
        Q, a = _householder(s * g)
    else:
        c, a, Q = 0.0, 0.0, np.eye(n)
    C = Q @ Mb @ Q
    C[0, 0] += c * a * a
    e0 = 1.0 / np.sqrt(1.0 + abs(c) * a * a)
    C[0, :] *= e0
    C[:, 0] *= e0
    C = 0.5 * (C + C.T)
    w, V = np.linalg.eigh(C)
    y = V[:, 0].copy()
    y[0] *= e0
    xi = s * (Q @ y)
    xi /= np.linalg.norm(xi)
    return float(w[0]), xi


def _ldl_solve(A, b):
    """Solve A x = b for symmetric A by LDL^T without pivoting; None unless A is PD."""
    m = len(A)
    L = [[None] * m for _ in range(m)]
    Dg = [None] * m
    for j in range(m):
        s = A[j][j]
        for p in range(j):
            s = s - L[j][p] * L[j][p] * Dg[p]
        if not s > 0:
            return None
        Dg[j] = s
        L[j][j] = 1.0
        for i in range(j + 1, m):
            t = A[i][j]
            for p in range(j):
                t = t - L[i][p] * L[j][p] * Dg[p]
            L[i][j] = t / s
    y = list(b)
    for i in range(m):
        for p in range(i):
            y[i] = y[i] - L[i][p] * y[p]
    x = [y[i] / Dg[i] for i in range(m)]
    for i in range(m - 1, -1, -1):
        for p in range(i + 1, m):
            x[i] = x[i] - L[p][i] * x[p]
    return x


def kstar_from_terms(terms, n, exact=False):
    """Smallest K making the gap nonnegative for every xi (inf when none does).

    The K-term is c (g.xi)^2 with c = K w; writing B for the other terms,
    K* = -min{xi^T B xi : g.xi = 1} / w, provided B is positive definite on
    g-perp. The constraint is eliminated through xi_1 = (1 - sum_{j>1} g_j xi_j)/g_1.
    """
    zero = DD(0.0) if exact else 0.0
    B = [[zero] * n for _ in range(n)]
    g = w = None
    for name, kind, data in terms:
        if kind == "full":
            for p in range(n):
                for q in range(n):
                    B[p][q] = B[p][q] + data[p][q]
        elif kind == "diag":
            for p in range(n):
                B[p][p] = B[p][p] + data[p]
        else:
            w, g = data
    if g is None:
        raise ValueError("gap has no K-term")
    g = list(g)
    # xi = a + P y, a = e_1/g_1, P = [-g_{2:}/g_1 ; I]
    P = [[-g[j + 1] / g[0] for j in range(n - 1)]]
    for i in range(1, n):
        P.append([1.0 if j == i - 1 else 0.0 for j in range(n - 1)])
    a = [1.0 / g[0]] + [0.0] * (n - 1)
    BP = [[sum((B[i][p] * P[p][j] for p in range(n)), zero) for j in range(n - 1)] for i in range(n)]
    PBP = [[sum((P[p][i] * BP[p][j] for p in range(n)), zero) for j in range(n - 1)] for i in range(n - 1)]
    Ba = [sum((B[i][p] * a[p] for p in range(n)), zero) for i in range(n)]
    aBa = sum((a[i] * Ba[i] for i in range(n)), zero)
    b = [sum((P[p][j] * Ba[p] for p in range(n)), zero) for j in range(n - 1)]
    y = _ldl_solve(PBP, b)
    if y is None:
        return float("inf")
    mn = aBa - sum((b[j] * y[j] for j in range(n - 1)), zero)
    # w carries K; terms were built with K = 1
    return float(-mn / w)


def kstar(ineq, lam, params, exact=False):
    """K* at a sorted spectrum (for main, weak, rw and conj15)."""
    p = dict(params)
    p["K"] = 1.0
    v = np.asarray(lam, dtype=float)
    return kstar_from_terms(build_terms(ineq, v, p, exact=exact), v.size, exact=exact)


# -- parameterization ------------------------------------------------------------

class Problem:
    """Decoded search problem for one SearchConfig."""

    def __init__(self, cfg):
        self.cfg = cfg
        ctx = cfg.ctx
        self.n, self.k = ctx.n, ctx.k
        self.ineq = cfg.inequality_id
        self.params = resolve_params(self.ineq, self.n, self.k, cfg.params, ctx)
        t = cfg.lambda1_threshold
        self.lam1_fixed = None
        if t == "free":
            self.lam1_lo, self.lam1_hi = 1.0, float(cfg.lambda1_span)
        elif cfg.lambda1_mode == "exact":
            self.lam1_fixed = float(t)
        else:
            self.lam1_lo, self.lam1_hi = float(t), float(t) * float(cfg.lambda1_span)
        self.m, self.M = ctx.sigma_k_range
        self.dim = (0 if self.lam1_fixed is not None else 1) + (self.n - 2) + 1
        self.xi_fixed = None if cfg.xi_constraint == "unit-sphere" else np.asarray(cfg.xi, dtype=float)

    def _floor(self, lam1):
        A = self.cfg.ctx.A
        return -(self.n - self.k) * lam1 if A is None else -float(A)

    def boxes(self, lam1):
        """(lo, hi) for the n-2 tail entries and for the solved last entry."""
        n = self.n
        fl = self._floor(lam1)
        lo = np.full(n - 2, fl)
        hi = np.full(n - 2, lam1)
        xlo, xhi = fl, lam1
        if self.ineq == "lu" and self.cfg.hypothesis:
            l = int(self.params["l"])
            dl, dp = self.params["delta"] * lam1, self.params["delta_prime"] * lam1
            lo[:l - 1] = np.maximum(lo[:l - 1], dl)
            hi[l - 1:] = np.minimum(hi[l - 1:], dp)
            xhi = min(xhi, dp)
        return lo, hi, xlo, xhi

    def decode(self, z):
        """(sorted lambda, violation); violation 0 means exactly feasible."""
        z = np.asarray(z, dtype=float)
        j = 0
        if self.lam1_fixed is not None:
            lam1 = self.lam1_fixed
        else:
            lam1 = self.lam1_lo * (self.lam1_hi / self.lam1_lo) ** squash(z[0])
            j = 1
        lo, hi, xlo, xhi = self.boxes(lam1)
        tail = lo + (hi - lo) * squash(z[j:j + self.n - 2])
        s = self.m + (self.M - self.m) * squash(z[-1])
        rest = np.concatenate([[lam1], tail])
        e = _kernels.esp_single(rest)
        k = self.k
        den = e[k - 1]
        num = s - (e[k] if k < self.n else 0.0)
        if not den > 0:
            return None, 1.0 + min(1.0, abs(den))
        x = num / den
        scale = abs(lam1) + 1.0
        if x > xhi:
            return None, min(1.0, (x - xhi) / scale) + 1e-12
        if x < xlo:
            return None, min(1.0, (xlo - x) / scale) + 1e-12
        v = -np.sort(-np.concatenate([rest, [x]]))
        viol = self.violation(v)
        return (v if viol == 0 else None), viol

    def violation(self, v):
        """Exact stratum predicate; 0 when satisfied."""
        k = self.k
        sig = _kernels.esp_single(v)
        bad = [j for j in range(1, k + 1) if not sig[j] > 0]
        if bad:
            return 1e-6 + 1e-3 * len(bad)
        if not (self.m <= sig[k] <= self.M):
            return 1e-6
        if v[-1] < self._floor(v[0]):
            return 1e-6
        if self.lam1_fixed is not None and v[0] != self.lam1_fixed:
            return 1e-6
        if self.lam1_fixed is None and not (self.lam1_lo <= v[0] <= self.lam1_hi):
            return 1e-6
        if self.ineq == "lu" and self.cfg.hypothesis:
            l = int(self.params["l"])
            if not (v[l - 1] >= self.params["delta"] * v[0]):
                return 1e-6
            if l < self.n and not (v[l] <= self.params["delta_prime"] * v[0]):
                return 1e-6
        if self.ineq == "conj15" and not 2 * k > self.n:
            return 1.0
        return 0.0

    def encode(self, lam1, tail, s):
        lo, hi, _, _ = self.boxes(lam1)
        u = np.clip((np.asarray(tail) - lo) / np.where(hi > lo, hi - lo, 1.0), 0.0, 1.0)
        us = np.clip((s - self.m) / max(self.M - self.m, 1e-300), 0.0, 1.0)
        parts = []
        if self.lam1_fixed is None:
            r = np.log(lam1 / self.lam1_lo) / np.log(self.lam1_hi / self.lam1_lo)
            parts.append([unsquash(np.clip(r, 0.0, 1.0))])
        parts.append(unsquash(u))
        parts.append([unsquash(us)])
        return np.concatenate(parts)

    def draw_start(self, rng):
        """Random pre-image whose decoded point is feasible (None after 500 tries)."""
        for _ in range(500):
            if self.lam1_fixed is not None:
                lam1 = self.lam1_fixed
            elif rng.random() < 0.3:
                lam1 = self.lam1_lo
            else:
                lam1 = float(np.exp(rng.uniform(np.log(self.lam1_lo), np.log(self.lam1_hi))))
            lo, hi, _, _ = self.boxes(lam1)
            tail = np.empty(self.n - 2)
            for i in range(self.n - 2):
                a, b = lo[i], hi[i]
                c = rng.random()
                if c < 0.2:
                    tail[i] = b
                elif c < 0.3:
                    tail[i] = a
                elif a > 0:
                    tail[i] = np.exp(rng.uniform(np.log(a), np.log(b)))
                elif rng.random() < 0.5 and b > 1e-4:
                    tail[i] = np.exp(rng.uniform(np.log(1e-4), np.log(b)))
                else:
                    tail[i] = rng.uniform(a, min(b, max(-a, 1.0)))
            s = rng.choice([self.m, self.M]) if rng.random() < 0.3 else rng.uniform(self.m, self.M)
            z = self.encode(lam1, tail, s)
            v, viol = self.decode(z)
            if v is not None:
                return z
        return None

    def eligible(self, v):
        if self.ineq != "rw":
            return [None]
        if "i" in self.params:
            i = int(self.params["i"])
            ok = (not self.cfg.hypothesis) or v[i - 1] >= self.params["delta"] * v[0]
            return [i] if ok else []
        if not self.cfg.hypothesis:
            return list(range(1, self.n + 1))
        d = self.params["delta"]
        return [i for i in range(1, self.n + 1) if v[i - 1] >= d * v[0]]

    def params_for(self, i):
        p = dict(self.params)
        if i is not None:
            p["i"] = i
        return p

    def _prm(self, v, i):
        p = self.params
        A = p.get("A", 0.0)
        if isinstance(A, str):
            A = max(0.0, -float(v[-1]))
        return np.array([float(p.get("K", 0.0)), float(A), float(p.get("delta0", 0.0)),
                         float(p.get("epsilon", 0.0)), float(p.get("l", 0)),
                         float((i or 1) - 1), float(bool(p.get("include_j1", False)))])

    def evaluate(self, v, compiled=None):
        """(objective, xi, i) at a feasible sorted lambda."""
        if compiled is None:
            compiled = HAVE_NUMBA
        best = (np.inf, None, None)
        for i in self.eligible(v):
            p = self.params_for(i)
            if compiled and self.cfg.objective == "gap" and self.xi_fixed is None:
                M, S, c, g = _gapkern.gap_system(_gapkern.CODES[self.ineq], v, self.k, self._prm(v, i))
                w, xi = _gapkern.min_ratio(M, S, c, g)
                cand = (float(w), xi, i)
            elif self.cfg.objective == "kstar":
                ks = kstar(self.ineq, v, p)
                val = -np.arcsinh(min(ks, 1e300))
                cand = (val, None, i)
            else:
                terms = build_terms(self.ineq, v, p)
                if self.xi_fixed is not None:
                    from .concavity import evaluate_terms
                    vals = evaluate_terms(terms, self.xi_fixed)
                    sc = sum(abs(t) for t in vals.values()) or 1.0
                    gap = sum(vals.values())
                    cand = (gap / sc if self.cfg.normalize else gap, self.xi_fixed, i)
                else:
                    cand = (*min_ratio(terms, self.n), i)
            if cand[0] < best[0]:
                best = cand
        return best

    def __call__(self, z):
        v, viol = self.decode(z)
        if v is None:
            return INFEASIBLE + viol
        return self.evaluate(v)[0]


# -- restarts -----------------------------------------------------------------

def _restart(cfg, idx, problem=None):
    prob = problem or Problem(cfg)
    rng = np.random.default_rng([int(cfg.seed), int(idx)])
    z0 = prob.draw_start(rng)
    if z0 is None:
        return {"restart": idx, "status": "no feasible start"}
    # a collapsed simplex is rebuilt around the incumbent until the iteration
    # budget is spent, so every restart runs at least max_iters iterations
    x, fx = z0, prob(z0)
    nit = nfev = 0
    while nit < cfg.max_iters:
        simplex = np.vstack([x] + [x + 0.5 * e for e in np.eye(prob.dim)])
        res = minimize(prob, x, method="Nelder-Mead",
                       options={"maxiter": cfg.max_iters - nit, "maxfev": 4 * cfg.max_iters * (prob.dim + 1),
                                "xatol": 0.0, "fatol": 0.0, "initial_simplex": simplex})
        nit += max(int(res.nit), 1)
        nfev += int(res.nfev)
        if res.fun <= fx:
            x, fx = res.x, float(res.fun)
    v, viol = prob.decode(x)
    if v is None:
        return {"restart": idx, "status": "diverged", "nit": nit}
    val, xi, i = prob.evaluate(v)
    out = {"restart": idx, "status": "ok", "nit": nit, "nfev": nfev,
           "objective": float(val), "lambda": v.tolist(), "i": i}
    if xi is not None:
        out["xi"] = [float(t) for t in xi]
    return out


def _restart_chunk(args):
    cfg_dict, idxs = args
    cfg = SearchConfig.from_dict(cfg_dict)
    prob = Problem(cfg)
    return [_restart(cfg, i, prob) for i in idxs]


def _run_restarts(cfg):
    idxs = list(range(cfg.restarts))
    workers = max(1, int(cfg.workers))
    if workers == 1:
        prob = Problem(cfg)
        return [_restart(cfg, i, prob) for i in idxs]
    chunks = [idxs[w::workers] for w in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(_restart_chunk, [(cfg.to_dict(), c) for c in chunks]))
    out = [r for part in parts for r in part]
    return sorted(out, key=lambda r: r["restart"])


def _report(prob, entry, exact=True):
    p = prob.params_for(entry.get("i"))
    rep = GAP_FUNCTIONS[prob.ineq](np.array(entry["lambda"]), np.array(entry["xi"]), p, exact=exact)
    rep.flags["arithmetic"] = "double-double" if exact else "double"
    rep.flags["restart"] = entry["restart"]
    if rep.gap < 0:
        rep.flags["verified"] = True
    return rep


def minimize_gap(cfg):
    """Multi-start Nelder-Mead over the stratum; best = smallest normalized gap."""
    if cfg.objective != "gap":
        raise ValueError("minimize_gap needs objective='gap'; use maximize_kstar")
    prob = Problem(cfg)
    runs = _run_restarts(cfg)
    ok = [r for r in runs if r["status"] == "ok"]
    if not ok:
        if all(r["status"] == "no feasible start" for r in runs):
            raise SearchError("no feasible start found")
        raise SearchError("all restarts diverged")
    trace = []
    best = None
    for r in ok:
        rep = _report(prob, r)
        r["gap"] = rep.gap
        r["scale"] = rep.scale
        r["normalized"] = rep.normalized
        trace.append(r)
        if best is None or rep.normalized < best.normalized:
            best = rep
    trace.extend(r for r in runs if r["status"] != "ok")
    trace.sort(key=lambda r: r["restart"])
    vals = sorted(r["normalized"] for r in ok)
    converged = len(vals) >= 2 and vals[1] - vals[0] <= 1e-6 * max(1.0, abs(vals[0]))
    status = "violation found" if best.normalized < -TOL else "not found at budget"
    return SearchResult(best, trace, converged, status=status, config=cfg.to_dict())


def maximize_kstar(cfg):
    """Largest K* over the stratum (the smallest K that the inequality needs)."""
    cfg2 = SearchConfig.from_dict({**cfg.to_dict(), "objective": "kstar"})
    prob = Problem(cfg2)
    runs = _run_restarts(cfg2)
    ok = [r for r in runs if r["status"] == "ok"]
    if not ok:
        raise SearchError("no feasible start found")
    for r in ok:
        p = prob.params_for(r["i"])
        r["kstar"] = kstar(prob.ineq, np.array(r["lambda"]), p, exact=True)
    top = max(ok, key=lambda r: r["kstar"])
    p = prob.params_for(top["i"])
    ks = top["kstar"]
    # witness direction at K = K*: the gap is pinned at zero there
    p_eval = dict(p)
    p_eval["K"] = ks if np.isfinite(ks) else p.get("K", 1.0)
    _, xi = min_ratio(build_terms(prob.ineq, np.array(top["lambda"]), p_eval), prob.n)
    rep = GAP_FUNCTIONS[prob.ineq](np.array(top["lambda"]), xi, p_eval, exact=True)
    rep.flags["restart"] = top["restart"]
    trace = sorted(runs, key=lambda r: r["restart"])
    vals = sorted((r["kstar"] for r in ok), reverse=True)
    converged = len(vals) >= 2 and abs(vals[0] - vals[1]) <= 1e-6 * max(1.0, abs(vals[0]))
    return SearchResult(rep, trace, converged, status="kstar", config=cfg2.to_dict(), kstar=ks)


# -- threshold scan ------------------------------------------------------------

@dataclass
class Frontier:
    grid: list
    min_gaps: list          # normalized; None where the stratum is empty at t
    threshold: float        # smallest grid t with every feasible t' >= t nonnegative
    monotone: bool
    witnesses: list

    def to_dict(self):
        return asdict(self)

    def csv_rows(self):
        return [(t, g) for t, g in zip(self.grid, self.min_gaps)]


def geometric_grid(start, stop, ratio=2 ** 0.5):
    out = [float(start)]
    while out[-1] * ratio <= stop * (1 + 1e-12):
        out.append(out[-1] * ratio)
    return out


def threshold_scan(cfg, lambda1_grid, tol=TOL):
    grid = [float(t) for t in lambda1_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be ascending")
    gaps, wits = [], []
    for t in grid:
        c = SearchConfig.from_dict({**cfg.to_dict(), "lambda1_threshold": t, "lambda1_mode": "exact"})
        try:
            r = minimize_gap(c)
        except SearchError:
            gaps.append(None)
            wits.append(None)
            continue
        gaps.append(r.best.normalized)
        wits.append(r.best.to_dict())
    signs = [g >= -tol for g in gaps if g is not None]
    thr = None
    for j in range(len(grid)):
        tail = [g for g in gaps[j:] if g is not None]
        if tail and all(g >= -tol for g in tail) and gaps[j] is not None:
            thr = grid[j]
            break
    monotone = all(not (a and not b) for a, b in zip(signs, signs[1:]))
    return Frontier(grid, gaps, thr, monotone, wits)


# -- constant fitting ----------------------------------------------------------

@dataclass
class FitResult:
    quantity: str
    orientation: str         # "inf" or "sup"
    extremum: float
    constant: float          # 0.95 x inf or 1.05 x sup
    witness: dict
    used: int
    excluded: int

    def to_dict(self):
        return asdict(self)


def _ratio_sigma_km1(lam, k, **kw):
    sig = _kernels.esp_single(np.asarray(lam, dtype=float))
    return sig[k - 1] / lam[0] ** (1.0 / (k - 1))


def _ratio_quotient_chain(lam, k, gamma=None, **kw):
    from .concavity import quotient_chain_sides
    lhs, rhs = quotient_chain_sides(lam, gamma, k)
    return lhs / rhs


def _ratio_decomposition(lam, k, gamma=None, **kw):
    from .concavity import decomposition_sides
    lhs, rhs, _ = decomposition_sides(lam, gamma, k)
    return lhs / rhs


def _ratio_rw_kstar(lam, k, params=None, **kw):
    v = np.asarray(lam, dtype=float)
    p = resolve_params("rw", v.size, k, params or {})
    vals = []
    for i in range(1, v.size + 1):
        if v[i - 1] >= p["delta"] * v[0]:
            vals.append(kstar("rw", v, {**p, "i": i}, exact=True))
    return max(vals)


def _ratio_kappa_k(lam, k, params=None, **kw):
    """Only the branch lambda_{k-1} > A defines the constant; other samples are excluded."""
    from .cone import kappa_k_ratio
    A = float((params or {}).get("A", 1.0))
    v = np.asarray(lam, dtype=float)
    if not v[k - 2] > A:
        raise ValueError("branch lambda_{k-1} <= A")
    return kappa_k_ratio(v, k)


QUANTITIES = {
    "sigma_km1": ("inf", _ratio_sigma_km1),
    "kappa_k": ("sup", _ratio_kappa_k),
    "quotient_chain": ("inf", _ratio_quotient_chain),
    "decomposition": ("inf", _ratio_decomposition),
    "rw_kstar": ("sup", _ratio_rw_kstar),
}


def fit_constant(quantity_id, batch, k, directions=None, params=None):
    """Extremal ratio over a batch with its witness and the safety-margined constant.

    Samples where the ratio is undefined (zero denominator, non-finite) are
    excluded and counted.
    """
    orient, fn = QUANTITIES[quantity_id]
    rows = [np.asarray(b, dtype=float) for b in batch]
    if not rows:
        raise ValueError("empty batch")
    best = None
    used = excluded = 0
    for j, lam in enumerate(rows):
        gm = None if directions is None else np.asarray(directions[j], dtype=float)
        try:
            with np.errstate(divide="raise", invalid="raise"):
                r = float(fn(lam, k, gamma=gm, params=params))
        except (ZeroDivisionError, FloatingPointError, ValueError):
            excluded += 1
            continue
        if not np.isfinite(r):
            excluded += 1
            continue
        used += 1
        if best is None or (r < best[0] if orient == "inf" else r > best[0]):
            best = (r, j)
    if best is None:
        raise ValueError("ratio undefined on every sample")
    r, j = best
    wit = {"lambda": rows[j].tolist()}
    if directions is not None:
        wit["gamma"] = [float(t) for t in directions[j]]
    const = 0.95 * r if orient == "inf" else 1.05 * r
    return FitResult(quantity_id, orient, r, const, wit, used, excluded)


# -- export ---------------------------------------------------------------------

def write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_frontier_csv(frontier, path):
    with open(path, "w") as fh:
        fh.write("lambda1,min_gap\n")
        for t, g in frontier.csv_rows():
            fh.write(f"{t!r},{'' if g is None else repr(g)}\n")


def default_workers():
    env = os.environ.get("HESSIANLAB_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def min_pencil(Lm, R, basis):
    """inf of g^T L g / g^T R g over span(basis), with its minimizer."""
    from scipy.linalg import eigh
    Lp = basis.T @ Lm @ basis
    Rp = basis.T @ R @ basis
    Lp = 0.5 * (Lp + Lp.T)
    Rp = 0.5 * (Rp + Rp.T)
    w, V = eigh(Lp, Rp, subset_by_index=[0, 0])
    gm = basis @ V[:, 0]
    return float(w[0]), gm / np.linalg.norm(gm)


def worst_directions(quantity_id, batch, k):
    """Per-sample minimizing gamma for the quotient-chain / decomposition ratios."""
    from .concavity import decomposition_matrices, quotient_chain_matrices
    build = {"quotient_chain": quotient_chain_matrices, "decomposition": decomposition_matrices}[quantity_id]
    out = []
    for lam in batch:
        Lm, R, B = build(lam, k)
        if B.shape[1] == 0:
            out.append(np.zeros(len(lam)))
            continue
        out.append(min_pencil(Lm, R, B)[1])
    return out
