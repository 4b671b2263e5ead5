"""Signed gaps (LHS - RHS) of the concavity inequalities and identities.

Every inequality gap is a quadratic form in xi assembled from named terms:
  'full'  : xi^T T xi
  'diag'  : sum_i d_i xi_i^2
  'rank1' : c (v . xi)^2
The term builders are written with plain arithmetic so the same code runs on
float arrays and on object arrays of double-double numbers.
"""
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import _kernels
from .ddouble import DD
from .identities import fd_q_second
from .symfun import (ConeViolation, Derivs, Spectrum, _quotient_rows, _values,
                     canonical_order, quotient_derivatives)

INEQUALITIES = ("main", "weak", "lu", "rw", "conj15")


@dataclass
class GapReport:
    inequality_id: str
    lam: Spectrum
    xi: np.ndarray
    params: dict
    gap: float
    scale: float
    terms: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    @property
    def normalized(self):
        return self.gap / self.scale

    def to_dict(self):
        return {
            "inequality_id": self.inequality_id,
            "lambda": self.lam.tolist(),
            "xi": [float(x) for x in self.xi],
            "params": {k: _jsonable(v) for k, v in self.params.items()},
            "gap": float(self.gap),
            "scale": float(self.scale),
            "terms": {k: float(v) for k, v in self.terms.items()},
            "flags": {k: _jsonable(v) for k, v in self.flags.items()},
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["inequality_id"], Spectrum(d["lambda"]), np.array(d["xi"], dtype=float),
                   dict(d["params"]), float(d["gap"]), float(d["scale"]),
                   dict(d.get("terms", {})), dict(d.get("flags", {})))


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def default_constants(k):
    """(K, delta0, epsilon) from the proof: eps = 1/(k+1)^2, K = 1/eps."""
    if k < 2:
        raise ValueError("k must be >= 2")
    eps = 1.0 / (k + 1) ** 2
    K = float((k + 1) ** 2)
    delta0 = min(1.0 / 15.0, 1.0 / ((k + 1) * (k + 3)))
    return K, delta0, eps


# -- derivative data -----------------------------------------------------------

def _float_data(v, k):
    D = Derivs(v)
    return D.sig[0], D.grad(k)[0], D.hess(k)[0]


def _esp_dd(x):
    e = [DD(1.0)] + [DD(0.0)] * len(x)
    for i, val in enumerate(x):
        for j in range(i + 1, 0, -1):
            e[j] = e[j] + e[j - 1] * float(val)
    return e


def _dd_data(v, k):
    n = len(v)
    sig = np.array(_esp_dd(v), dtype=object)
    g = np.empty(n, dtype=object)
    for i in range(n):
        g[i] = _esp_dd([v[j] for j in range(n) if j != i])[k - 1]
    H = np.empty((n, n), dtype=object)
    for p in range(n):
        H[p, p] = DD(0.0)
    for p, q in combinations(range(n), 2):
        val = _esp_dd([v[j] for j in range(n) if j not in (p, q)])[k - 2] if k >= 2 else DD(0.0)
        H[p, q] = H[q, p] = val
    return sig, g, H


# -- term builders -------------------------------------------------------------

def _resolve_A(A, v):
    if isinstance(A, str):
        if A != "tight":
            raise ValueError(f"unknown A mode {A!r}")
        return max(0.0, -float(v[-1]))
    return float(A)


def _terms_main(v, sig, g, H, k, K, A, delta0, weak=False):
    n = len(v)
    sk = sig[k]
    lam1 = float(v[0])
    tail = [0.0] + [2 * g[i] / ((lam1 + A + 1.0) * sk) for i in range(1, n)]
    if weak:
        rhs0 = -(1.0 + delta0) / (lam1 * lam1)
    else:
        rhs0 = -(1.0 + delta0) * g[0] / (lam1 * sk)
    rhs = [rhs0] + [0.0] * (n - 1)
    return [("cross", "full", -H / sk),
            ("K", "rank1", (K / (sk * sk), g)),
            ("tail", "diag", tail),
            ("rhs", "diag", rhs)]


def _terms_lu(v, sig, g, H, k, l, epsilon, delta0):
    n = len(v)
    sk = sig[k]
    lam1 = float(v[0])
    rhs = [-(1.0 - epsilon) / (lam1 * lam1)] + [0.0] * (n - 1)
    tail = [0.0] * l + [delta0 * g[i] / (lam1 * sk) for i in range(l, n)]
    return [("cross", "full", -H / sk),
            ("square", "rank1", (1.0 / (sk * sk), g)),
            ("rhs", "diag", rhs),
            ("tail", "diag", tail)]


def _terms_rw(v, sig, g, H, i, K, epsilon):
    n = len(v)
    ki = float(v[i])
    own = [0.0] * n
    own[i] = -g[i]
    others = [(1.0 + epsilon) * g[j] if j != i else 0.0 for j in range(n)]
    return [("cross", "full", -ki * H),
            ("K", "rank1", (ki * K, g)),
            ("own", "diag", own),
            ("others", "diag", others)]


def _terms_conj15(v, sig, g, H, K, include_j1=False):
    n = len(v)
    k1 = float(v[0])
    own = [-g[0]] + [0.0] * (n - 1)
    diag = [g[j] + (k1 + float(v[j])) * H[0, j] for j in range(n)]
    if not include_j1:
        diag[0] = 0.0
    return [("cross", "full", -k1 * H),
            ("K", "rank1", (k1 * K, g)),
            ("own", "diag", own),
            ("diag", "diag", diag)]


def build_terms(ineq, v, params, exact=False):
    """Term list for inequality `ineq` at sorted spectrum v."""
    k = int(params["k"])
    sig, g, H = (_dd_data if exact else _float_data)(v, k)
    if ineq in ("main", "weak"):
        A = _resolve_A(params["A"], v)
        return _terms_main(v, sig, g, H, k, params["K"], A, params["delta0"], weak=(ineq == "weak"))
    if ineq == "lu":
        return _terms_lu(v, sig, g, H, k, int(params["l"]), params["epsilon"], params["delta0"])
    if ineq == "rw":
        return _terms_rw(v, sig, g, H, int(params["i"]) - 1, params["K"], params["epsilon"])
    if ineq == "conj15":
        return _terms_conj15(v, sig, g, H, params["K"], params.get("include_j1", False))
    raise ValueError(f"unknown inequality {ineq!r}")


def evaluate_terms(terms, xi, exact=False):
    """Values of every term at xi (floats, or DD when exact)."""
    out = {}
    n = len(xi)
    if not exact:
        x = np.asarray(xi, dtype=float)
        for name, kind, data in terms:
            if kind == "full":
                out[name] = float(x @ np.asarray(data, dtype=float) @ x)
            elif kind == "diag":
                out[name] = float(np.dot(np.asarray(data, dtype=float), x * x))
            else:
                c, vec = data
                out[name] = float(c) * float(np.dot(np.asarray(vec, dtype=float), x)) ** 2
        return out
    x = [float(t) for t in xi]
    for name, kind, data in terms:
        acc = DD(0.0)
        if kind == "full":
            for p in range(n):
                for q in range(n):
                    if x[p] != 0.0 and x[q] != 0.0:
                        acc = acc + data[p][q] * x[p] * x[q]
        elif kind == "diag":
            for p in range(n):
                acc = acc + data[p] * x[p] * x[p]
        else:
            c, vec = data
            s = DD(0.0)
            for p in range(n):
                s = s + vec[p] * x[p]
            acc = c * s * s
        out[name] = acc
    return out


def term_system(terms, n):
    """(M, S, rank1) with gap(xi) = xi^T M xi + sum c (v.xi)^2 and
    |each non-rank-one term| <= xi^T S xi."""
    M = np.zeros((n, n))
    S = np.zeros((n, n))
    r1 = []
    for _, kind, data in terms:
        if kind == "full":
            T = np.asarray(data, dtype=float)
            M += T
            S[np.diag_indices(n)] += np.abs(T).sum(axis=1)
        elif kind == "diag":
            d = np.asarray(data, dtype=float)
            M[np.diag_indices(n)] += d
            S[np.diag_indices(n)] += np.abs(d)
        else:
            c, vec = data
            r1.append((float(c), np.asarray(vec, dtype=float)))
    return M, S, r1


def _canon(lam, xi):
    v = _values(lam)
    x = np.asarray(xi, dtype=float).reshape(-1)
    if x.size != v.size:
        raise ValueError("xi has the wrong length")
    order = canonical_order(v)
    return v[order], x[order]


def _check_cone(v, k):
    sig = _kernels.esp_single(v)
    for j in range(1, k + 1):
        if not sig[j] > 0:
            raise ConeViolation(j, float(sig[j]), k)
    return sig


def _report(ineq, v, x, params, flags, exact=False):
    terms = build_terms(ineq, v, params, exact=exact)
    vals = evaluate_terms(terms, x, exact=exact)
    if exact:
        gap_dd = DD(0.0)
        for t in vals.values():
            gap_dd = gap_dd + t
        gap = float(gap_dd)
        vals = {k: float(t) for k, t in vals.items()}
    else:
        gap = float(sum(vals.values()))
    scale = float(sum(abs(t) for t in vals.values()))
    if scale == 0.0:
        scale = 1.0
    return GapReport(ineq, Spectrum(v), x, dict(params), gap, scale, vals, flags)


def _exploratory(k):
    return {"exploratory": k == 2}


# -- public gap functions --------------------------------------------------------

def main_gap(lam, xi, k, K=None, A=1.0, delta0=None, exact=False):
    """Gap of the semi-convex concavity inequality (RHS sigma_k^{11} xi_1^2/(lambda_1 sigma_k))."""
    v, x = _canon(lam, xi)
    Kd, dd, _ = default_constants(k)
    K = Kd if K is None else K
    delta0 = dd if delta0 is None else delta0
    _check_cone(v, k)
    if not v[0] > 0:
        raise ValueError("lambda_1 must be positive")
    Aval = _resolve_A(A, v)
    flags = _exploratory(k)
    flags["floor_ok"] = bool(v[-1] >= -Aval)
    params = {"n": len(v), "k": k, "K": K, "A": A, "delta0": delta0}
    return _report("main", v, x, params, flags, exact)


def weak_gap(lam, xi, k, K=None, A=1.0, delta0=None, exact=False):
    """Same left side as main_gap, right side (1+delta0) xi_1^2/lambda_1^2."""
    v, x = _canon(lam, xi)
    Kd, dd, _ = default_constants(k)
    K = Kd if K is None else K
    delta0 = dd if delta0 is None else delta0
    _check_cone(v, k)
    if not v[0] > 0:
        raise ValueError("lambda_1 must be positive")
    Aval = _resolve_A(A, v)
    flags = _exploratory(k)
    flags["floor_ok"] = bool(v[-1] >= -Aval)
    params = {"n": len(v), "k": k, "K": K, "A": A, "delta0": delta0}
    return _report("weak", v, x, params, flags, exact)


def main_minus_weak(lam, xi, k, delta0=None):
    """weak_gap - main_gap = (1+delta0)(sigma_k^{11}/(lambda_1 sigma_k) - 1/lambda_1^2) xi_1^2."""
    v, x = _canon(lam, xi)
    _, dd, _ = default_constants(k)
    delta0 = dd if delta0 is None else delta0
    sig, g, _ = _float_data(v, k)
    return (1.0 + delta0) * (g[0] / (v[0] * sig[k]) - 1.0 / v[0] ** 2) * x[0] ** 2


def lu_hypothesis(v, l, delta, delta_prime):
    v = _values(v)
    upper = v[l] <= delta_prime * v[0] if l < len(v) else True
    return bool(v[l - 1] >= delta * v[0] and upper)


def lu_gap(lam, xi, k, l, epsilon, delta, delta0, delta_prime=None, exact=False):
    """Gap of Lu's inequality; the hypothesis is evaluated and recorded, not enforced."""
    v, x = _canon(lam, xi)
    _check_cone(v, k)
    if not 1 <= l < k:
        raise ValueError(f"need 1 <= l < k, got l={l}, k={k}")
    flags = _exploratory(k)
    flags["hypothesis_met"] = lu_hypothesis(v, l, delta, delta_prime) if delta_prime is not None else None
    params = {"n": len(v), "k": k, "l": l, "epsilon": epsilon, "delta": delta,
              "delta0": delta0, "delta_prime": delta_prime}
    return _report("lu", v, x, params, flags, exact)


def rw_gap(kappa, xi, n, i, K, epsilon, delta, k=None, exact=False):
    """Gap of the (n-1)-convex inequality; `i` is 1-based as in kappa_i.

    With k < n-1 sigma_{n-1} is replaced by sigma_k (the failure-search variant).
    """
    v, x = _canon(kappa, xi)
    if len(v) != n:
        raise ValueError("kappa has the wrong length")
    k = n - 1 if k is None else k
    _check_cone(v, k)
    if not 1 <= i <= n:
        raise ValueError("index i out of range")
    flags = {"hypothesis_met": bool(v[i - 1] >= delta * v[0]), "valid_case": k == n - 1}
    params = {"n": n, "k": k, "i": i, "K": K, "epsilon": epsilon, "delta": delta}
    return _report("rw", v, x, params, flags, exact)


def conjecture15_gap(kappa, xi, n, k, K, include_j1=False, exact=False):
    """Gap of the 2k > n conjecture (reported, never asserted).

    The last sum runs over j != 1 by default; include_j1=True adds the j = 1
    summand, which cancels the -sigma_k^{11} xi_1^2 term exactly.
    """
    v, x = _canon(kappa, xi)
    if len(v) != n:
        raise ValueError("kappa has the wrong length")
    if not 2 * k > n:
        raise ValueError("conjecture needs 2k > n")
    _check_cone(v, k)
    params = {"n": n, "k": k, "K": K, "include_j1": bool(include_j1)}
    return _report("conj15", v, x, params, {"status": "open"}, exact)


GAP_FUNCTIONS = {
    "main": lambda lam, xi, p, exact=False: main_gap(lam, xi, p["k"], p["K"], p["A"], p["delta0"], exact),
    "weak": lambda lam, xi, p, exact=False: weak_gap(lam, xi, p["k"], p["K"], p["A"], p["delta0"], exact),
    "lu": lambda lam, xi, p, exact=False: lu_gap(lam, xi, p["k"], p["l"], p["epsilon"], p["delta"],
                                                 p["delta0"], p.get("delta_prime"), exact),
    "rw": lambda lam, xi, p, exact=False: rw_gap(lam, xi, p["n"], p["i"], p["K"], p["epsilon"],
                                                 p["delta"], p.get("k"), exact),
    "conj15": lambda lam, xi, p, exact=False: conjecture15_gap(lam, xi, p["n"], p["k"], p["K"],
                                                               p.get("include_j1", False), exact),
}


def recompute(report, exact=False):
    """Re-evaluate a GapReport from its witness alone."""
    return GAP_FUNCTIONS[report.inequality_id](report.lam, report.xi, report.params, exact)


# -- Huisken-Sinestrari identities and the quotient chain ------------------------

def fd_quotient_second(sub, d, k, levels=4):
    """FD (Romberg) second derivative of q_k along d at sub."""
    sub = np.asarray(sub, dtype=float)
    d = np.asarray(d, dtype=float)
    if not np.any(d):
        return 0.0
    return float(fd_q_second(sub[None, :], d[None, :], k, levels)[0])


def q2_rhs(sub, d):
    s1 = sub.sum()
    c = d.sum() / s1
    return float(np.sum((d - sub * c) ** 2) / s1)


def hs_q2_residual(lam, xi, removed=()):
    """|-d^2_xi q_2 - sum_i (xi_i - lambda_i sigma_1(xi)/sigma_1)^2/sigma_1| on the sub-spectrum."""
    v = _values(lam)
    x = np.asarray(xi, dtype=float).reshape(-1)
    keep = [j for j in range(v.size) if j not in set(removed)]
    sub = v[keep]
    d = x[keep]
    if not sub.sum() > 0:
        raise ValueError("degenerate sub-spectrum: sigma_1 <= 0")
    lhs = -fd_quotient_second(sub, d, 2)
    return abs(lhs - q2_rhs(sub, d))


def hs_qq2_gap(lam, xi, k):
    """RHS - LHS of d^2 q_{k+1} <= sum lambda_i^2 d^2 q_{k;i} / ((k+1)(q_{k;i}+lambda_i)^2)."""
    v = _values(lam)
    x = np.asarray(xi, dtype=float).reshape(-1)
    n = v.size
    if not 1 <= k <= n - 1:
        raise ValueError("need 1 <= k <= n-1")
    _check_cone(v, k + 1)
    lhs = fd_quotient_second(v, x, k + 1)
    rhs = 0.0
    for i in range(n):
        sub = np.delete(v, i)
        d = np.delete(x, i)
        e = _kernels.esp_single(sub)
        qi = e[k] / e[k - 1]
        denom = qi + v[i]
        if denom == 0:
            raise ValueError("q_{k;i} + lambda_i = 0")
        sec = fd_quotient_second(sub, d, k) if k >= 2 else 0.0
        rhs += v[i] ** 2 * sec / ((k + 1) * denom ** 2)
    return float(rhs - lhs)


def _perp(vec, ref):
    nr = float(ref @ ref)
    if nr == 0:
        return vec.copy()
    return vec - (float(vec @ ref) / nr) * ref


def quotient_chain_sides(lam, gamma, k):
    """(LHS, RHS/C) of -sigma_{k-1} d^2_gamma q_k >= C sum_j prod_{i != j} lambda_i |[gamma]^perp|^2."""
    v = _values(lam)
    gm = np.asarray(gamma, dtype=float).reshape(-1)
    qd = quotient_derivatives(v, k)
    skm1 = _kernels.esp_single(v)[k - 1]
    lhs = -skm1 * float(gm @ qd.hessian @ gm)
    head = list(range(k - 1))
    rhs = 0.0
    for j in head:
        drop = [i for i in head if i != j]
        prod = float(np.prod(v[drop])) if drop else 1.0
        keep = [i for i in range(v.size) if i not in drop]
        rhs += prod * float(np.sum(_perp(gm[keep], v[keep]) ** 2))
    return lhs, rhs


def quotient_chain_gap(lam, gamma, k, C):
    lhs, rhs = quotient_chain_sides(lam, gamma, k)
    return float(lhs - C * rhs)


def decomposition_project(lam, gamma, k):
    """gamma with gamma_1 = 0 and the tail (k..n) projected orthogonally to lambda's tail."""
    v = _values(lam)
    gm = np.array(gamma, dtype=float).reshape(-1)
    gm[0] = 0.0
    gm[k - 1:] = _perp(gm[k - 1:], v[k - 1:])
    return gm


def decomposition_sides(lam, gamma, k):
    v = _values(lam)
    gm = decomposition_project(v, gamma, k)
    qd = quotient_derivatives(v, k)
    skm1 = _kernels.esp_single(v)[k - 1]
    lhs = -skm1 * float(gm @ qd.hessian @ gm)
    prod_head = float(np.prod(v[:k - 1]))
    first = sum(prod_head * v[k - 1] ** 2 * gm[j] ** 2 / v[j] ** 3 for j in range(k - 1))
    second = float(np.prod(v[:k - 2])) * float(np.sum(gm[k - 1:] ** 2))
    return lhs, first + second, gm


def decomposition_gap(lam, gamma, k, A, C):
    """LHS - C [first sum + second sum] for projected gamma; 0.0 when gamma projects to zero."""
    v = _values(lam)
    _check_cone(v, k)
    if v[-1] < -A:
        raise ValueError("lambda_n below the floor -A")
    lhs, rhs, gm = decomposition_sides(v, gamma, k)
    if not np.any(gm):
        return 0.0
    return float(lhs - C * rhs)


# -- quadratic-form pencils for constant fitting ------------------------------------

def quotient_chain_matrices(lam, k):
    """(L, R, basis): both sides of the quotient chain as quadratic forms in gamma,
    and an orthonormal basis of lambda-perp (lambda spans their common kernel)."""
    v = _values(lam)
    n = v.size
    qd = quotient_derivatives(v, k)
    skm1 = _kernels.esp_single(v)[k - 1]
    Lm = -skm1 * qd.hessian
    R = np.zeros((n, n))
    head = list(range(k - 1))
    for j in head:
        drop = [i for i in head if i != j]
        prod = float(np.prod(v[drop])) if drop else 1.0
        keep = np.array([i for i in range(n) if i not in drop])
        u = v[keep] / np.linalg.norm(v[keep])
        P = np.eye(keep.size) - np.outer(u, u)
        R[np.ix_(keep, keep)] += prod * P
    _, _, Vt = np.linalg.svd(v[None, :])
    return Lm, R, Vt[1:].T


def decomposition_matrices(lam, k):
    """(L, R, basis) for the decomposition bound on {gamma_1 = 0, tail perp lambda tail}."""
    v = _values(lam)
    n = v.size
    qd = quotient_derivatives(v, k)
    skm1 = _kernels.esp_single(v)[k - 1]
    Lm = -skm1 * qd.hessian
    d = np.zeros(n)
    prod_head = float(np.prod(v[:k - 1]))
    for j in range(k - 1):
        d[j] = prod_head * v[k - 1] ** 2 / v[j] ** 3
    d[k - 1:] = float(np.prod(v[:k - 2]))
    cols = [np.eye(n)[j] for j in range(1, k - 1)]
    t = v[k - 1:]
    if t.size > 1:
        _, _, Vt = np.linalg.svd(t[None, :])
        for row in Vt[1:]:
            c = np.zeros(n)
            c[k - 1:] = row
            cols.append(c)
    basis = np.array(cols).T if cols else np.zeros((n, 0))
    return Lm, np.diag(d), basis
