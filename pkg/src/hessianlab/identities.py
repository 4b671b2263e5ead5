"""Vectorized identity and concavity suites over sampled batches of spectra.

Each check returns the worst relative residual over the batch with the
spectrum (and direction) that attains it.
"""
from dataclasses import dataclass, asdict

import numpy as np

from . import _kernels
from .cone import ConeContext, sample_rows
from .fd import line_poly, root_radius_lower, second_directional
from .symfun import Derivs, _quotient_rows

IDENTITY_TOL = 1e-8
CONCAVITY_TOL = 1e-8
LOG_CHAIN_TOL = 1e-9

LABELS = {
    "property1": "Property (1): sum_p sigma_k^{pp} lambda_p^2 = sigma_1 sigma_k - (k+1) sigma_{k+1}",
    "property2": "Property (2): sum_p sigma_k^{pp} = (n-k+1) sigma_{k-1}",
    "deletion": "deletion recurrence sigma_m = sigma_m(.|i) + lambda_i sigma_{m-1}(.|i)",
    "qk_hessian": "closed-form q_k Hessian vs finite differences",
    "q2": "q_2 Hessian identity on sub-spectra",
    "qk_concave": "Property (5): max eigenvalue of the q_k Hessian <= tol * |H|",
    "log_chain": "log sigma_k concavity chain: -d^2 log sigma_k - sum (d log q_i)^2 >= -tol * scale",
}


@dataclass
class CheckResult:
    name: str
    n: int
    k: int
    samples: int
    worst: float
    tolerance: float
    passed: bool
    witness_lambda: list
    witness_xi: list = None

    def to_dict(self):
        return asdict(self)


def _result(name, n, k, rel, tol, L, X=None, lower=False):
    """rel holds per-row residuals; lower=True means the check is rel >= -tol."""
    rel = np.asarray(rel, dtype=float)
    bad = ~np.isfinite(rel)
    if lower:
        score = np.where(bad, -np.inf, rel)
        i = int(np.argmin(score))
        worst = float(score[i])
        passed = bool(worst >= -tol)
    else:
        score = np.where(bad, np.inf, rel)
        i = int(np.argmax(score))
        worst = float(score[i])
        passed = bool(worst <= tol)
    xi = None if X is None else [float(t) for t in X[i]]
    return CheckResult(name, n, k, int(rel.size), worst, tol, passed,
                       [float(t) for t in L[i]], xi)


def batch(n, k, count, seed):
    """Half interior, half near-boundary spectra of Gamma_k (floor -(n-k) lambda_1)."""
    ctx = ConeContext(n, k, A=None)
    a = count // 2
    L1, _, _ = sample_rows(ctx, "interior", count - a, seed)
    if a == 0:
        return np.ascontiguousarray(L1)
    L2, _, _ = sample_rows(ctx, "near-boundary", a, seed + 7919)
    return np.ascontiguousarray(np.concatenate([L1, L2]))


def _pole_steps(L, X, k):
    """Per-row FD steps: a fraction of a lower bound on the distance from t = 0
    to the nearest complex zero of sigma_{k-1}(L + t X)."""
    span = np.linalg.norm(L, axis=1) / np.linalg.norm(X, axis=1)
    if k < 2:
        return 0.2 * span
    rad = root_radius_lower(line_poly(L, X, k - 1))
    return 0.2 * np.minimum(rad, span)


def fd_q_second(L, X, k, levels=4):
    """Romberg second derivative of q_k along each row's direction."""
    h0 = _pole_steps(L, X, k)

    def f(t):
        P = np.ascontiguousarray(L + t[:, None] * X)
        e = _kernels.esp_rows(P)
        return e[:, k] / e[:, k - 1]
    return second_directional(f, h0, levels)


def check_property1(D, k, fault=None):
    L = D.L
    sig = np.concatenate([D.sig, np.zeros((D.N, 1))], axis=1)
    g = D.grad(k)
    lhs = np.einsum("ri,ri->r", g, L * L)
    coef = -(k + 1) if fault != "property1" else (k + 1)
    rhs = sig[:, 1] * sig[:, k] + coef * sig[:, k + 1]
    scale = np.einsum("ri,ri->r", np.abs(g), L * L) + np.abs(sig[:, 1] * sig[:, k]) + (k + 1) * np.abs(sig[:, k + 1])
    return np.abs(lhs - rhs) / scale


def check_property2(D, k, fault=None):
    n = D.n
    g = D.grad(k)
    lhs = g.sum(axis=1)
    coef = (n - k + 1) if fault != "property2" else -(n - k + 1)
    rhs = coef * D.sig[:, k - 1]
    return np.abs(lhs - rhs) / np.abs(g).sum(axis=1)


def check_deletion(D):
    L = D.L
    d1 = D._d1                                      # (N, n, n): sigma_0..sigma_{n-1} of lambda|i
    full = D.sig[:, None, 1:]                       # sigma_m for m = 1..n
    nxt = np.concatenate([d1[:, :, 1:], np.zeros((D.N, D.n, 1))], axis=2)
    prod = L[:, :, None] * d1
    res = np.abs(full - nxt - prod)
    scale = np.maximum(np.maximum(np.abs(full), np.abs(nxt)), np.abs(prod))
    scale = np.where(scale > 0, scale, 1.0)
    return (res / scale).reshape(D.N, -1).max(axis=1)


def check_qk_hessian(D, k, X, levels=4):
    _, _, H = _quotient_rows(D, k)
    closed = np.einsum("rp,rpq,rq->r", X, H, X)
    fd = fd_q_second(D.L, X, k, levels)
    scale = np.einsum("rp,rpq,rq->r", np.abs(X), np.abs(H), np.abs(X))
    scale = np.where(scale > 0, scale, 1.0)
    return np.abs(closed - fd) / scale


def check_q2(L, X, k, rng, levels=4):
    """q_2 identity on sub-spectra with random removed sets of size 0..k-2."""
    N, n = L.shape
    sizes = rng.integers(0, k - 1, size=N)
    out = np.empty(N)
    for r in np.unique(sizes):
        rows = np.nonzero(sizes == r)[0]
        keep = np.empty((rows.size, n - r), dtype=np.int64)
        for j, row in enumerate(rows):
            drop = rng.choice(n, size=r, replace=False)
            keep[j] = np.setdiff1d(np.arange(n), drop)
        S = np.take_along_axis(L[rows], keep, axis=1)
        V = np.take_along_axis(X[rows], keep, axis=1)
        s1 = S.sum(axis=1)
        c = V.sum(axis=1) / s1
        rhs = np.sum((V - S * c[:, None]) ** 2, axis=1) / s1
        fd = -fd_q_second(np.ascontiguousarray(S), V, 2, levels)
        scale = np.sum((np.abs(V) + np.abs(S * c[:, None])) ** 2, axis=1) / s1
        out[rows] = np.abs(fd - rhs) / scale
    return out


def check_qk_concave(D, k):
    _, _, H = _quotient_rows(D, k)
    H = 0.5 * (H + np.swapaxes(H, 1, 2))
    top = np.linalg.eigvalsh(H)[:, -1]
    norm = np.linalg.norm(H, ord=2, axis=(1, 2))
    norm = np.where(norm > 0, norm, 1.0)
    return top / norm


def check_log_chain(D, k, X):
    value = np.zeros(D.N)
    lower = np.zeros(D.N)
    scale = np.zeros(D.N)
    for i in range(1, k + 1):
        q, g, H = _quotient_rows(D, i)
        dq = np.einsum("ri,ri->r", g, X) / q
        curv = -np.einsum("rp,rpq,rq->r", X, H, X) / q
        value += curv + dq * dq
        lower += dq * dq
        scale += np.abs(curv) + dq * dq
    scale = np.where(scale > 0, scale, 1.0)
    return (value - lower) / scale


def _directions(rng, N, n):
    X = rng.normal(size=(N, n))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def identity_suite(pairs, count=10_000, seed=0, tol_scale=1.0, fault=None):
    """Properties (1)-(2), deletion recurrence, q_k Hessian and q_2 identity per (n, k)."""
    out = []
    tol = IDENTITY_TOL * tol_scale
    for n, k in pairs:
        rng = np.random.default_rng([seed, n, k])
        L = batch(n, k, count, seed * 1000 + 31 * n + k)
        D = Derivs(L)
        X = _directions(rng, count, n)
        out.append(_result("property1", n, k, check_property1(D, k, fault), tol, L))
        out.append(_result("property2", n, k, check_property2(D, k, fault), tol, L))
        out.append(_result("deletion", n, k, check_deletion(D), tol, L))
        out.append(_result("qk_hessian", n, k, check_qk_hessian(D, k, X), tol, L, X))
        out.append(_result("q2", n, k, check_q2(L, X, k, rng), tol, L, X))
    return out


def concavity_suite(pairs, count=10_000, seed=0, tol_scale=1.0):
    """Property (5) and the log sigma_k concavity chain per (n, k)."""
    out = []
    for n, k in pairs:
        rng = np.random.default_rng([seed, n, k, 1])
        L = batch(n, k, count, seed * 1000 + 31 * n + k)
        D = Derivs(L)
        X = _directions(rng, count, n)
        out.append(_result("qk_concave", n, k, check_qk_concave(D, k), CONCAVITY_TOL * tol_scale, L))
        out.append(_result("log_chain", n, k, check_log_chain(D, k, X), LOG_CHAIN_TOL * tol_scale,
                           L, X, lower=True))
    return out


def default_pairs(n_values=range(3, 9)):
    return [(n, k) for n in n_values for k in range(2, n + 1)]
