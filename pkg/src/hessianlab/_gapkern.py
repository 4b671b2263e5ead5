"""Compiled objective for the gap search.

Mirrors concavity.build_terms + search.min_ratio for one spectrum: assembles
(M, S, c, g) and returns the minimum of xi^T(M + c g g^T)xi over
xi^T(S + |c| g g^T)xi together with its minimizer. Used only when numba is
active; the pure-numpy path in search.py is the reference.
"""
import numpy as np

from ._accel import njit
from ._kernels import _deleted1_rows_nb, _deleted2_rows_nb, _esp_rows_nb

CODES = {"main": 0, "weak": 1, "lu": 2, "rw": 3, "conj15": 4}


@njit
def gap_system(code, v, k, prm):
    """prm = [K, A, delta0, epsilon, l, i (0-based), include_j1]."""
    n = v.size
    L = np.empty((1, n))
    L[0, :] = v
    e = _esp_rows_nb(L)[0]
    d1 = _deleted1_rows_nb(L)[0]
    d2 = _deleted2_rows_nb(L)[0]
    sk = e[k]
    g = d1[:, k - 1].copy()
    H = np.zeros((n, n))
    if k >= 2:
        for p in range(n):
            for q in range(n):
                if p != q:
                    H[p, q] = d2[p, q, k - 2]
    M = np.zeros((n, n))
    S = np.zeros(n)
    lam1 = v[0]
    K, A, d0, eps = prm[0], prm[1], prm[2], prm[3]
    c = 0.0
    if code <= 2:
        for p in range(n):
            rs = 0.0
            for q in range(n):
                M[p, q] = -H[p, q] / sk
                rs += abs(M[p, q])
            S[p] += rs
        if code == 2:
            c = 1.0 / (sk * sk)
            r0 = -(1.0 - eps) / (lam1 * lam1)
            M[0, 0] += r0
            S[0] += abs(r0)
            l = int(prm[4])
            for i in range(l, n):
                t = d0 * g[i] / (lam1 * sk)
                M[i, i] += t
                S[i] += abs(t)
        else:
            c = K / (sk * sk)
            for i in range(1, n):
                t = 2.0 * g[i] / ((lam1 + A + 1.0) * sk)
                M[i, i] += t
                S[i] += abs(t)
            if code == 1:
                r0 = -(1.0 + d0) / (lam1 * lam1)
            else:
                r0 = -(1.0 + d0) * g[0] / (lam1 * sk)
            M[0, 0] += r0
            S[0] += abs(r0)
    else:
        ii = int(prm[5]) if code == 3 else 0
        ki = v[ii]
        for p in range(n):
            rs = 0.0
            for q in range(n):
                M[p, q] = -ki * H[p, q]
                rs += abs(M[p, q])
            S[p] += rs
        c = ki * K
        M[ii, ii] += -g[ii]
        S[ii] += abs(g[ii])
        if code == 3:
            for j in range(n):
                if j != ii:
                    t = (1.0 + eps) * g[j]
                    M[j, j] += t
                    S[j] += abs(t)
        else:
            for j in range(n):
                if j == 0 and prm[6] == 0.0:
                    continue
                t = g[j] + (ki + v[j]) * H[0, j]
                M[j, j] += t
                S[j] += abs(t)
    return M, S, c, g


@njit
def min_ratio(M, S, c, g):
    """Scale by S^{-1/2}, rotate h = S^{-1/2} g onto e_1; the denominator
    becomes diag(1 + |c||h|^2, 1, ..., 1) and the problem is a plain
    symmetric eigenproblem."""
    n = g.size
    smax = np.max(S)
    s = np.empty(n)
    for p in range(n):
        s[p] = 1.0 / np.sqrt(max(S[p], 1e-30 * smax, 1e-300))
    h = s * g
    a = np.sqrt(np.sum(h * h))
    u = h.copy()
    if u[0] >= 0:
        u[0] += a
    else:
        u[0] -= a
    nu = np.sum(u * u)
    Q = np.eye(n)
    if nu > 0:
        for p in range(n):
            for q in range(n):
                Q[p, q] -= 2.0 * u[p] * u[q] / nu
    Mb = np.empty((n, n))
    for p in range(n):
        for q in range(n):
            Mb[p, q] = s[p] * M[p, q] * s[q]
    C = Q @ Mb @ Q
    C[0, 0] += c * a * a
    e0 = 1.0 / np.sqrt(1.0 + abs(c) * a * a)
    for q in range(n):
        C[0, q] *= e0
        C[q, 0] *= e0
    C = 0.5 * (C + C.T)
    w, V = np.linalg.eigh(C)
    y = V[:, 0].copy()
    y[0] *= e0
    xi = s * (Q @ y)
    xi /= np.sqrt(np.sum(xi * xi))
    return w[0], xi
