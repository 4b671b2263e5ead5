"""Batched elementary symmetric polynomial kernels.

Two implementations of each kernel: explicit loops compiled by numba, and a
numpy version vectorised over rows. `_accel.BACKEND` picks one at import.

Cancellation guard: a row is recomputed in double-double when for some m
    |sigma_m| < GUARD_REL * sigma_m(|lambda|)   or
    |sigma_m| < 1e-12 * (sum |lambda_i|)**m.
"""
import numpy as np

from ._accel import HAVE_NUMBA, njit
from .ddouble import dd_add, dd_mul_d

GUARD_REL = 1e-3
GUARD_ABS = 1e-12


@njit
def _esp_row(x, out):
    n = x.shape[0]
    a = np.zeros(n + 1)
    out[:] = 0.0
    out[0] = 1.0
    a[0] = 1.0
    sabs = 0.0
    for i in range(n):
        v = x[i]
        av = abs(v)
        sabs += av
        for j in range(i + 1, 0, -1):
            out[j] += v * out[j - 1]
            a[j] += av * a[j - 1]
    flag = False
    p = 1.0
    for m in range(1, n + 1):
        p *= sabs
        if abs(out[m]) < GUARD_REL * a[m] or abs(out[m]) < GUARD_ABS * p:
            if out[m] != 0.0 or a[m] != 0.0:
                flag = True
                break
    if flag:
        eh = np.zeros(n + 1)
        el = np.zeros(n + 1)
        eh[0] = 1.0
        for i in range(n):
            v = x[i]
            for j in range(i + 1, 0, -1):
                ph, pl = dd_mul_d(eh[j - 1], el[j - 1], v)
                eh[j], el[j] = dd_add(eh[j], el[j], ph, pl)
        for m in range(n + 1):
            out[m] = eh[m] + el[m]
    return flag


@njit
def _esp_rows_nb(L):
    N, n = L.shape
    out = np.empty((N, n + 1))
    for r in range(N):
        _esp_row(L[r], out[r])
    return out


@njit
def _deleted1_rows_nb(L):
    N, n = L.shape
    out = np.zeros((N, n, n))
    sub = np.empty(n - 1)
    buf = np.empty(n)
    for r in range(N):
        for i in range(n):
            c = 0
            for j in range(n):
                if j != i:
                    sub[c] = L[r, j]
                    c += 1
            _esp_row(sub, buf)
            out[r, i, :] = buf
    return out


@njit
def _deleted2_rows_nb(L):
    N, n = L.shape
    out = np.zeros((N, n, n, n - 1))
    sub = np.empty(n - 2)
    buf = np.empty(n - 1)
    for r in range(N):
        for p in range(n):
            for q in range(p + 1, n):
                c = 0
                for j in range(n):
                    if j != p and j != q:
                        sub[c] = L[r, j]
                        c += 1
                _esp_row(sub, buf)
                out[r, p, q, :] = buf
                out[r, q, p, :] = buf
    return out


def _esp_rows_np(L):
    L = np.asarray(L, dtype=float)
    N, n = L.shape
    e = np.zeros((N, n + 1))
    a = np.zeros((N, n + 1))
    e[:, 0] = 1.0
    a[:, 0] = 1.0
    for j in range(n):
        v = L[:, j:j + 1]
        e[:, 1:] = e[:, 1:] + v * e[:, :-1]
        a[:, 1:] = a[:, 1:] + np.abs(v) * a[:, :-1]
    sabs = np.abs(L).sum(axis=1, keepdims=True)
    pw = sabs ** np.arange(n + 1)
    bad = (np.abs(e) < GUARD_REL * a) | (np.abs(e) < GUARD_ABS * pw)
    bad &= (e != 0.0) | (a != 0.0)
    rows = np.nonzero(bad[:, 1:].any(axis=1))[0]
    if rows.size:
        S = L[rows]
        eh = np.zeros((rows.size, n + 1))
        el = np.zeros((rows.size, n + 1))
        eh[:, 0] = 1.0
        for j in range(n):
            v = S[:, j:j + 1]
            ph, pl = dd_mul_d(eh[:, :-1], el[:, :-1], v)
            h, l = dd_add(eh[:, 1:], el[:, 1:], ph, pl)
            eh[:, 1:] = h
            el[:, 1:] = l
        e[rows] = eh + el
    return e


def _deleted1_rows_np(L):
    L = np.asarray(L, dtype=float)
    N, n = L.shape
    out = np.zeros((N, n, n))
    for i in range(n):
        out[:, i, :] = _esp_rows_np(np.delete(L, i, axis=1))
    return out


def _deleted2_rows_np(L):
    L = np.asarray(L, dtype=float)
    N, n = L.shape
    out = np.zeros((N, n, n, n - 1))
    for p in range(n):
        for q in range(p + 1, n):
            t = _esp_rows_np(np.delete(L, [p, q], axis=1))
            out[:, p, q, :] = t
            out[:, q, p, :] = t
    return out


if HAVE_NUMBA:
    esp_rows = _esp_rows_nb
    deleted1_rows = _deleted1_rows_nb
    deleted2_rows = _deleted2_rows_nb
else:
    esp_rows = _esp_rows_np
    deleted1_rows = _deleted1_rows_np
    deleted2_rows = _deleted2_rows_np


def esp_single(x):
    """sigma_0..sigma_n of one vector (guarded)."""
    x = np.ascontiguousarray(x, dtype=float)
    return esp_rows(x.reshape(1, -1))[0]
