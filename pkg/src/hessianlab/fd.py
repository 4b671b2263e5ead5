"""Central finite differences with Romberg (Richardson) extrapolation.

`f` takes a step t (scalar or per-row array) and returns values of the
function at base + t*direction; steps h0 may be per-row arrays.
"""
import numpy as np


def _romberg(D):
    D = list(D)
    for m in range(1, len(D)):
        fac = 4.0 ** m
        D = [(fac * D[j] - D[j - 1]) / (fac - 1.0) for j in range(1, len(D))]
    return D[-1]


def second_directional(f, h0, levels=4):
    """d^2/dt^2 f(t) at t = 0."""
    h0 = np.asarray(h0, dtype=float)
    f0 = f(0.0 * h0)
    D = []
    for j in range(levels):
        h = h0 / 2.0 ** j
        D.append((f(h) - 2.0 * f0 + f(-h)) / (h * h))
    return _romberg(D)


def first_directional(f, h0, levels=4):
    h0 = np.asarray(h0, dtype=float)
    D = []
    for j in range(levels):
        h = h0 / 2.0 ** j
        D.append((f(h) - f(-h)) / (2.0 * h))
    return _romberg(D)


def gradient(F, x, h, levels=1):
    """Central-difference gradient of scalar F at x (plain for levels=1)."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = 1.0
        g[i] = first_directional(lambda t: F(x + t * e), h, levels)
    return g


def hessian(F, x, h, levels=1):
    """Central-difference Hessian of scalar F at x."""
    x = np.asarray(x, dtype=float)
    n = x.size
    H = np.empty((n, n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = 1.0
        H[i, i] = second_directional(lambda t: F(x + t * ei), h, levels)
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = 1.0
            # d^2/dt^2 F(x + t(e_i+e_j)) = H_ii + 2 H_ij + H_jj
            s = second_directional(lambda t: F(x + t * (ei + ej)), h, levels)
            d = second_directional(lambda t: F(x + t * (ei - ej)), h, levels)
            H[i, j] = H[j, i] = 0.25 * (s - d)
    return H


def line_poly(L, X, m):
    """Coefficients c[:, j] of t^j in sigma_m(L + t X), row-wise, j = 0..m."""
    L = np.atleast_2d(L)
    X = np.atleast_2d(X)
    N, n = L.shape
    E = np.zeros((m + 1, m + 1, N))        # E[s, j]: coefficient of t^j in sigma_s
    E[0, 0] = 1.0
    for i in range(n):
        a = L[:, i]
        b = X[:, i]
        for s in range(min(i + 1, m), 0, -1):
            E[s, 1:] += a * E[s - 1, 1:] + b * E[s - 1, :-1]
            E[s, 0] += a * E[s - 1, 0]
    return E[m].T


def root_radius_lower(c):
    """Fujiwara lower bound on the smallest root modulus of sum_j c_j t^j, row-wise."""
    c = np.atleast_2d(c)
    c0 = np.abs(c[:, 0])
    best = np.zeros(c.shape[0])
    for j in range(1, c.shape[1]):
        with np.errstate(divide="ignore", invalid="ignore"):
            r = (np.abs(c[:, j]) / c0) ** (1.0 / j)
        best = np.maximum(best, np.where(np.isfinite(r), r, np.inf))
    with np.errstate(divide="ignore"):
        return np.where(best > 0, 0.5 / best, np.inf)
