"""Radial solutions of sigma_k(D^2 u) = f on the ball B_R, u = 0 on the sphere.

For u = u(r) the Hessian eigenvalues are u'' (once) and u'/r (n-1 times), and
sigma_k(D^2 u) = C(n-1,k-1)/k * r^{1-n} (r^{n-k} (u')^k)'. Integrating once,

    (u')^k = k/C(n-1,k-1) * r^k * G(r),   G(r) = int_0^1 t^{n-1} f(r t) dt,

so u'/r = (k G / C(n-1,k-1))^{1/k} is regular at r = 0. Using r G' = f - n G,

    u'' = (u'/r) * (1 + (f - n G) / (k G)).

u follows from u(R) = 0 by Gauss-Legendre quadrature of u' on each node interval.
"""
from dataclasses import dataclass, asdict
from math import comb

import numpy as np

from .. import _kernels
from ..fd import first_directional, second_directional

GL_ORDER = 24


@dataclass
class RadialProfile:
    n: int
    k: int
    R: float
    nodes: np.ndarray
    u: np.ndarray
    up: np.ndarray
    upp: np.ndarray
    f: object = None           # radial source, kept for re-evaluation (None for f = 1)
    closed_form: bool = False

    def eigenvalues(self):
        """(N, n) Hessian eigenvalues per node; u'/r at r = 0 is its limit u''(0)."""
        r = self.nodes
        with np.errstate(divide="ignore", invalid="ignore"):
            tang = np.where(r > 0, self.up / r, self.upp)
        lam = np.empty((r.size, self.n))
        lam[:, 0] = self.upp
        lam[:, 1:] = tang[:, None]
        return lam

    def sigma_k(self):
        return _kernels.esp_rows(np.ascontiguousarray(self.eigenvalues()))[:, self.k]

    def to_dict(self):
        d = {key: val for key, val in asdict(self).items() if key != "f"}
        for key in ("nodes", "u", "up", "upp"):
            d[key] = [float(t) for t in d[key]]
        return d


def _check(n, k, R):
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    if not R > 0:
        raise ValueError("R must be positive")


def radial_closed_form(n, k, R=1.0, nodes=1001):
    """u = a (r^2 - R^2)/2 with a = C(n,k)^{-1/k}, so sigma_k(D^2 u) = C(n,k) a^k = 1."""
    _check(n, k, R)
    a = comb(n, k) ** (-1.0 / k)
    r = np.linspace(0.0, R, nodes)
    u = 0.5 * a * (r * r - R * R)
    u[-1] = 0.0
    return RadialProfile(n, k, float(R), r, u, a * r, np.full(nodes, a), None, True)


def _gl(m=GL_ORDER):
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


def _G(f, r, n, m=GL_ORDER):
    """int_0^1 t^{n-1} f(r t) dt for each r."""
    t, w = _gl(m)
    r = np.asarray(r, dtype=float)
    vals = f(r[..., None] * t)
    return np.sum(w * t ** (n - 1) * vals, axis=-1)


def _tangential(f, r, n, k):
    """u'/r."""
    return (k * _G(f, r, n) / comb(n - 1, k - 1)) ** (1.0 / k)


def _vectorize(f):
    if f is None:
        return lambda r: np.ones_like(np.asarray(r, dtype=float))

    def g(r):
        r = np.asarray(r, dtype=float)
        out = np.asarray(f(r), dtype=float)
        return np.broadcast_to(out, r.shape).astype(float)
    return g


def _u_at(f, r, n, k, R, panels=12):
    """u(r) = -int_r^R u'(s) ds by composite Gauss-Legendre, `panels` per point."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    t, w = _gl()
    width = (R - r) / panels
    lo = r[:, None] + width[:, None] * np.arange(panels)
    s = lo[..., None] + width[:, None, None] * t
    inner = np.sum(w * s * _tangential(f, s, n, k), axis=-1)
    return -width * np.sum(inner, axis=1)


def radial_solve(n, k, R=1.0, f=None, nodes=1001):
    """Quadrature solution on an equispaced r-grid; f is a vectorized radial
    function (None means f = 1). f <= 0 anywhere on the quadrature set is rejected."""
    _check(n, k, R)
    fv = _vectorize(f)
    r = np.linspace(0.0, R, nodes)
    t, w = _gl()
    probe = np.concatenate([r, (r[:-1, None] + np.diff(r)[:, None] * t).ravel()])
    if not np.all(fv(probe) > 0):
        raise ValueError("f must be positive on [0, R] (ellipticity is lost otherwise)")
    G = _G(fv, r, n)
    tang = (k * G / comb(n - 1, k - 1)) ** (1.0 / k)
    up = r * tang
    upp = tang * (1.0 + (fv(r) - n * G) / (k * G))
    # u' integrated over each node interval, accumulated from r = R inward
    s = r[:-1, None] + np.diff(r)[:, None] * t
    pieces = np.diff(r) * np.sum(w * s * _tangential(fv, s, n, k), axis=1)
    u = np.zeros(nodes)
    u[:-1] = -np.cumsum(pieces[::-1])[::-1]
    return RadialProfile(n, k, float(R), r, u, up, upp, f, False)


def radial_residual(profile, f=None, h=None, away=0.02):
    """Relative residual |sigma_k(D^2 u) - f| / f at the interior nodes with
    r >= away*R, with u'' and u' taken by Romberg finite differences of the
    quadrature representation of u (independent of the nodal u', u'')."""
    n, k, R = profile.n, profile.k, profile.R
    fv = _vectorize(f if f is not None else profile.f)
    r = profile.nodes
    sel = (r >= away * R) & (r < R - away * R)
    rs = r[sel]
    h = 0.25 * away * R if h is None else h

    def along(t):
        return _u_at(fv, rs + t, n, k, R)
    d2 = second_directional(along, np.full(rs.size, h), levels=4)
    d1 = first_directional(along, np.full(rs.size, h), levels=4)
    lam = np.empty((rs.size, n))
    lam[:, 0] = d2
    lam[:, 1:] = (d1 / rs)[:, None]
    sk = _kernels.esp_rows(np.ascontiguousarray(lam))[:, k]
    target = fv(rs)
    return float(np.max(np.abs(sk - target) / target)), rs


def interpolate(profile, r):
    """Cubic Hermite interpolant of u using (u, u') at the nodes."""
    from scipy.interpolate import CubicHermiteSpline
    return CubicHermiteSpline(profile.nodes, profile.u, profile.up)(np.asarray(r, dtype=float))
