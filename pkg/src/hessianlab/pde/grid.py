"""Finite-difference Newton solver for sigma_k(D^2 u) = f(x) on squares/cubes.

D^2_h u is the central second-difference Hessian (the standard 2n+1 point
second differences plus 4-point mixed differences); sigma_k is evaluated on
its eigenvalues. The Jacobian of sigma_k(D^2_h u) is T : D^2_h(du) with the
Newton tensor T = sum_j (-1)^j sigma_{k-1-j} H^j, the derivative of sigma_k
with respect to the matrix entries.

The iteration starts from the comparison barrier w = a(|x|^2 - rho^2)/2,
which is admissible at every node, and treats the Dirichlet condition as
identity rows of the same Newton system, so the boundary moves to its data
under the same step halving that keeps every interior node in Gamma_k.
"""
from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .. import _kernels
from .eig import eigvals_sym


@dataclass
class GridField:
    n: int
    k: int
    h: float
    u: np.ndarray             # nodal values, shape (N,)*n
    interior: np.ndarray      # boolean mask of unknown nodes
    half_width: float = 1.0
    boundary: np.ndarray = None   # Dirichlet data on non-interior nodes (zeros if None)
    info: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.u.shape

    def coords(self):
        N = self.u.shape[0]
        x = np.linspace(-self.half_width, self.half_width, N)
        return np.stack(np.meshgrid(*([x] * self.n), indexing="ij"), axis=-1)

    def data(self):
        return np.zeros_like(self.u) if self.boundary is None else self.boundary


def square_field(n, k, nodes, half_width=1.0, ball=None):
    """Zero field on [-L, L]^n with `nodes` points per side. With ball = R the
    unknowns are the nodes strictly inside |x| < R (staircase boundary)."""
    if n not in (2, 3):
        raise ValueError("grid solver supports n = 2 or 3")
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    h = 2.0 * half_width / (nodes - 1)
    interior = np.zeros((nodes,) * n, dtype=bool)
    interior[(slice(1, -1),) * n] = True
    fld = GridField(n, k, h, np.zeros((nodes,) * n), interior, half_width)
    if ball is not None:
        x = fld.coords()
        fld.interior &= np.sum(x * x, axis=-1) < ball * ball
    return fld


def _stencils(n):
    """[(a, b, [(offset, coefficient * h^2)])] for each Hessian entry a <= b."""
    out = []
    for a in range(n):
        e = np.zeros(n, dtype=int)
        e[a] = 1
        out.append((a, a, [(tuple(e), 1.0), (tuple(-e), 1.0), (tuple(0 * e), -2.0)]))
    for a, b in combinations(range(n), 2):
        ea = np.zeros(n, dtype=int)
        eb = np.zeros(n, dtype=int)
        ea[a] = 1
        eb[b] = 1
        out.append((a, b, [(tuple(ea + eb), 0.25), (tuple(ea - eb), -0.25),
                           (tuple(-ea + eb), -0.25), (tuple(-ea - eb), 0.25)]))
    return out


def _shift(U, off):
    """U[x + off] on the interior block (all stencils stay inside the array)."""
    N = U.shape[0]
    return U[tuple(slice(1 + o, N - 1 + o) for o in off)]


def discrete_hessian(fld, U=None):
    """(M, n, n) D^2_h u at the interior-block nodes, flattened in C order."""
    U = fld.u if U is None else U
    n, h = fld.n, fld.h
    m = U.shape[0] - 2
    H = np.zeros((m,) * n + (n, n))
    for a, b, sten in _stencils(n):
        val = sum(c * _shift(U, off) for off, c in sten) / (h * h)
        H[..., a, b] = val
        H[..., b, a] = val
    return H.reshape(-1, n, n)


def _block_mask(fld):
    return fld.interior[(slice(1, -1),) * fld.n].ravel()


def node_eigenvalues(fld, U=None):
    """Eigenvalues of D^2_h u at the unknown nodes (descending)."""
    H = discrete_hessian(fld, U)[_block_mask(fld)]
    return eigvals_sym(H), H


def admissible(lam, k):
    """Exact predicate sigma_j(lambda) > 0 for j = 1..k at every row."""
    sig = _kernels.esp_rows(np.ascontiguousarray(lam))
    return bool(np.all(sig[:, 1:k + 1] > 0))


def _newton_tensor(H, sig, k):
    n = H.shape[-1]
    T = np.zeros_like(H)
    P = np.broadcast_to(np.eye(n), H.shape).copy()
    for j in range(k):
        T += (-1) ** j * sig[:, k - 1 - j, None, None] * P
        P = P @ H
    return T


def barrier(fld, fmax):
    """w = a(|x|^2 - rho^2)/2 with sigma_k(aI) = C(n,k) a^k = sup f and rho the
    largest node radius, so w <= 0 on every node and w is a subsolution."""
    x = fld.coords()
    r2 = np.sum(x * x, axis=-1)
    a = (fmax / comb(fld.n, fld.k)) ** (1.0 / fld.k)
    return 0.5 * a * (r2 - r2.max()), a


class _System:
    def __init__(self, fld, fvals):
        self.fld = fld
        n = fld.n
        N = fld.u.shape[0]
        self.N = N
        self.idx = np.arange(N ** n).reshape((N,) * n)
        blk = self.idx[(slice(1, -1),) * n].ravel()
        sel = _block_mask(fld)
        self.rows = blk[sel]
        self.sel = sel
        self.f = fvals[fld.interior] if fvals.shape == fld.u.shape else fvals
        self.fixed = np.nonzero(~fld.interior.ravel())[0]
        self.data = fld.data().ravel()[self.fixed]
        self.sten = _stencils(n)
        self.cols = {}
        for a, b, st in self.sten:
            for off, _ in st:
                if off not in self.cols:
                    self.cols[off] = _shift(self.idx, off).ravel()[sel]

    def residual(self, U):
        lam, H = node_eigenvalues(self.fld, U)
        sig = _kernels.esp_rows(np.ascontiguousarray(lam))
        Fi = sig[:, self.fld.k] - self.f
        Fb = U.ravel()[self.fixed] - self.data
        return Fi, Fb, lam, H, sig

    def jacobian(self, H, sig):
        k, h = self.fld.k, self.fld.h
        T = _newton_tensor(H, sig, k)
        acc = {}
        for a, b, st in self.sten:
            w = T[:, a, b] * (1.0 if a == b else 2.0) / (h * h)
            for off, c in st:
                acc[off] = acc.get(off, 0.0) + c * w
        r = np.concatenate([np.repeat(self.rows[None], len(acc), 0).ravel(), self.fixed])
        cidx = np.concatenate([np.concatenate([self.cols[o] for o in acc]), self.fixed])
        v = np.concatenate([np.concatenate([acc[o] for o in acc]), np.ones(self.fixed.size)])
        M = self.N ** self.fld.n
        return sp.csr_matrix((v, (r, cidx)), shape=(M, M))

    def vector(self, Fi, Fb):
        R = np.zeros(self.N ** self.fld.n)
        R[self.rows] = Fi
        R[self.fixed] = Fb
        return R


def _merit(Fi, Fb):
    return float(np.sqrt(np.sum(Fi * Fi) + np.sum(Fb * Fb)))


def grid_solve(fld, f=None, u0=None, tol=1e-6, max_iter=100, max_halvings=30):
    """Damped Newton; returns a new GridField with info (converged, iterations,
    residual, halvings, barrier). f is a callable of node coordinates (..., n) or
    None for f = 1."""
    x = fld.coords()
    fvals = np.ones(fld.u.shape) if f is None else np.broadcast_to(
        np.asarray(f(x), dtype=float), fld.u.shape).copy()
    if not np.all(fvals[fld.interior] > 0):
        raise ValueError("f must be positive at the unknown nodes")
    fmax = float(fvals[fld.interior].max())
    w, a = barrier(fld, fmax)
    U = (w if u0 is None else np.asarray(u0, dtype=float)).copy()
    sysm = _System(fld, fvals)
    Fi, Fb, lam, H, sig = sysm.residual(U)
    if not admissible(lam, fld.k):
        raise ValueError("initial guess is not admissible at every unknown node")
    target = tol * float(np.max(np.abs(fvals[fld.interior])))
    hist = []
    status = "max iterations"
    it = 0
    halvings_total = 0
    for it in range(max_iter + 1):
        res = float(np.max(np.abs(Fi))) if Fi.size else 0.0
        hist.append(res)
        if res < target and not np.any(Fb):
            status = "converged"
            break
        if it == max_iter:
            break
        J = sysm.jacobian(H, sig)
        d = -spsolve(J.tocsc(), sysm.vector(Fi, Fb)).reshape(U.shape)
        m0 = _merit(Fi, Fb)
        theta = 1.0
        for hv in range(max_halvings + 1):
            V = U + theta * d
            if theta == 1.0:
                # land the Dirichlet data exactly
                V.ravel()[sysm.fixed] = sysm.data
            Gi, Gb, lam2, H2, sig2 = sysm.residual(V)
            if admissible(lam2, fld.k) and _merit(Gi, Gb) < m0:
                break
            theta *= 0.5
        else:
            status = "stalled"
            break
        halvings_total += hv
        U, Fi, Fb, lam, H, sig = V, Gi, Gb, lam2, H2, sig2
    out = GridField(fld.n, fld.k, fld.h, U, fld.interior, fld.half_width, fld.boundary)
    out.info = {"status": status, "converged": status == "converged", "iterations": it,
                "residual": hist[-1], "target": target, "halvings": halvings_total,
                "history": hist, "barrier_a": a, "admissible": admissible(lam, fld.k)}
    return out


def sandwich(fld, f=None):
    """(w <= u nodewise, u <= 0 nodewise) with the barrier calibrated to sup f."""
    x = fld.coords()
    fvals = np.ones(fld.u.shape) if f is None else np.broadcast_to(np.asarray(f(x), dtype=float), fld.u.shape)
    w, _ = barrier(fld, float(fvals[fld.interior].max()))
    return bool(np.all(w <= fld.u)), bool(np.all(fld.u <= 0))


def mesh_study(n, k, sizes=(33, 65, 129), f=None, **kw):
    """Sup differences between successive refinements on the coarse nodes and their ratios."""
    sols = [grid_solve(square_field(n, k, m), f, **kw) for m in sizes]
    diffs = []
    for c, fnr in zip(sols, sols[1:]):
        step = (fnr.u.shape[0] - 1) // (c.u.shape[0] - 1)
        sub = fnr.u[(slice(None, None, step),) * n]
        diffs.append(float(np.max(np.abs(sub - c.u))))
    ratios = [a / b for a, b in zip(diffs, diffs[1:])]
    return sols, diffs, ratios
