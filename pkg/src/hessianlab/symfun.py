"""Elementary symmetric polynomials sigma_m, their deleted variants and
eigenvalue derivatives, and the quotients q_k = sigma_k / sigma_{k-1}.

Everything is evaluated by the coefficient recurrence of prod(t + lambda_i)
with a double-double fallback on rows that lose too many digits.
"""
from dataclasses import dataclass

import numpy as np

from . import _kernels


class ConeViolation(ValueError):
    """Raised when a spectrum is outside the required Garding cone.

    `index` is the first j with sigma_j <= 0.
    """

    def __init__(self, index, value=None, k=None):
        self.index = int(index)
        self.value = value
        self.k = k
        super().__init__(f"not in Gamma_{k}: sigma_{index} = {value!r} <= 0")


class SymOverflow(OverflowError):
    def __init__(self, m):
        self.m = int(m)
        super().__init__(f"sigma_{m} overflowed")


def canonical_order(values):
    """Permutation sorting `values` descending, ties broken by original index."""
    values = np.asarray(values, dtype=float)
    return np.argsort(-values, kind="stable")


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Descending-sorted eigenvalue vector."""

    values: np.ndarray
    n: int

    def __init__(self, values):
        v = np.array(values, dtype=float).reshape(-1)
        if v.size < 2:
            raise ValueError("a spectrum needs n >= 2 entries")
        if not np.all(np.isfinite(v)):
            raise ValueError("spectrum entries must be finite")
        v = v[canonical_order(v)]
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "n", int(v.size))

    def __len__(self):
        return self.n

    def __iter__(self):
        return iter(self.values)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __eq__(self, other):
        return isinstance(other, Spectrum) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())

    def __repr__(self):
        return f"Spectrum({self.values.tolist()!r})"

    def tolist(self):
        return self.values.tolist()


@dataclass(frozen=True)
class SymTable:
    sigma: np.ndarray
    source: Spectrum

    def __getitem__(self, m):
        return self.sigma[m]


@dataclass(frozen=True)
class QuotientDerivatives:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray


@dataclass(frozen=True)
class LogConcavityForm:
    """-d^2_xi log sigma_k together with the chain lower bound sum (d_xi log q_i)^2."""

    value: float
    lower: float
    gap: float
    scale: float


def _values(lam):
    """Raw float vector; Spectrum input keeps its sorted order, arrays keep theirs."""
    if isinstance(lam, Spectrum):
        return lam.values
    v = np.asarray(lam, dtype=float).reshape(-1)
    if np.isnan(v).any():
        raise ValueError("NaN in spectrum")
    if not np.all(np.isfinite(v)):
        raise ValueError("spectrum entries must be finite")
    return v


def _checked(table):
    if not np.all(np.isfinite(table)):
        bad = np.nonzero(~np.isfinite(np.atleast_2d(table)))[-1]
        raise SymOverflow(int(bad.min()))
    return table


def elem_sym_all(lam):
    """sigma_0..sigma_n of the canonically sorted spectrum."""
    if not isinstance(lam, Spectrum):
        v = np.asarray(lam, dtype=float).reshape(-1)
        if np.isnan(v).any():
            raise ValueError("NaN in spectrum")
        lam = Spectrum(v)
    sig = _checked(_kernels.esp_single(lam.values))
    sig[0] = 1.0
    sig.setflags(write=False)
    return SymTable(sig, lam)


def sigma(lam, m):
    v = _values(lam)
    if m < 0 or m > v.size:
        return 0.0
    return float(_checked(_kernels.esp_single(v))[m])


def deleted_sym(lam, removed, m):
    """sigma_m of the spectrum with the indices in `removed` deleted."""
    v = _values(lam)
    n = v.size
    removed = sorted(set(int(i) for i in removed))
    for i in removed:
        if i < 0 or i >= n:
            raise IndexError(f"index {i} out of range for n={n}")
    if len(removed) > n - 1:
        raise ValueError("cannot remove every entry")
    keep = np.delete(v, removed)
    if m < 0 or m > keep.size:
        raise ValueError(f"m={m} outside 0..{keep.size}")
    return float(_checked(_kernels.esp_single(keep))[m])


def grad_sigma(lam, k):
    """d sigma_k / d lambda_i = sigma_{k-1}(lambda|i)."""
    v = _values(lam)
    n = v.size
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside 1..{n}")
    d1 = _checked(_kernels.deleted1_rows(v.reshape(1, -1)))[0]
    return d1[:, k - 1].copy()


def hess_sigma(lam, k):
    """d^2 sigma_k / d lambda_p d lambda_q; zero diagonal."""
    v = _values(lam)
    n = v.size
    if not 2 <= k <= n:
        raise ValueError(f"k={k} outside 2..{n}")
    d2 = _checked(_kernels.deleted2_rows(v.reshape(1, -1)))[0]
    H = d2[:, :, k - 2].copy()
    np.fill_diagonal(H, 0.0)
    return H


class Derivs:
    """sigma, gradients and Hessians of every order for a batch of rows.

    sig[r, m] = sigma_m, grad(m)[r, i] = sigma_{m-1}(lambda|i),
    hess(m)[r, p, q] = sigma_{m-2}(lambda|p,q) off the diagonal.
    """

    def __init__(self, L, need_hess=True):
        L = np.ascontiguousarray(np.atleast_2d(np.asarray(L, dtype=float)))
        self.L = L
        self.N, self.n = L.shape
        self.sig = _checked(_kernels.esp_rows(L))
        self._d1 = _checked(_kernels.deleted1_rows(L))
        self._d2 = _checked(_kernels.deleted2_rows(L)) if need_hess and self.n >= 2 else None

    def grad(self, m):
        if m < 1:
            return np.zeros((self.N, self.n))
        return self._d1[:, :, m - 1]

    def hess(self, m):
        H = np.zeros((self.N, self.n, self.n))
        if m >= 2 and self._d2 is not None and m - 2 <= self.n - 2:
            H = self._d2[:, :, :, m - 2].copy()
            idx = np.arange(self.n)
            H[:, idx, idx] = 0.0
        return H


def in_cone_rows(sig, k):
    """First failing j per row (0 when every sigma_1..sigma_k > 0)."""
    sig = np.atleast_2d(sig)
    bad = sig[:, 1:k + 1] <= 0
    first = np.where(bad.any(axis=1), bad.argmax(axis=1) + 1, 0)
    return first


def _require_cone(sig, k):
    for j in range(1, k + 1):
        if not sig[j] > 0:
            raise ConeViolation(j, float(sig[j]), k)


def _quotient_rows(D, k):
    """Value, gradient and Hessian of q_k for every row of a Derivs batch."""
    sk = D.sig[:, k][:, None]
    sk1 = D.sig[:, k - 1][:, None]
    gk = D.grad(k)
    gk1 = D.grad(k - 1)
    q = sk / sk1
    grad = (gk * sk1 - sk * gk1) / sk1 ** 2
    Hk = D.hess(k)
    Hk1 = D.hess(k - 1)
    a = sk[:, :, None]
    b = sk1[:, :, None]
    cross = gk[:, :, None] * gk1[:, None, :]
    inner = (Hk / a - (cross + np.swapaxes(cross, 1, 2)) / (a * b) - Hk1 / b
             + 2.0 * gk1[:, :, None] * gk1[:, None, :] / b ** 2)
    hess = q[:, :, None] * inner
    return q[:, 0], grad, hess


def quotient_derivatives(lam, k):
    """q_k = sigma_k/sigma_{k-1} with closed-form gradient and Hessian."""
    v = _values(lam)
    n = v.size
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside 1..{n}")
    D = Derivs(v)
    _require_cone(D.sig[0], k)
    q, g, H = _quotient_rows(D, k)
    H = 0.5 * (H[0] + H[0].T)
    return QuotientDerivatives(float(q[0]), g[0], H)


def log_sigma_k_quadratic_form(lam, k, xi):
    v = _values(lam)
    xi = np.asarray(xi, dtype=float).reshape(-1)
    if xi.size != v.size:
        raise ValueError("xi has the wrong length")
    D = Derivs(v)
    _require_cone(D.sig[0], k)
    value = 0.0
    lower = 0.0
    scale = 0.0
    for i in range(1, k + 1):
        q, g, H = _quotient_rows(D, i)
        dq = float(g[0] @ xi) / q[0]
        curv = -float(xi @ H[0] @ xi) / q[0]
        value += curv + dq * dq
        lower += dq * dq
        scale += abs(curv) + dq * dq
    return LogConcavityForm(value, lower, value - lower, scale)
