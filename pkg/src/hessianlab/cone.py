"""Garding cones: membership, samplers over Gamma_k strata and empirical
checks of the bound lemmas for sorted spectra."""
import json
import math
import re
from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import _kernels
from .symfun import ConeViolation, Derivs, Spectrum, _values, elem_sym_all


class SamplingError(RuntimeError):
    def __init__(self, msg, accepted, tried):
        self.accepted = accepted
        self.tried = tried
        self.acceptance_rate = accepted / max(tried, 1)
        super().__init__(f"{msg} (accepted {accepted} of {tried}, rate {self.acceptance_rate:.2e})")


@dataclass(frozen=True)
class ConeContext:
    n: int
    k: int
    A: float = 1.0          # floor lambda_n >= -A; None means no floor beyond the cone
    sigma_k_range: tuple = (0.9, 1.1)

    def __post_init__(self):
        if not 2 <= self.k <= self.n:
            raise ValueError(f"need 2 <= k <= n, got n={self.n}, k={self.k}")
        if self.A is not None and self.A < 0:
            raise ValueError("A must be nonnegative")
        m, M = self.sigma_k_range
        if not 0 < m <= M:
            raise ValueError("sigma_k range must satisfy 0 < m <= M")
        object.__setattr__(self, "sigma_k_range", (float(m), float(M)))

    def to_dict(self):
        return {"n": self.n, "k": self.k, "A": self.A, "sigma_k_range": list(self.sigma_k_range)}


@dataclass
class SampleBatch:
    spectra: list
    seed: int
    stratum: str
    ctx: ConeContext = None
    acceptance_rate: float = float("nan")
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.spectra)

    def array(self):
        return np.array([s.values for s in self.spectra])


@dataclass(frozen=True)
class ConeCheck:
    ok: bool
    failing: int  # 0 when ok

    def __bool__(self):
        return self.ok

    def __iter__(self):
        return iter((self.ok, self.failing))


def in_cone(lam, k):
    v = _values(lam)
    sig = _kernels.esp_single(v)
    for j in range(1, k + 1):
        if not sig[j] > 0:
            return ConeCheck(False, j)
    return ConeCheck(True, 0)


_CLAIM = re.compile(r"claim-regime\(\s*(\d+)\s*,\s*([-+0-9.eE]+)\s*\)")


def parse_stratum(stratum):
    """Return (kind, l, M) from 'interior', 'near-boundary' or 'claim-regime(l, M)'."""
    if isinstance(stratum, tuple):
        return ("claim-regime", int(stratum[1]), float(stratum[2]))
    s = str(stratum).strip()
    if s in ("interior", "near-boundary"):
        return (s, None, None)
    m = _CLAIM.fullmatch(s)
    if m:
        return ("claim-regime", int(m.group(1)), float(m.group(2)))
    raise ValueError(f"unknown stratum {stratum!r}")


def stratum_name(kind, l=None, M=None):
    return kind if kind != "claim-regime" else f"claim-regime({l},{M:g})"


def _floor(ctx, lam1):
    if ctx.A is None:
        return -(ctx.n - ctx.k) * lam1
    return -ctx.A * np.ones_like(lam1)


def stratum_mask(L, ctx, stratum, sig=None):
    """Exact post-hoc predicate of a stratum (plus cone, floor and sigma_k range)."""
    kind, l, M = parse_stratum(stratum)
    L = np.atleast_2d(L)
    if sig is None:
        sig = _kernels.esp_rows(np.ascontiguousarray(L))
    k = ctx.k
    m, Mx = ctx.sigma_k_range
    ok = np.all(sig[:, 1:k + 1] > 0, axis=1)
    ok &= np.all(np.diff(L, axis=1) <= 0, axis=1)
    ok &= L[:, -1] >= _floor(ctx, L[:, 0])
    top = min(1.05 * m, Mx) if kind == "near-boundary" else Mx
    ok &= (sig[:, k] >= m) & (sig[:, k] <= top)
    if kind == "claim-regime":
        ok &= L[:, l - 1] > M
        if l < L.shape[1]:
            ok &= L[:, l] <= M
    return ok


def _draw_tail(rng, N, count, lam1, lo, hi):
    """Tail entries mixing log-uniform positive magnitudes and a uniform band."""
    u = rng.random((N, count))
    pos = np.exp(np.log(1e-4) + (np.log(np.maximum(hi, 2e-4)) - np.log(1e-4)) * rng.random((N, count)))
    band = lo + (np.minimum(hi, np.maximum(-lo, 1.0)) - lo) * rng.random((N, count))
    y = np.where(u < 0.5, pos, band)
    return np.clip(y, lo, hi)


def sample(ctx, stratum="interior", count=100, seed=0, lam_max=1e4, method="pin",
           max_tries=None, lam_min=1.0):
    """Rejection sampler over a stratum of Gamma_k.

    method="pin": draw lambda_1 log-uniform on [lam_min, lam_max] and n-2 tail
    entries, then solve the last entry so that sigma_k hits a target drawn from
    the range (keeps the lambda_1 distribution intact).
    method="scale": draw every entry, then rescale to land sigma_k in range.
    """
    rows, name, rate = sample_rows(ctx, stratum, count, seed, lam_max, method, max_tries, lam_min)
    return SampleBatch([Spectrum(r) for r in rows], seed, name, ctx, rate)


def sample_rows(ctx, stratum="interior", count=100, seed=0, lam_max=1e4, method="pin",
                max_tries=None, lam_min=1.0):
    """Array form of `sample`: (rows, stratum name, acceptance rate)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    kind, l, Mc = parse_stratum(stratum)
    name = stratum_name(kind, l, Mc)
    n, k = ctx.n, ctx.k
    m, M = ctx.sigma_k_range
    top = min(1.05 * m, M) if kind == "near-boundary" else M
    rng = np.random.default_rng(seed)
    max_tries = max_tries or max(200 * count, 20000)
    out = []
    tried = 0
    hits = 0
    chunk = max(4 * count, 256)
    while len(out) < count and tried < max_tries:
        N = chunk
        tried += N
        lo1 = lam_min
        if kind == "claim-regime":
            lo1 = max(lam_min, Mc * 1.0000001)
        lam1 = np.exp(np.log(lo1) + (np.log(max(lam_max, lo1 * 1.01)) - np.log(lo1)) * rng.random(N))
        floor = _floor(ctx, lam1)
        if method == "pin":
            tail = _draw_tail(rng, N, n - 2, lam1[:, None], floor[:, None], lam1[:, None])
            if kind == "claim-regime":
                # entries 2..l above Mc, the rest at most Mc
                if l > 1:
                    hi_part = Mc + (lam1[:, None] - Mc) * rng.random((N, l - 1))
                    tail[:, :l - 1] = hi_part
                tail[:, l - 1:] = np.minimum(tail[:, l - 1:], Mc)
            rest = np.concatenate([lam1[:, None], tail], axis=1)
            e = _kernels.esp_rows(np.ascontiguousarray(rest))
            e = np.concatenate([e, np.zeros((N, 1))], axis=1)  # sigma_n of n-1 entries is 0
            target = m + (top - m) * rng.random(N)
            with np.errstate(divide="ignore", invalid="ignore"):
                x = (target - e[:, k]) / e[:, k - 1]
            good = np.isfinite(x) & (e[:, k - 1] > 0) & (x <= lam1) & (x >= floor)
            L = np.concatenate([rest, x[:, None]], axis=1)[good]
        else:
            y = floor[:, None] + (lam1[:, None] - floor[:, None]) * rng.random((N, n - 1))
            L = np.concatenate([lam1[:, None], y], axis=1)
            e = _kernels.esp_rows(np.ascontiguousarray(L))
            target = m + (top - m) * rng.random(N)
            good = np.all(e[:, 1:k + 1] > 0, axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (target / e[:, k]) ** (1.0 / k)
            L = (L * t[:, None])[good]
        if L.size == 0:
            continue
        L = -np.sort(-L, axis=1)
        L = np.ascontiguousarray(L)
        mask = stratum_mask(L, ctx, name)
        hits += int(mask.sum())
        out.extend(L[mask][:count - len(out)])
    if len(out) < count:
        raise SamplingError(f"rejection budget exhausted for stratum {name}", len(out), tried)
    return np.array(out).reshape(count, n), name, hits / tried


# -- bound lemmas ---------------------------------------------------------

@dataclass(frozen=True)
class OrderingResiduals:
    lambda_k: float
    margin: float   # (n-k) lambda_k - |lambda_n|
    tight: bool

    def __iter__(self):
        return iter((self.lambda_k, self.margin))


def _require(lam, k):
    c = in_cone(lam, k)
    if not c:
        sig = elem_sym_all(lam).sigma
        raise ConeViolation(c.failing, float(sig[c.failing]), k)


def check_lemma_ordering(lam, k, tol=1e-12):
    lam = lam if isinstance(lam, Spectrum) else Spectrum(lam)
    _require(lam, k)
    v = lam.values
    n = lam.n
    lk = v[k - 1]
    margin = (n - k) * lk - abs(v[-1])
    tight = abs(margin) <= tol * max(abs(lk), abs(v[-1]), 1e-300)
    return OrderingResiduals(float(lk), float(margin), bool(tight))


def semiconvex_candidates(n, k, sigma_k_range, count, seed, lam_max=1e3):
    """Fixed candidate pool on Gamma_k (no floor) shared across A values."""
    ctx = ConeContext(n, k, None, sigma_k_range)
    return sample(ctx, "interior", count, seed, lam_max=lam_max)


def empirical_semiconvex_bound(n, k, sigma_k_range, A, samples=None, count=2000, seed=0):
    """max |lambda_n| over candidates with sigma_{k+1} > -A.

    An empirical lower estimate of the semiconvexity constant C(n,k,sigma_k,A).
    """
    if k > n - 1:
        raise ValueError("needs k <= n-1")
    if samples is None:
        samples = semiconvex_candidates(n, k, sigma_k_range, count, seed)
    L = samples.array() if isinstance(samples, SampleBatch) else np.asarray(samples, dtype=float)
    sig = _kernels.esp_rows(np.ascontiguousarray(L))
    keep = sig[:, k + 1] > -A
    if not keep.any():
        raise ValueError("no sample satisfies sigma_{k+1} > -A")
    return float(np.abs(L[keep, -1]).max())


def semiconvex_chain(lam, k, A):
    """Pointwise terms of the chain g_n lambda_n^2 <= sigma_1 sigma_k - (k+1) sigma_{k+1} < sigma_1 sigma_k + (k+1) A.

    Returns (lhs, middle, rhs).
    """
    v = _values(lam)
    D = Derivs(v, need_hess=False)
    sig = D.sig[0]
    lhs = D.grad(k)[0, -1] * v[-1] ** 2
    mid = sig[1] * sig[k] - (k + 1) * sig[k + 1]
    rhs = sig[1] * sig[k] + (k + 1) * A
    return float(lhs), float(mid), float(rhs)


def kappa_k_ratio(lam, k):
    """(lambda_k - 2 (sigma_k/lambda_1)^{1/(k-1)}) / (2 |lambda_n|); the quantity whose sup defines C."""
    v = _values(lam)
    sk = elem_sym_all(v).sigma[k]
    head = 2.0 * (sk / v[0]) ** (1.0 / (k - 1))
    if v[-1] == 0:
        return float("nan")
    return float((v[k - 1] - head) / (2.0 * abs(v[-1])))


def kappa_k_branch(lam, k, A):
    v = _values(lam)
    return "lambda_{k-1}>A" if v[k - 2] > A else "lambda_{k-1}<=A"


def check_kappa_k_bound(lam, k, A, C):
    """RHS - lambda_k for lambda_k <= 2 (sigma_k/lambda_1)^{1/(k-1)} + 2 C |lambda_n|.

    C is a fitted constant (see search.fit_constant). In the branch
    lambda_{k-1} <= A the trivial bound lambda_k <= A is reported instead.
    Returns (gap, branch).
    """
    lam = lam if isinstance(lam, Spectrum) else Spectrum(lam)
    _require(lam, k)
    v = lam.values
    if v[-1] < -A * (1 + 1e-12):
        raise ValueError("lambda_n below the floor -A")
    branch = kappa_k_branch(v, k, A)
    if branch == "lambda_{k-1}<=A":
        return float(A - v[k - 1]), branch
    sk = elem_sym_all(v).sigma[k]
    rhs = 2.0 * (sk / v[0]) ** (1.0 / (k - 1)) + 2.0 * C * abs(v[-1])
    return float(rhs - v[k - 1]), branch


def sigma_km1_constant(n, k, m):
    """Explicit constant in sigma_{k-1} >= C lambda_1^{1/(k-1)} when sigma_k >= m.

    From log-concavity of E_j = sigma_j / C(n,j):
    E_{k-1} >= E_1^{1/(k-1)} E_k^{(k-2)/(k-1)}, together with sigma_1 >= lambda_1.
    """
    return comb(n, k - 1) * n ** (-1.0 / (k - 1)) * (m / comb(n, k)) ** ((k - 2) / (k - 1))


def check_sigma_km1_lower(lam, k, m, C=None):
    lam = lam if isinstance(lam, Spectrum) else Spectrum(lam)
    _require(lam, k)
    v = lam.values
    if C is None:
        C = sigma_km1_constant(lam.n, k, m)
    sig = elem_sym_all(lam).sigma
    return float(sig[k - 1] - C * v[0] ** (1.0 / (k - 1)))


def newton_coefficient(n, k):
    return k * (n - k + 2) / ((k - 1) * (n - k + 1))


def newton_gap(lam, k):
    """sigma_{k-1}^2 - c sigma_k sigma_{k-2} with the classical Newton coefficient."""
    v = _values(lam)
    sig = _kernels.esp_single(v)
    n = v.size
    return float(sig[k - 1] ** 2 - newton_coefficient(n, k) * sig[k] * sig[k - 2])


def maclaurin_chain(lam, k):
    """(sigma_j / C(n,j))^{1/j} for j = 1..k."""
    v = _values(lam)
    sig = _kernels.esp_single(v)
    n = v.size
    return np.array([(sig[j] / comb(n, j)) ** (1.0 / j) for j in range(1, k + 1)])


# -- JSON lines ----------------------------------------------------------------

def dump_batch(batch, path):
    with open(path, "w") as fh:
        for s in batch.spectra:
            fh.write(json.dumps({"lambda": s.tolist(), "seed": batch.seed, "stratum": batch.stratum}) + "\n")


def load_batch(path, ctx=None):
    spectra = []
    seed = None
    stratum = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            spectra.append(Spectrum(rec["lambda"]))
            seed = rec.get("seed", seed)
            stratum = rec.get("stratum", stratum)
    return SampleBatch(spectra, seed, stratum, ctx)
