"""Pogorelov products, the rescaling family u_R(y) = (u(Ry) - R^2)/R^2 and
the quadratic-growth hypothesis check used by the rigidity experiment."""
from dataclasses import dataclass, asdict, field
from math import comb

import numpy as np

from .grid import GridField, node_eigenvalues
from .radial import RadialProfile


@dataclass
class PogorelovDiagnostic:
    alpha: float
    value: float
    node: list            # index (radial: [j]; grid: multi-index)
    position: list        # r or x of the attaining node

    def to_dict(self):
        return asdict(self)


def _lam_max_and_u(obj):
    if isinstance(obj, RadialProfile):
        lam = obj.eigenvalues()
        inner = obj.nodes < obj.R
        pos = obj.nodes[:, None]
        idx = np.arange(obj.nodes.size)[:, None]
        return lam.max(axis=1)[inner], obj.u[inner], pos[inner], idx[inner]
    if isinstance(obj, GridField):
        lam, _ = node_eigenvalues(obj)
        inner = obj.interior
        ids = np.argwhere(inner)
        return lam.max(axis=1), obj.u[inner], obj.coords()[inner], ids
    raise TypeError("expected a RadialProfile or GridField")


def pogorelov_diagnostic(obj, alpha):
    """sup over interior nodes of (-u)^alpha * lambda_max(D^2 u) (0^0 = 1)."""
    lmax, u, pos, ids = _lam_max_and_u(obj)
    w = np.power(np.maximum(-u, 0.0), alpha) if alpha != 0 else np.ones_like(u)
    vals = w * lmax
    j = int(np.argmax(vals))
    return PogorelovDiagnostic(float(alpha), float(vals[j]), [int(t) for t in ids[j]],
                               [float(t) for t in pos[j]])


def alpha_sweep(obj, alphas):
    """Pogorelov value per alpha and whether the curve is monotone nondecreasing."""
    vals = [pogorelov_diagnostic(obj, a).value for a in alphas]
    mono = all(b >= a for a, b in zip(vals, vals[1:]))
    return {"alpha": [float(a) for a in alphas], "value": vals, "monotone": mono}


def closed_form_pogorelov(n, k, R, alpha):
    """f = 1 radial profile: (a R^2/2)^alpha * a at the centre."""
    a = comb(n, k) ** (-1.0 / k)
    return (0.5 * a * R * R) ** alpha * a


# -- entire-solution surrogates -----------------------------------------------

@dataclass
class Quadratic:
    """u = a|x|^2/2 with sigma_k(aI) = 1."""
    n: int
    k: int

    @property
    def a(self):
        return comb(self.n, self.k) ** (-1.0 / self.k)

    def value(self, x):
        return 0.5 * self.a * np.sum(x * x, axis=-1)

    def hessian(self, x):
        return np.broadcast_to(self.a * np.eye(self.n), x.shape[:-1] + (self.n, self.n))


@dataclass
class PerturbedQuadratic(Quadratic):
    """a|x|^2/2 + eps * sum_i sin(x_i); admissible while eps < a."""
    eps: float = 0.01

    def value(self, x):
        return super().value(x) + self.eps * np.sum(np.sin(x), axis=-1)

    def hessian(self, x):
        H = super().hessian(x).copy()
        idx = np.arange(self.n)
        H[..., idx, idx] -= self.eps * np.sin(x)
        return H


@dataclass
class PowerGrowth:
    """u = |x|^p; p < 2 violates the quadratic-growth hypothesis."""
    n: int
    k: int
    p: float = 1.5

    def value(self, x):
        return np.sum(x * x, axis=-1) ** (0.5 * self.p)

    def hessian(self, x):
        r2 = np.sum(x * x, axis=-1)[..., None, None]
        r2 = np.where(r2 > 0, r2, np.finfo(float).tiny)
        p = self.p
        outer = x[..., :, None] * x[..., None, :]
        return p * r2 ** (0.5 * p - 1) * (np.eye(self.n) + (p - 2) * outer / r2)


class GrowthViolation(ValueError):
    def __init__(self, certificate):
        self.certificate = certificate
        super().__init__(f"quadratic growth hypothesis violated: {certificate['reason']}")


def growth_certificate(u, radii=None, directions=64, seed=0):
    """Test u(x) >= c|x|^2 - b: m(r) = min over sampled |x| = r of (u(x) - u(0))/r^2
    must stay bounded away from 0. A fitted log-log slope below -0.1 (m decaying
    like r^slope) or a nonpositive m rejects the hypothesis."""
    radii = np.asarray(radii if radii is not None else 2.0 ** np.arange(0, 11), dtype=float)
    rng = np.random.default_rng(seed)
    D = rng.normal(size=(directions, u.n))
    D /= np.linalg.norm(D, axis=1, keepdims=True)
    u0 = float(u.value(np.zeros(u.n)))
    m = np.array([np.min((u.value(r * D) - u0) / (r * r)) for r in radii])
    ok = bool(np.all(m > 0))
    slope = float(np.polyfit(np.log(radii), np.log(np.where(m > 0, m, np.nan)), 1)[0]) if ok else float("nan")
    holds = ok and slope >= -0.1
    reason = "holds" if holds else ("nonpositive growth ratio" if not ok else
                                     f"growth ratio decays like r^{slope:.3f}")
    return {"radii": radii.tolist(), "min_ratio": m.tolist(), "slope": slope,
            "holds": holds, "c": float(m.min()) if ok else 0.0, "reason": reason}


@dataclass
class RescaleReport:
    R: list
    hess_sup: list            # sup over the sublevel set of |D^2 u_R|
    pogorelov: list           # sup of (-u_R)^alpha |D^2 u_R| there
    spread: float             # max - min of hess_sup across R
    invariance: float         # max |D^2_y u_R(y) - D^2_x u(Ry)| (rounding only)
    alpha: float
    growth: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def rescale_family(u, R_list=(1, 2, 4, 8), alpha=1.0, half_width=3.0, nodes=121, check_growth=True):
    """u_R(y) = (u(Ry) - R^2)/R^2 on a y-grid of [-L, L]^n; the Hessian of u_R is
    evaluated by the chain rule R^2 D^2u(Ry) / R^2 and compared with D^2u(Ry).
    Sublevel sets Omega'_R = {u_R <= -1/2} must not reach the edge of the grid."""
    growth = growth_certificate(u) if check_growth else {}
    if check_growth and not growth["holds"]:
        raise GrowthViolation(growth)
    y1 = np.linspace(-half_width, half_width, nodes)
    Y = np.stack(np.meshgrid(*([y1] * u.n), indexing="ij"), axis=-1).reshape(-1, u.n)
    edge = np.any(np.abs(Y) >= half_width, axis=1)
    sups, pogs, inv = [], [], 0.0
    for R in R_list:
        R = float(R)
        X = R * Y
        uR = (u.value(X) - R * R) / (R * R)
        HR = (R * R) * u.hessian(X) / (R * R)
        inv = max(inv, float(np.max(np.abs(HR - u.hessian(X)))))
        sub = uR <= -0.5
        if not np.any(sub):
            raise GrowthViolation({"reason": f"empty sublevel set at R={R}", "holds": False})
        if np.any(sub & edge):
            raise GrowthViolation({"reason": f"sublevel set reaches |y| = {half_width} at R={R}",
                                   "holds": False})
        norms = np.max(np.abs(np.linalg.eigvalsh(HR[sub])), axis=1)
        sups.append(float(norms.max()))
        pogs.append(float(np.max(np.power(-uR[sub], alpha) * norms)))
    return RescaleReport([float(r) for r in R_list], sups, pogs, max(sups) - min(sups), inv, alpha, growth)
