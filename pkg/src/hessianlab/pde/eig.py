"""Closed-form eigenvalues of batched symmetric 2x2 and 3x3 matrices (descending)."""
import numpy as np


def eig2(H):
    """H: (..., 2, 2) symmetric."""
    a, b, c = H[..., 0, 0], H[..., 0, 1], H[..., 1, 1]
    m = 0.5 * (a + c)
    d = np.hypot(0.5 * (a - c), b)
    hi = m + d
    # the smaller root from the determinant avoids cancellation when |m| >> d
    det = a * c - b * b
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = np.where(m > 0, det / np.where(hi != 0, hi, 1.0), m - d)
    lo = np.where((m > 0) & (hi == 0), m - d, lo)
    return np.stack([hi, lo], axis=-1)


def _unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def eig3(H):
    """Eigenvalues of (..., 3, 3) symmetric H.

    The trigonometric solution of the characteristic cubic gives the eigenvalue
    farthest from the mean to full accuracy but splits a nearly repeated pair
    only to ~sqrt(eps). So only that eigenvalue is kept; its eigenvector comes
    from a cross product of rows of H - lambda I, and the remaining pair from
    the 2x2 block of H on the orthogonal complement.
    """
    H = np.asarray(H, dtype=float)
    p1 = H[..., 0, 1] ** 2 + H[..., 0, 2] ** 2 + H[..., 1, 2] ** 2
    q = np.trace(H, axis1=-2, axis2=-1) / 3.0
    d0, d1, d2 = H[..., 0, 0] - q, H[..., 1, 1] - q, H[..., 2, 2] - q
    p = np.sqrt((d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * p1) / 6.0)
    safe = np.where(p > 0, p, 1.0)
    B = (H - q[..., None, None] * np.eye(3)) / safe[..., None, None]
    r = np.clip(0.5 * np.linalg.det(B), -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    # r >= 0: the largest eigenvalue is the isolated one, otherwise the smallest
    iso = np.where(r >= 0, q + 2.0 * p * np.cos(phi), q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0))
    A = H - iso[..., None, None] * np.eye(3)
    c = np.stack([np.cross(A[..., 0, :], A[..., 1, :]), np.cross(A[..., 0, :], A[..., 2, :]),
                  np.cross(A[..., 1, :], A[..., 2, :])], axis=-2)
    nc = np.linalg.norm(c, axis=-1)
    pick = np.argmax(nc, axis=-1)
    v = np.take_along_axis(c, pick[..., None, None], axis=-2)[..., 0, :]
    ok = np.take_along_axis(nc, pick[..., None], axis=-1)[..., 0] > 0
    v = np.where(ok[..., None], v, np.array([1.0, 0.0, 0.0]))
    v = _unit(v)
    axis = np.eye(3)[np.argmin(np.abs(v), axis=-1)]
    u = _unit(np.cross(v, axis))
    w = np.cross(v, u)
    Hu = np.einsum("...ij,...j->...i", H, u)
    Hw = np.einsum("...ij,...j->...i", H, w)
    T = np.empty(H.shape[:-2] + (2, 2))
    T[..., 0, 0] = np.einsum("...i,...i->...", u, Hu)
    T[..., 1, 1] = np.einsum("...i,...i->...", w, Hw)
    T[..., 0, 1] = T[..., 1, 0] = np.einsum("...i,...i->...", u, Hw)
    out = np.concatenate([iso[..., None], eig2(T)], axis=-1)
    out = np.where((p > 0)[..., None], out, q[..., None])
    return -np.sort(-out, axis=-1)


def eigvals_sym(H):
    """Closed form for n = 2, 3; numpy's symmetric solver otherwise."""
    n = H.shape[-1]
    if n == 1:
        return H[..., 0, :].copy()
    if n == 2:
        return eig2(H)
    if n == 3:
        return eig3(H)
    return np.linalg.eigvalsh(H)[..., ::-1]
