"""Double-double (compensated) arithmetic.

The free functions work elementwise on floats, numpy arrays and inside numba
kernels. `DD` is a small scalar type used to re-evaluate witnesses.
"""
import math

from ._accel import njit

_SPLIT = 134217729.0  # 2**27 + 1


@njit
def two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


@njit
def quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


@njit
def split(a):
    t = _SPLIT * a
    hi = t - (t - a)
    return hi, a - hi


@njit
def two_prod(a, b):
    p = a * b
    ah, al = split(a)
    bh, bl = split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


@njit
def dd_add(ah, al, bh, bl):
    s, e = two_sum(ah, bh)
    t, f = two_sum(al, bl)
    e = e + t
    s, e = quick_two_sum(s, e)
    e = e + f
    return quick_two_sum(s, e)


@njit
def dd_mul(ah, al, bh, bl):
    p, e = two_prod(ah, bh)
    e = e + (ah * bl + al * bh)
    return quick_two_sum(p, e)


@njit
def dd_mul_d(ah, al, b):
    p, e = two_prod(ah, b)
    e = e + al * b
    return quick_two_sum(p, e)


def _coerce(x):
    if isinstance(x, DD):
        return x
    return DD(float(x))


class DD:
    """Scalar double-double number hi + lo with |lo| <= ulp(hi)/2."""

    __slots__ = ("hi", "lo")

    def __init__(self, hi, lo=0.0):
        hi = float(hi)
        lo = float(lo)
        if not (math.isfinite(hi) and math.isfinite(lo)):
            self.hi, self.lo = hi, 0.0
        else:
            self.hi, self.lo = quick_two_sum(hi, lo)

    def __add__(self, o):
        o = _coerce(o)
        return DD(*dd_add(self.hi, self.lo, o.hi, o.lo))

    __radd__ = __add__

    def __neg__(self):
        return DD(-self.hi, -self.lo)

    def __sub__(self, o):
        return self + (-_coerce(o))

    def __rsub__(self, o):
        return _coerce(o) - self

    def __mul__(self, o):
        o = _coerce(o)
        return DD(*dd_mul(self.hi, self.lo, o.hi, o.lo))

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = _coerce(o)
        q1 = self.hi / o.hi
        r = self - o * q1
        q2 = r.hi / o.hi
        r = r - o * q2
        q3 = r.hi / o.hi
        return DD(q1) + DD(q2) + DD(q3)

    def __rtruediv__(self, o):
        return _coerce(o) / self

    def __pow__(self, m):
        m = int(m)
        out = DD(1.0)
        for _ in range(m):
            out = out * self
        return out

    def __abs__(self):
        return -self if self.hi < 0 else self

    def __float__(self):
        return self.hi + self.lo

    def _cmp(self, o):
        d = self - _coerce(o)
        return (d.hi > 0) - (d.hi < 0)

    def __lt__(self, o):
        return self._cmp(o) < 0

    def __le__(self, o):
        return self._cmp(o) <= 0

    def __gt__(self, o):
        return self._cmp(o) > 0

    def __ge__(self, o):
        return self._cmp(o) >= 0

    def __eq__(self, o):
        return self._cmp(o) == 0

    def __hash__(self):
        return hash((self.hi, self.lo))

    def __repr__(self):
        return f"DD({self.hi!r}, {self.lo!r})"


def dd_sum(values):
    out = DD(0.0)
    for v in values:
        out = out + v
    return out
