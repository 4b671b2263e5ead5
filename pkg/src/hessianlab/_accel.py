"""Backend selection for the hot kernels.

Set HESSIANLAB_DISABLE_NUMBA=1 (or HESSIANLAB_BACKEND=numpy) before import to
run the pure-numpy code paths instead of the numba-compiled ones.
"""
import os

_flag = os.environ.get("HESSIANLAB_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")
_flag = _flag or os.environ.get("HESSIANLAB_BACKEND", "").strip().lower() == "numpy"

try:
    if _flag:
        raise ImportError
    import numba
    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


def njit(fn=None, **kw):
    """numba.njit(cache=True) when numba is active, identity otherwise."""
    def wrap(f):
        if not HAVE_NUMBA:
            return f
        kw.setdefault("cache", True)
        return numba.njit(**kw)(f)
    if fn is not None:
        return wrap(fn)
    return wrap
