import json
import os
import subprocess
import sys

import numpy as np
import pytest

from hessianlab import _accel, _kernels
from hessianlab.cone import ConeContext
from hessianlab.identities import batch
from hessianlab.search import Problem, SearchConfig

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not active")


def _rows(seed=0):
    rng = np.random.default_rng(seed)
    # cone samples (some near the boundary, where the guard fires) and arbitrary rows
    L = [batch(4, 3, 200, seed), batch(4, 4, 200, seed), rng.normal(size=(200, 4)) * 10]
    return np.ascontiguousarray(np.vstack(L))


@needs_numba
def test_esp_kernels_agree():
    L = _rows()
    a, b = _kernels._esp_rows_nb(L), _kernels._esp_rows_np(L)
    scale = np.cumprod(np.c_[np.ones(len(L)), np.repeat(np.abs(L).sum(1, keepdims=True), 4, 1)], axis=1)
    assert np.max(np.abs(a - b) / scale) <= 1e-14


@needs_numba
def test_deleted_kernels_agree():
    L = _rows(1)
    s = np.abs(L).sum(1)[:, None, None]
    np.testing.assert_allclose(_kernels._deleted1_rows_nb(L) / s, _kernels._deleted1_rows_np(L) / s,
                               atol=1e-13, rtol=0)
    s = s[..., None]
    np.testing.assert_allclose(_kernels._deleted2_rows_nb(L) / s, _kernels._deleted2_rows_np(L) / s,
                               atol=1e-13, rtol=0)


@needs_numba
@pytest.mark.parametrize("ineq,n,k,extra", [("main", 5, 3, {"A": 1.0}), ("weak", 4, 3, {"A": 5.0}),
                                             ("lu", 5, 4, {"l": 2}), ("rw", 5, 4, {"K": 3.0}),
                                             ("conj15", 4, 3, {"K": 9.0})])
def test_compiled_gap_matches_numpy(ineq, n, k, extra):
    cfg = SearchConfig(ineq, ConeContext(n, k, A=None), restarts=1, max_iters=1, params=extra)
    prob = Problem(cfg)
    L = batch(n, k, 40, 5)
    L = -np.sort(-L, axis=1)
    for v in L:
        if v[0] <= 0:
            continue
        a, xa, ia = prob.evaluate(v, compiled=True)
        b, xb, ib = prob.evaluate(v, compiled=False)
        assert ia == ib
        assert a == pytest.approx(b, abs=1e-9)


def _run_backend(env_extra):
    code = ("import json, numpy as np\n"
            "from hessianlab import _accel\n"
            "from hessianlab.symfun import sigma\n"
            "from hessianlab.search import SearchConfig, minimize_gap\n"
            "from hessianlab.cone import ConeContext\n"
            "cfg = SearchConfig('main', ConeContext(4, 3, A=1.0), restarts=3, max_iters=60, seed=4,"
            " lambda1_threshold=2.0)\n"
            "r = minimize_gap(cfg)\n"
            "print(json.dumps({'backend': _accel.BACKEND, 's': sigma(np.array([3., 2., 1., -.5]), 3),"
            " 'best': r.best.normalized}))\n")
    env = {k: v for k, v in os.environ.items() if not k.startswith("HESSIANLAB_")}
    env.update(env_extra)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


@pytest.mark.parametrize("env", [{"HESSIANLAB_DISABLE_NUMBA": "1"}, {"HESSIANLAB_BACKEND": "numpy"}])
def test_env_flags_select_numpy(env):
    assert _run_backend(env)["backend"] == "numpy"


@needs_numba
def test_backends_give_same_search_result():
    a = _run_backend({})
    b = _run_backend({"HESSIANLAB_DISABLE_NUMBA": "1"})
    assert a["backend"] == "numba" and b["backend"] == "numpy"
    assert a["s"] == b["s"]
    assert a["best"] == pytest.approx(b["best"], abs=1e-8)
