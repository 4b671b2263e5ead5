import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from conftest import load_fixture
from strategies import cone_spectrum
from hessianlab.concavity import GAP_FUNCTIONS, build_terms, term_system
from hessianlab.cone import ConeContext
from hessianlab.experiments import FIT_SEEDS, fit_ratio
from hessianlab.identities import batch
from hessianlab.search import (Problem, SearchConfig, SearchError, fit_constant, geometric_grid, kstar,
                               maximize_kstar, min_ratio, minimize_gap, resolve_params, squash,
                               threshold_scan, unsquash, worst_directions)


def small(ineq="main", n=4, k=3, A=1.0, restarts=6, iters=80, **kw):
    return SearchConfig(ineq, ConeContext(n, k, A=A), restarts=restarts, max_iters=iters, **kw)


def test_squash_roundtrip():
    u = np.linspace(0, 1, 11)
    np.testing.assert_allclose(squash(unsquash(u)), u, atol=1e-15)
    assert squash(-100) == 0 and squash(100) == 1


def test_config_validation_and_roundtrip():
    with pytest.raises(ValueError):
        small(restarts=0)
    with pytest.raises(ValueError):
        small(lambda1_threshold=-1.0)
    with pytest.raises(ValueError):
        small(xi_constraint="fixed")
    c = small(params={"A": 2.0})
    assert SearchConfig.from_dict(c.to_dict()) == c


@given(cone_spectrum(n_max=5), st.sampled_from(["main", "weak", "conj15"]))
def test_min_ratio_is_the_pencil_minimum(case, ineq):
    """Against the pencil built in mpmath from the oracle gap. Assembling
    M + c g g^T in doubles is not a usable reference: the rank-one K-term
    cancels against the rest to many digits once lambda_1 is large."""
    lam, k = case
    n = len(lam)
    if ineq == "conj15" and not 2 * k > n:
        return
    p = resolve_params(ineq, n, k, {"A": "tight"})
    terms = build_terms(ineq, lam, p)
    w, xi = min_ratio(terms, n)
    _, S, r1 = term_system(terms, n)
    (c, g), = r1
    if ineq == "conj15":
        form = lambda x: oracles.conj15_gap(lam, x, k, p["K"])
    else:
        A = max(0.0, -lam[-1])
        form = lambda x: oracles.main_gap(lam, x, k, p["K"], A, p["delta0"], ineq == "weak")
    G = oracles.quadratic_form_matrix(form, n)
    D = oracles.mp.matrix((S + abs(c) * np.outer(g, g)).tolist())
    ref = float(oracles.pencil_min(G, D))
    # the pencil is normalized so its eigenvalues lie in [-1, 1]; compare on that scale
    assert abs(w - ref) <= 1e-8
    num = form(list(xi))
    den = float(xi @ S @ xi) + abs(c) * float(g @ xi) ** 2
    assert abs(float(num) / den - w) <= 1e-8


def test_kstar_pins_the_gap_at_zero():
    n, k = 5, 4
    for lam in batch(n, k, 20, 3):
        p = resolve_params("rw", n, k, {"i": 1})
        ks = kstar("rw", lam, p, exact=True)
        if not np.isfinite(ks):
            continue
        above = min_ratio(build_terms("rw", lam, {**p, "K": ks * (1 + 1e-6) + 1e-9}), n)[0]
        below = min_ratio(build_terms("rw", lam, {**p, "K": ks - 1e-3 * abs(ks) - 1e-6}), n)[0]
        assert above >= -1e-9 and below < 0


def test_minimize_gap_deterministic_and_revalidated():
    cfg = small(lambda1_threshold=5.0)
    a = minimize_gap(cfg)
    b = minimize_gap(cfg)
    assert a.best.gap == b.best.gap and a.best.lam == b.best.lam
    assert a.status in ("violation found", "not found at budget")
    prob = Problem(cfg)
    norms = []
    for e in a.trace:
        assert e["status"] == "ok"
        v = np.array(e["lambda"])
        assert prob.violation(v) == 0.0 and v[0] >= 5.0
        rep = GAP_FUNCTIONS["main"](v, np.array(e["xi"]), prob.params_for(None), exact=True)
        assert rep.gap == pytest.approx(e["gap"], rel=1e-12, abs=1e-15 * rep.scale)
        norms.append(e["normalized"])
    assert a.best.normalized == min(norms)
    # the reported minimum is never below the true function value at its witness
    assert prob.evaluate(np.array(a.best.lam.values))[0] <= a.best.normalized + 1e-12


def test_more_restarts_never_worse():
    r4 = minimize_gap(small(restarts=4, seed=3))
    r8 = minimize_gap(small(restarts=8, seed=3))
    assert r8.best.normalized <= r4.best.normalized
    assert [e["lambda"] for e in r8.trace[:4]] == [e["lambda"] for e in r4.trace]


def test_workers_merge_is_deterministic():
    a = minimize_gap(small(restarts=6, workers=1))
    b = minimize_gap(small(restarts=6, workers=2))
    assert [e["lambda"] for e in a.trace] == [e["lambda"] for e in b.trace]


def test_no_feasible_start():
    cfg = small(A=0.0, lambda1_threshold=0.01, lambda1_mode="exact")
    with pytest.raises(SearchError):
        minimize_gap(cfg)


def test_threshold_scan_examples():
    single = threshold_scan(small(), [8.0])
    assert len(single.min_gaps) == 1 and single.grid == [8.0]
    grid = geometric_grid(0.5, 64.0, 2.0)
    fr = threshold_scan(small(A=1.0, restarts=4, iters=60), grid)
    assert fr.threshold is not None and np.isfinite(fr.threshold)
    f0 = threshold_scan(small(A=0.0, restarts=4, iters=60), grid)
    f5 = threshold_scan(small(A=5.0, restarts=4, iters=60), grid)
    assert f0.threshold <= f5.threshold
    with pytest.raises(ValueError):
        threshold_scan(small(), [2.0, 1.0])


def test_fixed_xi_mode():
    cfg = small(xi_constraint="fixed", xi=[1, 0, 0, 0], lambda1_threshold=4.0)
    r = minimize_gap(cfg)
    np.testing.assert_array_equal(r.best.xi, [1, 0, 0, 0])


def test_kstar_search_rw():
    cfg = SearchConfig("rw", ConeContext(4, 3, A=None), restarts=4, max_iters=60, objective="kstar",
                       params={"K": 1.0})
    r = maximize_kstar(cfg)
    assert np.isfinite(r.kstar) and r.kstar > 0
    assert r.best.normalized == pytest.approx(0.0, abs=1e-8)


def test_fit_constant_examples():
    lam = np.array([[3.0, 2.0, 1.0, 0.5]])
    fit = fit_constant("sigma_km1", lam, 3)
    assert fit.extremum == pytest.approx((6 + 3 + 1.5 + 2 + 1 + 0.5) / 3 ** 0.5)
    assert fit.used == 1 and fit.constant == pytest.approx(0.95 * fit.extremum)
    L = batch(4, 3, 500, 1)
    assert fit_constant("sigma_km1", L, 3).extremum > 0
    with pytest.raises(ValueError):
        fit_constant("sigma_km1", [], 3)


def test_fit_excludes_undefined_samples():
    L = np.array([[3.0, 2.0, 1.0, 0.0], [4.0, 2.0, 1.0, -0.1]])
    fit = fit_constant("kappa_k", L, 3, params={"A": 1.0})
    assert fit.excluded == 1 and fit.used == 1


def test_worst_direction_beats_random():
    rng = np.random.default_rng(0)
    for q in ("quotient_chain", "decomposition"):
        L = batch(5, 3, 30, 4)
        D = worst_directions(q, L, 3)
        worst = fit_constant(q, L, 3, directions=D).extremum
        rand = fit_constant(q, L, 3, directions=rng.normal(size=L.shape)).extremum
        assert worst <= rand * (1 + 1e-9)


def test_fitted_constants_stable_across_seeds():
    for case in load_fixture("constants.json")["cases"]:
        a, b = (f["extremum"] for f in case["fits"])
        assert abs(a - b) <= 0.1 * max(a, b), case["quantity"]


@pytest.mark.parametrize("quantity,n,k", [("sigma_km1", 4, 3), ("quotient_chain", 4, 3)])
def test_fitted_constants_reproduce(quantity, n, k):
    case = next(c for c in load_fixture("constants.json")["cases"]
                if (c["quantity"], c["n"], c["k"]) == (quantity, n, k))
    fit = fit_ratio(quantity, n, k, FIT_SEEDS[0])
    assert fit.extremum == case["fits"][0]["extremum"]


def test_fixture_witnesses_recheck_with_oracle():
    """The infimum witnesses frozen in the fixture give the frozen ratio under mpmath."""
    for case in load_fixture("constants.json")["cases"]:
        if case["quantity"] != "sigma_km1":
            continue
        for f in case["fits"]:
            lam = f["witness"]["lambda"]
            k = case["k"]
            ref = oracles.esp(lam, k - 1) / oracles.mp.mpf(lam[0]) ** (oracles.mp.mpf(1) / (k - 1))
            assert float(ref) == pytest.approx(f["extremum"], rel=1e-12)
