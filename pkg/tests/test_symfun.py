from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from strategies import cone_spectrum, direction
from hessianlab.fd import gradient, hessian
from hessianlab.symfun import (ConeViolation, Spectrum, SymOverflow, deleted_sym, elem_sym_all,
                               grad_sigma, hess_sigma, log_sigma_k_quadratic_form,
                               quotient_derivatives, sigma)


def test_identity_spectrum_gives_binomials():
    assert elem_sym_all([1, 1, 1]).sigma.tolist() == [1, 3, 3, 1]


def test_hand_expansion_321():
    s = elem_sym_all([3, 2, 1]).sigma
    assert s[2] == 11 and s[3] == 6


@pytest.mark.parametrize("t", [0.3, 2.0, 17.0])
def test_constant_spectrum(t):
    n = 5
    s = elem_sym_all([t] * n).sigma
    for m in range(n + 1):
        assert s[m] == pytest.approx(comb(n, m) * t ** m, rel=1e-14)


def test_rejects_nan_and_reports_overflow():
    with pytest.raises(ValueError):
        elem_sym_all([1.0, float("nan"), 2.0])
    with pytest.raises(SymOverflow) as ei:
        elem_sym_all([1e200, 1e200, 1e200])
    assert ei.value.m == 2


def test_deleted_sym_examples():
    assert deleted_sym([3, 2, 1], [0], 1) == 3
    assert deleted_sym([1, 1, 1, 1], [0, 1], 2) == 1
    lam = [4.0, 1.5, -0.25, 0.5]
    for m in range(5):
        assert deleted_sym(lam, [], m) == elem_sym_all(lam).sigma[m]
    with pytest.raises(IndexError):
        deleted_sym(lam, [7], 1)


def test_grad_examples():
    assert grad_sigma([1, 1, 1], 2).tolist() == [2, 2, 2]
    assert grad_sigma([3, 2, 1], 2).tolist() == [3, 4, 5]


def test_hess_examples():
    H = hess_sigma([5.0, -1.0, 2.0, 0.5], 2)
    off = ~np.eye(4, dtype=bool)
    assert np.all(H[off] == 1) and np.all(np.diag(H) == 0)
    H3 = hess_sigma([3, 2, 1], 3)
    assert H3[0, 1] == 1 and np.array_equal(H3, H3.T)


def test_quotient_example():
    qd = quotient_derivatives([1, 1, 1], 2)
    assert qd.value == pytest.approx(1.0)
    np.testing.assert_allclose(qd.gradient, [1 / 3] * 3, rtol=1e-14)
    with pytest.raises(ConeViolation) as ei:
        quotient_derivatives([1, 1, -1], 2)
    assert ei.value.index == 2


def test_log_form_examples():
    lam = [3.0, 2.0, 0.5, -0.2]
    assert log_sigma_k_quadratic_form(lam, 3, np.zeros(4)).value == 0.0
    # t -> log sigma_k((1+t) lambda) = const + k log(1+t)
    assert log_sigma_k_quadratic_form(lam, 3, lam).value == pytest.approx(3.0, rel=1e-12)


# -- against the brute-force oracle -------------------------------------------------

@given(cone_spectrum(n_max=6))
def test_sigma_matches_subset_sums(case):
    lam, k = case
    s = elem_sym_all(lam).sigma
    for m in range(len(lam) + 1):
        ref = float(oracles.esp(lam, m))
        assert s[m] == pytest.approx(ref, rel=1e-12, abs=1e-12 * float(oracles.esp(np.abs(lam), m)))


@given(cone_spectrum(n_max=6))
def test_derivatives_match_oracle(case):
    lam, k = case
    g = grad_sigma(lam, k)
    ref = [float(x) for x in oracles.grad(lam, k)]
    np.testing.assert_allclose(g, ref, rtol=1e-11, atol=1e-11 * max(map(abs, ref)))
    H = hess_sigma(lam, k)
    Href = np.array([[float(x) for x in row] for row in oracles.hess(lam, k)])
    np.testing.assert_allclose(H, Href, rtol=1e-11, atol=1e-11 * np.abs(Href).max())


# -- invariants -------------------------------------------------------------------

@given(st.lists(st.floats(-50, 50), min_size=3, max_size=8), st.randoms())
def test_permutation_invariance_bitwise(vals, rnd):
    perm = list(vals)
    rnd.shuffle(perm)
    assert np.array_equal(elem_sym_all(vals).sigma, elem_sym_all(perm).sigma)
    assert Spectrum(vals) == Spectrum(perm)


@given(cone_spectrum(), st.floats(1e-3, 1e3))
def test_homogeneity(case, t):
    lam, _ = case
    a = elem_sym_all(lam).sigma
    b = elem_sym_all(t * lam).sigma
    absum = elem_sym_all(np.abs(lam)).sigma
    for m in range(len(lam) + 1):
        assert abs(b[m] - t ** m * a[m]) <= 1e-12 * t ** m * max(abs(a[m]), 1e-3 * absum[m])


@given(cone_spectrum())
def test_deletion_recurrence(case):
    lam, _ = case
    n = len(lam)
    s = elem_sym_all(lam).sigma
    for i in range(n):
        for m in range(1, n):
            rhs = deleted_sym(lam, [i], m) + lam[i] * deleted_sym(lam, [i], m - 1)
            sc = abs(deleted_sym(lam, [i], m)) + abs(lam[i] * deleted_sym(lam, [i], m - 1))
            assert abs(s[m] - rhs) <= 1e-12 * max(sc, abs(s[m]))


@given(cone_spectrum(n_max=8))
def test_fd_gradient_and_hessian(case):
    lam, k = case
    h = max(1.0, np.abs(lam).max()) * 1e-5
    F = lambda x: sigma(x, k)
    g = gradient(F, lam, h)
    np.testing.assert_allclose(g, grad_sigma(lam, k), rtol=1e-6, atol=1e-6 * np.abs(g).max())
    H = hessian(F, lam, h)
    Hc = hess_sigma(lam, k)
    np.testing.assert_allclose(H, Hc, rtol=1e-6, atol=1e-6 * max(np.abs(Hc).max(), np.abs(g).max() / h * 1e-4))


@given(cone_spectrum())
def test_properties_1_and_2(case):
    lam, k = case
    n = len(lam)
    s = elem_sym_all(lam).sigma
    g = grad_sigma(lam, k)
    sk1 = s[k + 1] if k < n else 0.0
    lhs = float(np.sum(g * lam ** 2))
    rhs = s[1] * s[k] - (k + 1) * sk1
    sc = float(np.sum(np.abs(g) * lam ** 2)) + abs(s[1] * s[k]) + abs((k + 1) * sk1)
    assert abs(lhs - rhs) <= 1e-10 * sc
    assert abs(g.sum() - (n - k + 1) * s[k - 1]) <= 1e-10 * np.abs(g).sum()


@given(cone_spectrum())
def test_ordering_and_properties_4_6(case):
    lam, k = case
    n = len(lam)
    g = grad_sigma(lam, k)
    assert np.all(np.diff(g) >= -1e-12 * np.abs(g).max())
    s = elem_sym_all(lam).sigma
    scale = abs(g[0] * lam[0]) + s[k]
    assert g[0] * lam[0] >= k / n * s[k] - 1e-10 * scale
    for j in range(1, k):
        assert s[j] > np.prod(lam[:j]) - 1e-12 * abs(np.prod(lam[:j]))


@given(cone_spectrum())
def test_quotient_hessian_nsd(case):
    lam, k = case
    H = quotient_derivatives(lam, k).hessian
    assert np.linalg.eigvalsh(H).max() <= 1e-8 * np.abs(H).max()


@given(cone_spectrum(n_max=6), st.data())
def test_quotient_hessian_vs_mpmath(case, data):
    lam, k = case
    xi = data.draw(direction(len(lam)))
    H = quotient_derivatives(lam, k).hessian
    ref = float(oracles.q_second(lam, xi, k))
    got = float(xi @ H @ xi)
    assert got == pytest.approx(ref, rel=1e-6, abs=1e-9 * np.abs(H).sum())


@given(cone_spectrum(), st.data())
def test_log_chain_nonnegative(case, data):
    lam, k = case
    xi = data.draw(direction(len(lam)))
    f = log_sigma_k_quadratic_form(lam, k, xi)
    assert f.gap >= -1e-9 * f.scale
