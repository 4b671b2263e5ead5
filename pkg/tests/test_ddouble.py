from fractions import Fraction

from hypothesis import given, strategies as st

from hessianlab.ddouble import DD, dd_sum, two_prod, two_sum

finite = st.floats(-1e150, 1e150, allow_nan=False, allow_infinity=False)


@given(finite, finite)
def test_two_sum_is_exact(a, b):
    s, e = two_sum(a, b)
    assert Fraction(s) + Fraction(e) == Fraction(a) + Fraction(b)


# magnitudes kept away from underflow, where the error term is not representable
moderate = st.floats(-1e100, 1e100).filter(lambda x: x == 0 or abs(x) > 1e-100)


@given(moderate, moderate)
def test_two_prod_is_exact(a, b):
    p, e = two_prod(a, b)
    assert Fraction(p) + Fraction(e) == Fraction(a) * Fraction(b)


def test_cancellation_recovered():
    x = DD(1e16) + 1.0 - 1e16
    assert float(x) == 1.0
    assert float(dd_sum([1e16, 1.0, -1e16, 1e-8])) == 1.0 + 1e-8


def test_division_and_comparisons():
    third = DD(1.0) / 3.0
    assert abs(float(third * 3.0 - 1.0)) < 1e-30
    assert DD(2.0) > 1.5 and DD(-1.0) < 0 and DD(0.5) == 0.5
