from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from slct.lct import LCT, ZERO, as_rational, combine_independent, rational_from_json, rational_to_json

F = Fraction


def test_rational_arithmetic():
    assert F(1, 2) + F(1, 3) == F(5, 6)
    r = as_rational("3/6")
    assert (r.numerator, r.denominator) == (1, 2)
    assert (F(9, 8) + F(1, 8)) - F(6, 8) == F(1, 2)


def test_as_rational_rejects_floats():
    with pytest.raises(TypeError):
        as_rational(0.5)
    with pytest.raises(TypeError):
        as_rational(True)


def test_rational_json_roundtrip():
    assert rational_to_json(F(-6, 4)) == {"num": -3, "den": 2}
    assert rational_from_json({"num": 6, "den": 4}) == F(3, 2)
    with pytest.raises(ValueError):
        rational_from_json({"num": 1, "den": 0})
    with pytest.raises(ValueError):
        rational_from_json({"num": 1.5, "den": 2})


def test_wide_values_stay_exact():
    # no 64-bit wraparound
    big = F(2**70 + 1, 3)
    assert rational_from_json(rational_to_json(big * big)) == big * big


def test_lct_validation():
    with pytest.raises(ValueError):
        LCT(F(-1, 2), 1)
    with pytest.raises(ValueError):
        LCT(F(1, 2), 0)
    with pytest.raises(TypeError):
        LCT(F(1, 2), 1.0)


def test_lct_str_and_json():
    v = LCT(F(3, 2), 1)
    assert str(v) == "lambda = 3/2 (1.5), theta = 1"
    assert LCT.from_json(v.to_json()) == v


@pytest.mark.parametrize("parts, expected", [
    ([LCT(F(1, 2), 1)], LCT(F(1, 2), 1)),
    ([LCT(F(1, 2), 1), LCT(F(1, 2), 1)], LCT(1, 1)),
    ([LCT(F(1, 2), 2), LCT(F(1, 2), 3)], LCT(1, 4)),
    ([], LCT(0, 1)),
])
def test_combine_examples(parts, expected):
    assert combine_independent(parts) == expected


lcts = st.builds(LCT, st.fractions(min_value=0, max_value=50), st.integers(1, 10))


@given(st.lists(lcts, max_size=6), st.randoms())
def test_combine_commutative(parts, rnd):
    shuffled = parts[:]
    rnd.shuffle(shuffled)
    assert combine_independent(parts) == combine_independent(shuffled)


@given(lcts, lcts, lcts)
def test_combine_associative_with_identity(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a + ZERO == a == ZERO + a


@given(st.lists(lcts, max_size=6))
def test_combine_exact_sum(parts):
    out = combine_independent(parts)
    assert out.lam == sum((p.lam for p in parts), F(0))
    assert isinstance(out.lam, Fraction)
    assert out.theta == sum(p.theta - 1 for p in parts) + 1 >= 1


@given(st.fractions(), st.fractions(), st.fractions())
def test_rational_order_matches_cross_multiplication(a, b, c):
    assert (a < b) == (a.numerator * b.denominator < b.numerator * a.denominator)
    if a <= b and b <= c:
        assert a <= c
