import doctest

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import quadnf.rational
from quadnf.rational import (GR_I, GR_ONE, GR_ZERO, GaussianRational, gr, rat,
                             rat_str, two_squares)


def test_doctests():
    failures, _ = doctest.testmod(quadnf.rational)
    assert failures == 0


def test_rat_rejects_float():
    with pytest.raises(TypeError):
        rat(0.5)


def test_rat_str_always_has_denominator():
    assert rat_str(rat(4)) == "4/1"
    assert rat_str(rat("-3/6")) == "-1/2"
    assert rat_str(rat(0)) == "0/1"


small = st.integers(min_value=-6, max_value=6)
denom = st.integers(min_value=1, max_value=4)


@st.composite
def gaussian(draw):
    return gr(rat(draw(small)) / draw(denom), rat(draw(small)) / draw(denom))


@given(gaussian(), gaussian(), gaussian())
def test_ring_axioms_sample(a, b, c):
    assert a * (b + c) == a * b + a * c
    assert (a - b) + b == a
    assert a * b == b * a


@given(gaussian(), gaussian())
def test_conj_and_norm_multiplicative(a, b):
    assert (a * b).conj() == a.conj() * b.conj()
    assert (a * b).norm_sq() == a.norm_sq() * b.norm_sq()
    assert a * a.conj() == GaussianRational(a.norm_sq())


@given(gaussian())
def test_division_round_trip(a):
    if a:
        assert (GR_ONE / a) * a == GR_ONE


def test_constants():
    assert GR_I * GR_I == -GR_ONE
    assert not GR_ZERO
    assert GR_ONE.is_real() and not GR_I.is_real()


@given(gaussian())
@settings(max_examples=60)
def test_two_squares_recovers_norms(c):
    q = c.norm_sq()
    root = two_squares(q)
    if q == 0:
        assert root == GR_ZERO
    else:
        assert root is not None
        assert root * root.conj() == GaussianRational(q)


def test_two_squares_known_values():
    assert two_squares(rat(2)) is not None
    assert two_squares(rat(3)) is None
    assert two_squares(rat(7)) is None
    assert two_squares(rat(21)) is None          # 3 * 7, both bad primes
    assert two_squares(rat(9)) is not None       # 3^2 is fine
    assert two_squares(rat(-5)) is None
    assert two_squares(rat("5/2")) is not None   # 5/2 = (1/2)(1+2i)(1-2i)... norm
    c = two_squares(rat("9/2"))
    assert c is not None and c.norm_sq() == rat("9/2")


def test_hash_consistent_with_eq():
    assert hash(gr(2, 0)) == hash(gr("4/2", "0"))
    assert gr(2, 0) == 2
