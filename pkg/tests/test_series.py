import doctest
import itertools

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

import quadnf.series
from quadnf.rational import GR_ONE, gr, rat
from quadnf.series import (HoloMapJet, TruncatedHoloSeries,
                           TruncatedRealSeries, add, compose_maps,
                           compose_real_with_map, identity_map, invert_map,
                           invert_unit, multiply, restrict_to_quadric,
                           to_graph_form, weighted_component)


def test_doctests():
    failures, _ = doctest.testmod(quadnf.series)
    assert failures == 0


# -- construction and validation ----------------------------------------------

def test_reality_rejected_not_symmetrized():
    with pytest.raises(ValueError, match="reality"):
        TruncatedRealSeries(1, 4, {((1,), (0,), 0, 0): gr(1)})
    with pytest.raises(ValueError, match="reality"):
        TruncatedRealSeries(1, 4, {((1,), (1,), 0, 0): gr(0, 1)})
    with pytest.raises(ValueError, match="reality"):
        TruncatedRealSeries(
            1, 4, {((1,), (0,), 0, 0): gr(1), ((0,), (1,), 0, 0): gr(2)})


def test_cap_and_key_validation():
    with pytest.raises(ValueError, match="cap"):
        TruncatedRealSeries(1, 4, {((3,), (3,), 0, 0): gr(1)})
    with pytest.raises(ValueError, match="delta"):
        TruncatedRealSeries(1, 4, {((0,), (0,), 0, 1): gr(1)}, mode="zu")
    with pytest.raises(ValueError):
        TruncatedHoloSeries(2, 4, {((1,), 0): gr(1)})  # wrong alpha length


def test_binary_ops_require_matching_caps_and_mode():
    a = TruncatedRealSeries(1, 4, {((1,), (1,), 0, 0): gr(1)})
    b = TruncatedRealSeries(1, 6, {((1,), (1,), 0, 0): gr(1)})
    with pytest.raises(ValueError, match="mismatch"):
        add(a, b)
    c = TruncatedRealSeries(1, 4, {((1,), (1,), 0, 0): gr(1)}, mode="zu")
    with pytest.raises(ValueError, match="mode"):
        multiply(a, c)


def test_scale_real_rejects_complex_scalar():
    a = TruncatedRealSeries(1, 4, {((1,), (1,), 0, 0): gr(1)})
    with pytest.raises(ValueError):
        a.scale_real(gr(0, 1))
    assert a.scale_real("3/2").coeff((1,), (1,), 0) == gr("3/2")


# -- random real series for property tests ------------------------------------

def real_key(n, D):
    exps = st.integers(min_value=0, max_value=1)
    return st.tuples(
        st.tuples(*([exps] * n)), st.tuples(*([exps] * n)),
        st.integers(min_value=0, max_value=1),
        st.integers(min_value=0, max_value=1),
    ).filter(lambda k: 0 < quadnf.series._wt4(k) <= D)


coefs = st.builds(gr, st.integers(min_value=-4, max_value=4),
                  st.integers(min_value=-4, max_value=4))


@st.composite
def real_series(draw, n=2, D=6):
    pairs = draw(st.lists(st.tuples(real_key(n, D), coefs),
                          min_size=0, max_size=5))
    terms = {}
    for k, c in pairs:
        kc = quadnf.series._conj_key(k, "zw")
        if kc == k:
            c = gr(c.re)
        terms[k] = terms.get(k, gr(0)) + c
        if kc != k:
            terms[kc] = terms.get(kc, gr(0)) + c.conj()
    terms = {k: v for k, v in terms.items() if v}
    return TruncatedRealSeries(n, D, terms)


@given(real_series(), real_series())
@settings(max_examples=60)
def test_product_grading(a, b):
    p = multiply(a, b)
    for sigma in range(p.D + 1):
        expect = {}
        for s1 in range(sigma + 1):
            part = multiply(weighted_component(a, s1),
                            weighted_component(b, sigma - s1))
            for k, v in part.terms.items():
                expect[k] = expect.get(k, gr(0)) + v
        expect = {k: v for k, v in expect.items() if v}
        assert weighted_component(p, sigma).terms == expect


@given(real_series(), real_series(), real_series())
@settings(max_examples=40)
def test_ring_identities(a, b, c):
    assert multiply(a, add(b, c)) == add(multiply(a, b), multiply(a, c))
    assert multiply(a, b) == multiply(b, a)


# -- sympy oracle for the quadric trace ----------------------------------------

def _to_sympy(A, zs, zbs, w, wb):
    expr = sympy.Integer(0)
    for (alpha, beta, gamma, delta), c in A.terms.items():
        cc = sympy.Rational(str(c.re)) + sympy.I * sympy.Rational(str(c.im))
        mon = w**gamma * wb**delta
        for j in range(A.n):
            mon *= zs[j] ** alpha[j] * zbs[j] ** beta[j]
        expr += cc * mon
    return expr


def _trace_to_sympy(R, zs, zbs, u):
    expr = sympy.Integer(0)
    for (alpha, beta, e, _), c in R.terms.items():
        cc = sympy.Rational(str(c.re)) + sympy.I * sympy.Rational(str(c.im))
        mon = u**e
        for j in range(R.n):
            mon *= zs[j] ** alpha[j] * zbs[j] ** beta[j]
        expr += cc * mon
    return expr


@given(real_series(n=2, D=6), st.integers(min_value=0, max_value=1))
@settings(max_examples=25, deadline=None)
def test_restrict_matches_symbolic_substitution(A, ell):
    n = A.n
    zs = sympy.symbols("z0:%d" % n)
    zbs = sympy.symbols("zb0:%d" % n)
    u, w, wb = sympy.symbols("u w wb")
    phi = sum((-1 if j < ell else 1) * zs[j] * zbs[j] for j in range(n))
    expected = _to_sympy(A, zs, zbs, w, wb).subs(
        {w: u + sympy.I * phi, wb: u - sympy.I * phi})
    got = _trace_to_sympy(restrict_to_quadric(A, ell), zs, zbs, u)
    assert sympy.expand(expected - got) == 0


def test_restrict_weight_preserving_no_truncation_loss():
    # w wbar at D=4 restricts to u^2 + <z,zbar>^2, still weight 4
    A = TruncatedRealSeries(1, 4, {((0,), (0,), 1, 1): gr(1)})
    R = restrict_to_quadric(A, 0)
    assert R.coeff((0,), (0,), 2) == gr(1)
    assert R.coeff((2,), (2,), 0) == gr(1)
    assert len(R.terms) == 2


# -- graph form -----------------------------------------------------------------

def test_graph_form_solves_defining_equation_symbolically():
    # Im w = |z|^2 + 2 Re(z^2 wbar): check v = |z|^2 + Atilde solves it mod D
    n, D = 1, 6
    A = TruncatedRealSeries(
        n, D, {((2,), (0,), 0, 1): gr(1), ((0,), (2,), 1, 0): gr(1)})
    G = to_graph_form(A, 0)
    z, zb, u = sympy.symbols("z zb u")
    v = z * zb + _trace_to_sympy(G, [z], [zb], u)
    lhs = v - z * zb \
        - (z**2 * (u - sympy.I * v) + zb**2 * (u + sympy.I * v))
    poly = sympy.Poly(sympy.expand(lhs), z, zb, u)
    for mono, coeff in poly.terms():
        a, b, e = mono
        if a + b + 2 * e <= D:
            assert coeff == 0, (mono, coeff)


def test_graph_form_rejects_low_order_terms():
    A = TruncatedRealSeries(1, 4, {((1,), (1,), 0, 0): gr(1)})
    with pytest.raises(ValueError, match="low-order"):
        to_graph_form(A, 0)


# -- units and maps -------------------------------------------------------------

@given(st.lists(st.tuples(st.integers(min_value=0, max_value=2),
                          st.integers(min_value=0, max_value=1), coefs),
                max_size=4),
       st.integers(min_value=1, max_value=5))
@settings(max_examples=40)
def test_invert_unit_round_trip(entries, c0):
    n, D = 1, 6
    terms = {((0,), 0): gr(c0)}
    for a, g, c in entries:
        k = ((a,), g)
        if quadnf.series._wt2(k) == 0 or quadnf.series._wt2(k) > D:
            continue
        terms[k] = terms.get(k, gr(0)) + c
    terms = {k: v for k, v in terms.items() if v}
    if ((0,), 0) not in terms:
        return
    q = TruncatedHoloSeries(n, D, terms)
    r = invert_unit(q)   # verifies q * r == 1 internally
    assert (q * r) == TruncatedHoloSeries.constant(n, D, 1)


def test_invert_unit_requires_unit():
    with pytest.raises(ValueError, match="unit"):
        invert_unit(TruncatedHoloSeries.variable(1, 4, 0))


def _shear_map(n, D):
    z = [TruncatedHoloSeries.variable(n, D, j) for j in range(n)]
    w = TruncatedHoloSeries.w_variable(n, D)
    return HoloMapJet(n, D, [z[0] + w.scale(gr(0, 1)), z[1] + z[0] * z[0],
                             w + z[0] * z[1]])


def test_map_inversion_and_composition():
    n, D = 2, 6
    H = _shear_map(n, D)
    K = invert_map(H)
    assert compose_maps(H, K) == identity_map(n, D)
    assert compose_maps(K, H) == identity_map(n, D)


def test_compose_real_with_map_multiplicative():
    n, D = 2, 6
    H = _shear_map(n, D)
    a = TruncatedRealSeries(n, D, {((1, 0), (1, 0), 0, 0): gr(1)})
    b = TruncatedRealSeries(n, D, {((0, 1), (0, 1), 0, 0): gr(1)})
    left = compose_real_with_map(multiply(a, b), H)
    right = multiply(compose_real_with_map(a, H), compose_real_with_map(b, H))
    assert left == right


def test_compose_requires_germ_preserving():
    n, D = 1, 4
    const = TruncatedHoloSeries.constant(n, D, gr(0, 1))
    bad = HoloMapJet(n, D, [TruncatedHoloSeries.variable(n, D, 0), const])
    a = TruncatedRealSeries(n, D, {((1,), (1,), 0, 0): gr(1)})
    with pytest.raises(ValueError, match="constant-term"):
        compose_real_with_map(a, bad)
    with pytest.raises(ValueError, match="constant-term"):
        invert_map(bad)


def test_invert_map_requires_invertible_linear_part():
    n, D = 1, 4
    z = TruncatedHoloSeries.variable(n, D, 0)
    degenerate = HoloMapJet(n, D, [z, z * z])
    with pytest.raises(ValueError, match="singular"):
        invert_map(degenerate)
