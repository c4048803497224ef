"""Hyperquadric automorphisms and their action on defining series."""

import warnings
from fractions import Fraction as Q

import pytest

from quadnf.hermitian import hermitian_profile, hermitian_square, in_class_H
from quadnf.quadric import (HypersurfaceModel, SignatureForm,
                            apply_automorphism, automorphism_from_jet,
                            compose, identity_automorphism, inverse,
                            make_automorphism, random_isometry,
                            scalar_product, transform_defining,
                            verify_equivalence)
from quadnf.rational import GaussianRational, rat
from quadnf.series import (HoloMapJet, TruncatedHoloSeries,
                           TruncatedRealSeries, compose_maps,
                           compose_real_with_map, identity_map, levi_raw)


def gr(a, b=0):
    return GaussianRational(Q(a), Q(b))


def zvar(n, D, j):
    return TruncatedHoloSeries.variable(n, D, j)


def eye(n):
    return [[gr(1 if i == j else 0) for j in range(n)] for i in range(n)]


# ---------------------------------------------------------------------------
# scalar products and forms


def test_scalar_product_oracle():
    # ell = 1: -a_0 b_0 + a_1 b_1 + a_2 b_2, computed by hand
    form = SignatureForm(3, 1)
    a = [gr(1), gr(2), gr(3)]
    b = [gr(1, 1), gr(0, 1), gr(2)]
    assert scalar_product(a, b, form) == gr(-1, -1) + gr(0, 2) + gr(6)
    with pytest.raises(ValueError, match="length mismatch"):
        scalar_product(a[:2], b, form)


def test_signature_form_matrix():
    form = SignatureForm(3, 1)
    J = form.J()
    assert J[0][0] == gr(-1) and J[1][1] == gr(1) and J[2][2] == gr(1)
    assert form.eps(0) == -1 and form.eps(2) == 1
    with pytest.raises(ValueError):
        SignatureForm(2, 2)  # ell > n/2


# ---------------------------------------------------------------------------
# constructor validation


def test_make_automorphism_validation():
    form = SignatureForm(2, 0)
    a0 = [gr(0), gr(0)]
    with pytest.raises(ValueError, match="positive"):
        make_automorphism(rat(-1), rat(0), a0, eye(2), 1, form, 6)
    with pytest.raises(ValueError, match="balanced"):
        make_automorphism(rat(1), rat(0), a0, eye(2), -1, form, 6)
    with pytest.raises(ValueError, match="cap"):
        make_automorphism(rat(1), rat(0), a0, eye(2), 1, form, 3)
    bad = [[gr(1), gr(1)], [gr(0), gr(1)]]  # not a J-isometry
    with pytest.raises(ValueError, match="isometry identity"):
        make_automorphism(rat(1), rat(0), a0, bad, 1, form, 6)


# ---------------------------------------------------------------------------
# action on defining series: hand oracles


def test_identity_acts_trivially():
    form = SignatureForm(2, 0)
    T = identity_automorphism(form, 6)
    A = hermitian_square(zvar(2, 6, 0) * zvar(2, 6, 0))
    assert transform_defining(A, T) == A


def test_dilation_scales_quartic():
    # T = (2z, 4w), q = 1: A_1 = (1/lam^2)|phi(2z)|^2 = 4 |z_1^2|^2
    form = SignatureForm(2, 0)
    T = make_automorphism(rat(2), rat(0), [gr(0), gr(0)], eye(2), 1, form, 6)
    A = hermitian_square(zvar(2, 6, 0) * zvar(2, 6, 0))
    assert transform_defining(A, T) == A.scale_real(rat(4))


def test_transform_rejects_low_order_terms():
    form = SignatureForm(2, 0)
    T = identity_automorphism(form, 6)
    A = hermitian_square(zvar(2, 6, 0))  # |z_1|^2 has weight 2
    with pytest.raises(ValueError, match="weighted degree <= 3"):
        transform_defining(A, T)


# ---------------------------------------------------------------------------
# group structure


def sample_automorphism(form, D, sigma=1, seed=11):
    U = random_isometry(form, sigma=sigma, seed=seed)
    a = [gr(1, 2), gr(0, -1)] if form.n == 2 else \
        [gr(1)] + [gr(0)] * (form.n - 1)
    return make_automorphism(rat(Q(3, 2)), rat(Q(-1, 3)), a, U, sigma,
                             form, D)


@pytest.mark.parametrize("sigma", [1, -1])
def test_inverse_and_jet_recovery(sigma):
    form = SignatureForm(2, 1)
    T = sample_automorphism(form, 6, sigma=sigma)
    Ti = inverse(T)
    assert compose(T, Ti).params() == identity_automorphism(form, 6).params()
    assert compose(Ti, T).params() == identity_automorphism(form, 6).params()
    Tr = automorphism_from_jet(T.jet, form)
    assert Tr.params() == T.params()


def test_composition_matches_jet_composition():
    form = SignatureForm(2, 1)
    T1 = sample_automorphism(form, 6, seed=11)
    U2 = random_isometry(form, sigma=1, seed=5)
    T2 = make_automorphism(rat(Q(1, 2)), rat(2), [gr(0, 1), gr(1)], U2, 1,
                           form, 6)
    T12 = compose(T1, T2)
    assert T12.jet == compose_maps(T1.jet, T2.jet)


def test_apply_automorphism_matches_jet_composition():
    # parameter substitution vs full jet composition, dense U, both sigmas
    form = SignatureForm(2, 1)
    z0, z1 = zvar(2, 6, 0), zvar(2, 6, 1)
    w = TruncatedHoloSeries.w_variable(2, 6)
    H = HoloMapJet(2, 6, [z0 + z1 * z1, z1 + w.scale(gr(0, 1)), w + z0 * z1])
    for sigma in (1, -1):
        T = sample_automorphism(form, 6, sigma=sigma)
        assert apply_automorphism(T, H) == compose_maps(T.jet, H)


def test_apply_automorphism_validation():
    form = SignatureForm(2, 1)
    T = sample_automorphism(form, 6)
    z0 = zvar(2, 6, 0)
    w = TruncatedHoloSeries.w_variable(2, 6)
    with pytest.raises(ValueError, match="components"):
        apply_automorphism(T, HoloMapJet(2, 6, [z0, w]))
    const = HoloMapJet(
        2, 6, [z0 + TruncatedHoloSeries(2, 6, [(((0, 0), 0), gr(1))]), z0, w])
    with pytest.raises(ValueError, match="germ-preserving"):
        apply_automorphism(T, const)


def test_defining_action_is_contravariant():
    form = SignatureForm(2, 1)
    T1 = sample_automorphism(form, 6, seed=11)
    U2 = random_isometry(form, sigma=1, seed=5)
    T2 = make_automorphism(rat(Q(1, 2)), rat(2), [gr(0, 1), gr(1)], U2, 1,
                           form, 6)
    B = hermitian_square(zvar(2, 6, 0) * zvar(2, 6, 1))
    lhs = transform_defining(transform_defining(B, T1), T2)
    rhs = transform_defining(B, compose(T1, T2))
    assert lhs == rhs


# ---------------------------------------------------------------------------
# invariants of the action


def test_class_and_profile_invariance():
    form = SignatureForm(2, 1)
    T = sample_automorphism(form, 6, seed=11)
    B = hermitian_square(zvar(2, 6, 0) * zvar(2, 6, 1))
    Bt = transform_defining(B, T)
    assert in_class_H(B, 1) and in_class_H(Bt, 1)
    p, pt = hermitian_profile(B), hermitian_profile(Bt)
    assert p.rank == pt.rank
    assert {p.neg_count, p.pos_count} == {pt.neg_count, pt.pos_count}


def test_quadric_preservation_restricted_identity():
    # |q|^2 (Im w - <z,zbar>) o T = sigma lam^2 (Im w - <z,zbar>), exactly
    form = SignatureForm(2, 1)
    for sigma in (1, -1):
        T = sample_automorphism(form, 6, sigma=sigma)
        lhs = TruncatedRealSeries._raw(2, 6, levi_raw(2, 1), "zw")
        imw = TruncatedRealSeries._raw(
            2, 6, {((0, 0), (0, 0), 1, 0): gr(0, Q(-1, 2)),
                   ((0, 0), (0, 0), 0, 1): gr(0, Q(1, 2))}, "zw")
        rho0 = imw - lhs
        pulled = compose_real_with_map(rho0, T.jet)
        got = hermitian_square(T.q_series) * pulled
        want = rho0.scale_real(rat(Q(9, 4) * sigma))
        assert got == want


# ---------------------------------------------------------------------------
# equivalence verification


def _models():
    form = SignatureForm(2, 1)
    T = sample_automorphism(form, 6, seed=11)
    B = hermitian_square(zvar(2, 6, 0) * zvar(2, 6, 1))
    M2 = HypersurfaceModel(2, 1, 6, B)
    M1 = HypersurfaceModel(2, 1, 6, transform_defining(B, T))
    return form, T, B, M1, M2


def test_verify_equivalence_positive():
    form, T, B, M1, M2 = _models()
    with warnings.catch_warnings():
        # n = 2 with two rank-1 series violates k1 + k2 < n: advisory only
        warnings.simplefilter("ignore")
        assert verify_equivalence(M1, M2, T)


def test_verify_equivalence_wrong_transform():
    form, T, B, M1, M2 = _models()
    U2 = random_isometry(form, sigma=1, seed=5)
    T2 = make_automorphism(rat(Q(1, 2)), rat(2), [gr(0, 1), gr(1)], U2, 1,
                           form, 6)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert not verify_equivalence(M1, M2, T2)


def test_verify_equivalence_profile_mismatch():
    form, T, B, M1, M2 = _models()
    C = hermitian_square(zvar(2, 6, 0) * zvar(2, 6, 0)) + \
        hermitian_square(zvar(2, 6, 1) * zvar(2, 6, 1))
    MC = HypersurfaceModel(2, 1, 6, C)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert not verify_equivalence(MC, M2, T)


def test_verify_equivalence_warns_on_class_violation():
    form, T, B, M1, M2 = _models()
    with pytest.warns(UserWarning, match="class hypothesis"):
        verify_equivalence(M2, M2, identity_automorphism(form, 6))


# ---------------------------------------------------------------------------
# random isometries


def test_random_isometry_deterministic_and_exact():
    form = SignatureForm(3, 1)
    J = form.J()
    U1 = random_isometry(form, sigma=1, seed=7)
    U2 = random_isometry(form, sigma=1, seed=7)
    assert U1 == U2
    U3 = random_isometry(form, sigma=1, seed=8)
    assert U1 != U3
    from quadnf.linalg import conj_transpose, mat_mul
    assert mat_mul(mat_mul(U1, J), conj_transpose(U1)) == J


def test_random_isometry_sign_flip():
    form = SignatureForm(2, 1)
    J = form.J()
    U = random_isometry(form, sigma=-1, seed=3)
    from quadnf.linalg import conj_transpose, mat_mul
    minusJ = [[-e for e in row] for row in J]
    assert mat_mul(mat_mul(U, J), conj_transpose(U)) == minusJ
    with pytest.raises(ValueError, match="balanced"):
        random_isometry(SignatureForm(3, 1), sigma=-1, seed=3)


# ---------------------------------------------------------------------------
# models and jet recovery errors


def test_hypersurface_model_validation():
    A = hermitian_square(zvar(2, 6, 0))  # weight 2: too low for full form
    with pytest.raises(ValueError, match="weighted degree <= 3"):
        HypersurfaceModel(2, 0, 6, A)
    Mq = HypersurfaceModel.quadric(2, 0, 6)
    assert Mq.A.is_zero() and Mq.form == "full"


def test_recovery_rejects_irrational_dilation():
    # G_w(0) = 2 forces lam^2 = 2, irrational over Q
    n, D = 2, 6
    comps = [zvar(n, D, 0), zvar(n, D, 1),
             TruncatedHoloSeries.w_variable(n, D).scale(gr(2))]
    jet = HoloMapJet(n, D, comps)
    with pytest.raises(ValueError, match="irrational dilation"):
        automorphism_from_jet(jet, SignatureForm(2, 0))


def test_recovery_rejects_non_automorphism_jet():
    n, D = 2, 6
    z0 = zvar(n, D, 0)
    comps = [z0, zvar(n, D, 1),
             TruncatedHoloSeries.w_variable(n, D) + z0 * z0 * z0]
    jet = HoloMapJet(n, D, comps)
    with pytest.raises(ValueError, match="does not match"):
        automorphism_from_jet(jet, SignatureForm(2, 0))
