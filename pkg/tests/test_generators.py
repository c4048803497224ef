"""Seeded generators: determinism, class membership, downstream validity."""

from hypothesis import given, settings
from hypothesis import strategies as st

from quadnf.embedding import factor_rigidity, normalize_embedding
from quadnf.generators import (as_rng, random_automorphism, random_embedding,
                               random_Hk_series, random_holo_poly,
                               random_model, random_rigidity_pair,
                               random_S2_series, small_gaussian,
                               small_rational)
from quadnf.hermitian import in_class_H, in_class_S_tilde
from quadnf.quadric import SignatureForm, apply_automorphism
from quadnf.series import restrict_to_quadric


def test_as_rng_passthrough():
    rng = as_rng(5)
    assert as_rng(rng) is rng
    assert as_rng(5).random() == as_rng(5).random()


def test_small_pools_deterministic():
    r1, r2 = as_rng(3), as_rng(3)
    for _ in range(50):
        assert small_rational(r1) == small_rational(r2)
        assert small_gaussian(r1) == small_gaussian(r2)
    nz = [small_gaussian(as_rng(k), nonzero=True) for k in range(30)]
    assert all(nz)


def test_holo_poly_degree_window():
    for seed in range(20):
        p = random_holo_poly(as_rng(seed), 3, 8, terms=3)
        assert not p.is_zero()
        for (alpha, gamma), c in p.terms.items():
            assert c
            assert sum(alpha) + gamma >= 2, "ordinary degree too small"
            assert sum(alpha) + 2 * gamma <= 4, "weight escapes the cap"


def test_S2_series_membership_and_determinism():
    for seed in range(10):
        A = random_S2_series(seed, 3, 8)
        assert A == random_S2_series(seed, 3, 8)
        assert in_class_S_tilde(A, 2), "slice rank exceeds 2 at seed %d" % seed


def test_S2_series_restriction_filter():
    for seed in range(6):
        A = random_S2_series(seed, 3, 8, ell=1, nonzero_restriction=True)
        assert not restrict_to_quadric(A, 1).is_zero()
    try:
        random_S2_series(0, 3, 8, nonzero_restriction=True)
    except ValueError as e:
        assert "ell" in str(e)
    else:
        raise AssertionError("filter without ell should be refused")


def test_Hk_series_membership():
    for seed in range(10):
        B = random_Hk_series(seed, 5, 6, 2)
        assert B == random_Hk_series(seed, 5, 6, 2)
        assert in_class_H(B, 2), "rank exceeds 2 at seed %d" % seed
    # unmixed draws are sums of squares: still H_k, never the zero germ
    assert not random_Hk_series(1, 3, 6, 3, mixed_signs=False).is_zero()


def test_automorphism_generator():
    form = SignatureForm(3, 1)
    for seed in range(5):
        T1 = random_automorphism(seed, form, 6)
        T2 = random_automorphism(seed, form, 6)
        assert (T1.lam, T1.r, T1.a, T1.U) == (T2.lam, T2.r, T2.a, T2.U)
        assert T1.sigma == 1
    Tm = random_automorphism(2, SignatureForm(4, 2), 6, sigma=-1)
    assert Tm.sigma == -1


def test_model_generator():
    M = random_model(4, 2, 1, 6, squares=2, negatives=1)
    assert M == random_model(4, 2, 1, 6, squares=2, negatives=1)
    assert (M.n, M.ell, M.D) == (2, 1, 6)
    assert not M.A.is_zero()


def test_embedding_shapes():
    e = random_embedding(11, 2, 0, 6, squares=2)
    assert (e.n, e.codim, e.sigma) == (2, 2, 1)
    # all-negative squares at the balanced signature flip the orientation
    em = random_embedding(5, 2, 1, 6, squares=2, negatives=2)
    assert em.sigma == -1
    assert em.target.ell == 1
    # a single negative square raises the target signature
    eh = random_embedding(3, 3, 1, 6, squares=2, negatives=1)
    assert eh.target.ell > eh.model.ell
    assert random_embedding(9, 2, 0, 6) == random_embedding(9, 2, 0, 6)


def test_moved_embedding_normalizes_back():
    e = random_embedding(17, 2, 0, 6, squares=1, move=True)
    ne = normalize_embedding(e)
    assert apply_automorphism(ne.T, ne.embedding.H) == e.H
    still = random_embedding(17, 2, 0, 6, squares=1, move=False)
    # the moved and unmoved draws share the germ, not the map
    assert still.model.A == e.model.A


def test_rigidity_pair_factors_exactly():
    M, r1, r2, T0 = random_rigidity_pair(2, 4, 0, 1, 2, 6)
    assert (r1.codim, r2.codim) == (1, 2)
    assert r2.target.ell == r1.target.ell == 0
    fact = factor_rigidity(r1, r2, M)
    assert fact.regime == "exact"
    assert fact.residual_exact and fact.max_residual == 0


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_generator_determinism_property(seed):
    assert random_S2_series(seed, 2, 6) == random_S2_series(seed, 2, 6)
    a = random_Hk_series(seed, 3, 6, 2)
    assert a == random_Hk_series(seed, 3, 6, 2)
    assert in_class_H(a, 2)
