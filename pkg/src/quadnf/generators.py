"""Seeded random instances: germs, automorphisms, embeddings.

Everything is driven by random.Random(seed): the same seed reproduces the
same objects bit for bit (coefficients come from fixed small pools,
isometries from the exact Cayley construction, and no draw depends on hash
iteration order), which is what makes report-level byte-identical reruns
possible further up the stack.

The series generators draw holomorphic polynomials p whose monomials all
have ordinary degree >= 2 in (z, w) and combine them into the two germ
classes the jet machinery consumes: 2 Re(p qbar) has every bihomogeneous
slice of rank <= 2, and a signed sum of k Hermitian squares has global
Hermitian rank <= k.  Both constructions are exact, so class membership
never needs a posteriori repair.
"""

import random

from .embedding import QuadricEmbedding, build_embedding, _inclusion_jet
from .hermitian import ExactDecompositionError, hermitian_square, sesquilinear
from .quadric import (HypersurfaceModel, SignatureForm, apply_automorphism,
                      make_automorphism, random_isometry)
from .rational import GR_ZERO, GaussianRational, rat
from .series import (TruncatedHoloSeries, TruncatedRealSeries, compose_maps,
                     restrict_to_quadric)


def as_rng(seed):
    """random.Random(seed), or the stream itself when one is passed."""
    return seed if isinstance(seed, random.Random) else random.Random(seed)


def small_rational(rng, nonzero=False):
    num = rng.randint(-3, 3)
    while nonzero and num == 0:
        num = rng.randint(-3, 3)
    return rat(num) / rat(rng.choice((1, 1, 2)))


def small_gaussian(rng, nonzero=False):
    re = small_rational(rng)
    im = small_rational(rng)
    while nonzero and not (re or im):
        re = small_rational(rng)
        im = small_rational(rng)
    return GaussianRational(re, im)


def random_holo_poly(rng, n, D, terms=2, max_weight=None):
    """Random holomorphic polynomial, each monomial of ordinary degree >= 2.

    Weighted degrees stay <= max_weight (default D // 2, so that Hermitian
    squares of the result survive truncation at D).
    """
    rng = as_rng(rng)
    if max_weight is None:
        max_weight = D // 2
    assert max_weight >= 2, "no monomial of degree >= 2 fits the bound"
    out = {}
    for _ in range(terms):
        for _attempt in range(64):
            gamma = rng.randint(0, 1)
            alpha = [0] * n
            for _ in range(rng.randint(0, 3)):
                alpha[rng.randrange(n)] += 1
            key = (tuple(alpha), gamma)
            if sum(alpha) + gamma < 2:
                continue
            if not 2 <= sum(alpha) + 2 * gamma <= max_weight:
                continue
            break
        else:  # pragma: no cover - the retry bound is generous
            raise AssertionError("monomial sampling failed")
        c = out.get(key, GR_ZERO) + small_gaussian(rng, nonzero=True)
        if c:
            out[key] = c
        else:
            del out[key]
    if not out:  # cancellations emptied the draw: one deterministic retry
        return random_holo_poly(rng, n, D, terms, max_weight)
    return TruncatedHoloSeries(n, D, sorted(out.items()))


def random_S2_series(seed, n, D, ell=None, nonzero_restriction=False):
    """A = 2 Re(p qbar), a member of the all-slices rank-2 class.

    With nonzero_restriction=True the seeded stream is rejection-sampled
    (deterministically) until the quadric trace of A at signature ell is
    nonzero.
    """
    rng = as_rng(seed)
    if nonzero_restriction and ell is None:
        raise ValueError("the restriction test needs the signature ell")
    while True:
        p = random_holo_poly(rng, n, D)
        q = random_holo_poly(rng, n, D)
        A = sesquilinear(p, q)
        if nonzero_restriction and restrict_to_quadric(A, ell).is_zero():
            continue
        return A


def random_Hk_series(seed, n, D, k, mixed_signs=True):
    """A signed sum of k Hermitian squares (global rank <= k)."""
    rng = as_rng(seed)
    acc = TruncatedRealSeries.zero(n, D)
    for j in range(k):
        sq = hermitian_square(random_holo_poly(rng, n, D))
        if mixed_signs and rng.random() < 0.5:
            acc = acc - sq
        else:
            acc = acc + sq
    return acc


_LAM_POOL = ("1", "1", "2", "1/2", "3/2", "3")
_R_POOL = ("0", "0", "1", "-1", "2", "-1/2")


def random_automorphism(seed, form, D, sigma=1):
    """Random stability-group element with a Cayley-generated isometry.

    lam and r come from small pools (biased toward the identity values),
    a has a couple of small Gaussian-rational entries, and U is the exact
    Cayley transform of a random skew-Hermitian matrix, so the parameters
    exercise every part of the fractional linear form.
    """
    rng = as_rng(seed)
    lam = rat(rng.choice(_LAM_POOL))
    r = rat(rng.choice(_R_POOL))
    a = [GR_ZERO] * form.n
    for _ in range(rng.randint(0, 2)):
        a[rng.randrange(form.n)] = small_gaussian(rng)
    U = random_isometry(form, sigma=sigma, seed=rng.randrange(2 ** 30))
    return make_automorphism(lam, r, tuple(a), U, sigma, form, D)


def random_model(seed, n, ell, D, squares=1, negatives=0):
    """Model germ whose defining series splits into given signed squares."""
    rng = as_rng(seed)
    assert 0 <= negatives <= squares, "sign counts are inconsistent"
    while True:
        acc = TruncatedRealSeries.zero(n, D)
        for j in range(squares):
            sq = hermitian_square(random_holo_poly(rng, n, D))
            acc = acc - sq if j < negatives else acc + sq
        if not acc.is_zero():  # opposite-sign draws can cancel: redraw
            return HypersurfaceModel(n, ell, D, acc)


def random_embedding(seed, n, ell, D, squares=1, negatives=0, move=True):
    """Seeded CR-transversal embedding of a random signed-square germ.

    Builds the canonical embedding of the germ and, with move=True, pushes
    it forward by a random automorphism of the target hyperquadric, so the
    result is generally not in block normal form.  All-negative squares at
    the balanced signature ell = n/2 produce sigma = -1 embeddings; any
    negative square makes the target signature ell' exceed ell.
    """
    rng = as_rng(seed)
    while True:
        M = random_model(rng, n, ell, D, squares=squares,
                         negatives=negatives)
        try:
            e = build_embedding(M)
            break
        except ExactDecompositionError:
            # the re-derived pivots need not match the signed squares the
            # draw was assembled from, and a pivot value like 3 has no
            # Gaussian factorization: redraw deterministically
            continue
    if not move:
        return e
    T = random_automorphism(rng, e.target, D)
    H2 = apply_automorphism(T, e.H)
    return QuadricEmbedding(H2, e.target, M)


def random_rigidity_pair(seed, n, ell, k1, k2, D):
    """Two co-embeddings (H1, T0 o L o H1) of one random-square germ.

    A is a sum of k1 Hermitian squares of degree >= 2 polynomials, H1 the
    canonical embedding (codimension k1), and the second map pads k2 - k1
    zero slots and moves by a random target automorphism T0.  Returns
    (M, emb1, emb2, T0).
    """
    rng = as_rng(seed)
    assert 0 < k1 <= k2, "codimensions must be ordered"
    while True:
        M = random_model(rng, n, ell, D, squares=k1)
        try:
            e1 = build_embedding(M)
        except ExactDecompositionError:
            continue
        if e1.codim == k1 and e1.target.ell == ell:
            break
    N2 = n + k2
    form2 = SignatureForm(N2, ell)
    T0 = random_automorphism(rng, form2, D)
    H2 = apply_automorphism(T0, compose_maps(
        _inclusion_jet(e1.N, N2, D), e1.H))
    emb2 = QuadricEmbedding(H2, form2, M)
    return M, e1, emb2, T0


if __name__ == "__main__":  # pragma: no cover
    import doctest

    doctest.testmod()
