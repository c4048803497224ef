"""Hyperquadric models and their automorphism group at jet level.

The model hyperquadric of signature ell in C^{n+1} is Im w = <z, zbar>_ell
with the bilinear scalar product <a, b>_ell = -sum_{j<ell} a_j b_j
+ sum_{j>=ell} a_j b_j (0-based slots; conjugates are always written
explicitly by the caller).  Its automorphisms fixing 0 are the fractional
linear maps

    T(z, w) = (lam (z + a w) U, sigma lam^2 w) / q(z, w),
    q(z, w) = 1 - 2i <z, abar>_ell - (r + i <a, abar>_ell) w,

with lam > 0, r real, a a row vector, U a sigma-isometry of the form
(U J U* = sigma J, J = diag(-I_ell, I_{n-ell})), and sigma = -1 allowed
only in the balanced case ell = n/2.  Everything here is exact: parameters
are (Gaussian) rationals and jets are truncated series over Q(i).

Composition works at jet level and recovers the canonical parameters from
the composite 2-jet (dilation from the w-coefficient of the last component,
the isometry from the z-linear block, a from the mixed block, r from the
real part of the w^2-coefficient); recovered parameters are always rebuilt
into a fresh jet and checked against the input expansion, so a silent
recovery inconsistency cannot escape.  Inversion has closed-form parameter
formulas and needs no jet reversion at all.

The induced right action on defining series A of Im w = <z,zbar>_ell + A is

    A  |->  sigma lam^-2 |q|^2 A o (T, Tbar),

implemented exactly on truncated series, preferring a signed-square
decomposition of A (k products instead of one large resubstitution) and
falling back to direct substitution when no exact decomposition exists.
"""

import random
import warnings

from . import linalg
from .hermitian import (ExactDecompositionError, decompose, hermitian_profile,
                        hermitian_square, _vanishing_ok)
from .rational import (GR_ONE, GR_ZERO, GaussianRational, rat, rational_sqrt)
from .series import (HoloMapJet, TruncatedHoloSeries, TruncatedRealSeries,
                     _holo_anti_product, _holo_conj_raw, _radd_into, _rscale,
                     compose_holo_with_map, compose_real_with_map,
                     invert_unit)


class SignatureForm:
    """The scalar product <.,.>_ell on C^n, ell minus signs first."""

    __slots__ = ("n", "ell")

    def __init__(self, n, ell):
        if not (isinstance(n, int) and isinstance(ell, int)):
            raise TypeError("n and ell must be integers")
        if n < 1 or not 0 <= 2 * ell <= n:
            raise ValueError("need n >= 1 and 0 <= ell <= n/2")
        self.n = n
        self.ell = ell

    def eps(self, j):
        return -1 if j < self.ell else 1

    def J(self):
        return [[GaussianRational(self.eps(i)) if i == j else GR_ZERO
                 for j in range(self.n)] for i in range(self.n)]

    def __eq__(self, other):
        return (isinstance(other, SignatureForm)
                and (self.n, self.ell) == (other.n, other.ell))

    def __hash__(self):
        return hash((self.n, self.ell))

    def __repr__(self):
        return "SignatureForm(n=%d, ell=%d)" % (self.n, self.ell)


def scalar_product(a, b, form):
    """Bilinear <a, b>_ell; works on numbers and on truncated series alike."""
    a, b = list(a), list(b)
    if len(a) != form.n or len(b) != form.n:
        raise ValueError("length mismatch: form expects %d slots" % form.n)
    acc = None
    for j in range(form.n):
        term = a[j] * b[j]
        if form.eps(j) < 0:
            acc = -term if acc is None else acc - term
        else:
            acc = term if acc is None else acc + term
    return acc


class QuadricAutomorphism:
    """One element of the stability group, with its cached degree-D jet.

    Construct through make_automorphism, which validates the parameters and
    verifies quadric preservation.
    """

    __slots__ = ("form", "lam", "r", "a", "U", "sigma", "D", "jet",
                 "q_series")

    @property
    def n(self):
        return self.form.n

    @property
    def ell(self):
        return self.form.ell

    def params(self):
        return (self.form.n, self.form.ell, self.lam, self.r, self.a,
                self.U, self.sigma, self.D)

    def __eq__(self, other):
        return (isinstance(other, QuadricAutomorphism)
                and self.params() == other.params())

    def __hash__(self):
        return hash(self.params())

    def __repr__(self):
        return ("QuadricAutomorphism(n=%d, ell=%d, lam=%s, sigma=%d, D=%d)"
                % (self.n, self.ell, self.lam, self.sigma, self.D))


def _coerce_gr(x):
    return x if isinstance(x, GaussianRational) else GaussianRational(x)


def _im_raw(X):
    """Im of a raw zw dict: (X - conj X) / 2i, exact."""
    half_i = GR_ONE / GaussianRational(0, 2)
    out = {}
    for (al, be, ga, de), v in X.items():
        _radd_into(out, {(al, be, ga, de): v * half_i})
        _radd_into(out, {(be, al, de, ga): -v.conj() * half_i})
    return out


def make_automorphism(lam, r, a, U, sigma, form, D):
    """Build and verify an automorphism jet from exact parameters.

    lam > 0 and r are rationals, a is a length-n vector and U an n x n
    matrix over Q(i) with U J U* = sigma J; sigma = -1 requires ell = n/2.
    The jet of the fractional linear map is expanded through invert_unit and
    quadric preservation is verified exactly (in the polynomially
    equivalent form |q|^2 (Im w' - <z',zbar'>) = sigma lam^2 (Im w - <z,zbar>),
    which avoids re-expanding 1/q).
    """
    n, ell = form.n, form.ell
    lam = rat(lam)
    r = rat(r)
    if lam <= 0:
        raise ValueError("dilation parameter must be positive")
    if sigma not in (1, -1):
        raise ValueError("sigma must be +1 or -1")
    if sigma == -1 and 2 * ell != n:
        raise ValueError("sigma = -1 requires a balanced signature ell = n/2")
    if D < 4:
        raise ValueError("degree cap must be at least 4")
    a = tuple(_coerce_gr(x) for x in a)
    if len(a) != n:
        raise ValueError("translation vector must have length n")
    U = tuple(tuple(_coerce_gr(x) for x in row) for row in U)
    if len(U) != n or any(len(row) != n for row in U):
        raise ValueError("isometry matrix must be n x n")
    J = form.J()
    sig = GaussianRational(sigma)
    lhs = linalg.mat_mul(linalg.mat_mul(list(map(list, U)), J),
                         linalg.conj_transpose(list(map(list, U))))
    rhs = [[sig * x for x in row] for row in J]
    if lhs != rhs:
        raise ValueError("isometry identity U J U* = sigma J fails")

    abar = [x.conj() for x in a]
    a_abar = scalar_product(a, abar, form) if n else GR_ZERO
    assert a_abar.is_real()
    qt = {((0,) * n, 0): GR_ONE}
    for j in range(n):
        cj = GaussianRational(0, -2) * form.eps(j) * abar[j]
        if cj:
            qt[(tuple(1 if i == j else 0 for i in range(n)), 0)] = cj
    cw = -(GaussianRational(r) + GaussianRational(0, 1) * a_abar)
    if cw:
        qt[((0,) * n, 1)] = cw
    q = TruncatedHoloSeries(n, D, qt)
    qinv = invert_unit(q)

    w = TruncatedHoloSeries.w_variable(n, D)
    x = [TruncatedHoloSeries.variable(n, D, j) + w.scale(a[j])
         for j in range(n)]
    y = [None] * n
    for j in range(n):
        acc = TruncatedHoloSeries.zero(n, D)
        for i in range(n):
            if U[i][j]:
                acc = acc + x[i].scale(U[i][j])
        y[j] = acc
    lam_gr = GaussianRational(lam)
    F = [(yj * qinv).scale(lam_gr) for yj in y]
    G = (w * qinv).scale(sig * GaussianRational(lam * lam))
    jet = HoloMapJet(n, D, F + [G])

    # exact preservation check: Im(sigma lam^2 w qbar) - lam^2 <y, ybar>
    # must equal sigma lam^2 (Im w - <z, zbar>)
    wqbar = {}
    for (beta, de), c in q.terms.items():
        wqbar[((0,) * n, beta, 1, de)] = c.conj()
    lhs_raw = _rscale(_im_raw(wqbar), sig * GaussianRational(lam * lam))
    yy = {}
    for j in range(n):
        part = _holo_anti_product(y[j].terms, _holo_conj_raw(y[j].terms), D)
        _radd_into(yy, part, scale=GaussianRational(form.eps(j)))
    _radd_into(lhs_raw, yy, scale=GaussianRational(-lam * lam))
    half_i = GR_ONE / GaussianRational(0, 2)
    zero = (0,) * n
    rho0 = {(zero, zero, 1, 0): half_i, (zero, zero, 0, 1): -half_i}
    for j in range(n):
        e = tuple(1 if i == j else 0 for i in range(n))
        rho0[(e, e, 0, 0)] = GaussianRational(-form.eps(j))
    rhs_raw = _rscale(rho0, sig * GaussianRational(lam * lam))
    assert lhs_raw == rhs_raw, "automorphism fails to preserve the quadric"

    T = object.__new__(QuadricAutomorphism)
    T.form = form
    T.lam = lam
    T.r = r
    T.a = a
    T.U = U
    T.sigma = sigma
    T.D = D
    T.jet = jet
    T.q_series = q
    return T


def identity_automorphism(form, D):
    n = form.n
    I = tuple(tuple(GR_ONE if i == j else GR_ZERO for j in range(n))
              for i in range(n))
    return make_automorphism(1, 0, (GR_ZERO,) * n, I, 1, form, D)


def automorphism_from_jet(jet, form):
    """Canonical parameters from a 2-jet, verified by exact rebuild.

    Raises ValueError when the dilation is irrational (lam^2 not a rational
    square) or when the rebuilt automorphism jet differs from the input.
    """
    n = form.n
    if jet.target_len() != n + 1:
        raise ValueError("jet has %d components, expected %d"
                         % (jet.target_len(), n + 1))
    if jet.D < 4:
        raise ValueError("parameter recovery needs a degree cap >= 4")
    zero = (0,) * n
    G = jet.components[n]
    g1 = G.coeff(zero, 1)
    if not g1 or not g1.is_real():
        raise ValueError("last component has no real w-derivative at 0")
    sigma = 1 if g1.re > 0 else -1
    lam_sq = g1.re if sigma > 0 else -g1.re
    lam = rational_sqrt(lam_sq)
    if lam is None:
        raise ValueError("irrational dilation: lam^2 = %s is not a rational "
                         "square" % lam_sq)
    lam_inv = GaussianRational(rat(1) / lam)
    U = []
    for i in range(n):
        e = tuple(1 if t == i else 0 for t in range(n))
        U.append(tuple(jet.components[j].coeff(e, 0) * lam_inv
                       for j in range(n)))
    v = [jet.components[j].coeff(zero, 1) * lam_inv for j in range(n)]
    try:
        Uinv = linalg.inverse([list(row) for row in U])
    except ValueError:
        raise ValueError("z-linear block is singular; not an automorphism jet")
    a = tuple(linalg.vec_mat(v, Uinv))
    r = (GaussianRational(sigma) * G.coeff(zero, 2)).re / lam_sq
    T = make_automorphism(lam, r, a, tuple(U), sigma, form, jet.D)
    if T.jet != jet:
        raise ValueError("jet does not match any hyperquadric automorphism")
    return T


def compose(T1, T2):
    """Automorphism whose jet is the jet of T1 o T2.

    Parameters are recovered from the composite 4-jet and rebuilt; since an
    automorphism is determined by its parameters and those by its 4-jet,
    the rebuilt full-degree jet is the composite's (tests check this on
    random triples at full degree).
    """
    if T1.form != T2.form or T1.D != T2.D:
        raise ValueError("automorphisms live on different quadrics or caps")
    T1s = make_automorphism(T1.lam, T1.r, T1.a, T1.U, T1.sigma, T1.form, 4)
    T2s = make_automorphism(T2.lam, T2.r, T2.a, T2.U, T2.sigma, T2.form, 4)
    comp4 = apply_automorphism(T1s, T2s.jet)
    T4 = automorphism_from_jet(comp4, T1.form)
    return make_automorphism(T4.lam, T4.r, T4.a, T4.U, T4.sigma, T1.form,
                             T1.D)


def inverse(T):
    """Group inverse in closed form:

        lam' = 1/lam,  U' = U^-1,  a' = -sigma lam^-1 (a U),
        r' = -sigma lam^-2 r,      sigma' = sigma.

    The linear-part formulas drop out of matching d(S o T) = id; r' follows
    from the w^2-coefficient of the composite's last component.  The rebuild
    through make_automorphism re-verifies the isometry identity and quadric
    preservation, and tests check S o T = id at full jet level.
    """
    lam_p = rat(1) / T.lam
    Uinv = linalg.inverse([list(row) for row in T.U])
    aU = linalg.vec_mat(list(T.a), [list(row) for row in T.U])
    sc = GaussianRational(-T.sigma * lam_p)
    a_p = tuple(sc * x for x in aU)
    r_p = -T.sigma * lam_p * lam_p * T.r
    return make_automorphism(lam_p, r_p, a_p,
                             tuple(tuple(row) for row in Uinv),
                             T.sigma, T.form, T.D)


def apply_automorphism(T, H):
    """The composite jet T.jet o H, expanded from T's parameters.

    H is a germ-preserving map with n + 1 components into T's space, at the
    same degree cap.  Substituting the components of H directly into the
    fractional linear form of T costs one unit inversion of q o H plus one
    series product per component, all in H's source variables; composing
    the two jets wholesale would instead expand every monomial of T.jet as
    a power product of H-components, which for a dense isometry block is
    slower by orders of magnitude.  The result equals
    compose_maps(T.jet, H) identically (tests compare them on random
    instances).
    """
    n = T.form.n
    if H.target_len() != n + 1:
        raise ValueError("map has %d components, expected %d"
                         % (H.target_len(), n + 1))
    if H.D != T.D:
        raise ValueError("degree caps differ: map %d, automorphism %d"
                         % (H.D, T.D))
    if not H.is_germ_preserving():
        raise ValueError("apply_automorphism needs a germ-preserving map")
    m = H.source_n
    F = H.components[:n]
    G = H.components[n]
    abar = [x.conj() for x in T.a]
    a_abar = scalar_product(T.a, abar, T.form) if n else GR_ZERO
    qH = TruncatedHoloSeries(m, H.D, {((0,) * m, 0): GR_ONE})
    for j in range(n):
        cj = GaussianRational(0, -2) * T.form.eps(j) * abar[j]
        if cj:
            qH = qH + F[j].scale(cj)
    cw = -(GaussianRational(T.r) + GaussianRational(0, 1) * a_abar)
    if cw:
        qH = qH + G.scale(cw)
    qinv = invert_unit(qH)
    xs = [F[i] + G.scale(T.a[i]) if T.a[i] else F[i] for i in range(n)]
    lam_gr = GaussianRational(T.lam)
    out = []
    for j in range(n):
        acc = TruncatedHoloSeries.zero(m, H.D)
        for i in range(n):
            if T.U[i][j]:
                acc = acc + xs[i].scale(T.U[i][j])
        out.append((acc * qinv).scale(lam_gr))
    sig_l2 = GaussianRational(T.sigma) * GaussianRational(T.lam * T.lam)
    out.append((G * qinv).scale(sig_l2))
    return HoloMapJet(m, H.D, out)


class HypersurfaceModel:
    """A germ Im w = <z, zbar>_ell + A at 0.

    form = "full" stores A(z, zbar, w, wbar) with no terms of weighted
    degree <= 3; form = "graph" stores the graphed series A(z, zbar, u).
    """

    __slots__ = ("n", "ell", "D", "A", "form")

    def __init__(self, n, ell, D, A, form="full"):
        if not 0 <= 2 * ell <= n:
            raise ValueError("need 0 <= ell <= n/2")
        if form not in ("full", "graph"):
            raise ValueError("form must be 'full' or 'graph'")
        if A.n != n or A.D != D:
            raise ValueError("defining series dimension/cap mismatch")
        if form == "full":
            if A.mode != "zw":
                raise ValueError("full form needs a zw-mode series")
            mw = A.min_weight()
            if mw is not None and mw <= 3:
                raise ValueError("defining series has terms of weighted "
                                 "degree <= 3")
        else:
            if A.mode != "zu":
                raise ValueError("graph form needs a zu-mode series")
        self.n = n
        self.ell = ell
        self.D = D
        self.A = A
        self.form = form

    @classmethod
    def quadric(cls, n, ell, D):
        return cls(n, ell, D, TruncatedRealSeries.zero(n, D), "full")

    def signature_form(self):
        return SignatureForm(self.n, self.ell)

    def __eq__(self, other):
        return (isinstance(other, HypersurfaceModel)
                and (self.n, self.ell, self.D, self.form) ==
                (other.n, other.ell, other.D, other.form)
                and self.A == other.A)

    def __repr__(self):
        return "HypersurfaceModel(n=%d, ell=%d, D=%d, %s, %d terms)" % (
            self.n, self.ell, self.D, self.form, len(self.A.terms))


_TRANSFORM_CACHE = {}


def transform_defining(A2, T):
    """The defining series A1 of the pullback of Im w = phi + A2 under T.

    A1 = sigma lam^-2 |q|^2 A2 o (T, Tbar), computed exactly on truncated
    series.  When A2 splits into signed Hermitian squares the substitution
    runs per square (|q|^2 |phi o T|^2 = |q (phi o T)|^2); otherwise the
    series is substituted wholesale.
    """
    if A2.mode != "zw":
        raise ValueError("transform_defining expects a full-form series")
    if A2.n != T.n or A2.D != T.D:
        raise ValueError("series and automorphism dimension/cap mismatch")
    mw = A2.min_weight()
    if mw is not None and mw <= 3:
        raise ValueError("defining series has terms of weighted degree <= 3")
    key = (A2, T.params())
    hit = _TRANSFORM_CACHE.get(key)
    if hit is not None:
        return hit
    n, D = A2.n, A2.D
    scale = GaussianRational(rat(T.sigma) / (T.lam * T.lam))
    try:
        dec = decompose(A2)
    except ExactDecompositionError:
        comp = compose_real_with_map(A2, T.jet)
        qq = hermitian_square(T.q_series)
        A1 = (qq * comp).scale_real(scale)
    else:
        out = {}
        for j, phi in enumerate(dec.phis):
            psi = T.q_series * compose_holo_with_map(phi, T.jet)
            sq = _holo_anti_product(psi.terms, _holo_conj_raw(psi.terms), D)
            sgn = -scale if j < dec.s else scale
            _radd_into(out, sq, scale=sgn)
        A1 = TruncatedRealSeries._raw(n, D, out, "zw")
    mw1 = A1.min_weight()
    assert mw1 is None or mw1 >= 4, "transform produced low-order terms"
    if len(_TRANSFORM_CACHE) > 128:
        _TRANSFORM_CACHE.clear()
    _TRANSFORM_CACHE[key] = A1
    return A1


def verify_equivalence(M1, M2, T):
    """True iff T pulls the germ of M2 back to the germ of M1, exactly.

    The class hypothesis of the uniqueness theorem (both defining series of
    finite Hermitian rank with rank sum < n) is advisory: a warning, not an
    error.  A mismatch of the rank / signature-pair invariants refutes
    equivalence without computing the transform.
    """
    if (M1.n, M1.ell, M1.D) != (M2.n, M2.ell, M2.D):
        raise ValueError("models live on different quadrics or caps")
    if M1.form != "full" or M2.form != "full":
        raise ValueError("equivalence check expects full-form models")
    p1 = hermitian_profile(M1.A)
    p2 = hermitian_profile(M2.A)
    if (not _vanishing_ok(M1.A) or not _vanishing_ok(M2.A)
            or p1.rank + p2.rank >= M1.n):
        warnings.warn("class hypothesis violated: defining series are not "
                      "both in H_k classes with k1 + k2 < n; the uniqueness "
                      "theorem does not apply, proceeding anyway")
    if p1.rank != p2.rank:
        return False
    if {p1.neg_count, p1.pos_count} != {p2.neg_count, p2.pos_count}:
        return False
    return M1.A == transform_defining(M2.A, T)


def random_isometry(form, sigma=1, seed=0, max_tries=64):
    """Random exact-rational U with U J U* = sigma J, deterministic in seed.

    Cayley transform U = (I - S)(I + S)^-1 of a random rational J-skew S
    ((JS)* = -JS); for sigma = -1 (balanced signature only) the result is
    composed with the block swap that conjugates J to -J.
    """
    n, ell = form.n, form.ell
    if sigma not in (1, -1):
        raise ValueError("sigma must be +1 or -1")
    if sigma == -1 and 2 * ell != n:
        raise ValueError("sigma = -1 requires a balanced signature ell = n/2")
    rng = random.Random(seed)
    J = form.J()
    for _ in range(max_tries):
        B = [[GaussianRational(rat(rng.randint(-2, 2)) / rng.randint(1, 2),
                               rat(rng.randint(-2, 2)) / rng.randint(1, 2))
              for _ in range(n)] for _ in range(n)]
        K = [[B[i][j] - B[j][i].conj() for j in range(n)] for i in range(n)]
        S = linalg.mat_mul(J, K)
        IS = [[(GR_ONE if i == j else GR_ZERO) + S[i][j] for j in range(n)]
              for i in range(n)]
        try:
            ISinv = linalg.inverse(IS)
        except ValueError:
            continue
        ImS = [[(GR_ONE if i == j else GR_ZERO) - S[i][j] for j in range(n)]
               for i in range(n)]
        U = linalg.mat_mul(ImS, ISinv)
        UJUs = linalg.mat_mul(linalg.mat_mul(U, J), linalg.conj_transpose(U))
        assert UJUs == J, "Cayley transform failed the isometry identity"
        if sigma == -1:
            P = [[GR_ONE if j == (i + ell) % n else GR_ZERO
                  for j in range(n)] for i in range(n)]
            U = linalg.mat_mul(U, P)
            UJUs = linalg.mat_mul(linalg.mat_mul(U, J),
                                  linalg.conj_transpose(U))
            assert UJUs == [[-x for x in row] for row in J], \
                "signed permutation failed to flip the form"
        return tuple(tuple(row) for row in U)
    raise ValueError("could not draw an invertible Cayley parameter in %d "
                     "tries" % max_tries)
