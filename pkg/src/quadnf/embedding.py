"""Embeddings of hypersurface germs into hyperquadrics, exactly.

A germ M: Im w = <z,zbar>_ell + A(z,zbar,w,wbar) in C^(n+1) embeds into the
hyperquadric Q in C^(N+1) of signature ell' through a holomorphic germ map
H = (F, G) when

    Im G = <F, Fbar>_ell'    on M,

together with CR transversality at 0 (the differential of the last
component G does not vanish there).  The identity is checked exactly on
truncated series by passing to the graph parametrization w = u + iV,
V = <z,zbar>_ell + Atilde(z,zbar,u), and substituting.

The on-M identity pins down the 1-jet of any embedding: G_z(0) = 0, G_w(0)
is real and nonzero, and its sign sigma is the transversal orientation.
Writing G_w(0) = sigma lam^2, the z-linear block V = F_z(0)/lam is a
lam-free isometry of (C^n, <.,.>_ell-resigned-by-sigma) into the target
form.  normalize_embedding extends V to a full target isometry U, reads
off the translation and w^2 gauge parameters, and produces a target
automorphism T with

    T^-1 o H = Htilde = (z + f, phi, sigma w + g),    d phi(0) = 0,

where the n components z_j + f_j sit in target slots whose signs are
sigma eps_j, the slack components phi fill the remaining slots, and
(f, g) satisfy the standard first-jet gauge (no constant or first-order
terms, Re of the w^2 coefficient of g zero).  Slots are recorded as an
explicit permutation rather than physically reordered, so Htilde keeps
the standard target form; block_jet() gives the reordered presentation.

The extension of V to U is where exact arithmetic earns its keep: the
orthocomplement of the image carries a rational Hermitian form that must
be split into +-1 vectors over Q(i).  Diagonal pivots whose absolute
value is not a norm from Q(i) are repaired by merging two same-sign
pivots d_i, d_j through a vector s r_i + t r_j with d_i s^2 + d_j t^2 a
norm (a small integer search; the obstruction class is 2-torsion, so
merges strictly reduce it).  Witt cancellation guarantees the split
exists whenever the embedding identity holds, hence failures of the
bounded search raise rather than degrade precision.

Rigidity: two normalized embeddings of the same germ into targets of the
source signature share their (z + f, sigma w + g)-parts, and their
phi-blocks have equal Hermitian squares, hence match by a constant
unitary U.  factor_rigidity recovers U exactly from coefficient columns
plus frame completion, lifts the first normalizer through the linear
inclusion L (or the swap-inclusion L- when the orientations differ), and
assembles a single target automorphism T with H2 = T o L o H1, verified
exactly.  Only when the unitary completion leaves Q(i) does the result
degrade to regime "mixed-float", verified to 1e-9.
"""

import warnings

from . import linalg
from .chern_moser import NormalizedPair
from .hermitian import ExactDecompositionError, decompose
from .quadric import (HypersurfaceModel, SignatureForm, apply_automorphism,
                      compose, identity_automorphism, inverse,
                      make_automorphism)
from .rational import (GR_I, GR_ONE, GR_ZERO, GaussianRational, rat,
                       rational_sqrt, two_squares)
from .series import (HoloMapJet, TruncatedHoloSeries, TruncatedRealSeries,
                     _holo_anti_product, _holo_conj_raw, _radd_into,
                     compose_holo_with_map, compose_maps, identity_map,
                     invert_map, levi_raw, to_graph_form, _substitute_w)

_MU = GaussianRational(0, rat("-1/2"))  # 1/(2i)


def _im_raw_holo(terms, n):
    """Raw zw dict of Im of a holomorphic series given by its terms."""
    zero = (0,) * n
    out = {}
    for (al, ga), c in terms.items():
        _radd_into(out, {(al, zero, ga, 0): c * _MU})
        _radd_into(out, {(zero, al, 0, ga): -(c.conj()) * _MU})
    return out


def _signed_square_sum(phis, signs, n, D):
    """sum_j signs[j] |phis[j]|^2 as a raw zw dict."""
    out = {}
    for phi, sgn in zip(phis, signs):
        sq = _holo_anti_product(phi.terms, _holo_conj_raw(phi.terms), D)
        _radd_into(out, sq, scale=GaussianRational(sgn))
    return out


def embedding_residual(H, target, model):
    """Im G - <F, Fbar>_ell' pulled back to the graph of the model.

    Returns the trace-mode series of the pullback; the zero series means H
    embeds the model germ into the target hyperquadric to degree D.
    """
    n, D = H.source_n, H.D
    N = target.n
    if H.target_len() != N + 1:
        raise ValueError("map has %d components, target form expects %d"
                         % (H.target_len(), N + 1))
    if (model.n, model.D) != (n, D):
        raise ValueError("model and map dimension/cap mismatch")
    G = H.components[N]
    rho = _im_raw_holo(G.terms, n)
    for j in range(N):
        Fj = H.components[j]
        sq = _holo_anti_product(Fj.terms, _holo_conj_raw(Fj.terms), D)
        _radd_into(rho, sq, scale=GaussianRational(-target.eps(j)))
    rho_series = TruncatedRealSeries._raw(n, D, rho, "zw")
    V = levi_raw(n, model.ell)
    if not model.A.is_zero():
        if model.form == "graph":
            _radd_into(V, model.A.terms)
        else:
            _radd_into(V, to_graph_form(model.A, model.ell).terms)
    res = _substitute_w(rho_series, V)
    return TruncatedRealSeries._raw(n, D, res, "zu")


def check_transversality(H):
    """True iff the differential of the last component at 0 is nonzero."""
    n = H.source_n
    last = H.components[-1]
    zero = (0,) * n
    if last.coeff(zero, 1):
        return True
    for k in range(n):
        e = tuple(1 if i == k else 0 for i in range(n))
        if last.coeff(e, 0):
            return True
    return False


class QuadricEmbedding:
    """A verified embedding of a model germ into a hyperquadric.

    H maps (z, w) in C^(n+1) to C^(N+1), target is the signature form on
    the N slack-extended z-coordinates, sigma the transversal orientation
    (the sign of the w-coefficient of the last component at 0).  The
    defining identity and CR transversality are verified on construction.
    """

    __slots__ = ("H", "target", "model", "sigma")

    def __init__(self, H, target, model, sigma=None):
        n, D = H.source_n, H.D
        if H.target_len() != target.n + 1:
            raise ValueError("map has %d components, target form expects %d"
                             % (H.target_len(), target.n + 1))
        if (model.n, model.D) != (n, D):
            raise ValueError("model and map dimension/cap mismatch")
        if not H.is_germ_preserving():
            raise ValueError("constant-term violation: an embedding of the "
                             "germ at 0 must fix 0")
        g1 = H.components[target.n].coeff((0,) * n, 1)
        if not g1 or not g1.is_real():
            raise ValueError("not CR transversal at 0: the last component "
                             "needs a nonzero real w-derivative")
        detected = 1 if g1.re > 0 else -1
        if sigma is not None and sigma != detected:
            raise ValueError("claimed orientation %d, map has %d"
                             % (sigma, detected))
        res = embedding_residual(H, target, model)
        if not res.is_zero():
            raise ValueError("defining identity fails on the hypersurface: "
                             "residual starts at weight %d"
                             % res.min_weight())
        self.H = H
        self.target = target
        self.model = model
        self.sigma = detected

    @property
    def n(self):
        return self.H.source_n

    @property
    def N(self):
        return self.target.n

    @property
    def codim(self):
        return self.target.n - self.H.source_n

    @property
    def D(self):
        return self.H.D

    def __eq__(self, other):
        return (isinstance(other, QuadricEmbedding)
                and self.target == other.target
                and self.sigma == other.sigma
                and self.model == other.model
                and self.H.components == other.H.components)

    def __repr__(self):
        return ("QuadricEmbedding(n=%d -> N=%d, ell=%d -> ell'=%d, "
                "sigma=%+d, D=%d)" % (self.n, self.N, self.model.ell,
                                      self.target.ell, self.sigma, self.D))


def build_embedding(M):
    """Canonical embedding of a model germ from its signed-square split.

    With A = -sum_(j<s) |phi_j|^2 + sum_(j>=s) |phi_j|^2 exactly, the map

        F = (z_1..z_ell, phi_1..phi_s, z_(ell+1)..z_n, phi_(s+1)..phi_r),
        G = w

    embeds M into the hyperquadric of signature ell + s in C^(n+r+1).
    When ell + s exceeds half the slack dimension the complementary
    presentation is used instead (positive slots first, w negated), so
    the reported target signature is min(ell+s, N-ell-s) and sigma = -1.
    Raises ExactDecompositionError if A has no exact split over Q(i), and
    ValueError if the split has constant or first-order components (the
    germ map would not fix 0, or the slack block would carry linear
    terms; neither happens for defining series with the two-sided
    vanishing property).
    """
    n, ell, D = M.n, M.ell, M.D
    if M.A.is_zero():
        return QuadricEmbedding(identity_map(n, D), SignatureForm(n, ell), M)
    if M.form != "full":
        raise ValueError("build_embedding expects a full-form model")
    dec = decompose(M.A)
    for phi in dec.phis:
        for (alpha, gamma) in phi.terms:
            if sum(alpha) + gamma < 2:
                raise ValueError(
                    "signed-square split has constant or first-order "
                    "components; the defining series must vanish to second "
                    "order in Z and Zbar separately")
    r, s = len(dec.phis), dec.s
    N = n + r
    zvars = [TruncatedHoloSeries.variable(n, D, j) for j in range(n)]
    w = TruncatedHoloSeries.w_variable(n, D)
    negs, poss = dec.phis[:s], dec.phis[s:]
    if 2 * (ell + s) <= N:
        comps = (zvars[:ell] + negs + zvars[ell:] + poss + [w])
        ell_p = ell + s
    else:
        comps = (zvars[ell:] + poss + zvars[:ell] + negs
                 + [w.scale(GaussianRational(-1))])
        ell_p = N - (ell + s)
    H = HoloMapJet(n, D, comps)
    return QuadricEmbedding(H, SignatureForm(N, ell_p), M)


# ---------------------------------------------------------------------------
# exact isometric frames over Q(i)

def _ip(x, y, signs):
    """<x, y> = sum_j signs[j] x_j conj(y_j), exact."""
    acc = GR_ZERO
    for xj, yj, s in zip(x, y, signs):
        if xj and yj:
            t = xj * yj.conj()
            acc = acc - t if s < 0 else acc + t
    return acc


def _diagonal_frame(rows, signs):
    """Pairwise orthogonal rows spanning the same space, with their norms.

    Returns [(row, d)] with d = <row, row> real and nonzero; requires the
    span to be nondegenerate for the form (true for orthocomplements of
    nondegenerate subspaces).
    """
    rows = [list(r) for r in rows]
    out = []
    while rows:
        piv = next((i for i, r in enumerate(rows) if _ip(r, r, signs)), None)
        if piv is None:
            r0 = rows[0]
            hit = next(((j, _ip(rows[j], r0, signs))
                        for j in range(1, len(rows))
                        if _ip(rows[j], r0, signs)), None)
            assert hit is not None, "frame spans a degenerate subspace"
            j, _ = hit
            cand = [a + b for a, b in zip(r0, rows[j])]
            if not _ip(cand, cand, signs):
                cand = [a + GR_I * b for a, b in zip(r0, rows[j])]
            assert _ip(cand, cand, signs), "hyperbolic pivot fix failed"
            rows[0] = cand
            continue
        r = rows.pop(piv)
        d = _ip(r, r, signs)
        assert d.is_real(), "self-products must be real"
        nxt = []
        for rk in rows:
            coef = _ip(rk, r, signs) / d
            nxt.append([a - coef * b for a, b in zip(rk, r)])
        rows = nxt
        out.append((r, rat(d.re)))
    return out


def _norm_reduce(d):
    """(c, d0) with d = (c conj(c)) d0 and d0 the smallest class pivot.

    d0 is +-1 times a squarefree product of primes = 3 (mod 4) — the
    canonical representative of d in Q*/norms.  Factoring once here keeps
    every later norm test in the merge search on small integers.
    """
    from sympy import factorint

    assert d, "cannot reduce a zero pivot"
    a = rat(abs(d))
    num, den = a.numerator, a.denominator
    core = 1
    c = GR_ONE
    for p, e in factorint(int(num * den)).items():
        p = int(p)
        if p % 4 == 3:
            if e % 2:
                core *= p
            k = e // 2
            if k:
                c = c * GaussianRational(rat(p) ** k)
        else:
            pi = two_squares(rat(p))
            for _ in range(e):
                c = c * pi
    c = c * GaussianRational(rat(1) / rat(den))
    return c, (rat(core) if d > 0 else -rat(core))


def _small_norm_pairs(bound=420):
    """Pairs (u, v) of nonzero Gaussian-integer norms, by u + v."""
    norms = sorted({a * a + b * b for a in range(21) for b in range(21)
                    if (a, b) != (0, 0) and a * a + b * b <= bound})
    pairs = [(u + v, u, v) for u in norms for v in norms]
    pairs.sort()
    return [(u, v) for _, u, v in pairs]


_MERGE_PAIRS = _small_norm_pairs()


def _same_core_merge(di, dj):
    """Merge data for two reduced pivots with the same core |di| = |dj|.

    Searching norms u, v with u + v = core (same signs) or v - u = core
    (opposite signs) makes m = di u + dj v = +-core^2, always a norm.
    This is the configuration Witt cancellation actually produces, and it
    works for cores of any size — the generic bounded search cannot reach
    a large prime core.
    """
    di, dj = rat(di), rat(dj)
    core = int(abs(di))
    opposite = (di > 0) != (dj > 0)
    tried = 0
    u = 0
    while tried < 400:
        u += 1
        if not opposite and u >= core:
            break
        su = two_squares(rat(u))
        if su is None:
            continue
        tried += 1
        v = u + core if opposite else core - u
        sv = two_squares(rat(v))
        if sv is None:
            continue
        m = di * u + dj * v
        return su, sv, two_squares(abs(m)), m
    return None


def _merge_search(di, dj):
    """Gaussian (s, t, c, m) with di |s|^2 + dj |t|^2 = m, |m| = c conj(c).

    The pivots are signed; for opposite signs the combination is the
    indefinite value di u - dj v, which represents norms of both signs.
    The coefficients must range over Z[i], not Z: di u + dj v with u, v
    arbitrary norms reaches every class that any Q(i)-combination of two
    vectors of squared lengths di, dj can reach, while integer s, t only
    give square u, v and miss some (already di = dj = 3: 3(s^2 + t^2) is
    never a norm, but u = 1, v = 2 gives 9).  Returns None if the search
    bound is exhausted.
    """
    if abs(di) == abs(dj):
        hit = _same_core_merge(di, dj)
        if hit is not None:
            return hit
    for u, v in _MERGE_PAIRS:
        m = di * u + dj * v
        if not m:
            continue
        c = two_squares(abs(m))
        if c is not None:
            return two_squares(u), two_squares(v), c, m
    return None


def _standard_frame(pairs, signs):
    """[(row, +-1)] with <row, row> = +-1 from an orthogonal frame.

    Pivots whose absolute value is a Q(i)-norm are rescaled directly; the
    rest are merged pairwise, preferring partners with a normable product
    so the leftover pivot rescales immediately.  The merge of (r_i, d_i),
    (r_j, d_j) through v = s r_i + t r_j with Gaussian s, t and
    m = d_i |s|^2 + d_j |t|^2 of norm absolute value peels one +-1
    vector; the orthogonal leftover (-d_j conj(t)) r_i + (d_i conj(s)) r_j
    has self-product d_i d_j m, a norm times the product class, so each
    merge strictly shrinks the stuck set.
    """
    done = []
    stuck = []

    def push(r, d):
        c, d0 = _norm_reduce(d)
        inv = GR_ONE / c
        row = [x * inv for x in r]
        if abs(d0) == 1:
            done.append((row, 1 if d0 > 0 else -1))
        else:
            stuck.append((row, d0))

    for r, d in pairs:
        push(r, d)
    while stuck:
        best = None
        for i in range(len(stuck)):
            for j in range(i + 1, len(stuck)):
                di, dj = stuck[i][1], stuck[j][1]
                hit = _merge_search(di, dj)
                if hit is None:
                    continue
                normable = abs(di) == abs(dj)  # reduced pivots: same core
                if best is None or (normable and not best[2]):
                    best = (i, j, normable, hit)
                if normable:
                    break
            if best is not None and best[2]:
                break
        if best is None:
            raise ValueError(
                "cannot complete an exact isometric frame over Q(i): no "
                "norm found within the merge search bound (stuck pivot "
                "classes %s)" % sorted(str(d) for _, d in stuck))
        i, j, _, (s_, t_, _c, m) = best
        ri, di = stuck[i]
        rj, dj = stuck[j]
        del stuck[j], stuck[i]
        v = [s_ * a + t_ * b for a, b in zip(ri, rj)]
        push(v, m)
        ta = GaussianRational(-dj) * t_.conj()
        tb = GaussianRational(di) * s_.conj()
        w_ = [ta * a + tb * b for a, b in zip(ri, rj)]
        push(w_, di * dj * m)
    return done


def _orthocomplement_rows(rows, signs):
    """Basis of the orthocomplement of the span of rows, as row vectors."""
    N = len(signs)
    if not rows:
        return [[GR_ONE if j == i else GR_ZERO for j in range(N)]
                for i in range(N)]
    A = [[GaussianRational(signs[j]) * rows[i][j].conj() for j in range(N)]
         for i in range(len(rows))]
    return linalg.nullspace(A, N)


def _complete_isometry(rows, signs, needed_signs):
    """Rows extending an isometric frame, with prescribed self-products.

    rows are exact vectors with Gram diag over the slot signs; returns
    len(needed_signs) new rows, the t-th with <row, row> = needed_signs[t],
    all orthogonal to the input and to each other.
    """
    comp = _orthocomplement_rows(rows, signs)
    assert len(comp) == len(needed_signs), "orthocomplement dimension is off"
    if not comp:
        return []
    frame = _standard_frame(_diagonal_frame(comp, signs), signs)
    pos = [r for r, sg in frame if sg > 0]
    neg = [r for r, sg in frame if sg < 0]
    need_pos = sum(1 for s in needed_signs if s > 0)
    assert len(pos) == need_pos and len(neg) == len(needed_signs) - need_pos, \
        "inertia mismatch in isometric completion"
    out = []
    for s in needed_signs:
        out.append(pos.pop(0) if s > 0 else neg.pop(0))
    return out


# ---------------------------------------------------------------------------
# normalization

def _slot_layout(n, ell, N, ell_p, sigma):
    """Target slots of the z-block and the slack block.

    z_i (0-based) goes to a slot of sign sigma eps_i; slack slots are the
    complement, those contributing negative squares to the recovered
    defining series first.  Returns (z_slots, phi_slots, s).
    """
    if sigma == 1:
        assert ell <= ell_p and ell_p + (n - ell) <= N, \
            "signature does not admit a direct embedding"
        z = [i if i < ell else ell_p + (i - ell) for i in range(n)]
    else:
        assert n - ell <= ell_p and ell_p + ell <= N, \
            "signature does not admit an orientation-reversing embedding"
        z = [ell_p + i if i < ell else i - ell for i in range(n)]
    taken = set(z)
    assert len(taken) == n
    free = [j for j in range(N) if j not in taken]
    if sigma == 1:
        first = [j for j in free if j < ell_p]
        second = [j for j in free if j >= ell_p]
    else:
        first = [j for j in free if j >= ell_p]
        second = [j for j in free if j < ell_p]
    return tuple(z), tuple(first + second), len(first)


class NormalizedEmbedding:
    """Result of normalize_embedding: T and Htilde = T^-1 o H.

    embedding.H keeps the original target coordinates; z_slots, phi_slots
    and the accessors present the block form (z + f, phi, sigma w + g).
    s counts the slack components contributing negative squares to the
    recovered defining series.
    """

    __slots__ = ("T", "embedding", "sigma", "lam", "z_slots", "phi_slots",
                 "s")

    def __init__(self, T, embedding, lam, z_slots, phi_slots, s):
        self.T = T
        self.embedding = embedding
        self.sigma = embedding.sigma
        self.lam = lam
        self.z_slots = z_slots
        self.phi_slots = phi_slots
        self.s = s

    def f_parts(self):
        H = self.embedding.H
        n, D = H.source_n, H.D
        return [H.components[sl] - TruncatedHoloSeries.variable(n, D, i)
                for i, sl in enumerate(self.z_slots)]

    def phi_parts(self):
        return [self.embedding.H.components[sl] for sl in self.phi_slots]

    def g_part(self):
        H = self.embedding.H
        n, D = H.source_n, H.D
        w = TruncatedHoloSeries.w_variable(n, D)
        return (H.components[self.embedding.N]
                + w.scale(GaussianRational(-self.sigma)))

    def normalized_pair(self):
        """The deviation (f, g) as a gauge-checked jet pair."""
        return NormalizedPair(self.f_parts(), self.g_part())

    def block_jet(self):
        """The components reordered to (z + f, phi, sigma w + g).

        Presentation only: the reordered tuple no longer pairs with the
        standard target form, use the slot tuples to map back.
        """
        H = self.embedding.H
        comps = ([H.components[sl] for sl in self.z_slots]
                 + [H.components[sl] for sl in self.phi_slots]
                 + [H.components[self.embedding.N]])
        return HoloMapJet(H.source_n, H.D, comps)

    def permutation(self):
        return tuple(self.z_slots) + tuple(self.phi_slots) \
            + (self.embedding.N,)

    def __repr__(self):
        return ("NormalizedEmbedding(sigma=%+d, lam=%s, z_slots=%s, "
                "phi_slots=%s, s=%d)" % (self.sigma, self.lam,
                                         list(self.z_slots),
                                         list(self.phi_slots), self.s))


def normalize_embedding(emb, model=None):
    """Target automorphism T with T^-1 o H in block normal form.

    Stages: (1) lam from G_w(0) = sigma lam^2 (ValueError on an irrational
    dilation); (2) the z-linear isometry V = F_z(0)/lam is placed on its
    slots and extended to a full target isometry U by exact frame
    completion; (3) the translation parameter a = sigma lam^-1 F_w(0) U^-1
    kills the w-linear slack terms; (4) a final parabolic parameter r
    clears the real part of the w^2 coefficient of the last component.
    """
    if model is not None and model != emb.model:
        raise ValueError("model disagrees with the embedding's own model")
    model = emb.model
    H, target, sigma = emb.H, emb.target, emb.sigma
    n, ell, D = model.n, model.ell, model.D
    N, ell_p = target.n, target.ell
    zero = (0,) * n

    g1 = H.components[N].coeff(zero, 1)
    lam_sq = abs(g1.re)
    lam = rational_sqrt(lam_sq)
    if lam is None:
        raise ValueError("irrational dilation: lam^2 = %s is not a rational "
                         "square" % lam_sq)
    lam_inv = GaussianRational(rat(1) / lam)

    signs = [target.eps(j) for j in range(N)]
    V = []
    for i in range(n):
        e = tuple(1 if t == i else 0 for t in range(n))
        V.append([H.components[j].coeff(e, 0) * lam_inv for j in range(N)])
    src = SignatureForm(n, ell)
    for i in range(n):
        for j in range(n):
            want = GaussianRational(sigma * src.eps(i)) if i == j else GR_ZERO
            assert _ip(V[i], V[j], signs) == want, \
                "z-linear block is not a scaled isometry"

    z_slots, phi_slots, s = _slot_layout(n, ell, N, ell_p, sigma)
    needed = [signs[sl] for sl in phi_slots]
    extra = _complete_isometry(V, signs, needed)
    U = [None] * N
    for i, sl in enumerate(z_slots):
        U[sl] = V[i]
    for t, sl in enumerate(phi_slots):
        U[sl] = extra[t]
    for i in range(N):
        for j in range(N):
            want = GaussianRational(signs[i]) if i == j else GR_ZERO
            assert _ip(U[i], U[j], signs) == want, \
                "completed matrix is not an isometry"

    Uinv = linalg.inverse([row[:] for row in U])
    Fw = [H.components[j].coeff(zero, 1) for j in range(N)]
    sg_li = GaussianRational(sigma) * lam_inv
    a = [x * sg_li for x in linalg.vec_mat(Fw, Uinv)]
    T0 = make_automorphism(lam, 0, a, tuple(tuple(r) for r in U), 1,
                           target, D)
    H1 = apply_automorphism(inverse(T0), H)
    L1 = H1.components[N]
    assert L1.coeff(zero, 1) == GaussianRational(sigma), \
        "first normalization stage lost the orientation"
    r = L1.coeff(zero, 2).re
    if r:
        I = tuple(tuple(GR_ONE if i == j else GR_ZERO for j in range(N))
                  for i in range(N))
        T = compose(T0, make_automorphism(1, r, (GR_ZERO,) * N, I, 1,
                                          target, D))
        Ht = apply_automorphism(inverse(T), H)
    else:
        T = T0
        Ht = H1
    emb_t = QuadricEmbedding(Ht, target, model)
    assert emb_t.sigma == sigma
    out = NormalizedEmbedding(T, emb_t, lam, z_slots, phi_slots, s)
    out.normalized_pair()  # raises if the gauge was not reached
    for phi in out.phi_parts():
        assert not phi.coeff(zero, 1), "slack block kept a w-linear term"
        for k in range(n):
            e = tuple(1 if t == k else 0 for t in range(n))
            assert not phi.coeff(e, 0), "slack block kept a z-linear term"
    return out


def induced_defining_series(Htilde, ell, ell_prime, sigma):
    """Defining series recovered from a block-normalized embedding.

    Htilde is a NormalizedEmbedding or a HoloMapJet already in block order
    (z + f, phi, sigma w + g).  The invertible (n+1)-subjet Phi = (z + f,
    sigma w + g) is reverted and the slack block composed with its inverse:

        A = -sum_(j<s) |phi_j o Phi^-1|^2 + sum_(j>=s) |phi_j o Phi^-1|^2,

    with s = ell' - ell for sigma = +1 and s = (N - ell') - ell for
    sigma = -1.  For embeddings this reproduces the model's defining
    series exactly.
    """
    if isinstance(Htilde, NormalizedEmbedding):
        ne = Htilde
        if (ell, ell_prime, sigma) != (ne.embedding.model.ell,
                                       ne.embedding.target.ell, ne.sigma):
            raise ValueError("signature data disagrees with the normalized "
                             "embedding")
        n, D = ne.embedding.n, ne.embedding.D
        zcomps = [ne.embedding.H.components[sl] for sl in ne.z_slots]
        phis = ne.phi_parts()
        last = ne.embedding.H.components[ne.embedding.N]
        s = ne.s
    else:
        n, D = Htilde.source_n, Htilde.D
        N = Htilde.target_len() - 1
        zcomps = Htilde.components[:n]
        phis = Htilde.components[n:N]
        last = Htilde.components[N]
        s = (ell_prime - ell) if sigma == 1 else (N - ell_prime) - ell
    if not 0 <= s <= len(phis):
        raise ValueError("signature data is inconsistent with the slack "
                         "block")
    Phi = HoloMapJet(n, D, list(zcomps) + [last])
    Phi_inv = invert_map(Phi)
    tilde = [compose_holo_with_map(p, Phi_inv) for p in phis]
    signs = [-1] * s + [1] * (len(phis) - s)
    raw = _signed_square_sum(tilde, signs, n, D)
    A = TruncatedRealSeries._raw(n, D, raw, "zw")
    mw = A.min_weight()
    assert mw is None or mw >= 4, "recovered defining series has low-order " \
        "terms; the input was not in block normal form"
    return A


# ---------------------------------------------------------------------------
# rigidity

class RigidityFactorization:
    """Factorization H2 = T o L o H1 of two embeddings of one germ.

    linear is "L" (pad with zeros before the last slot) or "L-" (the
    orientation-swapping inclusion).  unitary_match is the constant
    unitary aligning the padded slack block of H1 with that of H2; it is
    exact (and folded into T) in regime "exact".  In regime "mixed-float"
    the unitary completion left Q(i): T then collects only the exact
    outer factors, unitary_match is a float matrix, and the identity
    inverse(T2) o H2 = W o L o inverse(T1) o H1 is verified to 1e-9
    (t_source, t_target keep the two exact normalizers).
    """

    __slots__ = ("T", "linear", "unitary_match", "residual_exact", "regime",
                 "max_residual", "t_source", "t_target")

    def __init__(self, T, linear, unitary_match, residual_exact, regime,
                 max_residual, t_source, t_target):
        self.T = T
        self.linear = linear
        self.unitary_match = unitary_match
        self.residual_exact = residual_exact
        self.regime = regime
        self.max_residual = max_residual
        self.t_source = t_source
        self.t_target = t_target

    def __repr__(self):
        return ("RigidityFactorization(linear=%s, regime=%s, "
                "max_residual=%s)" % (self.linear, self.regime,
                                      self.max_residual))


def _inclusion_jet(N1, N2, D):
    """L: (z', w') -> (z', 0, w') from C^(N1+1) into C^(N2+1)."""
    comps = [TruncatedHoloSeries.variable(N1, D, j) for j in range(N1)]
    comps += [TruncatedHoloSeries.zero(N1, D)] * (N2 - N1)
    comps.append(TruncatedHoloSeries.w_variable(N1, D))
    return HoloMapJet(N1, D, comps)


def _swap_inclusion_jet(n, ell, N2, D):
    """L-: (z, w) -> (z_(ell+1..n), z_(1..ell), 0, -w) into C^(N2+1)."""
    comps = [TruncatedHoloSeries.variable(n, D, ell + t)
             for t in range(n - ell)]
    comps += [TruncatedHoloSeries.variable(n, D, t) for t in range(ell)]
    comps += [TruncatedHoloSeries.zero(n, D)] * (N2 - n)
    comps.append(TruncatedHoloSeries.w_variable(n, D)
                 .scale(GaussianRational(-1)))
    return HoloMapJet(n, D, comps)


def _lift_through_L(Tinv, form2, k_pad):
    """Automorphism T' of the padded target with L o Tinv = T' o L."""
    N1 = Tinv.n
    N2 = form2.n
    a = list(Tinv.a) + [GR_ZERO] * k_pad
    U = [[GR_ZERO] * N2 for _ in range(N2)]
    for i in range(N1):
        for j in range(N1):
            U[i][j] = Tinv.U[i][j]
    for t in range(k_pad):
        U[N1 + t][N1 + t] = GR_ONE
    return make_automorphism(Tinv.lam, Tinv.r, a,
                             tuple(tuple(r) for r in U), 1, form2, Tinv.D)


def _lift_through_Lminus(Tinv, src_ell, form2):
    """Automorphism T' of the padded target with L- o Tinv = T' o L-.

    Conjugation by the block swap pi(i) = i - ell (i >= ell), n - ell + i
    (i < ell) flips the form on the source slots, negating the
    translation's slot entries and the parabolic parameter.
    """
    n = Tinv.n
    ell = src_ell
    N2 = form2.n

    def pi(i):
        return i - ell if i >= ell else (n - ell) + i

    a = [GR_ZERO] * N2
    for i in range(n):
        a[pi(i)] = -Tinv.a[i]
    U = [[GR_ZERO] * N2 for _ in range(N2)]
    for i in range(n):
        for j in range(n):
            U[pi(i)][pi(j)] = Tinv.U[i][j]
    for t in range(n, N2):
        U[t][t] = GR_ONE
    return make_automorphism(Tinv.lam, -Tinv.r, a,
                             tuple(tuple(r) for r in U), 1, form2, Tinv.D)


def _coeff_columns(phis, k):
    """Sorted key list and per-key coefficient columns in C^k."""
    keys = sorted(set().union(*[set(p.terms) for p in phis])
                  if phis else set())
    cols = {m: [p.terms.get(m, GR_ZERO) for p in phis] for m in keys}
    return keys, cols


def _match_unitary_exact(phis1, phis2, k):
    """Exact unitary U with phis1 = U . phis2 componentwise, or None.

    U is determined on the span of the coefficient columns of phis2 by
    sending them to the matching columns of phis1 (an isometry because
    the Hermitian squares agree), and extended by mapping exact
    orthonormal completions of both column spaces onto each other.
    """
    ones = [1] * k
    keys, cols2 = _coeff_columns(phis2, k)
    _, cols1 = _coeff_columns(phis1, k)
    X_cols, Y_cols = [], []
    for m in keys:
        cand = cols2[m]
        trial = X_cols + [cand]
        A = [list(c) for c in trial]
        if linalg.rank(A) == len(trial):
            X_cols.append(cand)
            Y_cols.append(cols1.get(m, [GR_ZERO] * k))
        if len(X_cols) == k:
            break
    for i in range(len(X_cols)):
        for j in range(len(X_cols)):
            if _ip(X_cols[i], X_cols[j], ones) != _ip(Y_cols[i], Y_cols[j],
                                                      ones):
                return None  # squares do not actually agree to this order
    X_extra, Y_extra = [], []
    if len(X_cols) < k:
        try:
            X_extra = [r for r, _ in _standard_frame(_diagonal_frame(
                _orthocomplement_rows([list(c) for c in X_cols], ones),
                ones), ones)]
            Y_extra = [r for r, _ in _standard_frame(_diagonal_frame(
                _orthocomplement_rows([list(c) for c in Y_cols], ones),
                ones), ones)]
        except ValueError:
            return None
    Xm = [list(col) for col in zip(*(X_cols + X_extra))]
    Ym = [list(col) for col in zip(*(Y_cols + Y_extra))]
    U = linalg.mat_mul(Ym, linalg.inverse(Xm))
    for i in range(k):
        for j in range(k):
            want = GR_ONE if i == j else GR_ZERO
            if _ip(U[i], U[j], ones) != want:
                return None
    for m in keys:
        got = linalg.mat_vec(U, cols2[m])
        if got != cols1.get(m, [GR_ZERO] * k):
            return None
    return tuple(tuple(row) for row in U)


def _float_c(x):
    return complex(float(x.re), float(x.im))


def _match_unitary_float(phis1, phis2, k):
    """Nearest-unitary Procrustes match of the coefficient columns."""
    import numpy as np

    keys1, cols1 = _coeff_columns(phis1, k)
    keys2, cols2 = _coeff_columns(phis2, k)
    keys = sorted(set(keys1) | set(keys2))
    zcol = [GR_ZERO] * k
    P1 = np.array([[_float_c(cols1.get(m, zcol)[j]) for m in keys]
                   for j in range(k)])
    P2 = np.array([[_float_c(cols2.get(m, zcol)[j]) for m in keys]
                   for j in range(k)])
    u, _, vh = np.linalg.svd(P1 @ P2.conj().T)
    return u @ vh


def factor_rigidity(emb1, emb2, M):
    """Factor H2 = T o L o H1 for two embeddings of the germ M.

    Preconditions: both targets carry the source signature ell, and
    codim(H1) <= codim(H2); k1 + k2 >= n only triggers a warning (the
    factorization is then not guaranteed, and failures surface as
    ValueError).  After normalizing both maps, the (z + f, sigma w + g)
    parts must agree (up to the orientation swap) and the slack blocks,
    padded to equal length, are matched by a constant unitary recovered
    from coefficient columns.  The unitary, the normalizers and the lift
    of the source normalizer through L are composed into a single exact
    target automorphism whenever the matching stays in Q(i).
    """
    n, ell, D = M.n, M.ell, M.D
    if emb1.model != M or emb2.model != M:
        raise ValueError("both embeddings must be embeddings of M")
    k1, k2 = emb1.codim, emb2.codim
    if k1 > k2:
        raise ValueError("order the embeddings by codimension: k1 <= k2")
    if emb1.target.ell != ell or emb2.target.ell != ell:
        raise ValueError("rigidity needs targets of the source signature")
    if k1 + k2 >= n:
        warnings.warn("codimension hypothesis k1 + k2 < n fails; a "
                      "factorization through a linear inclusion is not "
                      "guaranteed", stacklevel=2)
    R1 = normalize_embedding(emb1)
    R2 = normalize_embedding(emb2)
    N2 = emb2.N
    form2 = emb2.target
    swap = R1.sigma != R2.sigma
    if swap:
        for series in (R1.f_parts() + [R1.g_part()] + R2.f_parts()
                       + [R2.g_part()] + R2.phi_parts() + R1.phi_parts()):
            if not series.is_zero():
                raise ValueError(
                    "opposite transversal orientations with a nontrivial "
                    "normal form; no factorization through a linear "
                    "inclusion exists")
        Lin, label = _swap_inclusion_jet(n, ell, N2, D), "L-"
        R1inv = inverse(R1.T)
        T1L = _lift_through_Lminus(R1inv, ell, form2)
    else:
        if R1.f_parts() != R2.f_parts() or R1.g_part() != R2.g_part():
            raise ValueError("normalized (F, G)-parts differ; the "
                             "embeddings do not factor through a linear "
                             "inclusion")
        Lin, label = _inclusion_jet(emb1.N, N2, D), "L"
        R1inv = inverse(R1.T)
        T1L = _lift_through_L(R1inv, form2, N2 - emb1.N)
    lhs = compose_maps(T1L.jet, Lin)  # inner is bare variables: cheap
    rhs = compose_maps(Lin, R1inv.jet)
    assert lhs.components == rhs.components, \
        "normalizer lift does not commute with the inclusion"

    pad = [TruncatedHoloSeries.zero(n, D)] * (k2 - k1)
    phis1 = R1.phi_parts() + pad
    phis2 = R2.phi_parts()
    sq1 = TruncatedRealSeries._raw(
        n, D, _signed_square_sum(phis1, [1] * k2, n, D), "zw")
    sq2 = TruncatedRealSeries._raw(
        n, D, _signed_square_sum(phis2, [1] * k2, n, D), "zw")
    if sq1 != sq2:
        raise ValueError("slack blocks have different Hermitian squares; "
                         "the embeddings do not factor")

    U = _match_unitary_exact(phis1, phis2, k2) if k2 else ()
    if U is not None:
        UW = [[GR_ONE if i == j else GR_ZERO for j in range(N2)]
              for i in range(N2)]
        for a, sa in enumerate(R2.phi_slots):
            for b, sb in enumerate(R2.phi_slots):
                UW[sa][sb] = U[a][b].conj()
        W = (make_automorphism(1, 0, (GR_ZERO,) * N2,
                               tuple(tuple(r) for r in UW), 1, form2, D)
             if k2 else identity_automorphism(form2, D))
        T = compose(compose(R2.T, W), T1L)
        got = apply_automorphism(T, compose_maps(Lin, emb1.H))
        assert got.components == emb2.H.components, \
            "exact factorization failed to reproduce H2"
        return RigidityFactorization(T, label, U, True, "exact", rat(0),
                                     R1.T, R2.T)

    # mixed-float fallback: verify Htilde2 = W o L o Htilde1 numerically
    import numpy as np

    Uf = _match_unitary_float(phis1, phis2, k2)
    X = R2.embedding.H
    Y = compose_maps(Lin, R1.embedding.H)
    keys = set()
    for c in X.components + Y.components:
        keys.update(c.terms)
    slot_of = {sl: t for t, sl in enumerate(R2.phi_slots)}
    max_res = 0.0
    for j in range(N2 + 1):
        for m in keys:
            want = _float_c(X.components[j].terms.get(m, GR_ZERO))
            if j in slot_of:
                got = 0 + 0j
                for b, sb in enumerate(R2.phi_slots):
                    got += (np.conj(Uf[b][slot_of[j]])
                            * _float_c(Y.components[sb].terms.get(m,
                                                                  GR_ZERO)))
            else:
                got = _float_c(Y.components[j].terms.get(m, GR_ZERO))
            max_res = max(max_res, abs(want - got))
    if max_res > 1e-9:
        raise ValueError("float unitary matching left residual %.3g > 1e-9"
                         % max_res)
    T = compose(R2.T, T1L)
    return RigidityFactorization(T, label, Uf, False, "mixed-float",
                                 max_res, R1.T, R2.T)


def mixed_signature_check(emb1, emb2):
    """Compare the slack Hermitian squares of two claimed co-embeddings.

    Both maps are normalized and the signed squares of their slack blocks
    compared exactly; for embeddings obtained from a signed-square split
    of a defining series (possibly moved by target automorphisms) that
    signed square IS the defining series, so a mismatch under ell <=
    ell'_q < n - ell certifies that the maps embed different germs.
    Reports the first mismatching weight, and in the scalar case (one
    slack component each, same sign) the matching ratio u with |u| = 1.
    """
    n, D = emb1.n, emb1.D
    ell = emb1.model.ell
    if (emb2.n, emb2.D) != (n, D) or emb2.model.ell != ell:
        raise ValueError("embeddings live over different source data")
    for emb in (emb1, emb2):
        if not ell <= emb.target.ell < n - ell:
            raise ValueError("mixed-signature comparison needs ell <= ell' "
                             "< n - ell (got ell'=%d)" % emb.target.ell)
    R1 = normalize_embedding(emb1)
    R2 = normalize_embedding(emb2)
    assert R1.sigma == 1 and R2.sigma == 1, \
        "orientation-reversing maps cannot satisfy ell' < n - ell"
    out = {"ok": None, "first_mismatch_weight": None, "scalar_match": None}
    sums = []
    for R in (R1, R2):
        phis = R.phi_parts()
        signs = [-1] * R.s + [1] * (len(phis) - R.s)
        sums.append(TruncatedRealSeries._raw(
            n, D, _signed_square_sum(phis, signs, n, D), "zw"))
    diff = sums[0] - sums[1]
    out["ok"] = diff.is_zero()
    if not out["ok"]:
        out["first_mismatch_weight"] = diff.min_weight()
    if out["ok"] and emb1.codim == 1 and emb2.codim == 1 and R1.s == R2.s:
        p1 = R1.phi_parts()[0]
        p2 = R2.phi_parts()[0]
        if p2.is_zero():
            u = GR_ONE if p1.is_zero() else None
        else:
            m = min(p2.terms)
            u = p1.terms.get(m, GR_ZERO) / p2.terms[m]
        match = u is not None and p1 == p2.scale(u)
        out["scalar_match"] = {
            "u": u,
            "unimodular": bool(u is not None and u * u.conj() == GR_ONE),
            "matches": bool(match),
        }
    return out


# ---------------------------------------------------------------------------
# ellipsoids

def ellipsoid_map(A_coeffs, D=4):
    """Polynomial map G(Z) = (Z, i(1 - 2 sum A_j Z_j^2)) off an ellipsoid.

    A_coeffs are rationals with 0 <= A_1 <= ... <= A_m < 1, the normal
    form of a real ellipsoid sum A_j (Z_j^2 + Zbar_j^2) + |Z_j|^2 = 1 in
    C^m.  The last component satisfies, identically in Z and exactly,

        Im G_(m+1) - sum |Z_j|^2 + rho = 0,

    with rho the ellipsoid's defining polynomial, so G maps the ellipsoid
    into the Heisenberg-type quadric of signature 0.  The residual above
    is verified exactly on construction.
    """
    A = [rat(x) for x in A_coeffs]
    m = len(A)
    if m < 1:
        raise ValueError("need at least one coordinate")
    prev = rat(0)
    for x in A:
        if x < prev:
            raise ValueError("coefficients must be nondecreasing")
        prev = x
    if not (0 <= A[0] and A[-1] < 1):
        raise ValueError("coefficients must satisfy 0 <= A_1 <= ... < 1")
    comps = [TruncatedHoloSeries.variable(m, D, j) for j in range(m)]
    zero = (0,) * m
    last = {(zero, 0): GR_I}
    for j in range(m):
        if A[j]:
            e2 = tuple(2 if t == j else 0 for t in range(m))
            last[(e2, 0)] = GaussianRational(0, -2 * A[j])
    comps.append(TruncatedHoloSeries(m, D, list(last.items())))
    G = HoloMapJet(m, D, comps)
    res = ellipsoid_residual(G, A)
    assert res.is_zero(), "ellipsoid map failed its defining identity"
    return G


def ellipsoid_residual(G, A_coeffs):
    """Im G_(m+1) - sum |Z_j|^2 + rho as an exact real series.

    rho = sum_j (A_j Z_j^2 + A_j Zbar_j^2 + |Z_j|^2) - 1 is the
    ellipsoid's defining polynomial.  The zero series certifies that G
    maps the ellipsoid into the quadric Im w' = |z'|^2.
    """
    A = [rat(x) for x in A_coeffs]
    m = G.source_n
    if len(A) != m:
        raise ValueError("coefficient count must match the source dimension")
    D = G.D
    zero = (0,) * m
    out = _im_raw_holo(G.components[m].terms, m)
    for j in range(m):
        sq = _holo_anti_product(G.components[j].terms,
                                _holo_conj_raw(G.components[j].terms), D)
        _radd_into(out, sq, scale=GaussianRational(-1))
    rho = {(zero, zero, 0, 0): GaussianRational(-1)}
    for j in range(m):
        e = tuple(1 if t == j else 0 for t in range(m))
        e2 = tuple(2 if t == j else 0 for t in range(m))
        _radd_into(rho, {(e, e, 0, 0): GR_ONE})
        if A[j]:
            cj = GaussianRational(A[j])
            _radd_into(rho, {(e2, zero, 0, 0): cj, (zero, e2, 0, 0): cj})
    _radd_into(out, rho)
    return TruncatedRealSeries._raw(m, D, out, "zw")


if __name__ == "__main__":  # pragma: no cover
    import doctest

    doctest.testmod()
