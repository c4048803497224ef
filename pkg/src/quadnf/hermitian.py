"""Hermitian coefficient analysis of real series in (z, zbar, w, wbar).

A real series A = sum_{I,J} H[I][J] Z^I Zbar^J, with Z = (z, w) and
holomorphic multi-indices I = (alpha, gamma), has a Hermitian coefficient
matrix H (reality of A is exactly Hermitian symmetry of H).  This module
computes rank and signature of H by exact congruence reduction, decides the
vanishing-order/rank classes used by the jet-equation engine, and decomposes
A into an exact signed combination of Hermitian squares

    A = -|phi_1|^2 - ... - |phi_s|^2 + |phi_{s+1}|^2 + ... + |phi_r|^2

with holomorphic polynomials phi_j, whenever the diagonal pivots are norms of
Gaussian rationals (else ExactDecompositionError: over Q(i) a positive pivot
like 3 admits no exact square root of norm, and no exact decomposition of
this shape exists).

The reduction uses 1x1 pivots where a nonzero diagonal entry exists and
exact hyperbolic 2x2 steps otherwise; each hyperbolic plane contributes one
positive and one negative square via the identity
2 Re(u vbar) = |(u + v)/(1+i)|^2 - |(u - v)/(1+i)|^2.
"""

from . import linalg
from .rational import GR_ONE, GR_ZERO, GaussianRational, rat, two_squares
from .series import (TruncatedHoloSeries, TruncatedRealSeries,
                     _holo_anti_product, _holo_conj_raw, _radd_into,
                     _rmul4, levi_raw)


class ExactDecompositionError(Exception):
    """No exact signed-square decomposition over Q(i) exists."""


class HermitianProfile:
    """Global Hermitian data of a real series.

    basis: sorted holomorphic keys (alpha, gamma) spanning rows/columns;
    matrix: the Hermitian coefficient matrix in that basis;
    rank, neg_count, pos_count: its exact rank and signature.
    """

    __slots__ = ("basis", "matrix", "rank", "neg_count", "pos_count")

    def __init__(self, basis, matrix, rank, neg_count, pos_count):
        self.basis = basis
        self.matrix = matrix
        self.rank = rank
        self.neg_count = neg_count
        self.pos_count = pos_count

    def __repr__(self):
        return "HermitianProfile(rank=%d, neg=%d, pos=%d, dim=%d)" % (
            self.rank, self.neg_count, self.pos_count, len(self.basis))


class Decomposition:
    """Signed-square decomposition; phis[:s] carry minus signs."""

    __slots__ = ("s", "phis")

    def __init__(self, s, phis):
        self.s = s
        self.phis = list(phis)

    def __repr__(self):
        return "Decomposition(s=%d, r=%d)" % (self.s, len(self.phis))


def coefficient_matrix(A, max_weight=None):
    """(basis, matrix) of the global Hermitian coefficient matrix of A.

    With max_weight set, the basis keeps only holomorphic keys (alpha, gamma)
    of weighted degree |alpha| + 2*gamma <= max_weight, and entries pairing
    an excluded key are dropped (they live outside the principal block).
    """
    if A.mode != "zw":
        raise ValueError("expected a full-form real series")
    keys = set()
    for (alpha, beta, gamma, delta) in A.terms:
        keys.add((alpha, gamma))
        keys.add((beta, delta))
    if max_weight is not None:
        keys = {k for k in keys if sum(k[0]) + 2 * k[1] <= max_weight}
    basis = sorted(keys)
    index = {k: i for i, k in enumerate(basis)}
    m = len(basis)
    H = [[GR_ZERO] * m for _ in range(m)]
    for (alpha, beta, gamma, delta), c in A.terms.items():
        i = index.get((alpha, gamma))
        j = index.get((beta, delta))
        if i is not None and j is not None:
            H[i][j] = c
    return basis, H


def _reduce(H):
    """Exact congruence reduction of a Hermitian matrix.

    Returns a list of extraction steps: ("diag", d, col) with d a nonzero
    real rational and col the functional coefficients of the extracted
    column (col[pivot] == 1), or ("hyp", p, q) with exact column vectors for
    one positive and one negative square.  Later columns vanish on earlier
    pivot slots, so the extracted functionals are linearly independent.
    """
    m = len(H)
    H = [row[:] for row in H]
    alive = list(range(m))
    steps = []
    while True:
        alive = [i for i in alive if any(H[i][j] for j in alive)]
        if not alive:
            break
        piv = next((i for i in alive if H[i][i]), None)
        if piv is not None:
            d = H[piv][piv]
            assert d.is_real(), "Hermitian diagonal must be real"
            a = {i: H[i][piv] for i in alive if H[i][piv]}
            col = {i: v / d for i, v in a.items()}
            for i in alive:
                ai = a.get(i)
                if ai is None:
                    continue
                for j in alive:
                    aj = a.get(j)
                    if aj is not None:
                        H[i][j] = H[i][j] - ai * aj.conj() / d
            steps.append(("diag", d.re, col))
        else:
            I, J, c = next(((i, j, H[i][j])
                            for i in alive for j in alive if H[i][j]))
            a = {k: H[k][I] for k in alive if H[k][I]}
            b = {k: H[k][J] for k in alive if H[k][J]}
            cbar_inv = GR_ONE / c.conj()
            c_inv = GR_ONE / c
            for i in alive:
                ai, bi = a.get(i, GR_ZERO), b.get(i, GR_ZERO)
                if not ai and not bi:
                    continue
                for j in alive:
                    aj, bj = a.get(j, GR_ZERO), b.get(j, GR_ZERO)
                    corr = cbar_inv * ai * bj.conj() + c_inv * bi * aj.conj()
                    if corr:
                        H[i][j] = H[i][j] - corr
            mu = GR_ONE / GaussianRational(1, 1)
            p = {}
            q = {}
            for k in alive:
                ua = cbar_inv * a.get(k, GR_ZERO)
                vb = b.get(k, GR_ZERO)
                pk = mu * (ua + vb)
                qk = mu * (ua - vb)
                if pk:
                    p[k] = pk
                if qk:
                    q[k] = qk
            steps.append(("hyp", p, q))
    return steps


def hermitian_profile(A):
    """Exact rank and signature of the certified block of A's matrix.

    The basis is restricted to holomorphic keys of weighted degree
    <= D//2: a pairing (I, J) is stored iff wt(I) + wt(J) <= D, so this
    principal block is the only part of the formal coefficient matrix
    that truncation at D determines completely.  Its rank is therefore a
    lower bound for the formal rank ("rank at degree D"), and rank and
    signature are exactly invariant under hyperquadric automorphisms:
    the substitution acts on the certified block by congruence with a
    weight-triangular matrix whose graded diagonal is invertible.
    Support keys above D//2 have band-cut rows (pairings beyond the cap
    are lost to truncation) and would inflate the rank if included.
    """
    basis, H = coefficient_matrix(A, max_weight=A.D // 2)
    steps = _reduce(H)
    neg = pos = 0
    for step in steps:
        if step[0] == "diag":
            if step[1] > 0:
                pos += 1
            else:
                neg += 1
        else:
            pos += 1
            neg += 1
    rank = neg + pos
    assert rank == linalg.rank(H), "signature reduction lost rank"
    return HermitianProfile(basis, H, rank, neg, pos)


def _vanishing_ok(A):
    """Each stored key has ordinary degree >= 2 in Z and in Zbar."""
    for (alpha, beta, gamma, delta) in A.terms:
        if sum(alpha) + gamma < 2 or sum(beta) + delta < 2:
            return False
    return True


def in_class_H(A, k):
    """Vanishing condition plus global Hermitian rank <= k.

    The rank is the certified one (see hermitian_profile), so membership
    verdicts are stable under hyperquadric automorphisms.
    """
    if not _vanishing_ok(A):
        return False
    _, H = coefficient_matrix(A, max_weight=A.D // 2)
    return linalg.rank(H) <= k


def _slice_ranks(A):
    """Rank of each bihomogeneous slice, keyed by (|alpha|, |beta|, gamma, delta)."""
    slices = {}
    for (alpha, beta, gamma, delta), c in A.terms.items():
        key = (sum(alpha), sum(beta), gamma, delta)
        slices.setdefault(key, {})[(alpha, beta)] = c
    out = {}
    for key, entries in slices.items():
        rows = sorted({a for a, _ in entries})
        cols = sorted({b for _, b in entries})
        ri = {a: i for i, a in enumerate(rows)}
        ci = {b: i for i, b in enumerate(cols)}
        M = [[GR_ZERO] * len(cols) for _ in rows]
        for (a, b), c in entries.items():
            M[ri[a]][ci[b]] = c
        out[key] = linalg.rank(M)
    return out


def in_class_S(A, k):
    """Vanishing condition plus slice rank <= k on slices with delta <= 1."""
    if not _vanishing_ok(A):
        return False
    return all(r <= k for key, r in _slice_ranks(A).items() if key[3] <= 1)


def in_class_S_tilde(A, k):
    """Vanishing condition plus slice rank <= k on every slice."""
    if not _vanishing_ok(A):
        return False
    return all(r <= k for r in _slice_ranks(A).values())


def lemma_divisibility_check(H, phis, psis, ell, q):
    """Finite-degree oracle for divisibility by powers of the bracket.

    In polarized variables (the zbar slot plays an independent conjugate
    tuple), checks that the hypothesis identity

        H * <z, zbar>_ell^(q+1) = sum_p ( sum_j phi_{j p} conj(psi_{j p}) )
                                          * <z, zbar>_ell^p

    holds to degree D, with p running over the outer index of phis/psis;
    raises ValueError when it does not (a hypothesis failure is an input
    error, distinct from the conclusion being false).  Returns True iff H
    and every inner sum sum_j phi_{j p} conj(psi_{j p}) vanish to degree D.
    When each inner sum has at most n - 1 terms that conclusion is forced,
    so True is the expected verdict; with n terms allowed it can fail
    (n = 1, H = 1, phi = psi = z_1, q = 0 is the minimal example).
    """
    if H.mode != "zw":
        raise ValueError("expected a full-form real series")
    n, D = H.n, H.D
    if len(phis) != len(psis):
        raise ValueError("phis and psis must pair up per bracket power")
    inner = []
    for p, (fs, gs) in enumerate(zip(phis, psis)):
        if len(fs) != len(gs):
            raise ValueError("phi/psi lists differ in length at power %d" % p)
        acc = {}
        for f, g in zip(fs, gs):
            if (f.n, f.D) != (n, D) or (g.n, g.D) != (n, D):
                raise ValueError("component dimension/cap mismatch")
            _radd_into(acc, _holo_anti_product(
                f.terms, _holo_conj_raw(g.terms), D))
        inner.append(acc)
    bracket = levi_raw(n, ell)
    powers = [{(((0,) * n), ((0,) * n), 0, 0): GR_ONE}]
    for _ in range(max(q + 1, len(inner) - 1)):
        powers.append(_rmul4(powers[-1], bracket, D))
    lhs = _rmul4(H.terms, powers[q + 1], D)
    rhs = {}
    for p, acc in enumerate(inner):
        _radd_into(rhs, _rmul4(acc, powers[p], D))
    _radd_into(lhs, rhs, scale=GaussianRational(-1))
    if lhs:
        raise ValueError("hypothesis identity fails to degree %d" % D)
    return H.is_zero() and all(not acc for acc in inner)


def _functional_to_series(col, n, D):
    return TruncatedHoloSeries(n, D, [(key, v) for key, v in col.items()])


def decompose(A):
    """Exact decomposition A = -sum |phi_j|^2 (j < s) + sum |phi_j|^2 (j >= s).

    Raises ExactDecompositionError when a diagonal pivot's absolute value is
    not a norm from Q(i); the result is verified by recomposition.  Works on
    the full holomorphic support (unlike hermitian_profile): the recompose
    identity must reproduce A exactly, so band-cut keys above D//2 stay in.
    len(phis) equals the certified rank whenever the support fits in weight
    D//2, and can exceed it otherwise.
    """
    basis, H = coefficient_matrix(A)
    steps = _reduce(H)
    negs = []
    poss = []
    for step in steps:
        if step[0] == "diag":
            d, col = step[1], step[2]
            c = two_squares(abs(d))
            if c is None:
                raise ExactDecompositionError(
                    "pivot %s is not a norm from Q(i); no exact "
                    "signed-square decomposition exists" % rat(abs(d)))
            cc = {basis[i]: c * v for i, v in col.items()}
            phi = _functional_to_series(cc, A.n, A.D)
            (negs if d < 0 else poss).append(phi)
        else:
            p = {basis[i]: v for i, v in step[1].items()}
            q = {basis[i]: v for i, v in step[2].items()}
            poss.append(_functional_to_series(p, A.n, A.D))
            negs.append(_functional_to_series(q, A.n, A.D))
    dec = Decomposition(len(negs), negs + poss)
    assert recompose(dec, A.n, A.D) == A, "decomposition failed to recompose"
    return dec


def hermitian_square(p):
    """|p(Z)|^2 as a real series."""
    raw = _holo_anti_product(p.terms, _holo_conj_raw(p.terms), p.D)
    return TruncatedRealSeries._raw(p.n, p.D, raw, "zw")


def sesquilinear(p, q):
    """p(Z) conj(q(Z)) + q(Z) conj(p(Z)) = 2 Re(p qbar) as a real series."""
    raw = _holo_anti_product(p.terms, _holo_conj_raw(q.terms), p.D)
    _radd_into(raw, _holo_anti_product(q.terms, _holo_conj_raw(p.terms), p.D))
    return TruncatedRealSeries._raw(p.n, p.D, raw, "zw")


def recompose(dec, n, D):
    """Signed sum of Hermitian squares of dec.phis."""
    out = {}
    for j, phi in enumerate(dec.phis):
        if phi.n != n or phi.D != D:
            raise ValueError("component dimension/cap mismatch")
        sq = _holo_anti_product(phi.terms, _holo_conj_raw(phi.terms), D)
        _radd_into(out, sq, scale=GaussianRational(-1 if j < dec.s else 1))
    return TruncatedRealSeries._raw(n, D, out, "zw")
