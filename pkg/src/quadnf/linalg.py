"""Exact dense linear algebra over Q(i), plus mod-p screening helpers.

Matrices are lists of row lists of GaussianRational.  Everything here is
plain fraction arithmetic (gmpy2-backed), adequate for the dense desk-scale
matrices this package sees (jet blocks are handled sparsely elsewhere).

The mod-p helpers reduce a rational matrix modulo a prime p = 1 (mod 4)
(so that i has a square root x mod p and Q(i) maps into F_p).  A full-rank
answer mod p is a *proof* of full rank over Q(i); a rank deficit mod p is
only a hint and must be confirmed exactly.
"""

from .rational import GR_ONE, GR_ZERO, GaussianRational, rat

import numpy as np


def zeros(m, n):
    return [[GR_ZERO for _ in range(n)] for _ in range(m)]


def identity(n):
    return [[GR_ONE if i == j else GR_ZERO for j in range(n)] for i in range(n)]


def mat_mul(A, B):
    n, k, m = len(A), len(B), len(B[0]) if B else 0
    assert all(len(r) == k for r in A), "inner dimensions differ"
    out = []
    for i in range(n):
        row = []
        Ai = A[i]
        for j in range(m):
            s = GR_ZERO
            for t in range(k):
                a = Ai[t]
                if a:
                    s = s + a * B[t][j]
            row.append(s)
        out.append(row)
    return out


def mat_vec(A, v):
    return [sum((a * x for a, x in zip(row, v) if a), GR_ZERO) for row in A]


def vec_mat(v, A):
    m = len(A[0]) if A else 0
    out = [GR_ZERO] * m
    for x, row in zip(v, A):
        if x:
            for j in range(m):
                if row[j]:
                    out[j] = out[j] + x * row[j]
    return out


def conj_transpose(A):
    if not A:
        return []
    return [[A[i][j].conj() for i in range(len(A))] for j in range(len(A[0]))]


def transpose(A):
    if not A:
        return []
    return [list(col) for col in zip(*A)]


def rref(A):
    """Row-reduce a copy of A; returns (R, pivot_columns)."""
    R = [list(row) for row in A]
    m = len(R)
    n = len(R[0]) if m else 0
    pivots = []
    r = 0
    for c in range(n):
        p = next((i for i in range(r, m) if R[i][c]), None)
        if p is None:
            continue
        R[r], R[p] = R[p], R[r]
        inv = GR_ONE / R[r][c]
        R[r] = [x * inv for x in R[r]]
        for i in range(m):
            if i != r and R[i][c]:
                f = R[i][c]
                R[i] = [x - f * y for x, y in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    return R, pivots


def rank(A):
    return len(rref(A)[1]) if A else 0


def nullspace(A, n_cols=None):
    """Right nullspace basis of A (list of vectors), exact."""
    if not A:
        return [[GR_ONE if i == j else GR_ZERO for i in range(n_cols)]
                for j in range(n_cols or 0)]
    n = n_cols if n_cols is not None else len(A[0])
    R, pivots = rref(A)
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        v = [GR_ZERO] * n
        v[fc] = GR_ONE
        for r, pc in enumerate(pivots):
            v[pc] = -R[r][fc]
        basis.append(v)
    return basis


def solve(A, b):
    """One exact solution x of A x = b, or None if inconsistent."""
    m = len(A)
    n = len(A[0]) if m else 0
    aug = [list(row) + [bb] for row, bb in zip(A, b)]
    R, pivots = rref(aug)
    if n in pivots:
        return None
    x = [GR_ZERO] * n
    for r, pc in enumerate(pivots):
        x[pc] = R[r][n]
    return x


def inverse(A):
    n = len(A)
    aug = [list(row) + ident_row for row, ident_row in zip(A, identity(n))]
    R, pivots = rref(aug)
    if pivots != list(range(n)):
        raise ValueError("matrix is singular over Q(i)")
    return [row[n:] for row in R]


def left_null_vector(A, rows_idx=None):
    """A vector y with y^T A = 0, y != 0, or None if A has full row rank."""
    At = transpose(A)
    ns = nullspace(At, n_cols=len(A))
    return ns[0] if ns else None


# -- mod-p screening ---------------------------------------------------------

#: primes = 1 (mod 4) used for modular rank screens, largest first
SCREEN_PRIMES = (46337, 45289, 44453, 40241, 38873)


def sqrt_minus_one(p):
    from sympy.ntheory.residue_ntheory import sqrt_mod

    return int(sqrt_mod(p - 1, p))


def gr_mod(x, p, ip):
    """Image of a GaussianRational in F_p (i |-> ip); None on bad denominator."""
    dr = int(x.re.denominator) % p
    di = int(x.im.denominator) % p
    if dr == 0 or di == 0:
        return None
    re = int(x.re.numerator) % p * pow(dr, p - 2, p) % p
    im = int(x.im.numerator) % p * pow(di, p - 2, p) % p
    return (re + im * ip) % p


def modp_matrix(rows, p, ip):
    """Dense int64 image of a rational matrix; None if a denominator hits p."""
    m = len(rows)
    n = len(rows[0]) if m else 0
    M = np.zeros((m, n), dtype=np.int64)
    for i, row in enumerate(rows):
        for j, x in enumerate(row):
            if isinstance(x, GaussianRational):
                v = gr_mod(x, p, ip)
            else:
                q = rat(x)
                d = int(q.denominator) % p
                if d == 0:
                    return None
                v = int(q.numerator) % p * pow(d, p - 2, p) % p
            if v is None:
                return None
            M[i, j] = v
    return M


def modp_eliminate(M, p):
    """In-place forward elimination of an int64 matrix mod p.

    Returns (rank, pivot_rows, pivot_cols); pivot_rows names original rows
    (row swaps are tracked).  Entries stay < p, products < p^2 < 2^63.
    """
    m, n = M.shape
    perm = list(range(m))
    r = 0
    pivot_rows, pivot_cols = [], []
    for c in range(n):
        col = M[r:, c]
        nz = np.nonzero(col)[0]
        if nz.size == 0:
            continue
        t = r + int(nz[0])
        if t != r:
            M[[r, t]] = M[[t, r]]
            perm[r], perm[t] = perm[t], perm[r]
        inv = pow(int(M[r, c]), p - 2, p)
        M[r, c:] = (M[r, c:] * inv) % p
        below = M[r + 1:, c]
        rows = np.nonzero(below)[0]
        if rows.size:
            f = below[rows][:, None]
            M[r + 1 + rows, c:] = (M[r + 1 + rows, c:] - f * M[r, c:][None, :]) % p
        pivot_rows.append(perm[r])
        pivot_cols.append(c)
        r += 1
        if r == m:
            break
    return r, pivot_rows, pivot_cols
