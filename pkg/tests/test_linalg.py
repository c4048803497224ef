from hypothesis import given, settings
from hypothesis import strategies as st

from quadnf import linalg
from quadnf.rational import GR_ONE, GR_ZERO, gr, rat

entry = st.builds(gr, st.integers(min_value=-5, max_value=5),
                  st.integers(min_value=-5, max_value=5))


def matrices(max_dim=4):
    return st.integers(min_value=1, max_value=max_dim).flatmap(
        lambda r: st.integers(min_value=1, max_value=max_dim).flatmap(
            lambda c: st.lists(
                st.lists(entry, min_size=c, max_size=c),
                min_size=r, max_size=r)))


@given(matrices())
@settings(max_examples=80)
def test_rref_rank_nullspace(A):
    rows, cols = len(A), len(A[0])
    R, pivots = linalg.rref(A)
    r = len(pivots)
    assert r == linalg.rank(A)
    ker = linalg.nullspace(A)
    assert len(ker) == cols - r
    for v in ker:
        out = linalg.mat_vec(A, v)
        assert all(not x for x in out)
    # pivot columns of the reduced matrix are standard basis vectors
    for i, p in enumerate(pivots):
        col = [R[row][p] for row in range(rows)]
        assert col[i] == GR_ONE
        assert all(not col[j] for j in range(rows) if j != i)


@given(matrices(3), st.lists(entry, min_size=1, max_size=3))
@settings(max_examples=60)
def test_solve_consistency(A, x):
    x = x[: len(A[0])] + [GR_ZERO] * max(0, len(A[0]) - len(x))
    b = linalg.mat_vec(A, x)
    sol = linalg.solve(A, b)
    assert sol is not None
    assert linalg.mat_vec(A, sol) == b


def test_solve_inconsistent():
    A = [[gr(1)], [gr(1)]]
    b = [gr(0), gr(1)]
    assert linalg.solve(A, b) is None
    y = linalg.left_null_vector(A)
    assert y is not None
    assert all(not v for v in linalg.vec_mat(y, A))


@given(matrices(3))
@settings(max_examples=60)
def test_inverse_round_trip(A):
    if len(A) != len(A[0]) or linalg.rank(A) != len(A):
        return
    Ainv = linalg.inverse(A)
    assert linalg.mat_mul(A, Ainv) == linalg.identity(len(A))
    assert linalg.mat_mul(Ainv, A) == linalg.identity(len(A))


def test_modp_rank_matches_exact_on_samples():
    p = linalg.SCREEN_PRIMES[0]
    ip = linalg.sqrt_minus_one(p)
    assert (ip * ip + 1) % p == 0
    samples = [
        [[gr(1), gr(2)], [gr(2), gr(4)]],
        [[gr(1, 1), gr(0, 2)], [gr(2), gr(0, -2)]],
        [[gr("1/3"), gr(5)], [gr(0), gr(0)]],
    ]
    for A in samples:
        M = linalg.modp_matrix(A, p, ip)
        assert M is not None
        r, piv_rows, piv_cols = linalg.modp_eliminate(M, p)
        assert r == linalg.rank(A)
        assert len(piv_rows) == r and len(piv_cols) == r


def test_gr_mod_denominator_guard():
    p = linalg.SCREEN_PRIMES[0]
    ip = linalg.sqrt_minus_one(p)
    assert linalg.gr_mod(gr(rat(1) / p), p, ip) is None
    v = linalg.gr_mod(gr("2/3", "-1/5"), p, ip)
    num = (v - 2 * pow(3, -1, p)) % p
    assert num == (-pow(5, -1, p) * ip) % p
