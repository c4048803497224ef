"""Exact Gaussian-rational arithmetic.

Coefficient field for everything in this package: numbers x + i*y with x, y
rational, kept in lowest terms.  Backed by gmpy2.mpq when available (C-speed
rational arithmetic matters: series products generate millions of coefficient
operations), with fractions.Fraction as a pure-Python fallback.

Also provides the sum-of-two-squares solver used to scale Hermitian pivots:
a rational q >= 0 is a norm from Q(i), q = |c|^2, iff every prime = 3 (mod 4)
divides numerator*denominator to an even power.
"""

try:
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover - gmpy2 is expected to be present
    from fractions import Fraction as _Q

_QTYPE = type(_Q(0))


def rat(x):
    """Coerce x (int, rational, or 'p/q' string) to an exact rational."""
    if type(x) is _QTYPE:
        return x
    if isinstance(x, float):
        raise TypeError("refusing float -> rational coercion; pass a string or int")
    return _Q(x)


def rat_str(x):
    """Serialize a rational as 'p/q' (denominator always explicit).

    >>> rat_str(rat(5))
    '5/1'
    >>> rat_str(rat('-3/6'))
    '-1/2'
    """
    x = rat(x)
    return "%s/%s" % (x.numerator, x.denominator)


_ZERO_Q = _Q(0)
_ONE_Q = _Q(1)


class GaussianRational:
    """An element of Q(i), stored as an exact (re, im) pair."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = rat(re)
        self.im = rat(im)

    # fast internal constructor: trusts that re, im are already rationals
    @classmethod
    def _mk(cls, re, im):
        self = object.__new__(cls)
        self.re = re
        self.im = im
        return self

    def __add__(self, other):
        other = _coerce(other)
        return GaussianRational._mk(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        return GaussianRational._mk(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return _coerce(other).__sub__(self)

    def __neg__(self):
        return GaussianRational._mk(-self.re, -self.im)

    def __mul__(self, other):
        other = _coerce(other)
        a, b, c, d = self.re, self.im, other.re, other.im
        return GaussianRational._mk(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        n = other.re * other.re + other.im * other.im
        if not n:
            raise ZeroDivisionError("division by zero in Q(i)")
        a, b, c, d = self.re, self.im, other.re, other.im
        return GaussianRational._mk((a * c + b * d) / n, (b * c - a * d) / n)

    def __rtruediv__(self, other):
        return _coerce(other).__truediv__(self)

    def conj(self):
        return GaussianRational._mk(self.re, -self.im)

    def norm_sq(self):
        """|self|^2 as an exact rational."""
        return self.re * self.re + self.im * self.im

    def is_real(self):
        return not self.im

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, GaussianRational):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, _QTYPE)):
            return self.im == 0 and self.re == other
        return NotImplemented

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        return "gr(%r, %r)" % (str(self.re), str(self.im))

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return "%s*i" % self.im
        sign = "+" if self.im > 0 else "-"
        return "%s %s %s*i" % (self.re, sign, abs(self.im))


def _coerce(x):
    if isinstance(x, GaussianRational):
        return x
    if isinstance(x, (int, _QTYPE, str)):
        return GaussianRational(x)
    raise TypeError("cannot coerce %r to GaussianRational" % (x,))


def gr(re=0, im=0):
    """Shorthand constructor.

    >>> gr(1, 2) * gr(1, -2) == gr(5)
    True
    >>> gr(0, 1) * gr(0, 1) == gr(-1)
    True
    """
    return GaussianRational(re, im)


GR_ZERO = GaussianRational(0, 0)
GR_ONE = GaussianRational(1, 0)
GR_I = GaussianRational(0, 1)
GR_TWO_I = GaussianRational(0, 2)


# -- sum of two squares ------------------------------------------------------

def _gauss_divmod(a, b):
    # rounded division in Z[i]; a, b are (int, int) pairs, b != 0
    ar, ai = a
    br, bi = b
    n = br * br + bi * bi
    # exact quotient components times n
    qr_num = ar * br + ai * bi
    qi_num = ai * br - ar * bi
    # round to nearest integer
    qr = (2 * qr_num + n) // (2 * n)
    qi = (2 * qi_num + n) // (2 * n)
    rr = ar - (qr * br - qi * bi)
    ri = ai - (qr * bi + qi * br)
    return (qr, qi), (rr, ri)


def _gauss_gcd(a, b):
    while b != (0, 0):
        _, r = _gauss_divmod(a, b)
        a, b = b, r
    return a


def _two_squares_prime(p):
    """Write prime p = 1 (mod 4) as a^2 + b^2 via gcd(p, x + i), x^2 = -1 (p)."""
    from sympy.ntheory.residue_ntheory import sqrt_mod

    x = sqrt_mod(p - 1, p)
    g = _gauss_gcd((p, 0), (int(x), 1))
    a, b = abs(g[0]), abs(g[1])
    assert a * a + b * b == p, "two-squares decomposition failed for %d" % p
    return a, b


def two_squares(q):
    """Return c in Q(i) with c * conj(c) == q, or None if no such c exists.

    q must be a nonnegative rational.  None is returned exactly when some
    prime = 3 (mod 4) divides q to an odd power.

    >>> c = two_squares(rat(5)); (c * c.conj()) == gr(5)
    True
    >>> two_squares(rat(3)) is None
    True
    >>> two_squares(rat('9/2')) * two_squares(rat('9/2')).conj() == gr('9/2')
    True
    """
    from sympy import factorint

    q = rat(q)
    if q < 0:
        return None
    if not q:
        return GR_ZERO
    num = int(q.numerator)
    den = int(q.denominator)
    n = num * den  # q = (num*den) / den^2
    cr, ci = 1, 0
    for p, e in factorint(n).items():
        if p == 2:
            # 2 = (1+i)(1-i) = -i (1+i)^2
            for _ in range(e):
                cr, ci = cr - ci, cr + ci  # multiply by (1+i)
        elif p % 4 == 3:
            if e % 2:
                return None
            m = p ** (e // 2)
            cr, ci = cr * m, ci * m
        else:
            a, b = _two_squares_prime(p)
            for _ in range(e):
                cr, ci = cr * a - ci * b, cr * b + ci * a
    c = GaussianRational._mk(_Q(cr, den), _Q(ci, den))
    assert c.norm_sq() == q
    return c


def rational_sqrt(q):
    """Exact nonnegative square root of a rational, or None.

    >>> rat_str(rational_sqrt(rat('9/4')))
    '3/2'
    >>> rational_sqrt(rat(2)) is None
    True
    """
    import math

    q = rat(q)
    if q < 0:
        return None
    num, den = int(q.numerator), int(q.denominator)
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn == num and rd * rd == den:
        return _Q(rn, rd)
    return None


if __name__ == "__main__":  # pragma: no cover
    import doctest

    doctest.testmod(verbose=True)
