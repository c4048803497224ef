"""Truncated formal power series under the weighted grading (z -> 1, w -> 2).

Two value classes share a sparse exact-coefficient representation:

* TruncatedHoloSeries: holomorphic series in (z_1..z_n, w); keys (alpha, gamma)
  meaning z^alpha w^gamma, weight |alpha| + 2*gamma.

* TruncatedRealSeries: real-valued series, in one of two key modes.
  - mode "zw": keys (alpha, beta, gamma, delta) meaning
    z^alpha zbar^beta w^gamma wbar^delta, with the reality pairing
    coeff(beta, alpha, delta, gamma) == conj(coeff(alpha, beta, gamma, delta)).
  - mode "zu": the trace encoding on the quadric, keys (alpha, beta, e, 0)
    meaning z^alpha zbar^beta u^e (u = Re w; the u-power lives in the gamma
    slot and delta is identically 0), with reality pairing
    coeff(beta, alpha, e) == conj(coeff(alpha, beta, e)).

Both modes use the same weight formula |alpha| + |beta| + 2*(gamma + delta).
Zero coefficients are never stored; all binary operations require equal
dimension and equal degree caps (no implicit re-truncation).  Constructors
validate the reality pairing and reject inconsistent input rather than
symmetrizing it.

The module also houses holomorphic map jets (tuples of holomorphic series),
their composition with memoized power products, and jet reversion, which is
what turns the formal inverse function theorem into an exact computation.
"""

from . import linalg
from .rational import GR_I, GR_ONE, GR_ZERO, GaussianRational, rat

_MODES = ("zw", "zu")


def _wt4(key):
    a, b, g, d = key
    return sum(a) + sum(b) + 2 * (g + d)


def _wt2(key):
    a, g = key
    return sum(a) + 2 * g


def _conj_key(key, mode):
    a, b, g, d = key
    if mode == "zw":
        return (b, a, d, g)
    return (b, a, g, 0)


def _tadd(t1, t2):
    return tuple(x + y for x, y in zip(t1, t2))


# -- raw sparse-dict arithmetic (no validation; values are GaussianRational) --

def _radd_into(dst, src, scale=None):
    for k, v in src.items():
        if scale is not None:
            v = scale * v
        s = dst.get(k)
        s = v if s is None else s + v
        if s:
            dst[k] = s
        elif k in dst:
            del dst[k]
    return dst


def _rscale(A, c):
    if not c:
        return {}
    return {k: c * v for k, v in A.items()}


def _bucket_by_weight(A, wt):
    out = {}
    for k, v in A.items():
        out.setdefault(wt(k), []).append((k, v))
    return out


def _rmul4(A, B, D):
    """Product of real-mode raw dicts, truncated at weighted degree D."""
    if not A or not B:
        return {}
    if len(A) > len(B):
        A, B = B, A
    bb = _bucket_by_weight(B, _wt4)
    out = {}
    for ka, va in A.items():
        rem = D - _wt4(ka)
        a1, a2, a3, a4 = ka
        for wb, items in bb.items():
            if wb > rem:
                continue
            for kb, vb in items:
                k = (_tadd(a1, kb[0]), _tadd(a2, kb[1]), a3 + kb[2], a4 + kb[3])
                v = va * vb
                s = out.get(k)
                s = v if s is None else s + v
                if s:
                    out[k] = s
                elif k in out:
                    del out[k]
    return out


def _rmul2(A, B, D):
    """Product of holomorphic raw dicts, truncated at weighted degree D."""
    if not A or not B:
        return {}
    if len(A) > len(B):
        A, B = B, A
    bb = _bucket_by_weight(B, _wt2)
    out = {}
    for ka, va in A.items():
        rem = D - _wt2(ka)
        a1, a2 = ka
        for wb, items in bb.items():
            if wb > rem:
                continue
            for kb, vb in items:
                k = (_tadd(a1, kb[0]), a2 + kb[1])
                v = va * vb
                s = out.get(k)
                s = v if s is None else s + v
                if s:
                    out[k] = s
                elif k in out:
                    del out[k]
    return out


def _holo_conj_raw(A):
    """Antiholomorphic mirror of a holomorphic raw dict (same key shape)."""
    return {k: v.conj() for k, v in A.items()}


def _holo_anti_product(P, Qc, D):
    """(holo dict) * (antiholo dict) -> real "zw" raw dict, truncated at D."""
    out = {}
    if not P or not Qc:
        return out
    for (a, g), va in P.items():
        wa = sum(a) + 2 * g
        rem = D - wa
        for (b, d), vb in Qc.items():
            if sum(b) + 2 * d > rem:
                continue
            k = (a, b, g, d)
            v = va * vb
            s = out.get(k)
            s = v if s is None else s + v
            if s:
                out[k] = s
            elif k in out:
                del out[k]
    return out


class TruncatedHoloSeries:
    """Holomorphic truncated series in (z_1, ..., z_n, w)."""

    __slots__ = ("n", "D", "terms")

    def __init__(self, n, D, terms=()):
        self.n = n
        self.D = D
        t = {}
        items = terms.items() if isinstance(terms, dict) else terms
        for key, val in items:
            alpha, gamma = key
            alpha = tuple(alpha)
            if len(alpha) != n or any(e < 0 for e in alpha) or gamma < 0:
                raise ValueError("bad holomorphic key %r" % (key,))
            if not isinstance(val, GaussianRational):
                val = GaussianRational(val)
            if sum(alpha) + 2 * gamma > D:
                raise ValueError("key %r exceeds weighted degree cap %d"
                                 % (key, D))
            if val:
                k = (alpha, gamma)
                if k in t:
                    raise ValueError("duplicate key %r" % (k,))
                t[k] = val
        self.terms = t

    @classmethod
    def _raw(cls, n, D, raw):
        self = object.__new__(cls)
        self.n = n
        self.D = D
        self.terms = raw
        return self

    @classmethod
    def zero(cls, n, D):
        return cls._raw(n, D, {})

    @classmethod
    def monomial(cls, n, D, alpha, gamma=0, coeff=GR_ONE):
        return cls(n, D, [((tuple(alpha), gamma), coeff)])

    @classmethod
    def variable(cls, n, D, j):
        alpha = tuple(1 if i == j else 0 for i in range(n))
        return cls.monomial(n, D, alpha, 0)

    @classmethod
    def w_variable(cls, n, D):
        return cls.monomial(n, D, (0,) * n, 1)

    @classmethod
    def constant(cls, n, D, c):
        c = c if isinstance(c, GaussianRational) else GaussianRational(c)
        return cls._raw(n, D, {((0,) * n, 0): c} if c else {})

    def coeff(self, alpha, gamma):
        return self.terms.get((tuple(alpha), gamma), GR_ZERO)

    def value_at_zero(self):
        return self.terms.get(((0,) * self.n, 0), GR_ZERO)

    def is_zero(self):
        return not self.terms

    def min_weight(self):
        return min((_wt2(k) for k in self.terms), default=None)

    def _check_compat(self, other):
        if not isinstance(other, TruncatedHoloSeries):
            raise TypeError("expected TruncatedHoloSeries")
        if self.n != other.n or self.D != other.D:
            raise ValueError("dimension/cap mismatch: (%d, %d) vs (%d, %d)"
                             % (self.n, self.D, other.n, other.D))

    def __add__(self, other):
        self._check_compat(other)
        return TruncatedHoloSeries._raw(
            self.n, self.D, _radd_into(dict(self.terms), other.terms))

    def __sub__(self, other):
        self._check_compat(other)
        return TruncatedHoloSeries._raw(
            self.n, self.D,
            _radd_into(dict(self.terms), other.terms, scale=-GR_ONE))

    def __neg__(self):
        return TruncatedHoloSeries._raw(
            self.n, self.D, {k: -v for k, v in self.terms.items()})

    def __mul__(self, other):
        self._check_compat(other)
        return TruncatedHoloSeries._raw(
            self.n, self.D, _rmul2(self.terms, other.terms, self.D))

    def scale(self, c):
        c = c if isinstance(c, GaussianRational) else GaussianRational(c)
        return TruncatedHoloSeries._raw(self.n, self.D, _rscale(self.terms, c))

    def weighted_component(self, sigma):
        return TruncatedHoloSeries._raw(
            self.n, self.D,
            {k: v for k, v in self.terms.items() if _wt2(k) == sigma})

    def sorted_terms(self):
        return sorted(self.terms.items())

    def __eq__(self, other):
        return (isinstance(other, TruncatedHoloSeries)
                and self.n == other.n and self.D == other.D
                and self.terms == other.terms)

    def __hash__(self):
        return hash((self.n, self.D, tuple(self.sorted_terms())))

    def __repr__(self):
        return "TruncatedHoloSeries(n=%d, D=%d, %d terms)" % (
            self.n, self.D, len(self.terms))


class TruncatedRealSeries:
    """Real-valued truncated series; see the module docstring for key modes."""

    __slots__ = ("n", "D", "mode", "terms")

    def __init__(self, n, D, terms=(), mode="zw"):
        if mode not in _MODES:
            raise ValueError("mode must be one of %r" % (_MODES,))
        self.n = n
        self.D = D
        self.mode = mode
        t = {}
        items = terms.items() if isinstance(terms, dict) else terms
        for key, val in items:
            alpha, beta, gamma, delta = key
            alpha, beta = tuple(alpha), tuple(beta)
            if (len(alpha) != n or len(beta) != n
                    or any(e < 0 for e in alpha + beta)
                    or gamma < 0 or delta < 0):
                raise ValueError("bad real key %r" % (key,))
            if mode == "zu" and delta != 0:
                raise ValueError("trace-mode key %r must have delta == 0"
                                 % (key,))
            k = (alpha, beta, gamma, delta)
            if _wt4(k) > D:
                raise ValueError("key %r exceeds weighted degree cap %d"
                                 % (k, D))
            if not isinstance(val, GaussianRational):
                val = GaussianRational(val)
            if val:
                if k in t:
                    raise ValueError("duplicate key %r" % (k,))
                t[k] = val
        _assert_reality(t, mode)
        self.terms = t

    @classmethod
    def _raw(cls, n, D, raw, mode):
        _assert_reality(raw, mode)
        self = object.__new__(cls)
        self.n = n
        self.D = D
        self.mode = mode
        self.terms = raw
        return self

    @classmethod
    def zero(cls, n, D, mode="zw"):
        self = object.__new__(cls)
        self.n = n
        self.D = D
        self.mode = mode
        self.terms = {}
        return self

    def coeff(self, alpha, beta, gamma, delta=0):
        return self.terms.get((tuple(alpha), tuple(beta), gamma, delta),
                              GR_ZERO)

    def is_zero(self):
        return not self.terms

    def min_weight(self):
        return min((_wt4(k) for k in self.terms), default=None)

    def max_weight(self):
        return max((_wt4(k) for k in self.terms), default=None)

    def _check_compat(self, other):
        if not isinstance(other, TruncatedRealSeries):
            raise TypeError("expected TruncatedRealSeries")
        if self.n != other.n or self.D != other.D:
            raise ValueError("dimension/cap mismatch: (%d, %d) vs (%d, %d)"
                             % (self.n, self.D, other.n, other.D))
        if self.mode != other.mode:
            raise ValueError("key-mode mismatch: %s vs %s"
                             % (self.mode, other.mode))

    def __add__(self, other):
        self._check_compat(other)
        return TruncatedRealSeries._raw(
            self.n, self.D, _radd_into(dict(self.terms), other.terms),
            self.mode)

    def __sub__(self, other):
        self._check_compat(other)
        return TruncatedRealSeries._raw(
            self.n, self.D,
            _radd_into(dict(self.terms), other.terms, scale=-GR_ONE),
            self.mode)

    def __neg__(self):
        return TruncatedRealSeries._raw(
            self.n, self.D, {k: -v for k, v in self.terms.items()}, self.mode)

    def __mul__(self, other):
        self._check_compat(other)
        return TruncatedRealSeries._raw(
            self.n, self.D, _rmul4(self.terms, other.terms, self.D), self.mode)

    def scale_real(self, c):
        """Multiply by a *real* rational scalar (reality must survive)."""
        if isinstance(c, GaussianRational):
            if not c.is_real():
                raise ValueError("scaling a real series by a non-real scalar")
            c = c.re
        else:
            c = rat(c)
        cc = GaussianRational(c)
        return TruncatedRealSeries._raw(
            self.n, self.D, _rscale(self.terms, cc), self.mode)

    def weighted_component(self, sigma):
        return TruncatedRealSeries._raw(
            self.n, self.D,
            {k: v for k, v in self.terms.items() if _wt4(k) == sigma},
            self.mode)

    def sorted_terms(self):
        return sorted(self.terms.items())

    def __eq__(self, other):
        return (isinstance(other, TruncatedRealSeries)
                and self.n == other.n and self.D == other.D
                and self.mode == other.mode and self.terms == other.terms)

    def __hash__(self):
        return hash((self.n, self.D, self.mode, tuple(self.sorted_terms())))

    def __repr__(self):
        return "TruncatedRealSeries(n=%d, D=%d, mode=%s, %d terms)" % (
            self.n, self.D, self.mode, len(self.terms))


def _assert_reality(raw, mode):
    for k, v in raw.items():
        kc = _conj_key(k, mode)
        if kc == k:
            if not v.is_real():
                raise ValueError(
                    "reality violated: self-conjugate key %r has non-real "
                    "coefficient %s" % (k, v))
        else:
            vc = raw.get(kc)
            if vc is None or vc != v.conj():
                raise ValueError(
                    "reality violated: key %r has coefficient %s but its "
                    "conjugate key %r carries %s (refusing to symmetrize)"
                    % (k, v, kc, vc))


# -- public ring operations (names are the library interface) -----------------

def add(a, b):
    """Sum of two real series (same n, D and key mode required)."""
    return a + b


def multiply(a, b):
    """Truncated product of two real series."""
    return a * b


def weighted_component(a, sigma):
    """The part of a series of exact weighted degree sigma.

    >>> z1sq = TruncatedHoloSeries.monomial(1, 4, (2,), 0)
    >>> weighted_component(z1sq, 2) == z1sq
    True
    >>> weighted_component(z1sq, 3).is_zero()
    True
    """
    if not 0 <= sigma <= a.D:
        raise ValueError("sigma must lie in [0, D]")
    return a.weighted_component(sigma)


def sig_eps(j, ell):
    """Sign of slot j (0-based) in the signature-ell scalar product."""
    return -1 if j < ell else 1


def levi_raw(n, ell):
    """<z, zbar>_ell as a raw trace-mode dict."""
    out = {}
    for j in range(n):
        e = tuple(1 if i == j else 0 for i in range(n))
        out[(e, e, 0, 0)] = GaussianRational(sig_eps(j, ell))
    return out


_U_POW_CACHE = {}


def _u_power_dicts(n, ell, D, gamma, delta):
    """Raw trace-mode dict of (u + i<z,zbar>)^gamma (u - i<z,zbar>)^delta."""
    key = (n, ell, D, gamma, delta)
    hit = _U_POW_CACHE.get(key)
    if hit is not None:
        return hit
    if gamma == 0 and delta == 0:
        out = {((0,) * n, (0,) * n, 0, 0): GR_ONE}
    elif gamma > 0:
        base = {((0,) * n, (0,) * n, 1, 0): GR_ONE}
        _radd_into(base, levi_raw(n, ell), scale=GR_I)
        out = _rmul4(_u_power_dicts(n, ell, D, gamma - 1, delta), base, D)
    else:
        base = {((0,) * n, (0,) * n, 1, 0): GR_ONE}
        _radd_into(base, levi_raw(n, ell), scale=-GR_I)
        out = _rmul4(_u_power_dicts(n, ell, D, gamma, delta - 1), base, D)
    _U_POW_CACHE[key] = out
    return out


def _shifted_add(dst, powdict, alpha, beta, coeff, D):
    base = sum(alpha) + sum(beta)
    for (a2, b2, e, _z), v in powdict.items():
        if base + sum(a2) + sum(b2) + 2 * e > D:
            continue
        k = (_tadd(alpha, a2), _tadd(beta, b2), e, 0)
        s = dst.get(k)
        v = coeff * v
        s = v if s is None else s + v
        if s:
            dst[k] = s
        elif k in dst:
            del dst[k]


def restrict_to_quadric(a, ell):
    """Trace of a real series on the quadric: substitute w = u + i<z,zbar>_ell.

    Input is a "zw"-mode series; the result is "zu"-mode (u-power in the
    gamma slot, delta == 0).  The substitution preserves weighted degree, so
    truncation at D is exact.
    """
    if a.mode != "zw":
        raise ValueError("restrict_to_quadric expects a full-form series")
    if not 0 <= ell <= a.n // 2:
        raise ValueError("need 0 <= ell <= n/2")
    out = {}
    for (alpha, beta, gamma, delta), c in a.terms.items():
        pd = _u_power_dicts(a.n, ell, a.D, gamma, delta)
        _shifted_add(out, pd, alpha, beta, c, a.D)
    return TruncatedRealSeries._raw(a.n, a.D, out, "zu")


def restrict_holo_raw(s, ell):
    """Raw trace-mode dict of a holomorphic series under w = u + i<z,zbar>."""
    out = {}
    for (alpha, gamma), c in s.terms.items():
        pd = _u_power_dicts(s.n, ell, s.D, gamma, 0)
        _shifted_add(out, pd, alpha, (0,) * s.n, c, s.D)
    return out


def _conj_raw_mode(raw, mode):
    return {_conj_key(k, mode): v.conj() for k, v in raw.items()}


def to_graph_form(A, ell):
    """Solve Im w = <z,zbar>_ell + A(z,zbar,w,wbar) for v = Im w.

    Returns the trace-mode series Atilde with v = <z,zbar>_ell + Atilde(z,zbar,u)
    satisfying the defining relation identically to weighted degree D.  The
    fixed point is reached by iterating the substitution, which gains at least
    one weighted degree per round because A carries no w-dependent terms of
    weighted degree <= 2; the result is verified by back-substitution.
    """
    if A.mode != "zw":
        raise ValueError("to_graph_form expects a full-form series")
    n, D = A.n, A.D
    for k in A.terms:
        if _wt4(k) < 3:
            raise ValueError("nonvanishing low-order terms: key %r" % (k,))
    phi = levi_raw(n, ell)
    V = dict(phi)
    for _ in range(D + 1):
        newV = _substitute_w(A, V)
        _radd_into(newV, phi)
        if newV == V:
            break
        V = newV
    check = _substitute_w(A, V)
    _radd_into(check, phi)
    assert check == V, "graph-form fixed point failed to close"
    out = dict(V)
    _radd_into(out, phi, scale=-GR_ONE)
    return TruncatedRealSeries._raw(n, D, out, "zu")


def _substitute_w(A, V):
    """A(z, zbar, u + iV, u - iV) as a raw trace-mode dict (V raw, real)."""
    n, D = A.n, A.D
    u_key = ((0,) * n, (0,) * n, 1, 0)
    plus = {u_key: GR_ONE}
    _radd_into(plus, _rscale(V, GR_I))
    minus = {u_key: GR_ONE}
    _radd_into(minus, _rscale(V, -GR_I))
    maxg = max((k[2] for k in A.terms), default=0)
    maxd = max((k[3] for k in A.terms), default=0)
    ppow = [{((0,) * n, (0,) * n, 0, 0): GR_ONE}]
    for _ in range(maxg):
        ppow.append(_rmul4(ppow[-1], plus, D))
    mpow = [{((0,) * n, (0,) * n, 0, 0): GR_ONE}]
    for _ in range(maxd):
        mpow.append(_rmul4(mpow[-1], minus, D))
    out = {}
    for (alpha, beta, gamma, delta), c in A.terms.items():
        pd = _rmul4(ppow[gamma], mpow[delta], D)
        _shifted_add(out, pd, alpha, beta, c, D)
    return out


def invert_unit(q):
    """Multiplicative inverse of a holomorphic series with q(0) != 0.

    >>> n, D = 1, 4
    >>> one = TruncatedHoloSeries.constant(n, D, 1)
    >>> w = TruncatedHoloSeries.w_variable(n, D)
    >>> r = invert_unit(one - w)
    >>> r == one + w + w * w
    True
    """
    c = q.value_at_zero()
    if not c:
        raise ValueError("zero constant term: series is not a unit")
    cinv = GR_ONE / c
    m = q.scale(cinv).terms.copy()
    m.pop(((0,) * q.n, 0))
    acc = {((0,) * q.n, 0): GR_ONE}
    power = {((0,) * q.n, 0): GR_ONE}
    for _ in range(q.D):
        power = _rscale(_rmul2(power, m, q.D), -GR_ONE)
        if not power:
            break
        _radd_into(acc, power)
    r = TruncatedHoloSeries._raw(q.n, q.D, _rscale(acc, cinv))
    prod = q * r
    assert prod == TruncatedHoloSeries.constant(q.n, q.D, 1), \
        "unit inversion failed to verify"
    return r


# -- holomorphic map jets ------------------------------------------------------

class HoloMapJet:
    """A tuple of holomorphic truncated series sharing source variables.

    components[0..m-2] are the target z-coordinates, components[m-1] the
    target w-coordinate; the source has source_n z-variables plus w.
    """

    __slots__ = ("source_n", "D", "components")

    def __init__(self, source_n, D, components):
        comps = tuple(components)
        for c in comps:
            if not isinstance(c, TruncatedHoloSeries):
                raise TypeError("map components must be TruncatedHoloSeries")
            if c.n != source_n or c.D != D:
                raise ValueError("component dimension/cap mismatch")
        self.source_n = source_n
        self.D = D
        self.components = comps

    def target_len(self):
        return len(self.components)

    def is_germ_preserving(self):
        return all(not c.value_at_zero() for c in self.components)

    def __eq__(self, other):
        return (isinstance(other, HoloMapJet)
                and self.source_n == other.source_n and self.D == other.D
                and self.components == other.components)

    def __hash__(self):
        return hash((self.source_n, self.D, self.components))

    def __repr__(self):
        return "HoloMapJet(%d vars + w -> %d components, D=%d)" % (
            self.source_n, len(self.components), self.D)


def identity_map(n, D):
    comps = [TruncatedHoloSeries.variable(n, D, j) for j in range(n)]
    comps.append(TruncatedHoloSeries.w_variable(n, D))
    return HoloMapJet(n, D, comps)


class _PowerProducts:
    """Memoized power products prod_j C_j^(k_j) of holomorphic raw dicts."""

    def __init__(self, comps_raw, n, D):
        self.comps = comps_raw
        self.n = n
        self.D = D
        self.memo = {(): {((0,) * n, 0): GR_ONE}}

    def get(self, exps):
        exps = tuple(exps)
        if not any(exps):
            exps = ()
        hit = self.memo.get(exps)
        if hit is not None:
            return hit
        j = next(i for i, e in enumerate(exps) if e)
        prev = exps[:j] + (exps[j] - 1,) + exps[j + 1:]
        if not any(prev):
            prev = ()
        out = _rmul2(self.memo.get(prev) or self.get(prev),
                     self.comps[j], self.D)
        self.memo[exps] = out
        return out


def _map_powers(H):
    return _PowerProducts([c.terms for c in H.components], H.source_n, H.D)


def compose_holo_with_map(s, H):
    """Substitute the map H into a holomorphic series on H's target."""
    m = H.target_len()
    if s.n != m - 1:
        raise ValueError("series lives in %d z-variables, map targets %d"
                         % (s.n, m - 1))
    if s.D != H.D:
        raise ValueError("degree caps differ")
    pp = _map_powers(H)
    out = {}
    for (alpha, gamma), c in s.terms.items():
        _radd_into(out, pp.get(alpha + (gamma,)), scale=c)
    return TruncatedHoloSeries._raw(H.source_n, H.D, out)


def compose_maps(outer, inner):
    """Jet of outer o inner; inner must preserve the germ at 0."""
    if outer.source_n != inner.target_len() - 1:
        raise ValueError("map dimensions do not chain")
    if not inner.is_germ_preserving():
        raise ValueError("constant-term violation: inner map must fix 0")
    comps = [compose_holo_with_map(c, inner) for c in outer.components]
    return HoloMapJet(inner.source_n, inner.D, comps)


def compose_real_with_map(A, H):
    """Substitute (H, conj H) into a real series on H's target.

    A is a "zw"-mode series in the target variables; the result is a
    "zw"-mode series in the source variables.  Holomorphic power products of
    H's components are memoized across keys, and keys are grouped by their
    holomorphic half so each distinct half costs one large product.
    """
    if A.mode != "zw":
        raise ValueError("compose_real_with_map expects a full-form series")
    m = H.target_len()
    if A.n != m - 1:
        raise ValueError("series lives in %d z-variables, map targets %d"
                         % (A.n, m - 1))
    if A.D != H.D:
        raise ValueError("degree caps differ")
    if not H.is_germ_preserving():
        raise ValueError("constant-term violation: map must fix 0")
    pp = _map_powers(H)
    grouped = {}
    for (alpha, beta, gamma, delta), c in A.terms.items():
        grouped.setdefault((alpha, gamma), []).append((beta, delta, c))
    conj_memo = {}
    out = {}
    for (alpha, gamma), rows in grouped.items():
        anti = {}
        for beta, delta, c in rows:
            ckey = beta + (delta,)
            cp = conj_memo.get(ckey)
            if cp is None:
                cp = _holo_conj_raw(pp.get(ckey))
                conj_memo[ckey] = cp
            _radd_into(anti, cp, scale=c)
        _radd_into(out, _holo_anti_product(pp.get(alpha + (gamma,)), anti,
                                           A.D))
    return TruncatedRealSeries._raw(H.source_n, H.D, out, "zw")


def _linear_part_matrix(H):
    """(n+1) x (n+1) matrix M with x |-> x M on row vectors of (z, w)."""
    n = H.source_n
    m = len(H.components)
    M = [[GR_ZERO] * m for _ in range(n + 1)]
    for j, comp in enumerate(H.components):
        for i in range(n):
            e = tuple(1 if t == i else 0 for t in range(n))
            M[i][j] = comp.terms.get((e, 0), GR_ZERO)
        M[n][j] = comp.terms.get(((0,) * n, 1), GR_ZERO)
    return M


def invert_map(H):
    """Formal inverse of a germ-preserving square jet, by reversion.

    The linear part must be invertible; iteration x -> Minv(y - P(x)) gains
    one ordinary degree per round, so D rounds close the fixed point, which
    is then verified by composing back to the identity.
    """
    n = H.source_n
    if H.target_len() != n + 1:
        raise ValueError("jet reversion needs a square map")
    if not H.is_germ_preserving():
        raise ValueError("constant-term violation: map must fix 0")
    M = _linear_part_matrix(H)
    Minv = linalg.inverse(M)  # raises if the linear part is singular
    D = H.D
    linear_basis = [TruncatedHoloSeries.variable(n, D, j) for j in range(n)]
    linear_basis.append(TruncatedHoloSeries.w_variable(n, D))

    def from_matrix_rows(rows):
        comps = []
        for j in range(n + 1):
            acc = TruncatedHoloSeries.zero(n, D)
            for i in range(n + 1):
                if rows[i][j]:
                    acc = acc + linear_basis[i].scale(rows[i][j])
            comps.append(acc)
        return comps

    P = []
    for j, comp in enumerate(H.components):
        lin = {}
        for i in range(n):
            e = tuple(1 if t == i else 0 for t in range(n))
            if M[i][j]:
                lin[(e, 0)] = M[i][j]
        if M[n][j]:
            lin[((0,) * n, 1)] = M[n][j]
        nonlin = dict(comp.terms)
        _radd_into(nonlin, lin, scale=-GR_ONE)
        P.append(TruncatedHoloSeries._raw(n, D, nonlin))

    K = HoloMapJet(n, D, from_matrix_rows(Minv))
    for _ in range(D + 1):
        PK = [compose_holo_with_map(p, K) for p in P]
        comps = []
        for j in range(n + 1):
            acc = TruncatedHoloSeries.zero(n, D)
            for i in range(n + 1):
                if Minv[i][j]:
                    acc = acc + (linear_basis[i] - PK[i]).scale(Minv[i][j])
            comps.append(acc)
        K2 = HoloMapJet(n, D, comps)
        if K2 == K:
            break
        K = K2
    assert compose_maps(H, K) == identity_map(n, D), \
        "jet reversion failed to verify"
    return K


if __name__ == "__main__":  # pragma: no cover
    import doctest

    doctest.testmod(verbose=True)
