"""JSON interchange: series, maps, automorphisms, models, report payloads.

One format rule everywhere: a rational number is the exact string "p/q"
(lowest terms, denominator always written), a Gaussian rational appears as
the field pair "re"/"im" inside a term object or as a two-element
["re", "im"] list in vector and matrix positions.  Nothing is ever
rounded.  Series terms are emitted sorted by exponent key and documents
are dumped with sorted keys, fixed indentation and a trailing newline, so
the same object always produces the same bytes.

Parsers validate shapes and raise ValueError naming the offending field;
the downstream constructors (TruncatedHoloSeries, make_automorphism, ...)
re-verify the mathematical invariants, so a hand-edited file cannot smuggle
in an inconsistent object.
"""

import json
import re

from .quadric import HypersurfaceModel, SignatureForm, make_automorphism
from .rational import GaussianRational, rat
from .series import HoloMapJet, TruncatedHoloSeries, TruncatedRealSeries


def q_str(q):
    """Exact "p/q" string of a rational (denominator always explicit)."""
    q = rat(q)
    return "%s/%s" % (q.numerator, q.denominator)


_Q_RE = re.compile(r"^[+-]?[0-9]+(?:/[0-9]+)?$")


def parse_q(s, where="rational"):
    if not isinstance(s, str):
        raise ValueError("%s must be a \"p/q\" string, got %r" % (where, s))
    if not _Q_RE.match(s):
        raise ValueError("%s is not a \"p/q\" rational: %r" % (where, s))
    try:
        return rat(s)
    except ZeroDivisionError:
        raise ValueError("%s has denominator zero: %r" % (where, s))


def gr_pair(c):
    return [q_str(c.re), q_str(c.im)]


def parse_gr_pair(v, where="coefficient"):
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise ValueError("%s must be an [re, im] pair, got %r" % (where, v))
    return GaussianRational(parse_q(v[0], where + ".re"),
                            parse_q(v[1], where + ".im"))


def _exponent(v, n, where):
    if not (isinstance(v, list) and len(v) == n
            and all(isinstance(e, int) and e >= 0 for e in v)):
        raise ValueError("%s must be a list of %d nonnegative ints, got %r"
                         % (where, n, v))
    return tuple(v)


def _nonneg_int(obj, field, default=None):
    v = obj.get(field, default)
    if not (isinstance(v, int) and v >= 0):
        raise ValueError("field %r must be a nonnegative int, got %r"
                         % (field, v))
    return v


def holo_to_obj(p):
    terms = []
    for (alpha, gamma), c in p.sorted_terms():
        terms.append({"alpha": list(alpha), "gamma": gamma,
                      "re": q_str(c.re), "im": q_str(c.im)})
    return {"kind": "holo", "n": p.n, "D": p.D, "terms": terms}


def real_to_obj(A):
    terms = []
    for (alpha, beta, gamma, delta), c in sorted(A.terms.items()):
        terms.append({"alpha": list(alpha), "beta": list(beta),
                      "gamma": gamma, "delta": delta,
                      "re": q_str(c.re), "im": q_str(c.im)})
    out = {"kind": "real", "n": A.n, "D": A.D, "terms": terms}
    if A.mode != "zw":
        out["mode"] = A.mode
    return out


def _term_list(obj):
    terms = obj.get("terms")
    if not isinstance(terms, list):
        raise ValueError("field 'terms' must be a list")
    return terms


def obj_to_holo(obj):
    if obj.get("kind", "holo") != "holo":
        raise ValueError("expected a holomorphic series, got kind %r"
                         % obj.get("kind"))
    n, D = _nonneg_int(obj, "n"), _nonneg_int(obj, "D")
    items = []
    for i, t in enumerate(_term_list(obj)):
        where = "terms[%d]" % i
        if not isinstance(t, dict):
            raise ValueError("%s must be an object" % where)
        alpha = _exponent(t.get("alpha"), n, where + ".alpha")
        gamma = _nonneg_int(t, "gamma", 0)
        c = GaussianRational(parse_q(t.get("re", "0/1"), where + ".re"),
                             parse_q(t.get("im", "0/1"), where + ".im"))
        items.append(((alpha, gamma), c))
    return TruncatedHoloSeries(n, D, items)


def obj_to_real(obj):
    if obj.get("kind", "real") != "real":
        raise ValueError("expected a real series, got kind %r"
                         % obj.get("kind"))
    n, D = _nonneg_int(obj, "n"), _nonneg_int(obj, "D")
    mode = obj.get("mode", "zw")
    items = []
    for i, t in enumerate(_term_list(obj)):
        where = "terms[%d]" % i
        if not isinstance(t, dict):
            raise ValueError("%s must be an object" % where)
        alpha = _exponent(t.get("alpha"), n, where + ".alpha")
        beta = _exponent(t.get("beta", [0] * n), n, where + ".beta")
        gamma = _nonneg_int(t, "gamma", 0)
        delta = _nonneg_int(t, "delta", 0)
        c = GaussianRational(parse_q(t.get("re", "0/1"), where + ".re"),
                             parse_q(t.get("im", "0/1"), where + ".im"))
        items.append(((alpha, beta, gamma, delta), c))
    return TruncatedRealSeries(n, D, items, mode)


def map_to_obj(H, target_ell=None):
    out = {"kind": "map", "source_n": H.source_n, "D": H.D,
           "components": [holo_to_obj(c) for c in H.components]}
    if target_ell is not None:
        out["target_ell"] = target_ell
    return out


def obj_to_map(obj):
    """(HoloMapJet, target_ell-or-None) from a map document."""
    if obj.get("kind", "map") != "map":
        raise ValueError("expected a map, got kind %r" % obj.get("kind"))
    m, D = _nonneg_int(obj, "source_n"), _nonneg_int(obj, "D")
    comps = obj.get("components")
    if not isinstance(comps, list) or not comps:
        raise ValueError("field 'components' must be a nonempty list")
    parsed = []
    for c in comps:
        p = obj_to_holo(c)
        if (p.n, p.D) != (m, D):
            raise ValueError("component shape (%d, %d) disagrees with the "
                             "map header (%d, %d)" % (p.n, p.D, m, D))
        parsed.append(p)
    ell = obj.get("target_ell")
    if ell is not None and not isinstance(ell, int):
        raise ValueError("field 'target_ell' must be an int")
    return HoloMapJet(m, D, parsed), ell


def model_to_obj(M):
    return {"kind": "model", "n": M.n, "ell": M.ell, "D": M.D,
            "form": M.form, "A": real_to_obj(M.A)}


def obj_to_model(obj):
    if obj.get("kind", "model") != "model":
        raise ValueError("expected a model, got kind %r" % obj.get("kind"))
    n, D = _nonneg_int(obj, "n"), _nonneg_int(obj, "D")
    ell = _nonneg_int(obj, "ell")
    form = obj.get("form", "full")
    A = obj.get("A")
    if not isinstance(A, dict):
        raise ValueError("field 'A' must be a series object")
    return HypersurfaceModel(n, ell, D, obj_to_real(A), form)


def auto_to_obj(T):
    return {"kind": "automorphism",
            "lam": q_str(T.lam), "r": q_str(T.r),
            "a": [gr_pair(x) for x in T.a],
            "U": [[gr_pair(x) for x in row] for row in T.U],
            "sigma": T.sigma,
            "n": T.form.n, "ell": T.form.ell, "D": T.D}


def obj_to_auto(obj, ell=None, D=None):
    """Rebuild (and re-verify) an automorphism; ell and D override the file."""
    if obj.get("kind", "automorphism") != "automorphism":
        raise ValueError("expected an automorphism, got kind %r"
                         % obj.get("kind"))
    U = obj.get("U")
    if not (isinstance(U, list) and U
            and all(isinstance(r, list) and len(r) == len(U) for r in U)):
        raise ValueError("field 'U' must be a square matrix")
    n = len(U)
    Um = tuple(tuple(parse_gr_pair(x, "U entry") for x in row) for row in U)
    a = obj.get("a", [])
    if not (isinstance(a, list) and len(a) == n):
        raise ValueError("field 'a' must be a list of %d pairs" % n)
    av = tuple(parse_gr_pair(x, "a entry") for x in a)
    lam = parse_q(obj.get("lam", "1/1"), "lam")
    r = parse_q(obj.get("r", "0/1"), "r")
    sigma = obj.get("sigma", 1)
    if sigma not in (1, -1):
        raise ValueError("field 'sigma' must be 1 or -1, got %r" % sigma)
    if ell is None:
        ell = obj.get("ell")
    if ell is None:
        raise ValueError("signature 'ell' is in neither the file nor the "
                         "command line")
    if D is None:
        D = _nonneg_int(obj, "D")
    return make_automorphism(lam, r, av, Um, sigma, SignatureForm(n, ell), D)


_PARSERS = {"holo": obj_to_holo, "real": obj_to_real, "map": obj_to_map,
            "model": obj_to_model, "automorphism": obj_to_auto}


def parse_document(obj, expect):
    """Dispatch on the 'kind' field; expect names the kind required."""
    if not isinstance(obj, dict):
        raise ValueError("top-level JSON value must be an object")
    kind = obj.get("kind", expect)
    if kind != expect:
        raise ValueError("expected a %r document, got kind %r"
                         % (expect, kind))
    return _PARSERS[expect](obj)


def jsonable(v):
    """Recursive conversion of report values to JSON-compatible ones.

    Rationals become "p/q" strings, Gaussian rationals [re, im] pairs,
    tuples become lists; dict keys that are not strings are rendered as
    sorted [key, value] pair lists to keep the bytes deterministic.
    """
    if v is None or isinstance(v, (bool, int, str)):
        return v
    if isinstance(v, GaussianRational):
        return gr_pair(v)
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if isinstance(v, dict):
        if all(isinstance(k, str) for k in v):
            return {k: jsonable(x) for k, x in v.items()}
        return [[jsonable(k), jsonable(x)]
                for k, x in sorted(v.items(), key=lambda kv: repr(kv[0]))]
    if isinstance(v, TruncatedHoloSeries):
        return holo_to_obj(v)
    if isinstance(v, TruncatedRealSeries):
        return real_to_obj(v)
    try:
        return q_str(v)  # mpq and anything rat() accepts exactly
    except (TypeError, ValueError):
        raise TypeError("cannot serialize %r" % (v,))


def dump_document(obj):
    """Deterministic bytes: sorted keys, indent 2, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2,
                      ensure_ascii=True) + "\n"


def load_document(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
