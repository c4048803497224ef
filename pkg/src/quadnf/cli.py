"""Batch frontend: JSON documents in, deterministic JSON reports out.

Every command writes a single report object wrapped in the envelope

    {"command", "config", "regime", "report", "seed", "versions"}

with sorted keys, two-space indentation, a trailing newline and no
timestamps: rerunning a command with the same inputs and seed reproduces
the output byte for byte.  regime is "exact" unless a command had to leave
Q(i) (the float unitary matching in rigidity), in which case it is
"mixed-float" and the residual bound appears in the report.

Exit codes: 0 when the requested computation succeeded (including verified
refutations, which are the expected outcome for cm-solve on a germ with
nonzero quadric trace); 2 when a verification came back negative (an
equivalence that does not hold, a decomposition that does not exist, a
kernel that should be trivial but is not, a sweep with a violation); 1 for
input errors (malformed JSON with line/column, named precondition
violations).  Reports for exit 0 and 2 are always written; exit 1 writes
only a message to stderr.
"""

import argparse
import json
import sys

from . import __version__, linalg
from .chern_moser import (CONSTRAINT_GROUPS, kernel_basis,
                          verify_thm12_instance)
from .embedding import (QuadricEmbedding, build_embedding, factor_rigidity,
                        induced_defining_series, normalize_embedding)
from .generators import as_rng, random_S2_series
from .hermitian import (ExactDecompositionError, coefficient_matrix,
                        decompose, hermitian_profile, in_class_H, in_class_S,
                        in_class_S_tilde)
from .io import (auto_to_obj, dump_document, gr_pair, holo_to_obj, jsonable,
                 load_document, map_to_obj, obj_to_auto, parse_document,
                 q_str, real_to_obj)
from .quadric import SignatureForm, transform_defining, verify_equivalence
from .series import restrict_to_quadric


class InputError(Exception):
    """Bad command line or bad input file: exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _versions():
    import platform

    import gmpy2
    import sympy
    return {"python": platform.python_version(), "quadnf": __version__,
            "gmpy2": gmpy2.version(), "sympy": sympy.__version__}


def _load(path):
    try:
        return load_document(path)
    except OSError as e:
        raise InputError("cannot read %s: %s" % (path, e.strerror or e))
    except json.JSONDecodeError as e:
        raise InputError("malformed JSON in %s at line %d column %d: %s"
                         % (path, e.lineno, e.colno, e.msg))


def _require(cond, message):
    if not cond:
        raise InputError(message)


def _form(n, ell):
    try:
        return SignatureForm(n, ell)
    except (ValueError, AssertionError):
        raise InputError("invalid signature: need 0 <= ell <= n/2, got "
                         "n=%r ell=%r" % (n, ell))


# ---------------------------------------------------------------------------
# command handlers: each returns (report, exit_code); the report may carry
# "_regime" when a command leaves the exact regime


def cmd_analyze(args):
    A = parse_document(_load(args.input), "real")
    prof = hermitian_profile(A)
    _, Hm = coefficient_matrix(A)
    cap = linalg.rank(Hm)
    classes = {
        "H": [k for k in range(cap + 1) if in_class_H(A, k)],
        "S": [k for k in range(cap + 1) if in_class_S(A, k)],
        "S_tilde": [k for k in range(cap + 1) if in_class_S_tilde(A, k)],
    }
    rep = {"rank": prof.rank, "neg": prof.neg_count,
           "pos": prof.pos_count, "classes": classes}
    try:
        dec = decompose(A)
        rep["decomposition"] = [holo_to_obj(p) for p in dec.phis]
        rep["decomposition_neg"] = dec.s
    except ExactDecompositionError as e:
        rep["decomposition"] = None
        rep["decomposition_error"] = str(e)
    return rep, 0


def cmd_decompose(args):
    A = parse_document(_load(args.input), "real")
    try:
        dec = decompose(A)
    except ExactDecompositionError as e:
        return {"found": False, "error": str(e)}, 2
    return {"found": True, "neg_count": dec.s,
            "components": [holo_to_obj(p) for p in dec.phis]}, 0


def cmd_embed(args):
    M = parse_document(_load(args.model), "model")
    try:
        e = build_embedding(M)
    except ExactDecompositionError as exc:
        return {"found": False, "error": str(exc)}, 2
    return {"found": True,
            "map": map_to_obj(e.H, target_ell=e.target.ell),
            "N": e.N, "codim": e.codim, "sigma": e.sigma,
            "target_ell": e.target.ell}, 0


def cmd_restrict(args):
    A = parse_document(_load(args.input), "real")
    _form(A.n, args.ell)
    R = restrict_to_quadric(A, args.ell)
    return {"series": real_to_obj(R), "zero": R.is_zero()}, 0


def cmd_cm_solve(args):
    A = parse_document(_load(args.input), "real")
    _require(A.D >= 4, "need degree cap D >= 4, series has D=%d" % A.D)
    if args.degree is not None:
        _require(args.degree == A.D,
                 "--degree %d does not match the series cap D=%d"
                 % (args.degree, A.D))
    form = _form(A.n, args.ell)
    rep = dict(verify_thm12_instance(A, form,
                                     require_class=not args.no_class_check))
    if rep["solution"] is not None:
        pair = rep["solution"]
        rep["solution"] = {"f": [holo_to_obj(x) for x in pair.f],
                           "g": holo_to_obj(pair.g)}
    code = 2 if rep["system_status"] == "violation" else 0
    return jsonable(rep), code


def cmd_cm_kernel(args):
    form = _form(args.n, args.ell)
    _require(1 <= args.sigma_min <= args.sigma_max,
             "need 1 <= sigma-min <= sigma-max")
    omit = frozenset(args.omit or ())
    dims = {}
    total = 0
    for sigma in range(args.sigma_min, args.sigma_max + 1):
        dims[sigma] = len(kernel_basis(sigma, form, omit=omit))
        total += dims[sigma]
    rep = {"dimensions": dims, "total": total, "omitted": sorted(omit)}
    return rep, 2 if (not omit and total) else 0


def cmd_equiv_verify(args):
    M1 = parse_document(_load(args.h1), "model")
    M2 = parse_document(_load(args.h2), "model")
    T = obj_to_auto(_load(args.automorphism), ell=args.ell, D=M1.D)
    ok = verify_equivalence(M1, M2, T)
    p1, p2 = hermitian_profile(M1.A), hermitian_profile(M2.A)
    rep = {"verified": bool(ok),
           "rank": [p1.rank, p2.rank],
           "neg": [p1.neg_count, p2.neg_count],
           "pos": [p1.pos_count, p2.pos_count]}
    return rep, 0 if ok else 2


def cmd_rigidity(args):
    M = parse_document(_load(args.model), "model")
    H1, _ = parse_document(_load(args.h1), "map")
    H2, _ = parse_document(_load(args.h2), "map")
    N1, N2 = H1.target_len() - 1, H2.target_len() - 1
    _require(N1 <= N2, "--h1 must be the map of smaller codimension")
    emb1 = QuadricEmbedding(H1, _form(N1, M.ell), M)
    emb2 = QuadricEmbedding(H2, _form(N2, M.ell), M)
    try:
        fact = factor_rigidity(emb1, emb2, M)
    except ValueError as e:
        return {"verified": False, "error": str(e)}, 2
    rep = {"verified": True, "linear": fact.linear,
           "automorphism": auto_to_obj(fact.T),
           "residual_exact": fact.residual_exact,
           "_regime": fact.regime}
    if fact.regime == "exact":
        rep["max_residual"] = q_str(fact.max_residual)
        rep["unitary_match"] = [[gr_pair(x) for x in row]
                                for row in fact.unitary_match]
    else:
        rep["max_residual"] = float(fact.max_residual)
        rep["unitary_match"] = [[[float(x.real), float(x.imag)] for x in row]
                                for row in fact.unitary_match]
    return rep, 0


def cmd_normalize_map(args):
    M = parse_document(_load(args.model), "model")
    H, file_ell = parse_document(_load(args.h), "map")
    t_ell = args.target_ell
    if t_ell is None:
        t_ell = M.ell if file_ell is None else file_ell
    N = H.target_len() - 1
    emb = QuadricEmbedding(H, _form(N, t_ell), M)
    ne = normalize_embedding(emb)
    induced = induced_defining_series(ne, M.ell, t_ell, ne.sigma)
    rep = {"automorphism": auto_to_obj(ne.T),
           "normalized_map": map_to_obj(ne.embedding.H, target_ell=t_ell),
           "sigma": ne.sigma, "lam": q_str(ne.lam),
           "z_slots": list(ne.z_slots), "phi_slots": list(ne.phi_slots),
           "neg_slack": ne.s,
           "permutation": list(ne.permutation()),
           "induced": real_to_obj(induced),
           "induced_matches_model": induced == M.A}
    return rep, 0


def cmd_transform(args):
    A = parse_document(_load(args.input), "real")
    T = obj_to_auto(_load(args.automorphism), ell=args.ell, D=A.D)
    out = transform_defining(A, T)
    return {"series": real_to_obj(out)}, 0


def cmd_thm12_sweep(args):
    _require(args.n >= 2, "the sweep needs n >= 2")
    _require(args.degree >= 4, "need --degree >= 4")
    _require(args.count >= 1, "need --count >= 1")
    form = _form(args.n, args.ell)
    base = as_rng(args.seed)
    rows = []
    tally = {"inconsistent": 0, "only_zero_solution": 0, "violation": 0}
    for i in range(args.count):
        si = base.randrange(2 ** 63)
        A = random_S2_series(si, args.n, args.degree, ell=args.ell,
                             nonzero_restriction=True)
        rep = verify_thm12_instance(A, form)
        status = rep["system_status"]
        tally[status] += 1
        row = {"instance": i, "seed": si, "status": status}
        if rep["certificate"] is not None:
            row["sigma"] = rep["certificate"]["sigma"]
            row["certificate_rows"] = len(rep["certificate"]["rows"])
            row["pairing"] = q_str(rep["certificate"]["pairing"])
        rows.append(row)
    rep = {"count": args.count, "tally": tally, "instances": rows}
    return rep, 2 if tally["violation"] else 0


# ---------------------------------------------------------------------------
# parser


def build_parser():
    p = _Parser(prog="quadnf", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version",
                   version="quadnf %s" % __version__)
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        sp.add_argument("--output", metavar="PATH",
                        help="write the report here instead of stdout")
        return sp

    sp = add("analyze", cmd_analyze,
             "rank, signature, class membership and square decomposition "
             "of a defining series")
    sp.add_argument("--input", required=True, metavar="A.json")

    sp = add("decompose", cmd_decompose,
             "exact signed-square decomposition of a defining series")
    sp.add_argument("--input", required=True, metavar="A.json")

    sp = add("embed", cmd_embed,
             "canonical embedding of a model germ into a hyperquadric")
    sp.add_argument("--model", required=True, metavar="M.json")

    sp = add("restrict", cmd_restrict,
             "trace of a defining series on the hyperquadric")
    sp.add_argument("--input", required=True, metavar="A.json")
    sp.add_argument("--ell", required=True, type=int)

    sp = add("cm-solve", cmd_cm_solve,
             "solve or refute the jet normalization equations for a series")
    sp.add_argument("--series", "--input", dest="input", required=True,
                    metavar="A.json")
    sp.add_argument("--ell", required=True, type=int)
    sp.add_argument("--degree", type=int,
                    help="assert the series degree cap (must match the file)")
    sp.add_argument("--no-class-check", action="store_true",
                    help="skip the slice-rank class precondition")

    sp = add("cm-kernel", cmd_cm_kernel,
             "per-degree kernel dimensions of the normalization operator")
    sp.add_argument("--n", required=True, type=int)
    sp.add_argument("--ell", required=True, type=int)
    sp.add_argument("--sigma-max", required=True, type=int)
    sp.add_argument("--sigma-min", type=int, default=2)
    sp.add_argument("--omit", action="append", choices=CONSTRAINT_GROUPS,
                    metavar="GROUP",
                    help="drop a gauge-constraint group (repeatable); "
                         "one of: %s" % ", ".join(CONSTRAINT_GROUPS))

    sp = add("equiv-verify", cmd_equiv_verify,
             "verify that an automorphism carries one model germ to another")
    sp.add_argument("--h1", required=True, metavar="M1.json")
    sp.add_argument("--h2", required=True, metavar="M2.json")
    sp.add_argument("--automorphism", required=True, metavar="T.json")
    sp.add_argument("--ell", type=int,
                    help="signature of the automorphism's form (default: "
                         "from the file)")

    sp = add("rigidity", cmd_rigidity,
             "factor one embedding through another and a linear inclusion")
    sp.add_argument("--h1", required=True, metavar="H1.json")
    sp.add_argument("--h2", required=True, metavar="H2.json")
    sp.add_argument("--model", required=True, metavar="M.json")

    sp = add("normalize-map", cmd_normalize_map,
             "block normal form of an embedding by a target automorphism")
    sp.add_argument("--h", required=True, metavar="H.json")
    sp.add_argument("--model", required=True, metavar="M.json")
    sp.add_argument("--target-ell", type=int,
                    help="target signature (default: the map file's "
                         "target_ell, else the model's ell)")

    sp = add("transform", cmd_transform,
             "pull a defining series back through a hyperquadric "
             "automorphism")
    sp.add_argument("--input", required=True, metavar="A.json")
    sp.add_argument("--automorphism", required=True, metavar="T.json")
    sp.add_argument("--ell", type=int,
                    help="signature of the automorphism's form (default: "
                         "from the file)")

    sp = add("thm12-sweep", cmd_thm12_sweep,
             "seeded sweep: solve-or-refute over random slice-rank-class "
             "germs")
    sp.add_argument("--n", required=True, type=int)
    sp.add_argument("--ell", required=True, type=int)
    sp.add_argument("--degree", required=True, type=int)
    sp.add_argument("--count", required=True, type=int)
    sp.add_argument("--seed", required=True, type=int)
    sp.add_argument("--jobs", type=int, default=1,
                    help="accepted for interface compatibility; execution "
                         "is sequential")

    return p


def _config_echo(args):
    skip = {"func", "command", "output"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        report, code = args.func(args)
    except InputError as e:
        print("quadnf: input error: %s" % e, file=sys.stderr)
        return 1
    except ValueError as e:
        print("quadnf: input error: %s" % e, file=sys.stderr)
        return 1
    envelope = {
        "command": args.command,
        "config": _config_echo(args),
        "seed": getattr(args, "seed", None),
        "versions": _versions(),
        "regime": report.pop("_regime", "exact"),
        "report": report,
    }
    text = dump_document(envelope)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
