"""Command-line front end: ``wilsonsearch <command> ...``.

Exit codes: 0 success, 1 usage error, 2 integrity failure, 3 budget error,
4 checkpoint error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction

from . import checkpoint as ckpt
from . import identities, primes, search, verify, wilson
from .cyclotomic import HeuristicFailure, get_field
from .identities import ESet

EXIT_OK, EXIT_USAGE, EXIT_INTEGRITY, EXIT_BUDGET, EXIT_CHECKPOINT = 0, 1, 2, 3, 4

# Worked example: p = 3333331 with e = 18.
WORKED_EXAMPLE = {
    "p": 3333331,
    "e": 18,
    "omega0": 1819843,
    "theta": [-4, 10, 3, 7, -10, -5],
    "lift": (1819843, 1422487, 90367),
    "C": 418399,
    "gamma": (1628187, 503367),
    "f_fact": (461190, 275007),
    "twisted": (1780730, 2171988),
    "i": 3,
    "residue": (3333330, 27003),
    "w": 27004,
}


def _ratio(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"bad ratio {text!r}") from exc


def _eset(text: str) -> ESet:
    try:
        return ESet.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _prime(text: str) -> int:
    p = int(text)
    if not primes.is_prime_64(p):
        raise argparse.ArgumentTypeError(f"{p} is not prime")
    return p


def _digits(p: int, r: int) -> tuple[int, int]:
    return r % p, r // p % p


def cmd_search(args) -> int:
    cfg = search.SearchConfig(
        lo=args.min,
        hi=args.max,
        byte_budget=args.mem_bytes,
        e_set=args.e_set,
        near_ratio=args.near_ratio,
        seed=args.seed,
        threads=args.threads,
        checkpoint_dir=args.checkpoint_dir,
        out=args.out,
    )
    res = search.run_search(cfg)
    print(json.dumps(res.summary(), indent=2))
    return EXIT_OK


def _tree_residue(p: int) -> int:
    return wilson.wilson_range(p - 1, p)[0].residue


def cmd_verify(args) -> int:
    p = args.p
    rec = search.run_search(search.SearchConfig(p - 1, p, seed=args.seed)).records[0]
    if args.method == "tree":
        other = _tree_residue(p)
        agree = other == rec.residue and rec.a0 == p - 1
        residues = {"record": rec.residue, "tree": other}
    else:
        report = verify.check_record(rec, args.method)
        agree, residues = report.agree, report.residues
    print(json.dumps({"p": p, "w": rec.w, "method": args.method,
                      "residues": residues, "agree": agree}))
    return EXIT_OK if agree else EXIT_INTEGRITY


def cmd_quotient(args) -> int:
    rec = search.run_search(search.SearchConfig(args.p - 1, args.p, seed=args.seed)).records[0]
    print(rec.w)
    return EXIT_OK


def cmd_savings(args) -> int:
    r, q = identities.savings(args.e_set)
    print(f"Q_S = {q}")
    print(f"R_S = {r} ~ {float(r):.6f}")
    return EXIT_OK


def cmd_stats(args) -> int:
    partial, asym = search.expected_count(args.x)
    print(f"sum 1/p over p < {args.x:g}: {partial:.6f}")
    print(f"log log x + {search.MERTENS_C}: {asym:.6f}")
    return EXIT_OK


def run_worked_example(out=print) -> bool:
    """Run the p = 3333331, e = 18 example end to end; True iff all values match."""
    ex = WORKED_EXAMPLE
    p, e = ex["p"], ex["e"]
    ok = True

    def check(name, got, want):
        nonlocal ok
        good = got == want
        ok &= good
        out(f"{'ok  ' if good else 'FAIL'} {name}: {got}" + ("" if good else f" (expected {want})"))

    ctx = identities.stage3_context(p, e, omega0=ex["omega0"], theta=ex["theta"])
    check("omega lift digits", identities.lift_digits(p, ctx.omega), ex["lift"])
    check("C", ctx.C, ex["C"])
    check("gamma", _digits(p, ctx.gamma), ex["gamma"])
    f_fact = wilson.reduced_factorials(p - 1, p, e, primes=[p])[p]
    check("f! from the tree stage", _digits(p, f_fact), ex["f_fact"])
    twisted = identities.twisted_factorial(p, e, f_fact, ctx)
    check("omega^-i (p-1)!", _digits(p, twisted), ex["twisted"])
    check("i", ctx.index_of(twisted), ex["i"])
    check("root-of-unity check", identities.stage3_root_check(p, e, f_fact, ctx.gamma, ctx.C), True)
    residue = identities.recover_wilson(p, e, f_fact, ctx)
    check("(p-1)! mod p^2", _digits(p, residue), ex["residue"])
    check("w_p", wilson.quotient_from_residue(p, residue), ex["w"])

    fld = get_field(e)
    theta = identities.cyclotomic.cyclo_gcd(
        fld, fld.rational(p), fld.zeta_power(1) - fld.rational(ex["omega0"])
    )
    ref = fld.element(ex["theta"])
    assoc = fld.exact_div(theta, ref) is not None and fld.exact_div(ref, theta) is not None
    check("cyclo_gcd output is an associate of theta", assoc, True)
    own = identities.stage3_context(p, e, omega0=ex["omega0"], theta=list(theta))
    check("residue via own theta", _digits(p, identities.recover_wilson(p, e, f_fact, own)), ex["residue"])
    return ok


def cmd_example(args) -> int:
    return EXIT_OK if run_worked_example() else EXIT_INTEGRITY


def cmd_checkpoint_inspect(args) -> int:
    ck = ckpt.load(args.file)
    print(json.dumps({
        "version": ck.version,
        "config_hash": ck.config_hash.hex(),
        "e": ck.e,
        "interval": [ck.lo, ck.hi],
        "marker": ck.marker,
        "sections": {k: len(v) for k, v in ck.sections.items()},
        "section_bits": {k: sum(int(x).bit_length() for x in v) for k, v in ck.sections.items()},
    }, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wilsonsearch", description="Wilson quotient search")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("search", help="compute w_p for all primes min < p <= max")
    s.add_argument("--min", type=int, required=True, help="exclusive lower bound")
    s.add_argument("--max", type=int, required=True, help="inclusive upper bound")
    s.add_argument("--mem-bytes", type=int, default=wilson.DEFAULT_BYTE_BUDGET)
    s.add_argument("--e-set", type=_eset, default=ESet(), help="full, or a list such as 2,4,6")
    s.add_argument("--near-ratio", type=_ratio, default=search.DEFAULT_NEAR_RATIO)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--out", help="near-miss residue file")
    s.add_argument("--checkpoint-dir")
    s.set_defaults(func=cmd_search)

    v = sub.add_parser("verify", help="recompute (p-1)! mod p^2 independently")
    v.add_argument("p", type=_prime)
    v.add_argument("--method", choices=("naive", "tree", "sqrt"), default="sqrt")
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    q = sub.add_parser("quotient", help="print w_p")
    q.add_argument("p", type=_prime)
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=cmd_quotient)

    sv = sub.add_parser("savings", help="Stage 1/2 savings factor R_S for an e set")
    sv.add_argument("--e-set", type=_eset, default=ESet())
    sv.set_defaults(func=cmd_savings)

    st = sub.add_parser("stats", help="expected number of Wilson primes below x")
    st.add_argument("x", type=float)
    st.set_defaults(func=cmd_stats)

    ex = sub.add_parser("example-paper", help="run the p = 3333331, e = 18 worked example")
    ex.set_defaults(func=cmd_example)

    ci = sub.add_parser("checkpoint-inspect", help="describe a checkpoint file")
    ci.add_argument("file")
    ci.set_defaults(func=cmd_checkpoint_inspect)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (wilson.IntegrityError, HeuristicFailure) as exc:
        print(f"integrity failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except wilson.BudgetError as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ckpt.CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
