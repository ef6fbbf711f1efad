"""Command-line entry point: ``rankone <command> [options]``.

Exit codes: 0 ok, 2 an asserted bound was violated (a bug), 3 inconclusive,
64 usage, parse errors and rejected (golden-type) input.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from fractions import Fraction
from typing import Optional

import numpy as np

from . import __version__
from .cf import classify, convergents, frac_multiple, parse_alpha
from .dynamics import (
    EXIT_INCONCLUSIVE,
    EXIT_OK,
    EXIT_VIOLATION,
    coprime_heights,
    eigenvalue_screen,
    partial_rigidity_scan,
    rigidity_scan,
)
from .eigen import (
    chord_bounds,
    default_depth,
    eigen_check,
    injectivity_screen,
    pushforward_histogram,
    random_code,
    tail_bound,
)
from .errors import (
    GoldenTypeRejected,
    InternalInvariantViolation,
    InvalidInput,
    InvalidMode,
    InvalidParameter,
    RankOneError,
)
from .gk import montecarlo
from .nonsingular import build_ns_tower, iii_1_witnesses, ratio_set_witness
from .tower import CONVENTIONS, build_tower, depth_cap

EXIT_USAGE = 64
COMMANDS = ("analyze", "tower", "eigen", "pushforward", "rigidity", "typeiii", "gk")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def canon(obj):
    """JSON-ready copy with exact rationals as ``"num/den"`` strings."""
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, dict):
        return {str(k): canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canon(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(report: dict) -> str:
    return json.dumps(canon(report), indent=2, sort_keys=True) + "\n"


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


def _resolve_P(text: str, cf) -> int:
    m = re.fullmatch(r"q(\d+)", text.strip())
    if m:
        return cf.q(int(m.group(1)))
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"--P expects an integer or qK, got {text!r}")


def _k_range(text: Optional[str], default: range) -> list[int]:
    if text is None:
        return list(default)
    m = re.fullmatch(r"(\d+)(?:-(\d+))?", text.strip())
    if not m:
        raise UsageError(f"--k expects K or K1-K2, got {text!r}")
    lo = int(m.group(1))
    hi = int(m.group(2) or lo)
    return list(range(lo, hi + 1))


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--alpha", default="sqrt2", help="CF literal, (u+v*sqrt(d))/w, or an alias (sqrt2, golden)")
    common.add_argument("--depth", type=int, help="tower depth N")
    common.add_argument("--precision", type=_fraction, default=Fraction(1, 10**30))
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--out", help="output file (default: stdout)")

    p = _Parser(prog="rankone", description="Rank-one towers built from continued fractions.")
    p.add_argument("--version", action="version", version=f"rankone {__version__}")
    sub = p.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    a = sub.add_parser("analyze", parents=[common], help="convergents, classification, tail bounds")
    a.add_argument("--window", type=int, default=30)

    sub.add_parser("tower", parents=[common], help="dump the tower")

    e = sub.add_parser("eigen", parents=[common], help="eigen-relation, tail and injectivity checks")
    e.add_argument("--samples", type=int, default=1000)
    e.add_argument("--beta", help="eigenvalue candidate: a rational or n*alpha as 'nalpha:N'")

    f = sub.add_parser("pushforward", parents=[common], help="histogram of f on the circle")
    f.add_argument("--samples", type=int, default=100_000)
    f.add_argument("--bins", type=int, default=64)

    r = sub.add_parser("rigidity", parents=[common], help="partial rigidity and rigidity dichotomy")
    r.add_argument("--mode", choices=("auto", "rigid-search", "nonrigid-certify"), default="auto")
    r.add_argument("--P", help="scan range 1 < p <= P; integer or qK")
    r.add_argument("--k", help="stage or stage range K1-K2")

    t = sub.add_parser("typeiii", parents=[common], help="type III towers and ratio-set witnesses")
    t.add_argument("--variant", choices=("III_lambda", "III_0", "III_1"), default="III_lambda")
    t.add_argument("--lambda", dest="lam", type=_fraction, default=Fraction(1, 2))
    t.add_argument("--beta", type=_fraction)
    t.add_argument("--target", type=int, default=1)
    t.add_argument("--k", help="stage or stage range K1-K2")

    g = sub.add_parser("gk", parents=[common], help="Gauss-Kuzmin Monte Carlo")
    g.add_argument("--samples", type=int, default=100_000)
    g.add_argument("--k", type=int, default=20, help="coefficient index")
    g.add_argument("--bits", type=int, default=256)
    g.add_argument("--window", type=int, help="window W for the divergence scan")
    return p


# -- commands -----------------------------------------------------------------


def _verdict(v) -> dict:
    return {"value": v.value, "certified": v.certified, "note": v.note}


def cmd_analyze(args, cf) -> tuple[dict, int]:
    if cf.golden_type():
        raise GoldenTypeRejected(
            f"{cf.label} is of golden type: its coefficients are eventually 1, so the columns stop "
            "being cut and T_alpha would not be rank-one (not even surjective)"
        )
    N = args.depth or 12
    conv = convergents(cf, N)
    cls = classify(cf, args.window)
    rows = [
        {"k": k, "a_k": cf.coefficient(k), "p_k": p, "q_k": q} for k, (p, q) in enumerate(conv.pairs()) if k <= N
    ]
    tails = [{"N": n, "bound": tail_bound(cf, n).bound, "approx": float(tail_bound(cf, n).bound)} for n in range(1, N + 1)]
    report = {
        "convergents": rows,
        "classification": {
            "golden_type": _verdict(cls.golden_type),
            "coefficient_bound": _verdict(cls.coefficient_bound),
            "bounded": _verdict(cls.bounded),
            "measure": _verdict(cls.measure_verdict),
            "partial_sums": cls.partial_sums,
            "partial_products": cls.partial_products,
        },
        "coprime_heights": coprime_heights(cf, N),
        "tail_bounds": tails,
    }
    return report, EXIT_OK if report["coprime_heights"] else EXIT_VIOLATION


def cmd_tower(args, cf) -> tuple[dict, int]:
    tw = build_tower(cf, args.depth or 6)
    return tw.dump(), EXIT_OK


def _parse_beta(text: str, cf):
    m = re.fullmatch(r"nalpha:(-?\d+)", text.strip())
    if m:
        return frac_multiple(cf, int(m.group(1)))
    try:
        return Fraction(text)
    except ValueError:
        raise UsageError(f"--beta expects a rational or nalpha:N, got {text!r}")


def cmd_eigen(args, cf) -> tuple[dict, int]:
    N = args.depth or 10
    tw = build_tower(cf, N + 5)
    qN = tw.height(N)
    exact = sum(eigen_check(tw, tw.decode(N, ell), N).exact_increment for ell in range(qN - 1))
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    tb = tail_bound(cf, N).bound
    worst = Fraction(0)
    for _ in range(args.samples):
        code = random_code(tw, N, rng, extra=5)
        dH = tw.level_index(code, N + 5) - tw.level_index(code, N)
        worst = max(worst, chord_bounds(cf, dH, args.precision).hi)
    separated = 0
    gaps = []
    for _ in range(args.samples):
        A, B = random_code(tw, N, rng, 3), random_code(tw, N, rng, 3)
        if A.normalized() == B.normalized():
            continue
        res = injectivity_screen(tw, A, B, N)
        separated += res.separated
        gaps.append(res.gap_lower_bound)
    report = {
        "N": N,
        "eigen_relation": {"checked": qN - 1, "exact": exact},
        "tail": {"bound": tb, "max_sampled_upper": worst, "holds": worst <= tb},
        "injectivity": {"pairs": len(gaps), "separated": separated, "min_gap": min(gaps) if gaps else None},
    }
    code = EXIT_OK
    if exact != qN - 1 or worst > tb:
        code = EXIT_VIOLATION
    elif separated != len(gaps):
        code = EXIT_INCONCLUSIVE
    if args.beta is not None:
        screen = eigenvalue_screen(cf, _parse_beta(args.beta, cf), precision=args.precision)
        report["eigenvalue_screen"] = screen.to_json()
        if code == EXIT_OK:
            code = screen.exit_code
    return report, code


def cmd_pushforward(args, cf):
    N = args.depth or default_depth(cf)
    tw = build_tower(cf, N)
    h = pushforward_histogram(tw, args.samples, N, args.bins, args.seed)
    return h, EXIT_OK


def cmd_rigidity(args, cf) -> tuple[dict, int]:
    mode = args.mode
    if mode == "auto":
        mode = "nonrigid-certify" if cf.certified_bound() is not None else "rigid-search"
    tw = build_tower(cf, args.depth or 6)
    ks = _k_range(args.k, range(3, 9))
    partial = partial_rigidity_scan(tw, ks)
    if mode == "nonrigid-certify":
        P = _resolve_P(args.P, cf) if args.P else cf.q(7)
        main = rigidity_scan(tw, cf, mode, P=P)
    else:
        main = rigidity_scan(tw, cf, mode, k_range=_k_range(args.k, range(2, 13)))
    codes = [partial.exit_code, main.exit_code]
    code = EXIT_VIOLATION if EXIT_VIOLATION in codes else max(codes)
    return {"partial_rigidity": partial.to_json(), "rigidity": main.to_json()}, code


def cmd_typeiii(args, cf) -> tuple[dict, int]:
    N = args.depth or 6
    ns = build_ns_tower(cf, args.variant, N, lam=args.lam if args.variant != "III_0" else None, beta=args.beta)
    report = {"tower": ns.dump()}
    if args.variant == "III_0":
        return report, EXIT_OK
    ratios = {}
    for n in range(1, N + 1):
        for r in ns.transition_ratios(n):
            ratios[r] = ns.exponents_of(r)
    report["single_step_ratios"] = [{"ratio": r, "exponents": list(e)} for r, e in sorted(ratios.items())]
    if args.variant == "III_1":
        report["witnesses"] = {k: w.to_json(ns) for k, w in iii_1_witnesses(ns).items()}
        return report, EXIT_OK
    stages = _k_range(args.k, range(1, N))
    found = []
    for k in stages:
        if cf.coefficient(k) < 2 or k + 1 > N:
            continue
        found.append(ratio_set_witness(ns, k, args.target, depth=N).to_json(ns))
    report["witnesses"] = found
    return report, EXIT_OK if found else EXIT_INCONCLUSIVE


def cmd_gk(args, cf):
    rep = montecarlo(args.seed, args.samples, args.k, args.bits, args.window)
    return rep, EXIT_OK


HANDLERS = {
    "analyze": cmd_analyze,
    "tower": cmd_tower,
    "eigen": cmd_eigen,
    "pushforward": cmd_pushforward,
    "rigidity": cmd_rigidity,
    "typeiii": cmd_typeiii,
    "gk": cmd_gk,
}
CSV_DEFAULT = {"pushforward", "gk"}


def resolved_config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("out",)}
    cfg["depth_cap"] = depth_cap()
    return cfg


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    fmt = args.format or ("csv" if args.command in CSV_DEFAULT else "json")
    args.format = fmt
    try:
        cf = parse_alpha(args.alpha) if args.command != "gk" else None
        if cf is not None:
            args.alpha_literal = cf.literal()
        result, code = HANDLERS[args.command](args, cf)
    except (InvalidInput, InvalidParameter, InvalidMode, GoldenTypeRejected, UsageError) as exc:
        print(f"rankone {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InternalInvariantViolation as exc:
        print(f"rankone {args.command}: internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except RankOneError as exc:
        print(f"rankone {args.command}: inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    config = resolved_config(args)
    if hasattr(result, "to_csv"):
        summary = result.to_json()
        if fmt == "csv":
            _emit(result.to_csv(), args.out)
            if args.out:
                meta = {"config": config, "conventions": CONVENTIONS, "summary": summary}
                _emit(dumps(meta), args.out + ".json")
            return code
        result = summary
    if fmt == "csv":
        print(f"rankone {args.command}: csv output is only available for pushforward and gk", file=sys.stderr)
        return EXIT_USAGE
    report = {"command": args.command, "config": config, "conventions": CONVENTIONS, "exit_code": code}
    report.update(result)
    _emit(dumps(report), args.out)
    return code


def main(argv=None):
    raise SystemExit(run(argv))


if __name__ == "__main__":
    main()
