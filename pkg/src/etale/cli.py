"""``etale`` command line.

Every subcommand reads a groupoid spec, prints a short report on stdout and,
with ``--out DIR``, writes its tables and documents there.  Exit codes: 0 ok,
2 spec error, 3 precondition failure, 4 invariant violation or rejected
witness, 5 resource cap.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import builders, comparison, convolution, growth, io, measure
from .errors import EtaleError, InvariantViolation, SpecError
from .groupoid import isotropy_and_quotient
from .unitspace import DyadicRadius


def _load(args):
    spec = builders.load_spec(args.spec, args.depth)
    return builders.build(spec)


def _out(args, name: str, text: str) -> None:
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        (d / name).write_text(text)


def _eps(args, G) -> DyadicRadius:
    """``2^-epsilon``; without the flag, the resolution of the unit space."""
    return DyadicRadius.of(G.space.depth if args.epsilon is None else args.epsilon)


def cmd_build(args) -> int:
    G = _load(args)
    iq = isotropy_and_quotient(G)
    summary = {
        "kind": G.kind,
        "depth": G.space.depth,
        "units": G.space.size,
        "arrows": G.n_arrows,
        "generators": len(G.generators),
        "isotropy_arrows": iq.isotropy.n_arrows,
        "principal": G.is_principal(),
        "digest": G.digest(),
    }
    print(f"{G.space.size} units, {G.n_arrows} arrows, |K| = {len(G.generators)}, "
          f"Iso = {iq.isotropy.n_arrows}, principal: {'yes' if G.is_principal() else 'no'}")
    _out(args, "arrows.csv", io.arrow_table(G))
    _out(args, "summary.json", io.dumps(summary))
    return 0


def cmd_growth(args) -> int:
    G = _load(args)
    prof = growth.growth_function(G, args.nmax, args.threads)
    table = io.csv_text(["n", "gamma_n"], enumerate(prof.table))
    summary = {"table": list(prof.table), "saturation_n": prof.saturation_n, "depth": G.space.depth}
    try:
        est = growth.estimate_ord(prof)
        summary.update(estimated_ord=str(est.value), slope=round(est.slope, 12), window=list(est.window),
                       residual=round(est.residual, 12), heuristic=True)
    except EtaleError as exc:
        summary.update(estimated_ord=None, estimate_error=str(exc))
    try:
        M, m, c = growth.m_parameter(G, prof, args.N, args.ord)
        summary.update(N=args.N, M=M, m=m, ord_used=c)
    except EtaleError as exc:
        summary.update(M=None, m=None, m_error=str(exc))
    sys.stdout.write(table)
    print(f"# saturation_n={prof.saturation_n} estimated_ord={summary['estimated_ord']} M={summary['M']} m={summary['m']}")
    _out(args, "growth.csv", table)
    _out(args, "growth.json", io.dumps(summary))
    return 0


def cmd_orbital(args) -> int:
    G = _load(args)
    graph = growth.orbital_graph(G)
    rows = []
    for x in range(G.space.size):
        for n in range(args.nmax + 1):
            r = growth.check_source_surjection(G, x, n, graph)
            rows.append((G.space.word(x), n, r.cayley, r.orbital, r.surjective))
    table = io.csv_text(["x", "n", "cayley", "orbital", "surjective"], rows)
    edges = io.csv_text(["u", "v"], ((G.space.word(a), G.space.word(b)) for a, b in sorted(graph.edges)))
    print(f"orbital graph: {G.space.size} vertices, {len(graph.edges)} edges; source surjection verified for n <= {args.nmax}")
    _out(args, "orbital_balls.csv", table)
    _out(args, "orbital_edges.csv", edges)
    return 0


def _ratio(args) -> Fraction:
    if args.ratio:
        try:
            return Fraction(args.ratio)
        except (ValueError, ZeroDivisionError):
            raise SpecError(f"--ratio {args.ratio!r} is not a rational number") from None
    if args.epsilon is None:
        raise SpecError(f"{args.command} needs --epsilon or --ratio")
    return DyadicRadius.of(args.epsilon).value


def cmd_folner(args) -> int:
    G = _load(args)
    eps = _ratio(args)
    n, ratio = growth.folner_index(G, eps, args.nmax)
    rows = [(k, max(growth.folner_ratios(G, k)), growth.boundary_ratio(G, k)) for k in range(args.nmax + 1)]
    table = io.csv_text(["n", "sup_KB_over_B", "rho"], rows)
    print(f"folner index for eps={eps}: n={n}, sup ratio={ratio}")
    _out(args, "folner.csv", table)
    _out(args, "folner.json", io.dumps({"epsilon": str(eps), "index": n, "sup_ratio": str(ratio)}))
    return 0


def cmd_density(args) -> int:
    G = _load(args)
    eps = _ratio(args)
    seq = [measure.fiber_normalized_ball(G, n) for n in range(args.nmax + 1)]
    rows = []
    for n in range(args.nmax + 1):
        rep = measure.verify_density_certificate(G, seq[: n + 1], G.generators, eps)
        rows.append((n, rep.deficit, rep.displacement))
    table = io.csv_text(["n", "deficit", "displacement"], rows)
    sys.stdout.write(table)
    print(f"# certificate at n={args.nmax}, eps={eps}: {'PASS' if rep.passed else 'FAIL'}")
    _out(args, "density.csv", table)
    return 0


def cmd_measure_check(args) -> int:
    G = _load(args)
    vertices = measure.invariant_measures(G)
    doc = {"invariant_measure_vertices": [io.measure_to_json(mu) for mu in vertices]}
    print(f"{len(vertices)} extreme invariant measure(s)")
    if args.measure:
        mu = io.measure_from_json(io._read_json(args.measure), G.space)
        d = measure.invariance_defect(G, mu)
        doc["defect"] = str(d)
        print(f"invariance defect of {args.measure}: {d}")
    if args.A:
        A = io.parse_clopen(args.A, G.space)
        lo, hi = measure.measure_range(vertices, A)
        rows = [(r.n, r.upper, r.lower, r.rho) for r in measure.density_profile(G, A, args.nmax)]
        table = io.csv_text(["n", "upper", "lower", "rho"], rows)
        sys.stdout.write(table)
        print(f"# invariant measures of A range over [{lo}, {hi}]")
        doc.update(A=A.words(), inf_mu_A=str(lo), sup_mu_A=str(hi))
        _out(args, "banach_density.csv", table)
    _out(args, "measures.json", io.dumps(doc))
    return 0


def cmd_compare(args) -> int:
    G = _load(args)
    A = io.parse_clopen(args.A, G.space)
    B = io.parse_clopen(args.B, G.space)
    if args.exhaustion:
        prof = growth.growth_function(G, args.nmax)
        m = args.m if args.m is not None else growth.m_parameter(G, prof, 1, args.ord)[1]
        W = comparison.run_exhaustion_comparison(G, A, B, m=m)
        print(f"exhaustion: single family with {len(W.families[0])} bisections")
    elif args.auto or args.m is None:
        res = comparison.auto_compare(G, A, B, args.nmax, args.ord)
        W = res.witness
        print(f"auto: N={res.N} M={res.M} m={res.m} M_D={W.M_D} steps={W.steps}")
    else:
        D = np.flatnonzero(growth.ball_mask(G, args.radius)) if args.radius is not None else range(G.n_arrows)
        W = comparison.run_m_comparison(G, A, B, D, args.m, _eps(args, G))
        print(f"m={args.m} M_D={W.M_D} steps={W.steps}")
    doc = io.witness_to_json(G, A, B, W)
    text = io.dumps(doc)
    # self-check through the serialized form
    A2, B2, W2 = io.witness_from_json(json.loads(text), G)
    report = comparison.verify_witness(G, A2, B2, W2)
    if not report:
        raise InvariantViolation("freshly written witness fails verification", {"problems": report.problems})
    target = Path(args.out) / "witness.json" if args.out else None
    _out(args, "witness.json", text)
    print(f"VERIFIED: A ≾_{W.m} B with {sum(len(f) for f in W.families)} bisections" + (f" -> {target}" if target else ""))
    return 0


def cmd_verify(args) -> int:
    G = _load(args)
    A, B, W = io.load_witness(args.witness, G)
    report = comparison.verify_witness(G, A, B, W)
    if report:
        print(f"VERIFIED: A ≾_{W.m} B")
        return 0
    for p in report.problems:
        print(f"REJECTED: {p}")
    return InvariantViolation.exit_code


def cmd_norms(args) -> int:
    G = _load(args)
    if args.function:
        fs = {"function": io.function_from_json(io._read_json(args.function), G)}
    else:
        fs = {
            "ones": convolution.GroupoidFunction.ones(G),
            "units": convolution.GroupoidFunction.units(G),
            "generators": convolution.GroupoidFunction.indicator(G, G.generators),
        }
    doc = {}
    for name, f in fs.items():
        i = convolution.i_norm(f)
        r = convolution.reduced_norm(f, args.tolerance)
        doc[name] = {"i_norm": str(i) if isinstance(i, (int, Fraction)) else repr(i), "reduced_norm": f"{r:.12g}"}
        print(f"{name}: I-norm {doc[name]['i_norm']}, reduced norm {doc[name]['reduced_norm']}")
    _out(args, "norms.json", io.dumps(doc))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", required=True, help="groupoid spec (JSON)")
    common.add_argument("--depth", type=int, help="override the truncation depth")
    common.add_argument("--nmax", type=int, default=8, help="largest ball radius examined")
    common.add_argument("--epsilon", type=int, default=None, help="dyadic exponent j for the radius 2^-j")
    common.add_argument("--m", type=int, default=None)
    common.add_argument("--out", help="directory for report files")
    common.add_argument("--threads", type=int, default=1)

    p = argparse.ArgumentParser(prog="etale", description="Finite models of ample groupoids.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("build", parents=[common], help="build a groupoid, write its arrow table")
    g = sub.add_parser("growth", parents=[common], help="growth table, ord estimate, doubling scale")
    g.add_argument("--N", type=int, default=1)
    g.add_argument("--ord", type=Fraction, default=None, help="override the estimated order")
    sub.add_parser("orbital", parents=[common], help="orbital graph and source-surjection check")
    for name in ("folner", "density"):
        q = sub.add_parser(name, parents=[common])
        q.add_argument("--ratio", help="rational epsilon overriding --epsilon")
    q = sub.add_parser("measure-check", parents=[common], help="invariant measures, defects, Banach densities")
    q.add_argument("--measure", help="measure JSON to test for invariance")
    q.add_argument("--A", help="clopen expression for Banach densities")
    c = sub.add_parser("compare", parents=[common], help="build and self-verify a subequivalence witness")
    c.add_argument("--A", required=True)
    c.add_argument("--B", required=True)
    c.add_argument("--auto", action="store_true", help="choose D and m from the growth table")
    c.add_argument("--radius", type=int, help="D = B(radius) when --m is given")
    c.add_argument("--exhaustion", action="store_true", help="single-family witness by exhaustion")
    c.add_argument("--ord", type=Fraction, default=None)
    v = sub.add_parser("verify", parents=[common], help="re-check a witness file")
    v.add_argument("--witness", required=True)
    n = sub.add_parser("norms", parents=[common], help="I-norm and reduced norm")
    n.add_argument("--function", help="function JSON (arrow id -> [re, im])")
    n.add_argument("--tolerance", type=float, default=1e-10)
    return p


COMMANDS = {
    "build": cmd_build,
    "growth": cmd_growth,
    "orbital": cmd_orbital,
    "folner": cmd_folner,
    "density": cmd_density,
    "measure-check": cmd_measure_check,
    "compare": cmd_compare,
    "verify": cmd_verify,
    "norms": cmd_norms,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return SpecError.exit_code if exc.code else 0
    try:
        return COMMANDS[args.command](args)
    except EtaleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
