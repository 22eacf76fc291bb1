"""Certify low-dimensional approximations of approximately collinear point sets.

Exit codes: 0 all flags pass, 1 I/O or validation error, 2 a hypothesis is
not met, 3 a certificate flag failed (including forced runs).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .designs import collect, design_parameters, sg_hypothesis_check
from .errors import HypothesisNotMet, SearchExhausted, StableSGError, TheoremViolation
from .generators import GeneratorSpec, generate
from .geometry import dim_eps_lower, dim_eps_upper
from .lcc import find_decoding_families, lcc_dimension_pipeline
from .reductions import PROJECTIVE_GATE, analyze_affine, analyze_projective, subset_variant

EXIT_OK, EXIT_IO, EXIT_HYPOTHESIS, EXIT_FLAG = 0, 1, 2, 3


def _emit(report: dict, args) -> None:
    text = io.dumps(report)
    if getattr(args, "output", None):
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    if getattr(args, "csv", None) and report.get("table") is not None:
        io.write_table_csv(args.csv, report["table"])


def _verdict(report: dict) -> int:
    return EXIT_OK if report["passed"] else EXIT_FLAG


def cmd_generate(args) -> int:
    spec_data = json.loads(Path(args.spec).read_text())
    spec = GeneratorSpec(spec_data["kind"], dict(spec_data.get("params", {})))
    g = generate(spec)
    meta = dict(g.metadata)
    meta["generator"] = {"kind": spec.kind, "params": spec.params}
    if g.truth is not None:
        key = "family" if spec.kind == "planted_lcc" else "truth_subspace"
        meta[key] = g.truth
    text = io.dumps(io.config_to_json(g.config, meta))
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _analysis_report(a, V, params: dict, seconds: float) -> dict:
    cert = a.certificate
    sub = subset_variant(a) if cert.g else None
    design = {"triples": len(a.design), "p": a.params.p, "g": a.params.g,
              "p_target": a.p_target, "collected": len(a.collection.family)}
    table = cert.table() + [
        {"name": "headline dim", "measured": float(cert.dim),
         "bound": float(a.headline["dim_bound"]), "holds": a.flags["dim(L') <= headline"]},
        {"name": "headline eps'", "measured": cert.eps_prime,
         "bound": float(a.headline["eps_prime_bound"]), "holds": a.flags["eps' <= headline"]},
    ]
    measured = {k: v for k, v in cert.measured.items() if k != "singular_values"}
    measured.update({"dim": cert.dim, "eps_prime": cert.eps_prime, "rho": cert.rho,
                     "far": list(cert.far), "singular_values": cert.measured["singular_values"]})
    extra = {"headline": a.headline, "forced": a.forced, "failing": a.failing(),
             "subspace_basis": [io.encode_vector(b) for b in cert.subspace.basis]}
    if sub is not None:
        extra["subset"] = {"size": len(sub.indices), "eps_doubleprime": sub.eps_doubleprime,
                           "rho": sub.rho, "size_floor": sub.size_floor}
    flags = {**a.flags, **cert.flags}
    return io.make_report(f"analyze-{a.kind}", V, parameters=params, hypotheses=a.hypotheses,
                          design=design, table=table, flags=flags, measured=measured,
                          timings={"total_s": seconds}, extra=extra)


def cmd_analyze(args) -> int:
    V, meta = io.read_config(args.config)
    t0 = time.perf_counter()
    if args.mode == "affine":
        a = analyze_affine(V, args.B, args.delta, args.eps, force=args.force)
        params = {"B": args.B, "delta": args.delta, "eps": args.eps}
    elif args.mode == "projective":
        a = analyze_projective(V, args.mu, args.delta, args.eps, force=args.force,
                               gate=args.gate)
        params = {"mu": args.mu, "delta": args.delta, "eps": args.eps, "gate": args.gate}
    else:
        return _analyze_lcc(args, V, meta, t0)
    report = _analysis_report(a, V, params, time.perf_counter() - t0)
    _emit(report, args)
    return _verdict(report)


def _analyze_lcc(args, V, meta, t0) -> int:
    if "family" in meta and args.k is None:
        fam = io.family_from_json(meta["family"])
    else:
        if args.k is None:
            raise HypothesisNotMet("decoding family available",
                                   "config has no family; pass --k and --seed to search")
        fam = find_decoding_families(V, args.q, args.B, args.eps, args.k, args.seed)
    cert = lcc_dimension_pipeline(V, fam, args.q, args.delta, args.B, args.eps,
                                  allow_unknown=args.allow_unknown)
    measured = {k: v for k, v in cert.measured.items()}
    measured.update({"dim": cert.dim, "eps_prime": cert.eps_prime, "k": cert.k,
                     "good": len(cert.good), "recovered": len(cert.recovered)})
    report = io.make_report(
        "analyze-lcc", V,
        parameters={"q": args.q, "delta": args.delta, "B": args.B, "eps": args.eps},
        hypotheses={"k > delta n": cert.verdict.certified},
        design={"k": cert.k, "verdict": cert.verdict.status, "margin": cert.verdict.margin},
        table=cert.table(), flags=cert.flags, measured=measured,
        timings={"total_s": time.perf_counter() - t0},
        extra={"failing": cert.failing(),
               "subspace_basis": [io.encode_vector(b) for b in cert.subspace.basis]})
    _emit(report, args)
    return _verdict(report)


def cmd_dim_eps(args) -> int:
    V, _ = io.read_config(args.config)
    lo = dim_eps_lower(V, args.eps)
    up, _ = dim_eps_upper(V, args.eps)
    out = {"format_version": io.FORMAT_VERSION, "report": "dim-eps",
           "input_digest": io.digest(V), "eps": args.eps, "lower": lo, "upper": up}
    _emit(out, args)
    return EXIT_OK


def cmd_verify_design(args) -> int:
    V, _ = io.read_config(args.config)
    coll = collect(V, args.eps, args.kind)
    params = design_parameters(coll.family)
    rep = sg_hypothesis_check(V, args.eps, args.delta, args.kind, coll)
    counts = np.array(rep.counts)
    out = {"format_version": io.FORMAT_VERSION, "report": "verify-design",
           "input_digest": io.digest(V), "eps": args.eps, "kind": coll.kind,
           "triples": len(coll.family), "p": params.p, "g": params.g,
           "delta_required": args.delta, "delta_measured": rep.measured_delta,
           "partner_counts_min": int(counts.min()), "partner_counts_max": int(counts.max()),
           "passed": rep.passed, "deficient": list(rep.deficient)}
    _emit(out, args)
    return EXIT_OK if rep.passed else EXIT_HYPOTHESIS


def cmd_selftest(args) -> int:
    from .selftest import run_all
    t0 = time.perf_counter()
    results = run_all()
    ok = all(r.passed for r in results)
    print(f"selftest {'passed' if ok else 'FAILED'}: "
          f"{sum(r.passed for r in results)}/{len(results)} checks in "
          f"{time.perf_counter() - t0:.1f}s")
    return EXIT_OK if ok else EXIT_FLAG


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stablesg", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a configuration from a generator spec")
    g.add_argument("spec", help='JSON file {"kind": ..., "params": {...}}')
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("analyze", help="certify a low-dimensional approximation")
    modes = a.add_subparsers(dest="mode", required=True)
    for name in ("affine", "projective", "lcc"):
        m = modes.add_parser(name)
        m.add_argument("config")
        m.add_argument("--delta", type=float, required=True)
        m.add_argument("--eps", type=float, required=True)
        m.add_argument("-o", "--output")
        m.add_argument("--csv", help="also write the bound table as CSV")
        if name == "affine":
            m.add_argument("--B", type=float, required=True)
        if name == "projective":
            m.add_argument("--mu", type=float, required=True)
            m.add_argument("--gate", type=float, default=PROJECTIVE_GATE,
                           help="admit eps < mu^2/GATE (default %(default)s)")
        if name in ("affine", "projective"):
            m.add_argument("--force", action="store_true",
                           help="run past failed hypotheses and report failing flags")
        if name == "lcc":
            m.add_argument("--q", type=int, required=True)
            m.add_argument("--B", type=float, required=True)
            m.add_argument("--k", type=int, help="search for k tuples instead of reading them")
            m.add_argument("--seed", type=int, default=0)
            m.add_argument("--allow-unknown", action="store_true")
        m.set_defaults(func=cmd_analyze)

    d = sub.add_parser("dim-eps", help="bracket dim_eps between two bounds")
    d.add_argument("config")
    d.add_argument("--eps", type=float, required=True)
    d.add_argument("-o", "--output")
    d.set_defaults(func=cmd_dim_eps)

    v = sub.add_parser("verify-design", help="collect triples and report (p, g)")
    v.add_argument("config")
    v.add_argument("--eps", type=float, required=True)
    v.add_argument("--kind", choices=["affine", "projective"], default="affine")
    v.add_argument("--delta", type=float, default=0.0)
    v.add_argument("-o", "--output")
    v.set_defaults(func=cmd_verify_design)

    s = sub.add_parser("selftest", help="run the seeded invariant suite")
    s.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except HypothesisNotMet as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except TheoremViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FLAG
    except (StableSGError, SearchExhausted, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
