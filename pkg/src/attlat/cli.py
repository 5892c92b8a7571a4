"""Batch command line: build approximations, compute lattices, run lifts.

Exit codes: 0 success, 2 configuration error, 3 oracle error, 4 size-cap
overflow, 5 certificate/verification failure.  All outputs are
byte-deterministic for a fixed configuration and seed.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from . import dynamics, lattice
from .approx import build_sequence, default_rho
from .dynamics import (
    CapExceeded,
    MultivaluedMap,
    brute_force_attractors,
    check_diagram_six,
    condensation_to_dot,
    digraph_to_dot,
    digraph_to_json,
    load_digraph,
    materialize_attractors,
)
from .grid import Box, to_frac
from .lift import (
    LiftError,
    TargetError,
    TargetLattice,
    build_lift_cofiltration,
    build_lift_general,
    lift_from_file,
    verify_lift,
)
from .systems import OracleError, make_system

EXIT_OK, EXIT_CONFIG, EXIT_ORACLE, EXIT_CAP, EXIT_CERT = 0, 2, 3, 4, 5


def _dump(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, sort_keys=True, separators=(",", ":")) + "\n")


def _parse_domain(text: str) -> Box:
    lo, hi = [], []
    for part in text.split(","):
        a, b = part.split(":")
        lo.append(to_frac(a))
        hi.append(to_frac(b))
    return Box(tuple(lo), tuple(hi))


def _parse_depths(text: str) -> list[int]:
    return [int(x) for x in text.split(",")]


def _parse_rhos(text: str, depths: list[int]):
    if text == "auto":
        return [default_rho(d) for d in depths]
    vals = [to_frac(x) for x in text.split(",")]
    if len(vals) == 1:
        return vals * len(depths)
    return vals


def _build_seq(args):
    domain = _parse_domain(args.domain) if args.domain else None
    oracle = make_system(args.system, domain)
    depths = _parse_depths(args.depths)
    rhos = _parse_rhos(args.rho, depths)
    return build_sequence(
        oracle,
        depths,
        rhos,
        cofiltered=args.cofiltered,
        check_squeeze=not getattr(args, "no_squeeze_check", False),
    )


def cmd_approx(args) -> int:
    seq = _build_seq(args)
    out = Path(args.out)
    for i, lv in enumerate(seq.levels):
        provenance = {
            "system": args.system,
            "grid": lv.grid.to_json(),
            "rho": str(lv.rho),
            "certified": seq.oracle.guaranteed,
            "squeeze_ok": lv.squeeze_ok,
        }
        if lv.cofilt_ok is not None:
            provenance["cofiltration_ok"] = lv.cofilt_ok
        data = digraph_to_json(lv.F, provenance)
        depth = max(lv.grid.depth)
        _dump(out / f"map_depth{depth}.json", data)
        if args.format == "dot":
            (out / f"map_depth{depth}.dot").write_text(digraph_to_dot(lv.F))
    total = sum(lv.F.totality()["left_total"] for lv in seq.levels)
    print(
        f"approx: {len(seq.levels)} level(s) of {args.system} -> {out}; "
        f"left_total {total}/{len(seq.levels)}; "
        f"squeeze {'ok' if all(lv.squeeze_ok for lv in seq.levels) else 'FAILED'}"
    )
    return EXIT_OK


def _attractor_report(F: MultivaluedMap, cap: int) -> dict:
    att_poset, att_map = dynamics.att_lattice(F)
    rep_poset, rep_map = dynamics.rep_lattice(F)
    attractors = materialize_attractors(F, cap=cap)
    pairing = []
    for a in attractors:
        pairing.append({"attractor": a.to_json(), "dual_repeller": dynamics.dual_repeller(F, a).to_json()})
    return {
        "attractor_poset": att_poset.to_json(),
        "attractor_irreducibles": {k: v.to_json() for k, v in sorted(att_map.items())},
        "repeller_poset": rep_poset.to_json(),
        "repeller_irreducibles": {k: v.to_json() for k, v in sorted(rep_map.items())},
        "dual_pairing": pairing,
        "attractor_count": len(attractors),
    }


def cmd_attractors(args) -> int:
    out = Path(args.out)
    if args.digraph:
        F = load_digraph(args.digraph)
        report = _attractor_report(F, args.cap)
        _dump(out / "attractors.json", report)
        if args.format == "dot":
            (out / "condensation.dot").write_text(condensation_to_dot(F))
            (out / "attractor_poset.dot").write_text(
                lattice.Poset.from_json(report["attractor_poset"]).to_dot()
            )
        print(
            f"attractors: {report['attractor_count']} attractor(s), "
            f"{len(report['attractor_poset']['elements'])} join-irreducible(s) -> {out}"
        )
        return EXIT_OK
    seq = _build_seq(args)
    lv = seq.levels[-1]
    report = _attractor_report(lv.F, args.cap)
    report["grid"] = lv.grid.to_json()
    _dump(out / "attractors.json", report)
    if args.format == "dot":
        (out / "condensation.dot").write_text(condensation_to_dot(lv.F))
    print(
        f"attractors: {report['attractor_count']} attractor(s) at depth "
        f"{max(lv.grid.depth)} -> {out}"
    )
    return EXIT_OK


def cmd_lift(args) -> int:
    with open(args.target) as fh:
        target = TargetLattice.from_json(json.load(fh))
    target.validate()
    seq = _build_seq(args)
    mode = args.lift_kind or ("cofiltration" if args.cofiltered else "general")
    if mode == "cofiltration":
        lift = build_lift_cofiltration(seq, target)
    else:
        lift = build_lift_general(seq, target)
    lift.provenance.update(
        {
            "system": args.system,
            "depths": _parse_depths(args.depths),
            "rho": args.rho,
            "cofiltered": args.cofiltered,
            "seed": args.seed,
        }
    )
    out = Path(args.out)
    grid = seq.level(lift.level).grid
    _dump(out / "lift.json", lift.to_json(grid))
    report = None
    if args.reference_depth is not None:
        depths = _parse_depths(args.depths)
        ref_level = depths.index(args.reference_depth)
        report = verify_lift(lift, seq, target, ref_level, tol=args.tol)
        _dump(out / "lift_report.json", report)
    if args.format == "dot":
        from .lift import lift_poset_dot

        (out / "target_poset.dot").write_text(target.poset.to_dot())
        (out / "lift_blocks.dot").write_text(lift_poset_dot(lift))
    ok = lift.certificates.get("ok", False) and (report is None or report["ok"])
    print(
        f"lift: kind {lift.kind} at level {lift.level} "
        f"({'certificates ok' if ok else 'CERTIFICATE FAILURE'}) -> {out}"
    )
    if not ok:
        failing = [
            k
            for k, v in (report or lift.certificates).items()
            if v is False
        ]
        print(f"lift: failed items: {failing}")
        return EXIT_CERT
    return EXIT_OK


def cmd_verify(args) -> int:
    out = Path(args.out)
    report: dict = {}
    ok = True
    if args.digraph:
        F = load_digraph(args.digraph)
        diagram = check_diagram_six(F, cap=1 << args.max_n if args.max_n else 1 << 14)
        oracle_equal = None
        if F.n <= 16:
            lattice_atts = {a.bits for a in materialize_attractors(F)}
            brute = {a.bits for a in brute_force_attractors(F)}
            oracle_equal = lattice_atts == brute
        report["digraph"] = {"diagram": diagram, "oracle_equivalence": oracle_equal}
        ok = ok and diagram["ok"] and (oracle_equal is not False)
    if args.random:
        rng = random.Random(args.seed)
        failures = []
        for trial in range(args.random):
            n = rng.randint(2, args.max_n or 8)
            forward = [
                sorted(rng.sample(range(n), rng.randint(1, n))) for _ in range(n)
            ]
            F = MultivaluedMap(n, forward)
            diagram = check_diagram_six(F)
            lattice_atts = {a.bits for a in materialize_attractors(F)}
            brute = {a.bits for a in brute_force_attractors(F)}
            if not diagram["ok"] or lattice_atts != brute:
                failures.append({"trial": trial, "n": n, "edges": digraph_to_json(F)["edges"]})
        report["random_sweep"] = {
            "trials": args.random,
            "seed": args.seed,
            "failures": failures,
        }
        ok = ok and not failures
    if args.lift:
        lift = lift_from_file(args.lift)
        with open(args.target) as fh:
            target = TargetLattice.from_json(json.load(fh))
        prov = lift.provenance
        oracle = make_system(prov["system"], _parse_domain(args.domain) if args.domain else None)
        seq = build_sequence(
            oracle,
            prov["depths"],
            _parse_rhos(prov.get("rho", "auto"), prov["depths"]),
            cofiltered=prov.get("cofiltered", False),
            check_squeeze=False,
        )
        ref_level = (
            prov["depths"].index(args.reference_depth)
            if args.reference_depth is not None
            else len(seq) - 1
        )
        lift_report = verify_lift(lift, seq, target, ref_level, tol=args.tol)
        report["lift"] = lift_report
        ok = ok and lift_report["ok"]
    report["ok"] = ok
    _dump(out / "verify_report.json", report)
    print(f"verify: {'pass' if ok else 'FAIL'} -> {out}")
    return EXIT_OK if ok else EXIT_CERT


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="attlat",
        description="attractor/repeller lattices of discretized dynamical systems",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, need_system=True):
        if need_system:
            p.add_argument("--system", help="system id, e.g. quadratic, logistic:3.2")
            p.add_argument("--domain", help="per-axis lo:hi, comma separated")
            p.add_argument("--depths", help="comma separated dyadic depths, ascending")
            p.add_argument("--rho", default="auto", help="inflation schedule or 'auto'")
            p.add_argument("--cofiltered", action="store_true")
            p.add_argument("--no-squeeze-check", action="store_true")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=["json", "dot"], default="json")

    p = sub.add_parser("approx", help="emit combinatorial maps per level")
    common(p)
    p.set_defaults(fn=cmd_approx, need_system=True)

    p = sub.add_parser("attractors", help="attractor/repeller lattices of a map")
    common(p)
    p.add_argument("--digraph", help="digraph JSON file instead of a system")
    p.add_argument("--cap", type=int, default=1 << 20)
    p.set_defaults(fn=cmd_attractors)

    p = sub.add_parser("lift", help="realize a target lattice")
    common(p)
    p.add_argument("--target", required=True)
    p.add_argument("--lift-kind", choices=["general", "cofiltration"])
    p.add_argument("--reference-depth", type=int)
    p.add_argument("--tol")
    p.set_defaults(fn=cmd_lift)

    p = sub.add_parser("verify", help="verify digraph laws or a lift file")
    common(p, need_system=False)
    p.add_argument("--digraph")
    p.add_argument("--lift")
    p.add_argument("--target")
    p.add_argument("--domain")
    p.add_argument("--reference-depth", type=int)
    p.add_argument("--tol")
    p.add_argument("--random", type=int, default=0, help="random digraph sweep count")
    p.add_argument("--max-n", type=int, default=8)
    p.set_defaults(fn=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        missing = []
        if getattr(args, "fn", None) in (cmd_approx, cmd_lift):
            for name in ("system", "depths"):
                if getattr(args, name, None) is None:
                    missing.append(name)
        if args.fn is cmd_attractors and not args.digraph:
            for name in ("system", "depths"):
                if getattr(args, name, None) is None:
                    missing.append(name)
        if missing:
            print(f"error: missing required option(s): {', '.join(missing)}", file=sys.stderr)
            return EXIT_CONFIG
        return args.fn(args)
    except (ValueError, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OracleError as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except (CapExceeded, lattice.CapExceeded) as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (LiftError, TargetError) as exc:
        print(f"certificate failure: {exc}", file=sys.stderr)
        return EXIT_CERT


if __name__ == "__main__":
    sys.exit(main())
