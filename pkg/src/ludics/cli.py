"""Command-line entry points for the engine.

Exit codes: 0 on success and convergent verdicts, 1 on divergent or
out-of-fuel verdicts (and failed checks), 2 on errors.  ``--trace`` streams
the step format, ``--json`` switches reports to structured output.  The
default fuel honors the LUDIC_FUEL environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .loci import Fork, LudicsError, parse_locus
from .designs import enumerate_designs, validate_design
from .interaction import DEFAULT_FUEL, make_net, normalize, orthogonal
from .delocalize import FaxSpec, check_fax_theorem, expand, fax
from .behaviour import BehaviourHandle, builtin, in_behaviour, odot, orthogonal_set
from .formulas import detect_petitio, detect_presupposition_gap
from .lang import parse_file, serialize_design


def _default_fuel() -> int:
    try:
        return int(os.environ.get("LUDIC_FUEL", DEFAULT_FUEL))
    except ValueError:
        return DEFAULT_FUEL


def _load(path: str):
    return parse_file(Path(path).read_text(encoding="utf-8"))


def _design(defs, name: str):
    if name not in defs.designs:
        raise LudicsError(f"no design named {name!r}")
    return defs.designs[name]


def _emit(args, data: dict, text: str) -> None:
    if args.json:
        print(json.dumps(data, sort_keys=True))
    else:
        print(text)


def cmd_check(args) -> int:
    defs = _load(args.file)
    failures = 0
    for name in defs.order:
        report = validate_design(defs.designs[name])
        status = "ok" if report.ok else "FAIL: " + "; ".join(report.violations)
        _emit(args, {"design": name, "ok": report.ok,
                     "violations": report.violations}, f"{name}: {status}")
        failures += 0 if report.ok else 1
    return 1 if failures else 0


def _verdict_exit(verdict) -> int:
    return 0 if verdict.kind == "converged" else 1


def cmd_normalize(args) -> int:
    defs = _load(args.file)
    designs = [_design(defs, n.strip()) for n in args.net.split(",")]
    cuts = {parse_locus(c.strip(), defs.bindings) for c in args.cut.split(",") if c.strip()}
    net = make_net(designs, cuts)
    verdict, trace = normalize(net, args.fuel)
    if args.trace:
        print(trace.text())
    if args.json:
        data = trace.to_json()
        if verdict.residual is not None:
            data["residual"] = serialize_design(verdict.residual)
        print(json.dumps(data, sort_keys=True))
    elif not args.trace:
        print(f"VERDICT: {verdict}")
        if verdict.residual is not None:
            print(serialize_design(verdict.residual))
    return _verdict_exit(verdict)


def cmd_orth(args) -> int:
    defs = _load(args.file)
    left = _design(defs, args.left)
    right = _design(defs, args.right)
    answer = orthogonal(left, right, args.fuel)
    _emit(args, {"left": args.left, "right": args.right, "orthogonal": answer},
          f"{args.left} _|_ {args.right}: {answer}")
    return 0 if answer == "yes" else 1


def cmd_deloc(args) -> int:
    from .designs import substitute_prefix

    defs = _load(args.file)
    design = _design(defs, args.design)
    source = parse_locus(args.source, defs.bindings)
    target = parse_locus(args.to, defs.bindings)
    moved = substitute_prefix(design, source, target)
    print(serialize_design(moved))
    return 0


def cmd_fax_check(args) -> int:
    defs = _load(args.file)
    design = _design(defs, args.design)
    target = parse_locus(args.to, defs.bindings)
    ok, diagnostic = check_fax_theorem(design, target, args.fuel)
    _emit(args, {"design": args.design, "to": str(target), "ok": ok,
                 "diagnostic": diagnostic},
          f"fax-check {args.design} -> {target}: {'ok' if ok else diagnostic}")
    return 0 if ok else 1


def cmd_tensor(args) -> int:
    defs = _load(args.file)
    left = _design(defs, args.left)
    right = _design(defs, args.right)
    product = odot(left, right)
    print(serialize_design(product))
    return 0


def _pool(base: Fork, args):
    return tuple(enumerate_designs(base, args.pool_depth, args.pool_width,
                                   args.pool_width))


def cmd_behaviour(args) -> int:
    defs = _load(args.file)
    generators = tuple(_design(defs, n.strip()) for n in args.generators.split(","))
    base = generators[0].base
    if base.is_positive:
        tines = sorted(base.tines)
        dual_base = Fork(tines[0], frozenset())
    else:
        dual_base = Fork(None, frozenset({base.handle}))
    pool = _pool(dual_base, args)
    handle = BehaviourHandle(generators, pool, args.fuel)
    rows = []
    names = [n.strip() for n in (args.candidates.split(",") if args.candidates else [])]
    for name in names or [g.name for g in generators]:
        candidate = _design(defs, name)
        verdict = in_behaviour(candidate, handle)
        rows.append((name, args.generators, verdict, len(pool), args.fuel))
    print("design\tgenerator-set\tverdict\tpool-size\tfuel")
    for row in rows:
        print("\t".join(str(x) for x in row))
    return 0


def cmd_enum(args) -> int:
    defs = _load(args.file) if args.file else None
    bindings = defs.bindings if defs else {}
    from .lang import _parse_base_text

    base = _parse_base_text(args.base, bindings)
    count = 0
    for design in enumerate_designs(base, args.depth, args.bias, args.ram):
        count += 1
        if not args.count_only:
            print(serialize_design(design))
    print(f"; total {count}")
    return 0


def cmd_fallacy(args) -> int:
    defs = _load(args.file)
    design = _design(defs, args.design)
    if args.kind == "petitio":
        findings = detect_petitio(design, args.depth)
        if args.json:
            print(json.dumps([{"thesis": str(f.thesis), "echo": str(f.echo),
                               "evidence": f.evidence} for f in findings]))
        else:
            for f in findings:
                print(f"petitio: thesis {f.thesis} echoed at {f.echo} ({f.evidence})")
            if not findings:
                print("no circular justification found")
        return 0
    gaps = detect_presupposition_gap(design)
    if args.json:
        print(json.dumps([str(locus) for locus in gaps]))
    else:
        for locus in gaps:
            print(f"erased locus: {locus}")
        if not gaps:
            print("no erased presupposition found")
    return 0


def cmd_expand(args) -> int:
    defs = _load(args.file)
    design = _design(defs, args.design)
    biases = ({int(b) for b in args.biases.split(",")} if args.biases else None)
    print(serialize_design(expand(design, args.depth, biases)))
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    root = Path(args.scenarios) if args.scenarios else None
    log = Path(args.log) if args.log else None
    serve(args.host, args.port, root, log)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ludics",
        description="interaction engine for designs: check, normalize, "
                    "orthogonality, delocalization, behaviours, fallacies")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fuel=True):
        p.add_argument("--json", action="store_true", help="structured output")
        if fuel:
            p.add_argument("--fuel", type=int, default=_default_fuel())

    p = sub.add_parser("check", help="validate every design in a file")
    p.add_argument("file")
    common(p, fuel=False)

    p = sub.add_parser("normalize", help="normalize a net")
    p.add_argument("file")
    p.add_argument("--net", required=True, help="comma-separated member names")
    p.add_argument("--cut", required=True, help="comma-separated cut loci")
    p.add_argument("--trace", action="store_true")
    common(p)

    p = sub.add_parser("orth", help="orthogonality of a dual pair")
    p.add_argument("file")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    common(p)

    p = sub.add_parser("deloc", help="rewrite a design onto another address")
    p.add_argument("file")
    p.add_argument("--design", required=True)
    p.add_argument("--from", dest="source", required=True)
    p.add_argument("--to", required=True)
    common(p, fuel=False)

    p = sub.add_parser("fax-check",
                       help="compare copycat normalization with substitution")
    p.add_argument("file")
    p.add_argument("--design", required=True)
    p.add_argument("--to", required=True)
    common(p)

    p = sub.add_parser("tensor", help="product of two positive designs")
    p.add_argument("file")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    common(p, fuel=False)

    p = sub.add_parser("behaviour", help="pool-relative membership table")
    p.add_argument("file")
    p.add_argument("--generators", required=True)
    p.add_argument("--candidates", default="")
    p.add_argument("--pool-depth", type=int, default=2)
    p.add_argument("--pool-width", type=int, default=2)
    common(p)

    p = sub.add_parser("enum", help="enumerate designs on a base")
    p.add_argument("--file", default="")
    p.add_argument("--base", required=True, help='e.g. "|- 0" or "0 |-"')
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--bias", type=int, default=2)
    p.add_argument("--ram", type=int, default=2)
    p.add_argument("--count-only", action="store_true")
    common(p, fuel=False)

    p = sub.add_parser("fallacy", help="run a fallacy detector")
    p.add_argument("kind", choices=["petitio", "many-questions"])
    p.add_argument("file")
    p.add_argument("--design", required=True)
    p.add_argument("--depth", type=int, default=4)
    common(p, fuel=False)

    p = sub.add_parser("expand", help="materialize lazy structure to a depth")
    p.add_argument("file")
    p.add_argument("--design", required=True)
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--biases", default="")
    common(p, fuel=False)

    p = sub.add_parser("serve", help="run the session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--scenarios", default="")
    p.add_argument("--log", default="")
    common(p, fuel=False)

    return parser


_HANDLERS = {
    "check": cmd_check,
    "normalize": cmd_normalize,
    "orth": cmd_orth,
    "deloc": cmd_deloc,
    "fax-check": cmd_fax_check,
    "tensor": cmd_tensor,
    "behaviour": cmd_behaviour,
    "enum": cmd_enum,
    "fallacy": cmd_fallacy,
    "expand": cmd_expand,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except LudicsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
