"""Command line front end.

Exit codes: 0 on success, 1 for domain errors (the typed error name is
printed), 2 for usage, file and parse errors.  All output is deterministic
for fixed inputs and flags; ``--json`` emits the machine readable report.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import errors, ktheory, monoid, realize, rewrite
from .graph import (
    SandpileGraph,
    conical_violations,
    graph_to_dot,
    non_cycle_vertices,
    parse_graph,
    quotient_graph,
    reduce_graph,
    validate_sandpile,
)


def _default_budget() -> int:
    env = os.environ.get("SANDMON_BUDGET")
    if env:
        try:
            return int(env)
        except ValueError:
            pass
    return rewrite.DEFAULT_STEP_BUDGET


def _emit(args, payload: dict, text_lines) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _load_graph(path: str):
    text = Path(path).read_text(encoding="utf-8")
    return parse_graph(text)


def _load_sandpile(path: str) -> SandpileGraph:
    g, hint = _load_graph(path)
    return validate_sandpile(g, sink_hint=hint)


def _invariants_fields(inv) -> dict:
    return {"invariant_factors": list(inv.torsion), "free_rank": inv.free_rank}


# ------------------------------------------------------------------- commands


def cmd_check(args) -> int:
    g = _load_sandpile(args.graph)
    payload = {
        "report": "check",
        "valid": True,
        "sink": g.sink_name,
        "reduced": g.is_reduced(),
    }
    reduced = "yes" if g.is_reduced() else "no"
    _emit(args, payload, [
        f"valid sandpile graph; sink={g.sink_name}; reduced={reduced}",
    ])
    return 0


def cmd_stabilize(args) -> int:
    g, hint = _load_graph(args.graph)
    config_text = args.config or ""
    try:
        sandpile = validate_sandpile(g, sink_hint=hint)
    except errors.SandmonError:
        sandpile = None
    if sandpile is not None and args.mode != "free":
        c = rewrite.parse_config(sandpile, config_text)
        trace = rewrite.stabilize(sandpile, c, sink_absorbing=True)
        used = sandpile
        mode = "sink-absorbing"
    else:
        target = sandpile if sandpile is not None else g
        c = rewrite.parse_config(target, config_text)
        if sandpile is not None:
            trace = rewrite.stabilize(sandpile, c, sink_absorbing=False)
        else:
            trace = rewrite.stabilize_weighted(target, c, step_budget=args.budget)
        used = target
        mode = "free"
    payload = {"report": "stabilize", "mode": mode}
    payload.update(trace.to_json(used))
    _emit(args, payload, [
        f"result: {rewrite.config_to_str(used, trace.result) or '(empty)'}",
        f"steps: {trace.steps}",
        "odometer: " + (
            ",".join(f"{used.names[v]}={k}" for v, k in enumerate(trace.odometer) if k)
            or "(none)"
        ),
    ])
    return 0


def _monoid_payload(M) -> dict:
    unit_list = monoid.units(M)
    atom_list = monoid.atoms(M)
    refinement, witness = monoid.is_refinement(M)
    ideal = monoid.smallest_ideal(M)
    invariants = monoid.abelian_invariants(ideal.group)
    cyclic = monoid.classify_cyclic_sum(M)
    return {
        "size": len(M),
        "zero": M.labels[M.zero],
        "generators": dict(sorted((M.generators or {}).items())),
        "units": [M.labels[u] for u in unit_list],
        "atoms": [M.labels[a] for a in atom_list],
        "conical": unit_list == [M.zero],
        "refinement": refinement,
        "refinement_witness": (
            [M.labels[w] for w in witness] if witness else None
        ),
        "smallest_ideal_size": len(ideal.elements),
        "smallest_ideal_identity": M.labels[ideal.identity],
        **_invariants_fields(invariants),
        "cyclic_sum": cyclic,
    }


def _monoid_lines(payload: dict) -> list:
    lines = [
        f"size: {payload['size']}",
        f"units: {', '.join(payload['units'])}",
        f"atoms: {', '.join(payload['atoms']) or '(none)'}",
        f"conical: {payload['conical']}",
        f"refinement: {payload['refinement']}",
    ]
    if payload["refinement_witness"]:
        lines.append("refinement witness: " + " , ".join(payload["refinement_witness"]))
    lines.append(
        f"smallest ideal: {payload['smallest_ideal_size']} elements,"
        f" identity {payload['smallest_ideal_identity']}"
    )
    lines.append(
        "invariant factors: "
        + (" | ".join(str(d) for d in payload["invariant_factors"]) or "(trivial)")
        + (f" + Z^{payload['free_rank']}" if payload["free_rank"] else "")
    )
    if payload["cyclic_sum"] is not None:
        lines.append(
            "cyclic sum: " + (" + ".join(f"C{n}" for n in payload["cyclic_sum"]) or "trivial")
        )
    return lines


def cmd_monoid(args) -> int:
    g = _load_sandpile(args.graph)
    M = monoid.enumerate_sandpile_monoid(g, cap=args.cap or monoid.DEFAULT_SANDPILE_CAP)
    payload = {"report": "monoid", **_monoid_payload(M)}
    _emit(args, payload, _monoid_lines(payload))
    return 0


def cmd_wmonoid(args) -> int:
    g, _ = _load_graph(args.graph)
    sink_relations = args.variant == "with-sinks"
    cap = args.cap or monoid.DEFAULT_WEIGHTED_CAP
    try:
        M = monoid.enumerate_weighted_monoid(g, sink_relations=sink_relations, cap=cap)
    except errors.Inconclusive as exc:
        note = None
        try:
            inv = ktheory.k0_of_weighted_graph(g)
            if inv.free_rank > 0:
                note = (
                    "advisory: the cokernel invariants have free rank "
                    f"{inv.free_rank}, so the monoid is infinite"
                )
        except errors.SandmonError:
            pass
        payload = {
            "report": "wmonoid",
            "variant": args.variant,
            "inconclusive": True,
            "partial_count": len(exc.partial_labels or []),
            "note": note,
        }
        _emit(args, payload, [
            f"error[{exc.name}]: {exc}",
            f"partial elements discovered: {len(exc.partial_labels or [])}",
        ] + ([note] if note else []))
        return 1
    payload = {
        "report": "wmonoid",
        "variant": args.variant,
        "inconclusive": False,
        **_monoid_payload(M),
    }
    _emit(args, payload, _monoid_lines(payload))
    return 0


def cmd_group(args) -> int:
    g = _load_sandpile(args.graph)
    M = monoid.enumerate_sandpile_monoid(g, cap=args.cap or monoid.DEFAULT_SANDPILE_CAP)
    ideal = monoid.smallest_ideal(M)
    invariants = monoid.abelian_invariants(ideal.group)
    payload = {
        "report": "group",
        "monoid_size": len(M),
        "size": len(ideal.elements),
        "identity": M.labels[ideal.identity],
        **_invariants_fields(invariants),
    }
    _emit(args, payload, [
        f"sandpile group order: {len(ideal.elements)}",
        f"identity: {M.labels[ideal.identity]}",
        f"invariant factors: {list(invariants.torsion)}",
        f"group: {invariants.describe()}",
    ])
    return 0


def cmd_k0(args) -> int:
    if args.sandpile_group:
        g = _load_sandpile(args.graph)
        bad = [g.names[v] for v in conical_violations(g)]
        if bad:
            raise errors.NotConical(bad)
        q = quotient_graph(g, non_cycle_vertices(g))
        matrix = ktheory.k0_matrix(q)
        mode = "sandpile-group"
    else:
        g, _ = _load_graph(args.graph)
        matrix = ktheory.k0_matrix(g)
        mode = "graph"
    _, S, _ = ktheory.smith_normal_form(matrix)
    diag = ktheory.snf_diagonal(S)
    invariants = ktheory.cokernel(matrix)
    payload = {
        "report": "k0",
        "mode": mode,
        "matrix": matrix,
        "snf_diagonal": diag,
        **_invariants_fields(invariants),
    }
    _emit(args, payload, [
        "matrix:",
        *("  " + line for line in ktheory.matrix_to_lines(matrix)),
        f"snf diagonal: {diag}",
        f"invariant factors: {list(invariants.torsion)}",
        f"free rank: {invariants.free_rank}",
        f"group: {invariants.describe()}",
    ])
    return 0


def _realize_lines(payload: dict) -> list:
    lines = [
        f"no-cycle vertex set: {{{', '.join(payload['s_vertices'])}}}",
        f"conical: {payload['conical']}",
        f"sandpile monoid size: {payload['sp_size']}",
        f"presentation monoid size: {payload['v_monoid_size']}",
        f"compared: {payload['compared']}",
        f"sandpile group: {payload['sandpile_group']['group']}",
        f"k0: {payload['k0']['group']}",
    ]
    for key, value in sorted(payload["verdicts"].items()):
        lines.append(f"verdict {key}: {'OK' if value else 'FAILED'}")
    lines.append("overall: " + ("OK" if payload["ok"] else "FAILED"))
    return lines


def cmd_realize(args) -> int:
    if args.golden:
        return _run_golden(args)
    g = _load_sandpile(args.graph)
    report = realize.realization(g, name=Path(args.graph).stem)
    payload = {"report": "realize", **report.to_json()}
    _emit(args, payload, _realize_lines(payload))
    return 0 if report.ok else 1


def _run_golden(args) -> int:
    directory = Path(args.golden)
    directory.mkdir(parents=True, exist_ok=True)
    failures = 0
    for name, g in sorted(realize.named_examples().items()):
        report = realize.realization(g, name=name).to_json()
        path = directory / f"{name}.json"
        if not path.exists():
            path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                            encoding="utf-8")
            print(f"wrote {path}")
            continue
        stored = json.loads(path.read_text(encoding="utf-8"))
        if stored == report:
            print(f"ok {name}")
        else:
            print(f"mismatch {name}")
            failures += 1
    return 1 if failures else 0


def cmd_classify(args) -> int:
    g = _load_sandpile(args.graph)
    reduced = reduce_graph(g)
    structure, witness = realize.refinement_structure(reduced)
    sp = monoid.enumerate_sandpile_monoid(reduced)
    cyclic = monoid.classify_cyclic_sum(sp)
    payload = {
        "report": "classify",
        "refinement": structure is not None,
        "classes": structure.classes if structure else None,
        "class_orders": structure.orders if structure else None,
        "cyclic_sum": cyclic,
        "witness": list(witness) if witness else None,
    }
    lines = [f"refinement: {structure is not None}"]
    if structure:
        for members, order in zip(structure.classes, structure.orders):
            lines.append(f"class {{{', '.join(members)}}} -> C{order}")
    if witness:
        lines.append("witness equation: " + " , ".join(witness))
    if cyclic is not None:
        lines.append("cyclic sum: " + (" + ".join(f"C{n}" for n in cyclic) or "trivial"))
    _emit(args, payload, lines)
    return 0


def cmd_prime(args) -> int:
    g = _load_sandpile(args.graph)
    case = realize.prime_order_case(g)
    payload = {"report": "prime", **case.to_json()}
    _emit(args, payload, [
        f"case: {case.kind}",
        f"monoid size: {case.size}",
        f"loops: {case.loops}",
        f"sink edges: {case.sink_edges}",
    ])
    return 0


def cmd_cycle_suite(args) -> int:
    try:
        weights = [int(w) for w in args.weights.split(",") if w.strip()]
    except ValueError:
        raise errors.BadParameters(f"bad weights list {args.weights!r}") from None
    report = realize.cycle_suite(weights)
    payload = {"report": "cycle-suite", **report.to_json()}
    _emit(args, payload, [
        f"weights: {report.weights}",
        f"order: {report.order}",
        *(f"{key}: size {size}" for key, size in sorted(report.sizes.items())),
        "all isomorphic to C%d: %s" % (report.order, report.ok),
    ])
    return 0 if report.ok else 1


def cmd_export_dot(args) -> int:
    g, hint = _load_graph(args.graph)
    try:
        g = validate_sandpile(g, sink_hint=hint)
    except errors.SandmonError:
        pass
    sys.stdout.write(graph_to_dot(g))
    return 0


# --------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sandmon",
        description="Sandpile and weighted graph monoids, their groups and"
                    " integer matrix invariants.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, graph_arg=True):
        p = sub.add_parser(name, help=help_text)
        if graph_arg:
            p.add_argument("graph", help="graph file in the text format")
        p.add_argument("--json", action="store_true", help="emit a JSON report")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
        p.set_defaults(func=func)
        return p

    add("check", cmd_check, "validate a sandpile graph")

    p = add("stabilize", cmd_stabilize, "stabilize a configuration")
    p.add_argument("--config", required=True, help="configuration, e.g. x=5,s=1")
    p.add_argument("--mode", choices=["sp", "free"], default="sp",
                   help="sp absorbs sink grains, free retains them")
    p.add_argument("--budget", type=int, default=_default_budget())

    p = add("monoid", cmd_monoid, "sandpile monoid report")
    p.add_argument("--cap", type=int, default=None)

    p = add("wmonoid", cmd_wmonoid, "weighted graph monoid report")
    p.add_argument("--variant", choices=["with-sinks", "no-sinks"],
                   default="with-sinks",
                   help="whether sinks contribute the relation sink = 0")
    p.add_argument("--cap", type=int, default=None)

    p = add("group", cmd_group, "sandpile group via the smallest ideal")
    p.add_argument("--cap", type=int, default=None)

    p = add("k0", cmd_k0, "cokernel invariants of the weight matrix")
    p.add_argument("--sandpile-group", action="store_true",
                   help="use the quotient by the no-cycle vertex set")

    p = sub.add_parser("realize", help="certify the quotient realization")
    p.add_argument("graph", nargs="?", help="graph file in the text format")
    p.add_argument("--json", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--golden", metavar="DIR",
                   help="write or compare canonical reports for the named examples")
    p.set_defaults(func=cmd_realize)

    add("classify", cmd_classify, "refinement structure and cyclic sum")
    add("prime", cmd_prime, "prime order classification")

    p = sub.add_parser("cycle-suite", help="three-way cycle monoid comparison")
    p.add_argument("weights", help="comma separated weights, e.g. 2,2,1")
    p.add_argument("--json", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_cycle_suite)

    p = sub.add_parser("export-dot", help="emit DOT")
    p.add_argument("graph")
    p.set_defaults(func=cmd_export_dot, json=False)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "realize" and not args.golden and not args.graph:
        parser.error("realize needs a graph file or --golden DIR")
    try:
        return args.func(args)
    except errors.GraphFormatError as exc:
        print(f"error[{exc.name}]: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return 2
    except errors.SandmonError as exc:
        print(f"error[{exc.name}]: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
