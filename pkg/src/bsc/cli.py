"""Command-line driver: verify, check-bounded, abstract, bisim, transform,
verify-incomplete, atm.

Exit codes: 0 property holds (or command succeeded), 1 property fails,
2 usage/parse/runtime error, 3 bound violation during abstraction.
Runs are deterministic; BSC_SEED is accepted in the environment but ignored.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

from .model import (
    BoundViolation, BscError, FiniteTS, Interpretation, Theory,
    mu_to_text, object_from_text, reset_fresh_counter,
)
from .parser import parse_mu_formula, parse_theory_file, theory_to_text
from .abstraction import AbstractionResult, build_abstract_ts
from .bisim import bisimilar
from .mucheck import check
from .transforms import (
    atm_theory, blocking_transform, boundedness_check_theory, check_bounded,
    fading_transform, parse_atm, verify_incomplete,
)

EXIT_HOLDS = 0
EXIT_FAILS = 1
EXIT_ERROR = 2
EXIT_BOUND = 3


# ---------------------------------------------------------------------------
# Transition-system JSON


def ts_to_json(ts: FiniteTS) -> str:
    const_map = ts.labels[ts.initial].const_map
    states = []
    for q in ts.states:
        rels = ts.labels[q].relations
        states.append(
            {
                "id": q,
                "fluents": {
                    f: sorted([o.name for o in tup] for tup in tups)
                    for f, tups in sorted(rels.items())
                },
            }
        )
    data = {
        "constants": {c: o.name for c, o in sorted(const_map.items())},
        "states": states,
        "initial": ts.initial,
        "transitions": sorted([a, b] for a, b in ts.transitions),
    }
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def ts_from_json(text: str) -> FiniteTS:
    data = json.loads(text)
    const_map = {c: object_from_text(n) for c, n in data["constants"].items()}
    labels = {}
    for st in data["states"]:
        rels = {
            f: frozenset(tuple(object_from_text(n) for n in tup) for tup in tups)
            for f, tups in st["fluents"].items()
        }
        labels[st["id"]] = Interpretation(rels, dict(const_map))
    transitions = {(a, b) for a, b in data["transitions"]}
    return FiniteTS(labels, transitions, data["initial"])


def load_ts(path: str) -> FiniteTS:
    with open(path, "r", encoding="utf-8") as fh:
        return ts_from_json(fh.read())


# ---------------------------------------------------------------------------
# Reporting


@dataclass
class RunReport:
    command: str
    inputs: dict
    verdict: str
    stats: Optional[dict] = None
    wall_time_s: float = 0.0
    path: Optional[dict] = None  # {"kind", "states", "actions"}
    detail: list = field(default_factory=list)

    def as_json(self) -> str:
        data = {
            "command": self.command,
            "inputs": self.inputs,
            "verdict": self.verdict,
            "stats": self.stats,
            "wall_time_s": round(self.wall_time_s, 6),
        }
        if self.path is not None:
            data["path"] = self.path
        if self.detail:
            data["detail"] = self.detail
        return json.dumps(data, indent=2, sort_keys=True)

    def as_text(self) -> str:
        lines = [f"{self.command}: {self.verdict}"]
        for k, v in self.inputs.items():
            lines.append(f"  {k}: {v}")
        if self.stats:
            parts = ", ".join(f"{k}={v}" for k, v in self.stats.items())
            lines.append(f"  abstraction: {parts}")
        if self.path is not None:
            lines.append(f"  {self.path['kind']}: states {self.path['states']}")
            if self.path.get("actions"):
                lines.append("    actions: " + "; ".join(self.path["actions"]))
        for d in self.detail:
            lines.append(f"  {d}")
        lines.append(f"  wall time: {self.wall_time_s:.3f}s")
        return "\n".join(lines)


def emit(report: RunReport, as_json: bool) -> None:
    print(report.as_json() if as_json else report.as_text())


def ts_stats(result: AbstractionResult) -> dict:
    ts = result.ts
    return {
        "states": len(ts.labels),
        "transitions": len(ts.transitions),
        "adom": len(ts.adom_union()),
        "b_prime": result.b_prime,
        "cap": result.cap,
    }


def path_payload(
    result: AbstractionResult, kind: str, states: list[int]
) -> dict:
    actions = []
    for a, b in zip(states, states[1:]):
        act = result.edge_actions.get((a, b))
        actions.append(repr(act) if act is not None else f"{a}->{b}")
    return {"kind": kind, "states": states, "actions": actions}


def dump_trace(result: AbstractionResult) -> None:
    for q in sorted(result.parents):
        parent = result.parents[q]
        if parent is None:
            print(f"trace: state {q} initial", file=sys.stderr)
        else:
            src, a = parent
            print(f"trace: state {q} expanded from {src} via {a!r}", file=sys.stderr)
    for (a, b), act in sorted(result.edge_actions.items()):
        if result.parents.get(b) != (a, act):
            print(f"trace: fold edge {a} -> {b} via {act!r}", file=sys.stderr)


# ---------------------------------------------------------------------------
# Commands


def _resolve_bound(t: Theory, bound: Optional[int]) -> int:
    if bound is not None:
        return bound
    if t.bound is not None:
        return t.bound
    raise BscError("no bound declared in the theory or supplied with --bound")


def cmd_verify(args: argparse.Namespace) -> int:
    start = time.perf_counter()
    t = parse_theory_file(args.theory)
    phi = parse_mu_formula(args.formula, t)
    bound = _resolve_bound(t, args.bound)
    result = build_abstract_ts(t, bound)
    if args.trace:
        dump_trace(result)
    rep = check(result.ts, phi, t)
    report = RunReport(
        command="verify",
        inputs={"theory": args.theory, "formula": args.formula, "bound": bound},
        verdict="holds" if rep.holds else "does not hold",
        stats=ts_stats(result),
        wall_time_s=time.perf_counter() - start,
    )
    if rep.path is not None:
        report.path = path_payload(result, rep.kind or "path", rep.path)
    emit(report, args.json)
    return EXIT_HOLDS if rep.holds else EXIT_FAILS


def cmd_check_bounded(args: argparse.Namespace) -> int:
    start = time.perf_counter()
    t = parse_theory_file(args.theory)
    bound = _resolve_bound(t, args.bound)
    rep = check_bounded(t, bound)
    report = RunReport(
        command="check-bounded",
        inputs={"theory": args.theory, "bound": bound},
        verdict="bounded" if rep.bounded else "not bounded",
        stats=ts_stats(rep.abstraction) if rep.abstraction else None,
        wall_time_s=time.perf_counter() - start,
    )
    if rep.prefix is not None:
        report.detail.append(
            "violating prefix: " + ("; ".join(repr(a) for a in rep.prefix) or "(initial state)")
        )
    emit(report, args.json)
    return EXIT_HOLDS if rep.bounded else EXIT_FAILS


def cmd_abstract(args: argparse.Namespace) -> int:
    start = time.perf_counter()
    t = parse_theory_file(args.theory)
    bound = _resolve_bound(t, args.bound)
    result = build_abstract_ts(t, bound)
    if args.trace:
        dump_trace(result)
    payload = ts_to_json(result.ts)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    report = RunReport(
        command="abstract",
        inputs={"theory": args.theory, "bound": bound, "out": args.out or "-"},
        verdict="ok",
        stats=ts_stats(result),
        wall_time_s=time.perf_counter() - start,
    )
    if args.out:
        emit(report, args.json)
    return EXIT_HOLDS


def cmd_bisim(args: argparse.Namespace) -> int:
    start = time.perf_counter()
    ts1 = load_ts(args.ts1)
    ts2 = load_ts(args.ts2)
    same = bisimilar(ts1, ts2)
    report = RunReport(
        command="bisim",
        inputs={"ts1": args.ts1, "ts2": args.ts2},
        verdict="bisimilar" if same else "not bisimilar",
        wall_time_s=time.perf_counter() - start,
    )
    emit(report, args.json)
    return EXIT_HOLDS if same else EXIT_FAILS


def cmd_transform(args: argparse.Namespace) -> int:
    start = time.perf_counter()
    t = parse_theory_file(args.theory)
    if args.blocking is not None:
        out_t = blocking_transform(t, args.blocking)
        what = f"blocking at {args.blocking}"
    elif args.fading is not None:
        fluent, levels, bound = args.fading
        out_t = fading_transform(t, fluent, int(levels), int(bound))
        what = f"fading {fluent} with {levels} levels at {bound}"
    else:
        out_t, _ = boundedness_check_theory(t, args.primed)
        what = f"primed stop-on-violation copy at {args.primed}"
    payload = theory_to_text(out_t)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    if args.out:
        report = RunReport(
            command="transform",
            inputs={"theory": args.theory, "out": args.out},
            verdict=what,
            wall_time_s=time.perf_counter() - start,
        )
        emit(report, args.json)
    return EXIT_HOLDS


def cmd_verify_incomplete(args: argparse.Namespace) -> int:
    start = time.perf_counter()
    t = parse_theory_file(args.theory)
    phi = parse_mu_formula(args.formula, t)
    bound = _resolve_bound(t, args.bound)
    rep = verify_incomplete(t, phi, bound, args.max_candidates)
    report = RunReport(
        command="verify-incomplete",
        inputs={"theory": args.theory, "formula": args.formula, "bound": bound},
        verdict="holds in every initial model" if rep.holds else "fails in some initial model",
        wall_time_s=time.perf_counter() - start,
    )
    for idx, (cell, verdict) in enumerate(rep.cells):
        facts = {
            f: sorted(tuple(o.name for o in tup) for tup in tups)
            for f, tups in sorted(cell.relations.items())
            if tups
        }
        report.detail.append(
            f"model {idx}: {'holds' if verdict else 'fails'} on {facts}"
        )
    emit(report, args.json)
    return EXIT_HOLDS if rep.holds else EXIT_FAILS


def cmd_atm(args: argparse.Namespace) -> int:
    start = time.perf_counter()
    with open(args.machine, "r", encoding="utf-8") as fh:
        machine = parse_atm(fh.read())
    if args.input is not None:
        machine.input = list(args.input)
    if args.tape is not None:
        machine.cells = args.tape
    if machine.cells < max(len(machine.input), 1):
        raise BscError("tape must be at least as long as the input")
    t, phi = atm_theory(machine)
    if not args.verify:
        sys.stdout.write(theory_to_text(t))
        print(f"# acceptance: {mu_to_text(phi)}")
        return EXIT_HOLDS
    result = build_abstract_ts(t, t.bound)
    if args.trace:
        dump_trace(result)
    rep = check(result.ts, phi, t)
    report = RunReport(
        command="atm",
        inputs={
            "machine": args.machine,
            "input": "".join(machine.input),
            "cells": machine.cells,
        },
        verdict="accepts" if rep.holds else "rejects",
        stats=ts_stats(result),
        wall_time_s=time.perf_counter() - start,
    )
    emit(report, args.json)
    return EXIT_HOLDS if rep.holds else EXIT_FAILS


# ---------------------------------------------------------------------------
# Argument wiring


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bsc",
        description="verification of bounded situation-calculus action theories",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, bound: bool = True) -> None:
        if bound:
            p.add_argument("--bound", type=int, default=None)
        p.add_argument("--json", action="store_true", help="report as JSON")
        p.add_argument("--trace", action="store_true", help="dump expansion events")

    p = sub.add_parser("verify", help="model-check a formula over a theory")
    p.add_argument("theory")
    p.add_argument("--formula", required=True)
    common(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("check-bounded", help="decide whether a theory stays within a bound")
    p.add_argument("theory")
    common(p)
    p.set_defaults(fn=cmd_check_bounded)

    p = sub.add_parser("abstract", help="build and serialize the abstract transition system")
    p.add_argument("theory")
    p.add_argument("--out", default=None)
    common(p)
    p.set_defaults(fn=cmd_abstract)

    p = sub.add_parser("bisim", help="compare two serialized transition systems")
    p.add_argument("ts1")
    p.add_argument("ts2")
    common(p, bound=False)
    p.set_defaults(fn=cmd_bisim)

    p = sub.add_parser("transform", help="emit a transformed theory")
    p.add_argument("theory")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--blocking", type=int, metavar="B")
    g.add_argument("--fading", nargs=3, metavar=("FLUENT", "LEVELS", "B"))
    g.add_argument("--primed", type=int, metavar="B")
    p.add_argument("--out", default=None)
    common(p, bound=False)
    p.set_defaults(fn=cmd_transform)

    p = sub.add_parser(
        "verify-incomplete",
        help="certain verdict over all initial models of a constraint theory",
    )
    p.add_argument("theory")
    p.add_argument("--formula", required=True)
    p.add_argument("--max-candidates", type=int, default=10**6)
    common(p)
    p.set_defaults(fn=cmd_verify_incomplete)

    p = sub.add_parser("atm", help="encode (and optionally run) an alternating machine")
    p.add_argument("machine")
    p.add_argument("--input", default=None)
    p.add_argument("--tape", type=int, default=None)
    p.add_argument("--verify", action="store_true")
    common(p, bound=False)
    p.set_defaults(fn=cmd_atm)

    return ap


def main(argv: Optional[list[str]] = None) -> int:
    os.environ.get("BSC_SEED")  # accepted, deliberately ignored: runs are deterministic
    reset_fresh_counter()
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except BoundViolation as exc:
        print(f"bound violation: {exc}", file=sys.stderr)
        if exc.trace:
            print(
                "  prefix: " + "; ".join(repr(a) for a in exc.trace),
                file=sys.stderr,
            )
        return EXIT_BOUND
    except (BscError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
