"""Command-line front end.

Exit codes: 0 on success, 1 when the reasoning outcome is a failure
(a failing chase), 2 on usage or parse errors.  All output is
deterministic for fixed inputs and flags.
"""

from __future__ import annotations

import argparse
import json
import os
import resource
import sys
from typing import List, Optional, Sequence

from . import clouds, egdsep, rulesets
from .analysis import classify
from .chase import ChaseOptions, Mode, Status, restricted_gcf, run_chase
from .model import Program, UsageError
from .parser import ParseError, parse_program, render_atom, render_term
from .query import (
    AnswerStatus,
    Bounded,
    BlockedAtomic,
    Terminate,
    certain_answers,
    check_containment,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


class MemoryBudgetExceeded(Exception):
    pass


def _memory_guard():
    cap_mb = os.environ.get("CHASEKIT_MAX_MEMORY_MB")
    if not cap_mb:
        return None
    cap_kb = int(cap_mb) * 1024

    def check():
        usage = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        if usage > cap_kb:
            raise MemoryBudgetExceeded(
                "memory budget of %s MB exceeded" % cap_mb
            )

    return check


def _load_program(args) -> Program:
    if args.builtin and args.file:
        raise UsageError("give either a file or --builtin, not both")
    if args.builtin:
        return rulesets.builtin_program(args.builtin)
    if not args.file:
        raise UsageError("no input: give a file or --builtin")
    try:
        with open(args.file, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise UsageError(str(e))
    return parse_program(text)


def _emit(args, payload: dict, text_lines: List[str]) -> None:
    if args.format == "json":
        print(json.dumps(payload))
    else:
        for line in text_lines:
            print(line)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_classify(args) -> int:
    program = _load_program(args)
    cls = classify(program.tgds)
    affected = sorted(repr(p) for p in cls.affected)
    rules = []
    for rule in program.tgds:
        rc = cls.per_rule[rule]
        guard = cls.forest_guard_index(rule)
        rules.append(
            {
                "label": rule.label,
                "rule": repr(rule),
                "class": rc.value,
                "guard": None if guard is None else render_atom(rule.body[guard]),
            }
        )
    payload = {
        "overall": cls.overall.value,
        "rules": rules,
        "affected": affected,
        "egds": len(program.egds),
    }
    lines = ["overall: %s" % cls.overall.value]
    for r in rules:
        guard = (" (guard %s)" % r["guard"]) if r["guard"] else ""
        lines.append("%s: %s%s  %s" % (r["label"], r["class"], guard, r["rule"]))
    lines.append("affected positions: %s" % (", ".join(affected) or "none"))
    _emit(args, payload, lines)
    return EXIT_OK


def _chase_opts(args) -> ChaseOptions:
    return ChaseOptions(
        mode=Mode(args.mode),
        max_steps=args.max_steps,
        max_depth=args.max_depth,
        egd_interleave=(args.egd == "interleave"),
        memory_check=_memory_guard(),
    )


def cmd_chase(args) -> int:
    program = _load_program(args)
    opts = _chase_opts(args)
    egds = program.egds if args.egd == "interleave" else []
    result = run_chase(program.facts, program.tgds, egds, opts)
    payload = {
        "status": result.status.value,
        "steps": [s.render() for s in result.steps],
        "atom_count": len(result.instance),
        "atoms": sorted(render_atom(a) for a in result.instance),
        "forest_complete": result.forest_complete,
    }
    lines = [s.render() for s in result.steps]
    lines.append("status: %s" % result.status.value)
    lines.append("atoms: %d" % len(result.instance))
    _emit(args, payload, lines)
    return EXIT_FAILED if result.status is Status.FAILED else EXIT_OK


def _parse_strategy(text: str):
    if text == "terminate":
        return Terminate()
    if text == "blocked-atomic":
        return BlockedAtomic()
    if text.startswith("bounded"):
        depth = 16
        if ":" in text:
            try:
                depth = int(text.split(":", 1)[1])
            except ValueError:
                raise UsageError("bad bounded depth in %r" % text)
        return Bounded(depth=depth)
    raise UsageError("unknown strategy %r" % text)


def cmd_answer(args) -> int:
    program = _load_program(args)
    query = program.query(args.query)
    strategy = _parse_strategy(args.strategy)
    if args.egd == "separate" and program.egds:
        report = egdsep.separated_answer(
            program.facts, program.tgds, program.egds, query,
            max_steps=args.max_steps, max_depth=args.max_depth,
        )
    else:
        report = certain_answers(
            program.facts, program.tgds, query, strategy, egds=program.egds,
            memory_check=_memory_guard(),
        )
    if report.status is AnswerStatus.FAILED:
        status = "failed"
    elif report.answers:
        status = "sat"
    elif report.status is AnswerStatus.EXACT:
        status = "unsat"
    else:
        status = "unknown"
    budget_exhausted = report.budget_exhausted
    payload = {
        "query": query.name,
        "status": status,
        "answers": [[render_term(t) for t in row] for row in report.answers],
        "budget_exhausted": budget_exhausted,
    }
    lines = ["query %s: %s" % (query.name, status)]
    for row in report.answers:
        lines.append("  (%s)" % ", ".join(render_term(t) for t in row))
    if report.note:
        lines.append("note: %s" % report.note)
    _emit(args, payload, lines)
    return EXIT_FAILED if status == "failed" else EXIT_OK


def cmd_contain(args) -> int:
    program = _load_program(args)
    q1, q2 = program.query(args.q1), program.query(args.q2)
    verdict = check_containment(q1, q2, program.tgds, max_steps=args.budget)
    payload = {"q1": q1.name, "q2": q2.name, "verdict": verdict.verdict}
    _emit(args, payload, ["%s in %s: %s" % (q1.name, q2.name, verdict.verdict)])
    return EXIT_OK


def cmd_egd_check(args) -> int:
    program = _load_program(args)
    outcome = egdsep.egd_failure_check(
        program.facts, program.tgds, program.egds,
        max_steps=args.max_steps, max_depth=args.max_depth,
    )
    payload = {"result": outcome.value}
    _emit(args, payload, ["egd failure check: %s" % outcome.value])
    return EXIT_FAILED if outcome is egdsep.FailureCheck.FAILED else EXIT_OK


def cmd_forest(args) -> int:
    program = _load_program(args)
    opts = _chase_opts(args)
    egds = program.egds if args.egd == "interleave" else []
    result = run_chase(program.facts, program.tgds, egds, opts)
    nodes = restricted_gcf(result.forest) if args.restricted else result.forest
    if args.dot:
        lines = ["digraph gcf {"]
        for n in nodes:
            label = render_atom(n.atom)
            if n.rule is not None:
                label += "\\n" + n.rule.label
            lines.append('  n%d [label="%s"];' % (n.id, label))
        ids = {n.id for n in nodes}
        for n in nodes:
            if n.parent is not None and n.parent in ids:
                lines.append("  n%d -> n%d;" % (n.parent, n.id))
        lines.append("}")
        print("\n".join(lines))
        return EXIT_OK
    payload = {
        "status": result.status.value,
        "nodes": [
            {
                "id": n.id,
                "atom": render_atom(n.atom),
                "parent": n.parent,
                "rule": n.rule.label if n.rule else None,
                "depth": n.depth,
            }
            for n in nodes
        ],
        "forest_complete": result.forest_complete,
    }
    lines = []
    for n in nodes:
        rule = n.rule.label if n.rule else "db"
        lines.append(
            "#%d depth=%d parent=%s %s [%s]"
            % (n.id, n.depth, n.parent if n.parent is not None else "-",
               render_atom(n.atom), rule)
        )
    lines.append("status: %s" % result.status.value)
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_store_stats(args) -> int:
    program = _load_program(args)
    sat = clouds.blocked_saturate(
        program.facts,
        program.tgds,
        clouds.SaturateOptions(
            max_rounds=args.max_rounds, force=args.force
        ),
    )
    payload = {
        "entries": len(sat.store),
        "max_cloud_size": sat.store.max_cloud_size(),
        "rounds": sat.rounds,
        "status": sat.status.value,
        "ground_atoms": len(sat.ground_atoms),
    }
    lines = [
        "entries: %d" % payload["entries"],
        "max cloud size: %d" % payload["max_cloud_size"],
        "rounds: %d" % payload["rounds"],
        "status: %s" % payload["status"],
        "ground atoms: %d" % payload["ground_atoms"],
    ]
    _emit(args, payload, lines)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument wiring
# ---------------------------------------------------------------------------

def _add_common(sub, chase_flags=False):
    sub.add_argument("file", nargs="?", help="program file")
    sub.add_argument("--builtin", help="built-in program: fll, grid, 3col[-k3|-k4|-c5]")
    sub.add_argument("--format", choices=("text", "json"), default="text")
    sub.add_argument("--max-steps", type=int, default=10_000)
    sub.add_argument("--max-depth", type=int, default=64)
    if chase_flags:
        sub.add_argument(
            "--mode", choices=("oblivious", "restricted"), default="restricted"
        )
        sub.add_argument(
            "--egd", choices=("interleave", "separate"), default="interleave"
        )


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chasekit",
        description="Chase-based reasoning over TGDs and EGDs",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("classify", help="guardedness report")
    _add_common(sub)
    sub.set_defaults(func=cmd_classify)

    sub = subs.add_parser("chase", help="run the chase, print the step log")
    _add_common(sub, chase_flags=True)
    sub.set_defaults(func=cmd_chase)

    sub = subs.add_parser("answer", help="certain answers of a named query")
    _add_common(sub, chase_flags=True)
    sub.add_argument("--query", required=True)
    sub.add_argument(
        "--strategy", default="bounded:16",
        help="terminate | blocked-atomic | bounded:N (default bounded:16)",
    )
    sub.set_defaults(func=cmd_answer)

    sub = subs.add_parser("contain", help="query containment under the TGDs")
    _add_common(sub)
    sub.add_argument("--q1", required=True)
    sub.add_argument("--q2", required=True)
    sub.add_argument("--budget", type=int, default=10_000)
    sub.set_defaults(func=cmd_contain)

    sub = subs.add_parser("egd-check", help="would the chase fail?")
    _add_common(sub)
    sub.set_defaults(func=cmd_egd_check)

    sub = subs.add_parser("forest", help="guarded chase forest")
    _add_common(sub, chase_flags=True)
    sub.add_argument("--restricted", action="store_true")
    sub.add_argument("--dot", action="store_true")
    sub.set_defaults(func=cmd_forest)

    sub = subs.add_parser("store-stats", help="cloud-store saturation report")
    _add_common(sub)
    sub.add_argument("--max-rounds", type=int, default=50)
    sub.add_argument("--force", action="store_true",
                     help="saturate even when the set is not weakly guarded")
    sub.set_defaults(func=cmd_store_stats)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_arg_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ParseError, UsageError) as e:
        print("error: %s" % e, file=sys.stderr)
        return EXIT_USAGE
    except MemoryBudgetExceeded as e:
        print("aborted: %s" % e, file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
