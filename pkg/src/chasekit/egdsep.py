"""EGD pipeline: failure detection, separated answering, blocking chase.

When every EGD application merely collapses an atom onto an existing one
(an innocuous application), the EGDs cannot enable new TGD derivations:
if the chase does not fail, queries can be answered under the TGDs
alone.  Failure itself is detectable without running the interleaved
chase, by asking, for each EGD, whether its body can be satisfied with
the two equated variables bound to distinct database constants.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Set, Tuple

from .chase import (
    ChaseOptions,
    ChaseResult,
    EgdStep,
    Mode,
    Status,
    Trigger,
    body_homomorphisms,
    run_chase,
)
from .model import (
    CQ,
    EGD,
    TGD,
    Atom,
    Constant,
    Instance,
    Predicate,
    UsageError,
)
from .query import AnswerReport, AnswerStatus, Terminate, certain_answers, eval_cq


@dataclass
class SeparationVerdict:
    failed: bool
    witness: Optional[Tuple[EGD, Trigger]]
    all_applications_innocuous: bool
    applications: int = 0


def monitor_innocuousness(
    database: Instance,
    tgds: Sequence[TGD],
    egds: Sequence[EGD],
    max_steps: int = 10_000,
    max_depth: int = 64,
) -> Tuple[SeparationVerdict, ChaseResult]:
    """Run the interleaved chase and record what the EGDs did."""
    result = run_chase(
        database, tgds, egds,
        ChaseOptions(mode=Mode.RESTRICTED, max_steps=max_steps, max_depth=max_depth),
    )
    merges = [s for s in result.steps if isinstance(s, EgdStep)]
    verdict = SeparationVerdict(
        failed=result.status is Status.FAILED,
        witness=result.failure_witness,
        all_applications_innocuous=all(s.innocuous for s in merges),
        applications=len(merges),
    )
    return verdict, result


class FailureCheck(Enum):
    FAILED = "failed"
    NO_FAILURE = "no-failure"
    UNKNOWN = "unknown"


NEQ = "neq"


def _neq_facts(database: Instance) -> Tuple[Predicate, List[Atom]]:
    """The inequality relation over the database constants, minus the diagonal."""
    constants = sorted(
        (t for t in database.domain() if isinstance(t, Constant)),
        key=lambda c: c.name,
    )
    pred = Predicate(NEQ, 2)
    facts = [
        Atom(pred, (x, y)) for x in constants for y in constants if x != y
    ]
    return pred, facts


def failure_query(egd: EGD, neq_pred: Predicate) -> CQ:
    """Boolean query: the EGD's body with its two variables forced apart."""
    return CQ(
        name="fail_" + (egd.label or "egd"),
        head_vars=(),
        body=egd.body + (Atom(neq_pred, (egd.lhs, egd.rhs)),),
    )


def egd_failure_check(
    database: Instance,
    tgds: Sequence[TGD],
    egds: Sequence[EGD],
    max_steps: int = 10_000,
    max_depth: int = 64,
) -> FailureCheck:
    """Would the interleaved chase fail?  Decided under the TGDs alone.

    A failure means some EGD body matches the TGD-only chase with the
    equated pair bound to two distinct database constants; the neq
    relation is materialized eagerly and never grows during the chase.
    """
    if not egds:
        return FailureCheck.NO_FAILURE
    result = run_chase(
        database, tgds, (),
        ChaseOptions(mode=Mode.RESTRICTED, max_steps=max_steps, max_depth=max_depth),
    )
    neq_pred, facts = _neq_facts(database)
    extended = result.instance.copy()
    for f in facts:
        extended.add(f)
    for egd in egds:
        if eval_cq(extended, failure_query(egd, neq_pred)):
            return FailureCheck.FAILED
    if result.status is Status.SATURATED:
        return FailureCheck.NO_FAILURE
    return FailureCheck.UNKNOWN


def separated_answer(
    database: Instance,
    tgds: Sequence[TGD],
    egds: Sequence[EGD],
    query: CQ,
    max_steps: int = 10_000,
    max_depth: int = 64,
) -> AnswerReport:
    """Answer a query under TGDs plus innocuous EGDs without merging.

    First the failure check: a failing theory entails every Boolean
    query, reported as status Failed rather than by enumerating the
    trivial answer set.  Otherwise the EGDs are dropped and the query is
    answered under the TGDs alone.
    """
    check = egd_failure_check(database, tgds, egds, max_steps, max_depth)
    if check is FailureCheck.FAILED:
        return AnswerReport(
            [], AnswerStatus.FAILED,
            note="chase fails: every Boolean query is entailed",
        )
    report = certain_answers(
        database, tgds, query, Terminate(max_steps=max_steps, max_depth=max_depth)
    )
    if check is FailureCheck.UNKNOWN and report.status is AnswerStatus.EXACT:
        report.status = AnswerStatus.UNKNOWN
        report.note = "failure check inconclusive within budget"
    return report


# ---------------------------------------------------------------------------
# Blocking chase
# ---------------------------------------------------------------------------

@dataclass
class BlockingChaseResult:
    unblocked: Instance          # A
    blocked: Instance            # C
    survivors: Instance          # A - C at the fixpoint
    status: Status
    aborted_on: Optional[Tuple[EGD, Trigger]] = None


class NonInnocuousApplication(Exception):
    def __init__(self, egd: EGD, trigger: Trigger):
        super().__init__("non-innocuous EGD application: %r" % (egd,))
        self.egd = egd
        self.trigger = trigger


def blocking_chase(
    database: Instance,
    tgds: Sequence[TGD],
    egds: Sequence[EGD],
    max_steps: int = 10_000,
) -> BlockingChaseResult:
    """Chase variant that bans atoms instead of rewriting them.

    TGD triggers touching a banned atom are blocked; an EGD application
    moves the atoms that a merge would delete into the banned set C and
    leaves A untouched.  On innocuous runs A - C tracks the interleaved
    chase exactly, and the survivors satisfy all dependencies once the
    run saturates.  Any non-innocuous (or failing) EGD application
    aborts the run with the offending step.
    """
    for rule in tgds:
        if not rule.single_head():
            raise UsageError("blocking_chase needs single-head rules; normalize first")
    from .model import NullAllocator, compare_terms

    unblocked = database.copy()          # A
    banned: Set[Atom] = set()            # C
    alloc = NullAllocator.after(database)
    applied: Set[Tuple[int, Tuple]] = set()
    rule_ids = {id(r): i for i, r in enumerate(tgds)}
    steps = 0

    def live() -> Instance:
        return Instance(a for a in unblocked if a not in banned)

    def drain_egds() -> Optional[Tuple[EGD, Trigger]]:
        nonlocal steps
        changed = True
        while changed:
            changed = False
            view = live()
            for egd in egds:
                for hom in body_homomorphisms(egd.body, view):
                    a, b = hom[egd.lhs], hom[egd.rhs]
                    if a == b:
                        continue
                    trigger = Trigger.of(egd, hom)
                    if isinstance(a, Constant) and isinstance(b, Constant):
                        raise NonInnocuousApplication(egd, trigger)
                    kept, replaced = (a, b) if compare_terms(a, b) < 0 else (b, a)
                    losers = {x for x in view if replaced in x.args}
                    for x in losers:
                        if x.substitute({replaced: kept}) not in view:
                            raise NonInnocuousApplication(egd, trigger)
                    banned.update(losers)
                    steps += 1
                    changed = True
                    break
                if changed:
                    break
        return None

    try:
        drain_egds()
        work = True
        while work and steps < max_steps:
            work = False
            view = live()
            for rule in tgds:
                for hom in body_homomorphisms(rule.body, unblocked):
                    key = (
                        rule_ids[id(rule)],
                        tuple(sorted(hom.items(), key=lambda kv: kv[0].name)),
                    )
                    if key in applied:
                        continue
                    applied.add(key)
                    if any(a.substitute(hom) in banned for a in rule.body):
                        continue  # blocked application
                    extended = dict(hom)
                    for v in sorted(rule.existentials, key=lambda x: x.name):
                        extended[v] = alloc.fresh()
                    new_atom = rule.head[0].substitute(extended)
                    if unblocked.add(new_atom):
                        steps += 1
                        drain_egds()
                        work = True
                        break
                if work:
                    break
        status = Status.SATURATED if not work else Status.BUDGET_EXHAUSTED
    except NonInnocuousApplication as e:
        return BlockingChaseResult(
            unblocked, Instance(sorted(banned, key=repr)), live(),
            Status.FAILED, aborted_on=(e.egd, e.trigger),
        )
    return BlockingChaseResult(
        unblocked, Instance(sorted(banned, key=repr)), live(), status
    )
