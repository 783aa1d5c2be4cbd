"""Static analysis of TGD sets: affected positions, guardedness, head normalization.

A position p[k] is affected when some chase can place a labeled null
there: either an existential head variable sits at it, or a head
variable sits at it whose body occurrences are all at affected
positions.  Guards cover all universal variables of a rule; weak guards
only need to cover the variables that can ever bind a null, i.e. those
whose body occurrences are all at affected positions.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Set

from .model import TGD, Atom, Predicate, Variable


@dataclass(frozen=True)
class Position:
    predicate: Predicate
    slot: int  # 1-based

    def __post_init__(self):
        if not (1 <= self.slot <= max(self.predicate.arity, 1)):
            raise ValueError("slot %d out of range for %r" % (self.slot, self.predicate))

    def __repr__(self):
        return "%s[%d]" % (self.predicate.name, self.slot)


class RuleClass(Enum):
    FULL = "full"
    LINEAR = "linear"
    GUARDED = "guarded"
    WEAKLY_GUARDED = "weakly-guarded"
    UNGUARDED = "unguarded"


# Weakest first, for computing the overall class of a set.
_WEAKNESS = [
    RuleClass.UNGUARDED,
    RuleClass.WEAKLY_GUARDED,
    RuleClass.GUARDED,
    RuleClass.LINEAR,
    RuleClass.FULL,
]


@dataclass
class Classification:
    per_rule: Dict[TGD, RuleClass]
    guard_index: Dict[TGD, Optional[int]]       # body index of the full guard
    weak_guard_index: Dict[TGD, Optional[int]]  # body index of the weak guard
    overall: RuleClass
    affected: Set[Position]

    def forest_guard_index(self, rule: TGD) -> Optional[int]:
        """Body atom whose image parents the derived atom in the chase forest."""
        if self.per_rule[rule] in (RuleClass.GUARDED, RuleClass.LINEAR):
            return self.guard_index[rule]
        return self.weak_guard_index[rule]

    def is_weakly_guarded_set(self) -> bool:
        return self.overall is not RuleClass.UNGUARDED


def _body_positions(rule: TGD, var: Variable) -> List[Position]:
    out = []
    for atom in rule.body:
        for i, t in enumerate(atom.args):
            if t == var:
                out.append(Position(atom.predicate, i + 1))
    return out


def affected_positions(rules: Sequence[TGD]) -> Set[Position]:
    """Least fixpoint of the affected-position rules over a TGD set.

    Multi-atom heads are handled by treating each head atom on its own.
    """
    affected: Set[Position] = set()
    for rule in rules:
        for atom in rule.head:
            for i, t in enumerate(atom.args):
                if isinstance(t, Variable) and t in rule.existentials:
                    affected.add(Position(atom.predicate, i + 1))
    changed = True
    while changed:
        changed = False
        for rule in rules:
            for atom in rule.head:
                for i, t in enumerate(atom.args):
                    if not isinstance(t, Variable) or t in rule.existentials:
                        continue
                    pos = Position(atom.predicate, i + 1)
                    if pos in affected:
                        continue
                    occ = _body_positions(rule, t)
                    if occ and all(p in affected for p in occ):
                        affected.add(pos)
                        changed = True
    return affected


def variables_needing_cover(rule: TGD, affected: Set[Position]) -> Set[Variable]:
    """Universal variables all of whose body occurrences are affected."""
    out: Set[Variable] = set()
    for v in rule.universal_variables():
        occ = _body_positions(rule, v)
        if occ and all(p in affected for p in occ):
            out.add(v)
    return out


def guard_index(rule: TGD) -> Optional[int]:
    """Index of the first body atom containing every universal variable."""
    univ = rule.universal_variables()
    for i, atom in enumerate(rule.body):
        if univ <= atom.variables():
            return i
    return None


def weak_guard_index(rule: TGD, affected: Set[Position]) -> Optional[int]:
    """Index of the first body atom covering all null-capable variables."""
    need = variables_needing_cover(rule, affected)
    for i, atom in enumerate(rule.body):
        if need <= atom.variables():
            return i
    return None


def classify(rules: Sequence[TGD]) -> Classification:
    """Per-rule and overall guardedness of a TGD set.

    Per rule: Linear for single-body-atom rules, Guarded when a full
    guard exists, WeaklyGuarded when only a weak guard does, Unguarded
    otherwise.  The guard is always the first qualifying body atom in
    declaration order.  The overall label is the weakest per-rule class,
    except that a set without any existential variable is reported as
    Full (its chase always terminates regardless of guards).
    """
    affected = affected_positions(rules)
    per_rule: Dict[TGD, RuleClass] = {}
    gidx: Dict[TGD, Optional[int]] = {}
    widx: Dict[TGD, Optional[int]] = {}
    for rule in rules:
        g = guard_index(rule)
        w = weak_guard_index(rule, affected)
        gidx[rule] = g
        widx[rule] = w
        if w is None:
            per_rule[rule] = RuleClass.UNGUARDED
        elif g is not None:
            per_rule[rule] = RuleClass.LINEAR if len(rule.body) == 1 else RuleClass.GUARDED
        else:
            per_rule[rule] = RuleClass.WEAKLY_GUARDED
    if not rules:
        overall = RuleClass.FULL
    elif all(rc is not RuleClass.UNGUARDED for rc in per_rule.values()) and all(
        r.is_full() for r in rules
    ):
        overall = RuleClass.FULL
    else:
        overall = min(per_rule.values(), key=_WEAKNESS.index)
    return Classification(per_rule, gidx, widx, overall, affected)


# ---------------------------------------------------------------------------
# Head normalization
# ---------------------------------------------------------------------------

def _head_variables_in_order(rule: TGD) -> List[Variable]:
    seen: List[Variable] = []
    for atom in rule.head:
        for t in atom.args:
            if isinstance(t, Variable) and t not in seen:
                seen.append(t)
    return seen


def _fresh_predicate_name(base: str, used: Set[str]) -> str:
    i = 1
    while "%s%d" % (base, i) in used:
        i += 1
    name = "%s%d" % (base, i)
    used.add(name)
    return name


def normalize_heads(rules: Sequence[TGD]) -> List[TGD]:
    """Rewrite every multi-atom head into single-atom heads.

    Heads without existentials split into one rule per head atom over
    the same body.  Heads with existentials route through a fresh
    predicate v<i> collecting all head variables: body -> v(Y), then
    v(Y) -> head_i for each head atom.  Certain answers over the
    original predicates are preserved.
    """
    used: Set[str] = set()
    for rule in rules:
        for atom in rule.body + rule.head:
            used.add(atom.predicate.name)
    out: List[TGD] = []
    for rule in rules:
        if len(rule.head) == 1:
            out.append(rule)
            continue
        if not rule.existentials:
            for k, atom in enumerate(rule.head):
                out.append(
                    TGD(rule.body, (atom,), frozenset(),
                        label="%s.%d" % (rule.label or "tgd", k + 1))
                )
            continue
        head_vars = _head_variables_in_order(rule)
        aux = Predicate(_fresh_predicate_name("v", used), len(head_vars))
        aux_atom = Atom(aux, tuple(head_vars))
        out.append(
            TGD(rule.body, (aux_atom,), rule.existentials,
                label="%s.0" % (rule.label or "tgd"))
        )
        for k, atom in enumerate(rule.head):
            out.append(
                TGD((aux_atom,), (atom,), frozenset(),
                    label="%s.%d" % (rule.label or "tgd", k + 1))
            )
    return out
