"""A minimal parameterized STRIPS planner and its knowledge bridge.

Domains and problems are s-expression documents: parameterized operators
with preconditions and add/delete effects, bare facts declaring objects,
``(preconds ...)`` for the initial state, and ``(effects ...)`` for the
goal. Planning is breadth-first search over ground states, which returns
a shortest plan deterministically.

The bridge functions turn classifier-view agreements into initial-state
facts (never asserting below the agreed level of abstraction) and lift a
relationship through the subject's ancestor classes to verify goals.
"""
from __future__ import annotations

import itertools
import re
from collections import deque
from dataclasses import dataclass

from .converge import OutcomeKind, View, classify_outcome
from .kb import ROOT_CLASS, KnowledgeBase
from .reasoner import LiftedRelationship, ancestors, match_view_with_individual

DEFAULT_STATE_CAP = 10 ** 6

_SEXP_TOKEN = re.compile(r"\(|\)|[^\s()]+")
_VARIABLE = re.compile(r"<[^<>\s]+>$")


class PlanningSyntaxError(Exception):
    pass


class SearchLimitError(Exception):
    pass


@dataclass(frozen=True)
class Fact:
    predicate: str
    args: tuple[str, ...] = ()

    def render(self) -> str:
        return "(" + " ".join((self.predicate,) + self.args) + ")"


@dataclass(frozen=True)
class Operator:
    name: str
    params: tuple[str, ...]
    preconds: tuple[Fact, ...]
    add_effects: tuple[Fact, ...]
    del_effects: tuple[Fact, ...]


@dataclass(frozen=True)
class GroundAction:
    name: str
    preconds: frozenset[Fact]
    add_effects: frozenset[Fact]
    del_effects: frozenset[Fact]

    def apply(self, state: frozenset[Fact]) -> frozenset[Fact]:
        return (state - self.del_effects) | self.add_effects


@dataclass(frozen=True)
class Plan:
    steps: tuple[GroundAction, ...]

    def render(self) -> str:
        return "\n".join(f"{i} {step.name}" for i, step in enumerate(self.steps, start=1))


@dataclass(frozen=True)
class PlanningDocument:
    operators: tuple[Operator, ...] = ()
    objects: tuple[str, ...] = ()
    init: tuple[Fact, ...] = ()
    goal: tuple[Fact, ...] = ()


def _is_variable(token) -> bool:
    return isinstance(token, str) and _VARIABLE.match(token) is not None


def _read_sexps(text: str) -> list:
    tokens = _SEXP_TOKEN.findall(text)
    forms: list = []
    stack: list[list] = []
    for token in tokens:
        if token == "(":
            stack.append([])
        elif token == ")":
            if not stack:
                raise PlanningSyntaxError("unbalanced parentheses: unexpected ')'")
            done = stack.pop()
            if stack:
                stack[-1].append(done)
            else:
                forms.append(done)
        else:
            if not stack:
                raise PlanningSyntaxError(f"token {token!r} outside any form")
            stack[-1].append(token)
    if stack:
        raise PlanningSyntaxError("unbalanced parentheses: missing ')'")
    return forms


def _parse_fact(form, *, context: str) -> Fact:
    if not isinstance(form, list) or not form:
        raise PlanningSyntaxError(f"{context}: expected a fact form")
    for part in form:
        if isinstance(part, list):
            raise PlanningSyntaxError(f"{context}: facts cannot nest")
    if _is_variable(form[0]):
        raise PlanningSyntaxError(f"{context}: predicate cannot be a variable")
    return Fact(form[0], tuple(form[1:]))


def _parse_operator(form) -> Operator:
    if len(form) < 2 or isinstance(form[1], list):
        raise PlanningSyntaxError("operator needs a name")
    name = form[1]
    params: tuple[str, ...] = ()
    preconds: list[Fact] = []
    add_effects: list[Fact] = []
    del_effects: list[Fact] = []
    seen: set[str] = set()
    for section in form[2:]:
        if not isinstance(section, list) or not section or isinstance(section[0], list):
            raise PlanningSyntaxError(f"operator {name}: malformed section")
        keyword = section[0]
        if keyword in seen or (keyword in ("effect", "effects") and
                               ("effect" in seen or "effects" in seen)):
            raise PlanningSyntaxError(f"operator {name}: duplicate section {keyword!r}")
        seen.add(keyword)
        if keyword == "params":
            names = []
            for item in section[1:]:
                if isinstance(item, list):
                    if len(item) != 1 or not _is_variable(item[0]):
                        raise PlanningSyntaxError(f"operator {name}: malformed parameter")
                    names.append(item[0])
                elif _is_variable(item):
                    names.append(item)
                else:
                    raise PlanningSyntaxError(
                        f"operator {name}: parameter {item!r} is not a <variable>"
                    )
            params = tuple(names)
        elif keyword == "preconds":
            preconds = [_parse_fact(f, context=f"operator {name} preconds") for f in section[1:]]
        elif keyword in ("effects", "effect"):
            for item in section[1:]:
                fact = _parse_fact(item, context=f"operator {name} effects")
                if fact.predicate == "del":
                    if not fact.args:
                        raise PlanningSyntaxError(f"operator {name}: empty del effect")
                    del_effects.append(Fact(fact.args[0], fact.args[1:]))
                else:
                    add_effects.append(fact)
        else:
            raise PlanningSyntaxError(f"operator {name}: unknown section {keyword!r}")
    param_set = set(params)
    for fact in itertools.chain(preconds, add_effects, del_effects):
        for arg in fact.args:
            if _is_variable(arg) and arg not in param_set:
                raise PlanningSyntaxError(
                    f"operator {name}: variable {arg} not declared in params"
                )
    return Operator(name, params, tuple(preconds), tuple(add_effects), tuple(del_effects))


def parse_domain(text: str) -> PlanningDocument:
    """Parse any mix of operators, bare object facts, an init section
    (``preconds``), and a goal section (``effects``).

    Bare single-atom facts like ``(P1)`` declare planning objects and are
    also asserted in the initial state as zero-argument predicates.
    """
    operators: list[Operator] = []
    objects: list[str] = []
    init: list[Fact] = []
    goal: list[Fact] = []
    for form in _read_sexps(text):
        if not form:
            raise PlanningSyntaxError("empty form")
        head = form[0]
        if head == "operator":
            operators.append(_parse_operator(form))
        elif head == "preconds":
            init.extend(_parse_fact(f, context="preconds") for f in form[1:])
        elif head in ("effects", "effect"):
            goal.extend(_parse_fact(f, context="effects") for f in form[1:])
        elif len(form) == 1 and isinstance(head, str) and not _is_variable(head):
            objects.append(head)
            init.append(Fact(head))
        else:
            raise PlanningSyntaxError(f"unknown section keyword {head!r}")
    for fact in init + goal:
        for arg in fact.args:
            if _is_variable(arg):
                raise PlanningSyntaxError(f"fact {fact.render()} contains a variable")
    return PlanningDocument(tuple(operators), tuple(objects), tuple(init), tuple(goal))


def _merge(domain: PlanningDocument, problem: PlanningDocument | None) -> PlanningDocument:
    if problem is None:
        return domain
    seen_objects = dict.fromkeys(domain.objects + problem.objects)
    return PlanningDocument(
        operators=domain.operators + problem.operators,
        objects=tuple(seen_objects),
        init=tuple(dict.fromkeys(domain.init + problem.init)),
        goal=tuple(dict.fromkeys(domain.goal + problem.goal)),
    )


def _ground(op: Operator, objects: tuple[str, ...]) -> list[GroundAction]:
    actions = []
    for binding_values in itertools.product(objects, repeat=len(op.params)):
        binding = dict(zip(op.params, binding_values))

        def subst(fact: Fact) -> Fact:
            return Fact(fact.predicate, tuple(binding.get(a, a) for a in fact.args))

        name = op.name if not op.params else op.name + "_" + "_".join(binding_values)
        actions.append(
            GroundAction(
                name=name,
                preconds=frozenset(subst(f) for f in op.preconds),
                add_effects=frozenset(subst(f) for f in op.add_effects),
                del_effects=frozenset(subst(f) for f in op.del_effects),
            )
        )
    return actions


def plan(domain: PlanningDocument, problem: PlanningDocument | None = None,
         state_cap: int = DEFAULT_STATE_CAP) -> Plan | None:
    """Shortest plan by breadth-first search over ground states.

    Parameters range over declared objects. Returns ``None`` when the goal
    is unreachable; ties between equal-length plans break lexicographically
    by grounded action name. Raises :class:`SearchLimitError` when more
    than ``state_cap`` states get visited.
    """
    merged = _merge(domain, problem)
    goal = frozenset(merged.goal)
    start = frozenset(merged.init)
    if goal <= start:
        return Plan(())
    actions: list[GroundAction] = []
    for op in merged.operators:
        actions.extend(_ground(op, merged.objects))
    actions.sort(key=lambda a: a.name)
    visited = {start}
    queue: deque[tuple[frozenset[Fact], tuple[GroundAction, ...]]] = deque([(start, ())])
    while queue:
        state, path = queue.popleft()
        for action in actions:
            if not action.preconds <= state:
                continue
            nxt = action.apply(state)
            if nxt in visited:
                continue
            if len(visited) >= state_cap:
                raise SearchLimitError(f"state cap of {state_cap} states exceeded")
            visited.add(nxt)
            next_path = path + (action,)
            if goal <= nxt:
                return Plan(next_path)
            queue.append((nxt, next_path))
    return None


def condition_from_views(v1: View, v2: View, location: str,
                         kb: KnowledgeBase) -> Fact | None:
    """An ``at`` fact for a location, asserted only at the level both views
    support: the matched individual when they agree, the unifying
    abstraction when they converge, nothing otherwise."""
    outcome = classify_outcome(v1, v2, kb)
    if outcome.kind is OutcomeKind.SAME:
        individual = match_view_with_individual(v1.normalized_label, kb)
        if individual is None:
            return None
        return Fact("at", (individual, location))
    if outcome.kind is OutcomeKind.UNIFIED and outcome.convergence.abstraction is not None:
        return Fact("at", (outcome.convergence.abstraction.lower(), location))
    return None


def generalize_relationship(rel: LiftedRelationship, kb: KnowledgeBase) -> list[Fact]:
    """The ground fact plus one fact per ancestor substitution of the
    subject (root class excluded), in ancestor order, deduplicated."""
    facts = [Fact(rel.predicate, (rel.subject_individual, rel.object_individual))]
    for entry in ancestors(rel.subject_individual, kb).entries:
        if entry.cls == ROOT_CLASS:
            continue
        fact = Fact(rel.predicate, (entry.cls.lower(), rel.object_individual))
        if fact not in facts:
            facts.append(fact)
    return facts
