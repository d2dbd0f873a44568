"""Unifying pairs of classifier views over a knowledge base.

A *view* is a classifier's top prediction. When two views differ, this
module can *explain* the difference in terms of their classes and try to
*converge* them into higher-level knowledge: a common abstraction (lowest
common ancestor), shared properties, and/or connecting relationships.
Every operation here is a pure function over immutable inputs.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .kb import ROOT_CLASS, KnowledgeBase
from .reasoner import (
    LiftedRelationship,
    ancestors,
    get_properties,
    get_relationships,
    lowest_level_ancestor,
    match_view_with_individual,
)

_NON_LABEL = re.compile(r"[^a-z0-9]+")


@dataclass(frozen=True)
class View:
    """A classifier's top prediction, as produced and in identifier form."""

    raw_label: str
    normalized_label: str
    source: str = ""

    def __post_init__(self):
        if self.normalized_label != normalize(self.raw_label):
            raise ValueError(
                f"normalized label {self.normalized_label!r} does not match "
                f"normalize({self.raw_label!r})"
            )

    @classmethod
    def from_raw(cls, raw_label: str, source: str = "") -> "View":
        return cls(raw_label, normalize(raw_label), source)


@dataclass(frozen=True)
class Explanation:
    """Why two views differ, stated by each side's display class."""

    left_label: str
    right_label: str
    left_class: str
    right_class: str
    left_phrase: str
    right_phrase: str
    rendered: str


@dataclass(frozen=True)
class Convergence:
    """Higher-level knowledge shared by two views."""

    abstraction: str | None = None
    properties: frozenset[str] = frozenset()
    relationships: frozenset[LiftedRelationship] = frozenset()

    def is_empty(self) -> bool:
        return self.abstraction is None and not self.properties and not self.relationships


class OutcomeKind(Enum):
    SAME = "same"
    UNIFIED = "unified"
    DISUNITED = "disunited"


@dataclass(frozen=True)
class Outcome:
    """Classification of a view pair: same, unified, or disunited;
    disunited pairs may still be explained."""

    kind: OutcomeKind
    explained: bool
    convergence: Convergence | None = None
    explanation: Explanation | None = None


def normalize(raw_label: str) -> str:
    """Lowercase, trim, and fold whitespace/punctuation runs into single
    underscores. Idempotent. Raises ValueError when nothing is left."""
    normalized = _NON_LABEL.sub("_", raw_label.lower()).strip("_")
    if not normalized:
        raise ValueError(f"label {raw_label!r} normalizes to an empty string")
    return normalized


def _display(label: str) -> str:
    return label.replace("_", " ")


def class_phrase(name: str, kb: KnowledgeBase) -> str:
    """Display phrase for a class: its declaration, else the name
    lowercased with underscores as spaces."""
    cdef = kb.classes.get(name)
    if cdef is not None and cdef.display_phrase is not None:
        return cdef.display_phrase
    return name.lower().replace("_", " ")


def _explanation_class(individual: str, kb: KnowledgeBase) -> tuple[str, str]:
    # Nearest ancestor carrying a declared phrase; the asserted class
    # otherwise. Leaf classes usually carry no phrase, so this lands on
    # the mid-level class the phrase author intended.
    alist = ancestors(individual, kb)
    for entry in alist.entries:
        if entry.cls == ROOT_CLASS:
            continue
        cdef = kb.classes[entry.cls]
        if cdef.display_phrase is not None:
            return entry.cls, cdef.display_phrase
    first = alist.entries[0].cls
    return first, class_phrase(first, kb)


def _render(left_label: str, left_phrase: str, right_label: str, right_phrase: str) -> str:
    return (
        f"{left_label} is a kind of {left_phrase} and "
        f"{right_label} is a kind of {right_phrase}"
    )


def explain(v1: View, v2: View, kb: KnowledgeBase) -> Explanation | None:
    """Explain why two differing views do not match, by class.

    Returns ``None`` when either label has no matching individual: with no
    concept to anchor it, no explanation can be made.
    """
    if v1.normalized_label == v2.normalized_label:
        raise ValueError("explain requires differing views")
    i1 = match_view_with_individual(v1.normalized_label, kb)
    i2 = match_view_with_individual(v2.normalized_label, kb)
    if i1 is None or i2 is None:
        return None
    left_class, left_phrase = _explanation_class(i1, kb)
    right_class, right_phrase = _explanation_class(i2, kb)
    left_label = _display(v1.raw_label)
    right_label = _display(v2.raw_label)
    return Explanation(
        left_label=left_label,
        right_label=right_label,
        left_class=left_class,
        right_class=right_class,
        left_phrase=left_phrase,
        right_phrase=right_phrase,
        rendered=_render(left_label, left_phrase, right_label, right_phrase),
    )


def render_explanation(e: Explanation) -> str:
    """``<left label> is a kind of <left phrase> and <right label> is a
    kind of <right phrase>``"""
    return _render(e.left_label, e.left_phrase, e.right_label, e.right_phrase)


def converge(v1: View, v2: View, kb: KnowledgeBase) -> Convergence:
    """Unify two differing views into common properties, relationships,
    and the lowest common non-root ancestor.

    Failure modes are empty results, never errors: an unmatched label or a
    pair with nothing in common yields an empty convergence.
    """
    if v1.normalized_label == v2.normalized_label:
        raise ValueError("converge requires differing views")
    i1 = match_view_with_individual(v1.normalized_label, kb)
    i2 = match_view_with_individual(v2.normalized_label, kb)
    if i1 is None or i2 is None:
        return Convergence()
    props1 = {name for name, _ in get_properties(i1, kb)}
    props2 = {name for name, _ in get_properties(i2, kb)}
    relationships = get_relationships(i1, i2, kb)
    abstraction = lowest_level_ancestor(ancestors(i1, kb), ancestors(i2, kb))
    return Convergence(
        abstraction=abstraction,
        properties=frozenset(props1 & props2),
        relationships=frozenset(relationships),
    )


def classify_outcome(v1: View, v2: View, kb: KnowledgeBase) -> Outcome:
    """Same when the labels agree (or map to one individual); otherwise
    unified iff convergence is non-empty, disunited otherwise."""
    if v1.normalized_label == v2.normalized_label:
        return Outcome(OutcomeKind.SAME, explained=False)
    i1 = match_view_with_individual(v1.normalized_label, kb)
    i2 = match_view_with_individual(v2.normalized_label, kb)
    if i1 is not None and i1 == i2:
        return Outcome(OutcomeKind.SAME, explained=False)
    explanation = explain(v1, v2, kb)
    convergence = converge(v1, v2, kb)
    if not convergence.is_empty():
        return Outcome(OutcomeKind.UNIFIED, explained=True, convergence=convergence,
                       explanation=explanation)
    return Outcome(OutcomeKind.DISUNITED, explained=explanation is not None,
                   explanation=explanation)


def render_convergence(c: Convergence, kb: KnowledgeBase) -> list[str]:
    """One display string per component: abstraction phrase, property
    names, then relationships, deterministically ordered."""
    if c.is_empty():
        raise ValueError("cannot render an empty convergence")
    lines: list[str] = []
    if c.abstraction is not None:
        lines.append(class_phrase(c.abstraction, kb))
    for prop in sorted(c.properties):
        lines.append(_display(prop))
    for rel in sorted(
        c.relationships,
        key=lambda r: (r.subject_individual, r.predicate, r.object_individual),
    ):
        lines.append(
            f"{_display(rel.subject_individual)} {_display(rel.predicate)} "
            f"{_display(rel.object_individual)}"
        )
    return lines
