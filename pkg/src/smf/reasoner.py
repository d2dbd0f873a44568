"""Entailment queries over a knowledge base.

Individual lookup, ordered ancestor lists, inherited properties, lifted
relationships, subsumption, and lowest common ancestors. All functions are
pure and read-only over an immutable :class:`~smf.kb.KnowledgeBase`, so any
number of callers may run concurrently.
"""
from __future__ import annotations

from dataclasses import dataclass

from .kb import ROOT_CLASS, KnowledgeBase


class UnknownIndividualError(LookupError):
    pass


class UnknownClassError(LookupError):
    pass


@dataclass(frozen=True)
class AncestorEntry:
    cls: str
    depth: int


@dataclass(frozen=True)
class AncestorList:
    """Ancestors of an individual ordered nearest-first.

    Depth is the shortest superclass-path length from any asserted class
    (asserted classes themselves sit at depth 0). Entries are ordered by
    depth, then name; the root class is always the final entry, whatever
    its depth, since it is the least informative ancestor.
    """

    entries: tuple[AncestorEntry, ...]

    def classes(self) -> tuple[str, ...]:
        return tuple(e.cls for e in self.entries)

    def position(self, cls: str) -> int | None:
        for i, entry in enumerate(self.entries):
            if entry.cls == cls:
                return i
        return None

    def depth_of(self, cls: str) -> int | None:
        for entry in self.entries:
            if entry.cls == cls:
                return entry.depth
        return None


@dataclass(frozen=True)
class LiftedRelationship:
    """A relation between two individuals, asserted on the individuals
    themselves or on ancestor classes of either side.

    ``subject_individual -> object_individual`` is the rendered direction;
    ``asserted_subject``/``asserted_object`` record where the assertion
    actually lives.
    """

    subject_individual: str
    object_individual: str
    predicate: str
    asserted_subject: str
    asserted_object: str


def match_view_with_individual(label: str, kb: KnowledgeBase) -> str | None:
    """Map a normalized label onto the individual of the same name.

    Absence is a value, not an error: an unmatched label simply cannot be
    explained or unified downstream.
    """
    return label if label in kb.individuals else None


def ancestors(individual: str, kb: KnowledgeBase) -> AncestorList:
    """Breadth-first closure over superclass edges from the asserted classes."""
    ind = kb.individuals.get(individual)
    if ind is None:
        raise UnknownIndividualError(individual)
    depths: dict[str, int] = {c: 0 for c in ind.asserted_classes}
    frontier = list(ind.asserted_classes)
    depth = 0
    while frontier:
        nxt: list[str] = []
        for cls in frontier:
            cdef = kb.classes.get(cls)
            if cdef is None:
                raise UnknownClassError(cls)
            for parent in cdef.parents:
                if parent not in depths:
                    depths[parent] = depth + 1
                    nxt.append(parent)
        frontier = nxt
        depth += 1
    inner = sorted(
        (AncestorEntry(c, d) for c, d in depths.items() if c != ROOT_CLASS),
        key=lambda e: (e.depth, e.cls),
    )
    if ROOT_CLASS in depths:
        inner.append(AncestorEntry(ROOT_CLASS, depths[ROOT_CLASS]))
    return AncestorList(tuple(inner))


def get_properties(individual: str, kb: KnowledgeBase) -> set[tuple[str, str | None]]:
    """Union of property assertions on the individual and all its ancestors.

    Collapses by property name; when the same property is asserted at
    several levels the nearest assertion's value wins.
    """
    chain = [individual] + [e.cls for e in ancestors(individual, kb).entries]
    by_subject: dict[str, list] = {}
    for pa in kb.property_assertions:
        by_subject.setdefault(pa.subject, []).append(pa)
    found: dict[str, str | None] = {}
    for subject in chain:
        for pa in by_subject.get(subject, ()):
            if pa.property not in found:
                found[pa.property] = pa.value
    return set(found.items())


def get_relationships(i1: str, i2: str, kb: KnowledgeBase) -> set[LiftedRelationship]:
    """All relation assertions connecting the two individuals, in either
    direction, where each end resolves to the individual itself or to one
    of its ancestor classes."""
    resolve1 = {i1, *ancestors(i1, kb).classes()}
    resolve2 = {i2, *ancestors(i2, kb).classes()}
    out: set[LiftedRelationship] = set()
    for ra in kb.relation_assertions:
        if ra.subject in resolve1 and ra.object in resolve2:
            out.add(LiftedRelationship(i1, i2, ra.predicate, ra.subject, ra.object))
        if ra.subject in resolve2 and ra.object in resolve1:
            out.add(LiftedRelationship(i2, i1, ra.predicate, ra.subject, ra.object))
    return out


def lowest_level_ancestor(a: AncestorList, b: AncestorList) -> str | None:
    """The first entry of ``a`` (in list order) whose class also occurs in ``b``.

    The root class never unifies: a shared top class conveys nothing, so
    ``None`` is returned when it is the only common ancestor. Ties are
    resolved by the first argument's ordering (depth, then name).
    """
    in_b = {e.cls for e in b.entries}
    for entry in a.entries:
        if entry.cls == ROOT_CLASS:
            continue
        if entry.cls in in_b:
            return entry.cls
    return None


def is_subclass(c1: str, c2: str, kb: KnowledgeBase) -> bool:
    """True iff ``c2`` is reachable from ``c1`` via superclass edges (reflexive)."""
    if c1 not in kb.classes:
        raise UnknownClassError(c1)
    if c2 not in kb.classes:
        raise UnknownClassError(c2)
    if c1 == c2:
        return True
    seen = {c1}
    frontier = [c1]
    while frontier:
        nxt = []
        for cls in frontier:
            for parent in kb.classes[cls].parents:
                if parent == c2:
                    return True
                if parent not in seen:
                    seen.add(parent)
                    nxt.append(parent)
        frontier = nxt
    return False
