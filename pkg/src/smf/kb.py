"""SMK knowledge documents: parsing, validation, canonical serialization.

SMK is a line-oriented format for small ontologies. A document declares
classes (multiple inheritance allowed, single root ``Thing``), named
individuals, data properties, object properties, and assertions on classes
or individuals::

    class Furniture extends Thing
    phrase Furniture "furniture"
    individual desk : Desk
    dataprop is_edible
    objprop help_farm_with
    has FoodFamily is_edible
    rel Ox help_farm_with Plow

``#`` starts a comment. Identifiers match ``[A-Za-z][A-Za-z0-9_]*`` and all
declarations share one namespace. A class without an ``extends`` clause is
an implicit subclass of ``Thing``; ``Thing`` itself is declared implicitly
when absent. Strings are double-quoted with ``\\"`` and ``\\\\`` escapes.

Parsed knowledge bases are immutable and safe to share across threads.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field, replace

ROOT_CLASS = "Thing"

_TOKEN = re.compile(
    r"""(?P<ws>\s+)
      | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
      | (?P<string>"(?:\\.|[^"\\])*")
      | (?P<punct>[,:=])
    """,
    re.VERBOSE,
)


class SmkError(Exception):
    """Base class for SMK document and knowledge-base errors."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class SmkSyntaxError(SmkError):
    """A line does not match the statement grammar or violates a structural rule."""


class DuplicateDeclarationError(SmkError):
    """A name is declared more than once."""


class DanglingReferenceError(SmkError):
    """A statement references a name with no suitable declaration."""


class ClassCycleError(SmkError):
    """The superclass graph contains a cycle."""


@dataclass(frozen=True)
class ClassDef:
    name: str
    parents: tuple[str, ...] = ()
    display_phrase: str | None = None


@dataclass(frozen=True)
class IndividualDef:
    name: str
    asserted_classes: tuple[str, ...]


@dataclass(frozen=True)
class PropertyAssertion:
    subject: str
    property: str
    value: str | None = None


@dataclass(frozen=True)
class RelationAssertion:
    subject: str
    predicate: str
    object: str


@dataclass(frozen=True)
class KnowledgeBase:
    """An immutable ontology: classes, individuals, properties, assertions.

    ``source_digest`` is provenance metadata (hash of the canonical
    serialization) and is excluded from equality comparisons.
    """

    classes: dict[str, ClassDef] = field(default_factory=dict)
    individuals: dict[str, IndividualDef] = field(default_factory=dict)
    data_properties: tuple[str, ...] = ()
    object_properties: tuple[str, ...] = ()
    property_assertions: tuple[PropertyAssertion, ...] = ()
    relation_assertions: tuple[RelationAssertion, ...] = ()
    source_digest: str = field(default="", compare=False)

    def declared(self, name: str) -> bool:
        """True if ``name`` is a declared class or individual."""
        return name in self.classes or name in self.individuals


@dataclass(frozen=True)
class Finding:
    kind: str
    severity: str
    message: str
    subject: str | None = None


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...]

    @property
    def ok(self) -> bool:
        return not self.findings


# ---------------------------------------------------------------------------
# scanning


class _Cursor:
    def __init__(self, tokens: list[tuple[str, str, int]], lineno: int):
        self.tokens = tokens
        self.lineno = lineno
        self.pos = 0

    def _peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take_ident(self, what: str) -> str:
        tok = self._peek()
        if tok is None or tok[0] != "ident":
            col = tok[2] if tok else None
            raise SmkSyntaxError(f"expected {what}", self.lineno, col)
        self.pos += 1
        return tok[1]

    def take_string(self, what: str) -> str:
        tok = self._peek()
        if tok is None or tok[0] != "string":
            col = tok[2] if tok else None
            raise SmkSyntaxError(f"expected {what}", self.lineno, col)
        self.pos += 1
        return _unquote(tok[1])

    def take_punct(self, ch: str) -> None:
        tok = self._peek()
        if tok is None or tok[0] != "punct" or tok[1] != ch:
            col = tok[2] if tok else None
            raise SmkSyntaxError(f"expected {ch!r}", self.lineno, col)
        self.pos += 1

    def accept_punct(self, ch: str) -> bool:
        tok = self._peek()
        if tok is not None and tok[0] == "punct" and tok[1] == ch:
            self.pos += 1
            return True
        return False

    def accept_ident(self, word: str) -> bool:
        tok = self._peek()
        if tok is not None and tok[0] == "ident" and tok[1] == word:
            self.pos += 1
            return True
        return False

    def expect_end(self) -> None:
        tok = self._peek()
        if tok is not None:
            raise SmkSyntaxError(f"unexpected {tok[1]!r}", self.lineno, tok[2])


def _unquote(token: str) -> str:
    return re.sub(r"\\(.)", r"\1", token[1:-1])


def _escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace('"', '\\"')


def _tokenize_line(line: str, lineno: int) -> list[tuple[str, str, int]]:
    tokens: list[tuple[str, str, int]] = []
    pos = 0
    while pos < len(line):
        if line[pos] == "#":
            break
        m = _TOKEN.match(line, pos)
        if m is None:
            if line[pos] == '"':
                raise SmkSyntaxError("unterminated string", lineno, pos + 1)
            raise SmkSyntaxError(f"unexpected character {line[pos]!r}", lineno, pos + 1)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), pos + 1))
        pos = m.end()
    return tokens


def _ident_list(cur: _Cursor, what: str) -> tuple[str, ...]:
    names = [cur.take_ident(what)]
    while cur.accept_punct(","):
        names.append(cur.take_ident(what))
    return tuple(names)


def _parse_statement(cur: _Cursor) -> tuple:
    head = cur.take_ident("statement keyword")
    if head == "class":
        name = cur.take_ident("class name")
        parents: tuple[str, ...] = ()
        if cur.accept_ident("extends"):
            parents = _ident_list(cur, "parent class name")
        cur.expect_end()
        return ("class", name, parents)
    if head == "phrase":
        name = cur.take_ident("class name")
        text = cur.take_string("quoted phrase")
        cur.expect_end()
        return ("phrase", name, text)
    if head == "individual":
        name = cur.take_ident("individual name")
        cur.take_punct(":")
        classes = _ident_list(cur, "class name")
        cur.expect_end()
        return ("individual", name, classes)
    if head in ("dataprop", "objprop"):
        name = cur.take_ident("property name")
        cur.expect_end()
        return (head, name)
    if head == "has":
        subject = cur.take_ident("subject")
        prop = cur.take_ident("property name")
        value = None
        if cur.accept_punct("="):
            value = cur.take_string("quoted value")
        cur.expect_end()
        return ("has", subject, prop, value)
    if head == "rel":
        subject = cur.take_ident("subject")
        predicate = cur.take_ident("predicate")
        obj = cur.take_ident("object")
        cur.expect_end()
        return ("rel", subject, predicate, obj)
    raise SmkSyntaxError(f"unknown statement {head!r}", cur.lineno, 1)


def _scan(text: str) -> list[tuple[int, tuple]]:
    statements = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = _tokenize_line(line, lineno)
        if not tokens:
            continue
        statements.append((lineno, _parse_statement(_Cursor(tokens, lineno))))
    return statements


# ---------------------------------------------------------------------------
# parsing


def parse_kb(text: str) -> KnowledgeBase:
    """Parse an SMK document into a validated, canonical knowledge base.

    References may appear before their declarations; resolution happens
    after the whole document is read. Raises :class:`SmkSyntaxError`,
    :class:`DuplicateDeclarationError`, :class:`DanglingReferenceError`,
    or :class:`ClassCycleError`.
    """
    statements = _scan(text)

    declared: dict[str, int] = {}
    classes: dict[str, tuple[tuple[str, ...], int]] = {}
    phrases: dict[str, tuple[str, int]] = {}
    individuals: dict[str, tuple[tuple[str, ...], int]] = {}
    dataprops: dict[str, int] = {}
    objprops: dict[str, int] = {}
    has_stmts: list[tuple[str, str, str | None, int]] = []
    rel_stmts: list[tuple[str, str, str, int]] = []

    def declare(name: str, lineno: int) -> None:
        if name in declared:
            raise DuplicateDeclarationError(
                f"{name!r} already declared on line {declared[name]}", lineno
            )
        declared[name] = lineno

    for lineno, stmt in statements:
        kind = stmt[0]
        if kind == "class":
            _, name, parents = stmt
            declare(name, lineno)
            classes[name] = (parents, lineno)
        elif kind == "phrase":
            _, name, phrase = stmt
            if name in phrases:
                raise DuplicateDeclarationError(
                    f"phrase for {name!r} already declared on line {phrases[name][1]}", lineno
                )
            phrases[name] = (phrase, lineno)
        elif kind == "individual":
            _, name, asserted = stmt
            if name == ROOT_CLASS:
                raise SmkSyntaxError(f"{ROOT_CLASS!r} is reserved for the root class", lineno)
            declare(name, lineno)
            individuals[name] = (asserted, lineno)
        elif kind == "dataprop":
            _, name = stmt
            declare(name, lineno)
            dataprops[name] = lineno
        elif kind == "objprop":
            _, name = stmt
            declare(name, lineno)
            objprops[name] = lineno
        elif kind == "has":
            _, subject, prop, value = stmt
            has_stmts.append((subject, prop, value, lineno))
        else:
            _, subject, predicate, obj = stmt
            rel_stmts.append((subject, predicate, obj, lineno))

    if ROOT_CLASS not in classes:
        classes[ROOT_CLASS] = ((), 0)
        declared.setdefault(ROOT_CLASS, 0)

    parent_map: dict[str, tuple[str, ...]] = {}
    for name, (parents, lineno) in classes.items():
        if name == ROOT_CLASS:
            if parents:
                raise SmkSyntaxError(f"the root class {ROOT_CLASS!r} cannot have parents", lineno)
            parent_map[name] = ()
            continue
        parent_map[name] = parents if parents else (ROOT_CLASS,)

    # resolve references
    for name, (_, lineno) in classes.items():
        for parent in parent_map[name]:
            if parent not in classes:
                raise DanglingReferenceError(
                    f"class {name!r} extends undeclared class {parent!r}", lineno
                )
    for name, (_, lineno) in phrases.items():
        if name not in classes:
            raise DanglingReferenceError(f"phrase for undeclared class {name!r}", lineno)
    for name, (asserted, lineno) in individuals.items():
        for cls in asserted:
            if cls == ROOT_CLASS:
                raise SmkSyntaxError(
                    f"{ROOT_CLASS!r} cannot be asserted as an individual's class", lineno
                )
            if cls not in classes:
                raise DanglingReferenceError(
                    f"individual {name!r} asserts undeclared class {cls!r}", lineno
                )
    for subject, prop, _, lineno in has_stmts:
        if prop not in dataprops:
            raise DanglingReferenceError(f"{prop!r} is not a declared data property", lineno)
        if subject not in classes and subject not in individuals:
            raise DanglingReferenceError(f"undeclared subject {subject!r}", lineno)
    for subject, predicate, obj, lineno in rel_stmts:
        if predicate not in objprops:
            raise DanglingReferenceError(f"{predicate!r} is not a declared object property", lineno)
        if subject not in classes and subject not in individuals:
            raise DanglingReferenceError(f"undeclared subject {subject!r}", lineno)
        if obj not in classes and obj not in individuals:
            raise DanglingReferenceError(f"undeclared object {obj!r}", lineno)

    cycle = _find_cycle(parent_map)
    if cycle is not None:
        raise ClassCycleError("superclass cycle: " + " -> ".join(cycle))

    kb = KnowledgeBase(
        classes={
            name: ClassDef(
                name, tuple(sorted(set(parent_map[name]))), phrases.get(name, (None,))[0]
            )
            for name in sorted(classes)
        },
        individuals={
            name: IndividualDef(name, tuple(sorted(set(individuals[name][0]))))
            for name in sorted(individuals)
        },
        data_properties=tuple(sorted(dataprops)),
        object_properties=tuple(sorted(objprops)),
        property_assertions=tuple(
            sorted(
                {PropertyAssertion(s, p, v) for s, p, v, _ in has_stmts},
                key=lambda pa: (pa.subject, pa.property, pa.value or ""),
            )
        ),
        relation_assertions=tuple(
            sorted(
                {RelationAssertion(s, p, o) for s, p, o, _ in rel_stmts},
                key=lambda ra: (ra.subject, ra.predicate, ra.object),
            )
        ),
    )
    return replace(kb, source_digest=compute_digest(kb))


def _find_cycle(parent_map: dict[str, tuple[str, ...]]) -> list[str] | None:
    # iterative DFS so deep hierarchies cannot hit the recursion limit
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {name: WHITE for name in parent_map}
    for root in sorted(parent_map):
        if color[root] != WHITE:
            continue
        color[root] = GRAY
        stack = [(root, iter(parent_map.get(root, ())))]
        path = [root]
        while stack:
            _, parents = stack[-1]
            advanced = False
            for parent in parents:
                if parent not in color:
                    continue
                if color[parent] == GRAY:
                    start = path.index(parent)
                    return path[start:] + [parent]
                if color[parent] == WHITE:
                    color[parent] = GRAY
                    stack.append((parent, iter(parent_map.get(parent, ()))))
                    path.append(parent)
                    advanced = True
                    break
            if not advanced:
                node, _ = stack.pop()
                color[node] = BLACK
                path.pop()
    return None


# ---------------------------------------------------------------------------
# serialization


def serialize_kb(kb: KnowledgeBase) -> str:
    """Render the canonical form: sections in fixed order, lexicographically
    sorted within each section. ``parse_kb(serialize_kb(kb))`` equals ``kb``.
    """
    lines: list[str] = []
    for name in sorted(kb.classes):
        cdef = kb.classes[name]
        if cdef.parents:
            lines.append(f"class {name} extends {', '.join(sorted(cdef.parents))}")
        else:
            lines.append(f"class {name}")
    for name in sorted(kb.classes):
        phrase = kb.classes[name].display_phrase
        if phrase is not None:
            lines.append(f'phrase {name} "{_escape(phrase)}"')
    for prop in sorted(kb.data_properties):
        lines.append(f"dataprop {prop}")
    for prop in sorted(kb.object_properties):
        lines.append(f"objprop {prop}")
    for name in sorted(kb.individuals):
        asserted = ", ".join(sorted(kb.individuals[name].asserted_classes))
        lines.append(f"individual {name} : {asserted}")
    for pa in sorted(kb.property_assertions, key=lambda a: (a.subject, a.property, a.value or "")):
        line = f"has {pa.subject} {pa.property}"
        if pa.value is not None:
            line += f' = "{_escape(pa.value)}"'
        lines.append(line)
    for ra in sorted(kb.relation_assertions, key=lambda a: (a.subject, a.predicate, a.object)):
        lines.append(f"rel {ra.subject} {ra.predicate} {ra.object}")
    return "\n".join(lines) + "\n"


def compute_digest(kb: KnowledgeBase) -> str:
    """Content hash of the canonical serialization."""
    return hashlib.sha256(serialize_kb(kb).encode("utf-8")).hexdigest()


def empty_kb() -> KnowledgeBase:
    """A knowledge base containing only the root class."""
    kb = KnowledgeBase(classes={ROOT_CLASS: ClassDef(ROOT_CLASS)})
    return replace(kb, source_digest=compute_digest(kb))


# ---------------------------------------------------------------------------
# validation


def validate_kb(kb: KnowledgeBase) -> ValidationReport:
    """Check every structural invariant; findings are data, not failures.

    An empty report means the knowledge base is valid. Useful for bases
    constructed in code rather than parsed (parsing already validates).
    """
    findings: list[Finding] = []

    def err(kind: str, message: str, subject: str | None = None) -> None:
        findings.append(Finding(kind, "error", message, subject))

    overlap = set(kb.classes) & set(kb.individuals)
    for name in sorted(overlap):
        err("duplicate-declaration", f"{name!r} declared as both class and individual", name)
    prop_names = set(kb.data_properties) | set(kb.object_properties)
    for name in sorted(prop_names & (set(kb.classes) | set(kb.individuals))):
        err("duplicate-declaration", f"{name!r} declared as both property and class/individual", name)
    for name in sorted(set(kb.data_properties) & set(kb.object_properties)):
        err("duplicate-declaration", f"{name!r} declared as both data and object property", name)

    if ROOT_CLASS not in kb.classes:
        err("missing-root", f"no {ROOT_CLASS!r} class declared")
    elif kb.classes[ROOT_CLASS].parents:
        err("root-has-parents", f"{ROOT_CLASS!r} must not have parents", ROOT_CLASS)
    for name in sorted(kb.classes):
        cdef = kb.classes[name]
        if name != ROOT_CLASS and not cdef.parents:
            err("multiple-root", f"class {name!r} has no parents and is not {ROOT_CLASS!r}", name)
        for parent in cdef.parents:
            if parent not in kb.classes:
                err("dangling-reference", f"class {name!r} extends undeclared {parent!r}", name)

    parent_map = {
        name: tuple(p for p in cdef.parents if p in kb.classes)
        for name, cdef in kb.classes.items()
    }
    cycle = _find_cycle(parent_map)
    if cycle is not None:
        err("class-cycle", "superclass cycle: " + " -> ".join(cycle), cycle[0])

    for name in sorted(kb.individuals):
        ind = kb.individuals[name]
        if not ind.asserted_classes:
            err("empty-individual", f"individual {name!r} asserts no classes", name)
        for cls in ind.asserted_classes:
            if cls == ROOT_CLASS:
                err("root-asserted", f"individual {name!r} asserts {ROOT_CLASS!r} directly", name)
            elif cls not in kb.classes:
                err("dangling-reference", f"individual {name!r} asserts undeclared {cls!r}", name)

    for pa in kb.property_assertions:
        if pa.property not in kb.data_properties:
            err("dangling-reference", f"{pa.property!r} is not a declared data property", pa.subject)
        if not kb.declared(pa.subject):
            err("dangling-reference", f"property assertion on undeclared {pa.subject!r}", pa.subject)
    for ra in kb.relation_assertions:
        if ra.predicate not in kb.object_properties:
            err("dangling-reference", f"{ra.predicate!r} is not a declared object property", ra.subject)
        if not kb.declared(ra.subject):
            err("dangling-reference", f"relation on undeclared subject {ra.subject!r}", ra.subject)
        if not kb.declared(ra.object):
            err("dangling-reference", f"relation on undeclared object {ra.object!r}", ra.object)

    return ValidationReport(tuple(findings))
