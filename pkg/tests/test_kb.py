import random

import pytest
from randgen import random_kb

from smf.kb import (
    ROOT_CLASS,
    ClassCycleError,
    ClassDef,
    DanglingReferenceError,
    DuplicateDeclarationError,
    IndividualDef,
    KnowledgeBase,
    SmkSyntaxError,
    empty_kb,
    parse_kb,
    serialize_kb,
    validate_kb,
)

MINIMAL = "class Thing\nclass Furniture extends Thing\nindividual desk : Furniture"


def test_parse_minimal_document():
    kb = parse_kb(MINIMAL)
    assert set(kb.classes) == {"Thing", "Furniture"}
    assert kb.classes["Furniture"].parents == ("Thing",)
    assert kb.individuals["desk"].asserted_classes == ("Furniture",)


def test_smallest_class_cycle():
    with pytest.raises(ClassCycleError):
        parse_kb("class A extends B\nclass B extends A")


def test_fixture_kb_is_valid(fixture_kb):
    assert validate_kb(fixture_kb).ok


def test_round_trip_minimal():
    kb = parse_kb(MINIMAL)
    assert parse_kb(serialize_kb(kb)) == kb


def test_round_trip_fixture(fixture_kb):
    assert parse_kb(serialize_kb(fixture_kb)) == fixture_kb


def test_serialize_is_deterministic(fixture_kb):
    assert serialize_kb(fixture_kb) == serialize_kb(fixture_kb)


def test_serialize_empty_kb():
    assert serialize_kb(empty_kb()) == "class Thing\n"
    assert serialize_kb(parse_kb("")) == "class Thing\n"


def test_canonical_form_ignores_statement_order():
    shuffled = "individual desk : Furniture\nclass Furniture extends Thing\nclass Thing"
    assert parse_kb(shuffled) == parse_kb(MINIMAL)
    assert serialize_kb(parse_kb(shuffled)) == serialize_kb(parse_kb(MINIMAL))


def test_forward_references_allowed():
    kb = parse_kb("rel a likes b\nobjprop likes\nindividual a : C\nindividual b : C\nclass C")
    assert len(kb.relation_assertions) == 1


def test_implicit_root_and_parent():
    kb = parse_kb("class A")
    assert set(kb.classes) == {"Thing", "A"}
    assert kb.classes["A"].parents == ("Thing",)


def test_comments_and_blank_lines():
    kb = parse_kb("# heading\n\nclass A  # trailing\n  \nindividual x : A")
    assert "A" in kb.classes and "x" in kb.individuals


def test_phrase_declaration_and_escapes():
    kb = parse_kb('class A\nphrase A "says \\"hi\\""')
    assert kb.classes["A"].display_phrase == 'says "hi"'
    assert parse_kb(serialize_kb(kb)) == kb


def test_property_assertion_with_value():
    kb = parse_kb('class A\nindividual x : A\ndataprop color\nhas x color = "red"')
    assert kb.property_assertions[0].value == "red"
    assert parse_kb(serialize_kb(kb)) == kb


def test_syntax_error_reports_line_and_column():
    with pytest.raises(SmkSyntaxError) as excinfo:
        parse_kb("class A\nclass 9bad")
    assert excinfo.value.line == 2
    assert excinfo.value.column is not None


def test_unterminated_string():
    with pytest.raises(SmkSyntaxError):
        parse_kb('class A\nphrase A "oops')


def test_unknown_statement_keyword():
    with pytest.raises(SmkSyntaxError):
        parse_kb("klass A")


def test_duplicate_class_declaration():
    with pytest.raises(DuplicateDeclarationError):
        parse_kb("class A\nclass A")


def test_duplicate_across_namespaces():
    with pytest.raises(DuplicateDeclarationError):
        parse_kb("class A\nclass B\nindividual A : B")
    with pytest.raises(DuplicateDeclarationError):
        parse_kb("class A\ndataprop A")


def test_duplicate_phrase():
    with pytest.raises(DuplicateDeclarationError):
        parse_kb('class A\nphrase A "one"\nphrase A "two"')


def test_dangling_parent():
    with pytest.raises(DanglingReferenceError):
        parse_kb("class A extends Missing")


def test_dangling_individual_class():
    with pytest.raises(DanglingReferenceError):
        parse_kb("individual x : Missing")


def test_dangling_property_and_relation():
    with pytest.raises(DanglingReferenceError):
        parse_kb("class A\nindividual x : A\nhas x missing")
    with pytest.raises(DanglingReferenceError):
        parse_kb("class A\nindividual x : A\nobjprop r\nrel x r ghost")
    # declared, but as the wrong kind of property
    with pytest.raises(DanglingReferenceError):
        parse_kb("class A\nindividual x : A\nobjprop r\nhas x r")


def test_root_constraints():
    with pytest.raises(SmkSyntaxError):
        parse_kb("class A\nclass Thing extends A")
    with pytest.raises(SmkSyntaxError):
        parse_kb("individual x : Thing")
    with pytest.raises(SmkSyntaxError):
        parse_kb("class A\nindividual Thing : A")


def test_reflexive_relation_allowed():
    kb = parse_kb("class A\nindividual x : A\nobjprop knows\nrel x knows x")
    assert kb.relation_assertions[0].subject == kb.relation_assertions[0].object


def test_validate_reports_dangling_reference():
    kb = KnowledgeBase(
        classes={ROOT_CLASS: ClassDef(ROOT_CLASS), "A": ClassDef("A", (ROOT_CLASS,))},
        individuals={"x": IndividualDef("x", ("Ghost",))},
    )
    report = validate_kb(kb)
    assert not report.ok
    assert any(f.kind == "dangling-reference" for f in report.findings)


def test_validate_reports_multiple_roots():
    kb = KnowledgeBase(
        classes={ROOT_CLASS: ClassDef(ROOT_CLASS), "Thing2": ClassDef("Thing2")},
    )
    report = validate_kb(kb)
    assert [f.kind for f in report.findings] == ["multiple-root"]


def test_validate_reports_cycle():
    kb = KnowledgeBase(
        classes={
            ROOT_CLASS: ClassDef(ROOT_CLASS),
            "A": ClassDef("A", ("B",)),
            "B": ClassDef("B", ("A",)),
        },
    )
    assert any(f.kind == "class-cycle" for f in validate_kb(kb).findings)


def test_digest_is_stable_and_canonical(fixture_kb):
    reparsed = parse_kb(serialize_kb(fixture_kb))
    assert reparsed.source_digest == fixture_kb.source_digest
    assert len(fixture_kb.source_digest) == 64


def test_random_kbs_round_trip():
    rng = random.Random(20260810)
    for _ in range(60):
        kb = random_kb(rng)
        assert validate_kb(kb).ok
        text = serialize_kb(kb)
        assert parse_kb(text) == kb
        assert serialize_kb(parse_kb(text)) == text
