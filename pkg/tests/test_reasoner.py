import random

import pytest
from randgen import brute_closure, brute_depths, brute_lca, random_dag_kb, random_kb

from smf.kb import parse_kb
from smf.reasoner import (
    UnknownClassError,
    UnknownIndividualError,
    ancestors,
    get_properties,
    get_relationships,
    is_subclass,
    lowest_level_ancestor,
    match_view_with_individual,
)

DIAMOND = """
class A extends Thing
class B extends A
class C extends A
class D extends B, C
individual x : D
"""


def entries(kb, individual):
    return [(e.cls, e.depth) for e in ancestors(individual, kb).entries]


def test_match_found(fixture_kb):
    assert match_view_with_individual("banana", fixture_kb) == "banana"
    assert match_view_with_individual("desktop_computer", fixture_kb) == "desktop_computer"


def test_match_absent(fixture_kb):
    assert match_view_with_individual("unicorn", fixture_kb) is None


def test_ancestors_desk(fixture_kb):
    assert entries(fixture_kb, "desk") == [
        ("Desk", 0), ("Furniture", 1), ("PhysicalObject", 2), ("Thing", 3)
    ]


def test_ancestors_directly_under_root_child():
    kb = parse_kb("class C\nindividual x : C")
    assert entries(kb, "x") == [("C", 0), ("Thing", 1)]


def test_ancestors_diamond_depths():
    kb = parse_kb(DIAMOND)
    assert entries(kb, "x") == [("D", 0), ("B", 1), ("C", 1), ("A", 2), ("Thing", 3)]


def test_ancestors_unknown_individual(fixture_kb):
    with pytest.raises(UnknownIndividualError):
        ancestors("ghost", fixture_kb)


def test_properties_inherited(fixture_kb):
    assert get_properties("ice_cream", fixture_kb) == {("is_edible", None)}


def test_properties_empty(fixture_kb):
    assert get_properties("desk", fixture_kb) == set()


def test_properties_collapse_keeps_nearest_value():
    kb = parse_kb('class C\nindividual x : C\ndataprop p\nhas x p = "1"\nhas C p = "2"')
    assert get_properties("x", kb) == {("p", "1")}


def test_relationships_class_level(fixture_kb):
    rels = get_relationships("ox", "plow", fixture_kb)
    assert {(r.subject_individual, r.predicate, r.object_individual) for r in rels} == {
        ("ox", "help_farm_with", "plow")
    }
    rel = next(iter(rels))
    assert (rel.asserted_subject, rel.asserted_object) == ("Ox", "Plow")


def test_relationships_mirror_direction(fixture_kb):
    assert get_relationships("quilt", "crib", fixture_kb) == get_relationships(
        "crib", "quilt", fixture_kb
    )
    rels = get_relationships("crib", "quilt", fixture_kb)
    assert {(r.subject_individual, r.predicate, r.object_individual) for r in rels} == {
        ("quilt", "lays_on_furniture", "crib")
    }


def test_relationships_none(fixture_kb):
    assert get_relationships("desk", "dining_table", fixture_kb) == set()


def test_lca_primate(fixture_kb):
    a = ancestors("orangutan", fixture_kb)
    b = ancestors("langur", fixture_kb)
    assert lowest_level_ancestor(a, b) == "Primate"


def test_lca_with_self(fixture_kb):
    a = ancestors("desk", fixture_kb)
    assert lowest_level_ancestor(a, a) == "Desk"


def test_lca_only_root_in_common(fixture_kb):
    a = ancestors("ox", fixture_kb)
    b = ancestors("plow", fixture_kb)
    assert lowest_level_ancestor(a, b) is None


def test_is_subclass(fixture_kb):
    assert is_subclass("Primate", "Animal", fixture_kb)
    assert is_subclass("Primate", "Primate", fixture_kb)
    assert not is_subclass("Furniture", "Animal", fixture_kb)
    with pytest.raises(UnknownClassError):
        is_subclass("Primate", "Ghost", fixture_kb)


def test_ancestor_ordering_invariants(fixture_kb):
    for individual in fixture_kb.individuals:
        alist = ancestors(individual, fixture_kb)
        assert alist.entries[-1].cls == "Thing"
        inner = alist.entries[:-1]
        depths = [e.depth for e in inner]
        assert depths == sorted(depths)
        for d in set(depths):
            at_depth = [e.cls for e in inner if e.depth == d]
            assert at_depth == sorted(at_depth)
        asserted = set(fixture_kb.individuals[individual].asserted_classes)
        assert {e.cls for e in alist.entries if e.depth == 0} == asserted


def test_depths_match_brute_force_on_random_dags():
    rng = random.Random(7)
    for _ in range(200):
        kb = random_dag_kb(rng, max_classes=30)
        for individual in kb.individuals:
            alist = ancestors(individual, kb)
            expected = brute_depths(kb, individual)
            assert dict({e.cls: e.depth for e in alist.entries}) == expected
            assert set(alist.classes()) == brute_closure(kb, individual)


def test_lca_matches_brute_force_on_random_dags():
    rng = random.Random(11)
    for _ in range(300):
        kb = random_dag_kb(rng, max_classes=30)
        a = ancestors("i1", kb)
        b = ancestors("i2", kb)
        assert lowest_level_ancestor(a, b) == brute_lca(a, b)


def test_lca_symmetric_on_trees():
    rng = random.Random(13)
    for _ in range(200):
        kb = random_kb(rng, tree=True, with_assertions=False)
        names = sorted(kb.individuals)
        for i1 in names:
            for i2 in names:
                a, b = ancestors(i1, kb), ancestors(i2, kb)
                assert lowest_level_ancestor(a, b) == lowest_level_ancestor(b, a)


def test_properties_superset_of_each_ancestor():
    rng = random.Random(17)
    for _ in range(100):
        kb = random_kb(rng)
        for individual in kb.individuals:
            names = {name for name, _ in get_properties(individual, kb)}
            for cls in ancestors(individual, kb).classes():
                asserted_here = {pa.property for pa in kb.property_assertions
                                 if pa.subject == cls}
                assert asserted_here <= names


def test_relationship_queries_commute():
    rng = random.Random(19)
    for _ in range(100):
        kb = random_kb(rng)
        names = sorted(kb.individuals)
        for i1 in names:
            for i2 in names:
                assert get_relationships(i1, i2, kb) == get_relationships(i2, i1, kb)
