import random
import string

import pytest
from randgen import random_kb, random_label

from smf.converge import (
    Convergence,
    OutcomeKind,
    View,
    classify_outcome,
    converge,
    explain,
    normalize,
    render_convergence,
    render_explanation,
)
from smf.kb import parse_kb
from smf.reasoner import ancestors, get_properties


def view(raw):
    return View.from_raw(raw)


def test_normalize_examples():
    assert normalize("desktop computer") == "desktop_computer"
    assert normalize("Ox") == "ox"
    assert normalize("  table   lamp ") == "table_lamp"


def test_normalize_whitespace_only_is_an_error():
    with pytest.raises(ValueError):
        normalize("   ")


def test_normalize_idempotent_on_random_strings():
    rng = random.Random(23)
    alphabet = string.ascii_letters + string.digits + "  -_'."
    for _ in range(500):
        raw = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 20)))
        try:
            once = normalize(raw)
        except ValueError:
            continue
        assert normalize(once) == once


def test_view_checks_normalization():
    with pytest.raises(ValueError):
        View("Ox", "Ox")


def test_explain_desk_desktop_computer(fixture_kb):
    e = explain(view("desk"), view("desktop computer"), fixture_kb)
    assert e.rendered == (
        "desk is a kind of furniture and desktop computer is a kind of computing device"
    )
    assert (e.left_class, e.right_class) == ("Furniture", "ComputingDevice")
    assert render_explanation(e) == e.rendered


def test_explain_cd_player_radio(fixture_kb):
    e = explain(view("CD player"), view("radio"), fixture_kb)
    assert e.rendered == (
        "CD player is a kind of listening device and radio is a kind of listening device"
    )


def test_explain_backpack_purse(fixture_kb):
    e = explain(view("backpack"), view("purse"), fixture_kb)
    assert e.rendered == (
        "backpack is a kind of carrying device and purse is a kind of carrying device"
    )


def test_explain_unmatched_label_is_absent(fixture_kb):
    assert explain(view("desk"), view("unicorn"), fixture_kb) is None


def test_explain_requires_differing_views(fixture_kb):
    with pytest.raises(ValueError):
        explain(view("desk"), view("desk"), fixture_kb)


def test_explain_falls_back_to_class_names():
    kb = parse_kb(
        "class A_One extends Thing\nclass B_Two extends Thing\n"
        "individual a : A_One\nindividual b : B_Two"
    )
    e = explain(view("a"), view("b"), kb)
    assert e.rendered == "a is a kind of a one and b is a kind of b two"


def test_converge_table_lamp_dining_table(fixture_kb):
    c = converge(view("table lamp"), view("dining table"), fixture_kb)
    assert c == Convergence(abstraction="Furniture")


def test_converge_cd_player_radio(fixture_kb):
    c = converge(view("CD player"), view("radio"), fixture_kb)
    assert c == Convergence(abstraction="ListeningDevice")


def test_converge_ox_plow_relationship_only(fixture_kb):
    c = converge(view("ox"), view("plow"), fixture_kb)
    assert c.abstraction is None
    assert c.properties == frozenset()
    assert {(r.subject_individual, r.predicate, r.object_individual)
            for r in c.relationships} == {("ox", "help_farm_with", "plow")}


def test_converge_dessert_property_and_abstraction(fixture_kb):
    c = converge(view("ice cream"), view("mashed potato"), fixture_kb)
    assert c.abstraction == "FoodFamily"
    assert c.properties == frozenset({"is_edible"})
    assert c.relationships == frozenset()


def test_converge_unmatched_label_is_empty(fixture_kb):
    assert converge(view("desk"), view("unicorn"), fixture_kb).is_empty()


def test_converge_explained_but_empty(fixture_kb):
    # both matched, disjoint branches, no shared properties or relations
    assert converge(view("desk"), view("ox"), fixture_kb).is_empty()


def test_classify_same(fixture_kb):
    outcome = classify_outcome(view("typewriter"), view("typewriter"), fixture_kb)
    assert outcome.kind is OutcomeKind.SAME
    assert outcome.convergence is None and outcome.explanation is None


def test_classify_unified(fixture_kb):
    outcome = classify_outcome(view("orangutan"), view("langur"), fixture_kb)
    assert outcome.kind is OutcomeKind.UNIFIED
    assert outcome.explained
    assert outcome.convergence.abstraction == "Primate"


def test_classify_disunited_unexplained(fixture_kb):
    outcome = classify_outcome(view("desk"), view("unicorn"), fixture_kb)
    assert outcome.kind is OutcomeKind.DISUNITED
    assert not outcome.explained


def test_classify_disunited_explained(fixture_kb):
    outcome = classify_outcome(view("desk"), view("ox"), fixture_kb)
    assert outcome.kind is OutcomeKind.DISUNITED
    assert outcome.explained


def test_render_convergence_abstraction(fixture_kb):
    assert render_convergence(Convergence(abstraction="ListeningDevice"), fixture_kb) == [
        "listening device"
    ]


def test_render_convergence_relationship(fixture_kb):
    c = converge(view("crib"), view("quilt"), fixture_kb)
    assert render_convergence(c, fixture_kb) == ["quilt lays on furniture crib"]


def test_render_convergence_multiple_components(fixture_kb):
    c = converge(view("ice cream"), view("mashed potato"), fixture_kb)
    assert render_convergence(c, fixture_kb) == ["food family", "is edible"]


def test_render_convergence_empty_is_an_error(fixture_kb):
    with pytest.raises(ValueError):
        render_convergence(Convergence(), fixture_kb)


def _random_view_pair(rng, kb):
    for _ in range(20):
        v1 = View.from_raw(random_label(rng, kb))
        v2 = View.from_raw(random_label(rng, kb))
        if v1.normalized_label != v2.normalized_label:
            return v1, v2
    return None


def test_unexplained_pairs_never_unify():
    rng = random.Random(29)
    checked = 0
    while checked < 500:
        kb = random_kb(rng)
        pair = _random_view_pair(rng, kb)
        if pair is None:
            continue
        v1, v2 = pair
        if explain(v1, v2, kb) is None:
            assert converge(v1, v2, kb).is_empty()
        checked += 1


def test_converge_properties_are_sound():
    rng = random.Random(31)
    for _ in range(200):
        kb = random_kb(rng)
        pair = _random_view_pair(rng, kb)
        if pair is None:
            continue
        v1, v2 = pair
        c = converge(v1, v2, kb)
        if c.is_empty():
            continue
        i1, i2 = v1.normalized_label, v2.normalized_label
        if i1 in kb.individuals and i2 in kb.individuals:
            names1 = {name for name, _ in get_properties(i1, kb)}
            names2 = {name for name, _ in get_properties(i2, kb)}
            assert c.properties <= names1 and c.properties <= names2
            if c.abstraction is not None:
                assert c.abstraction != "Thing"
                assert c.abstraction in ancestors(i1, kb).classes()
                assert c.abstraction in ancestors(i2, kb).classes()


def test_converge_symmetry():
    rng = random.Random(37)
    for _ in range(200):
        kb = random_kb(rng)
        pair = _random_view_pair(rng, kb)
        if pair is None:
            continue
        v1, v2 = pair
        c12 = converge(v1, v2, kb)
        c21 = converge(v2, v1, kb)
        assert c12.is_empty() == c21.is_empty()
        assert c12.properties == c21.properties
        assert c12.relationships == c21.relationships


def test_converge_abstraction_symmetric_on_trees():
    rng = random.Random(41)
    for _ in range(200):
        kb = random_kb(rng, tree=True)
        pair = _random_view_pair(rng, kb)
        if pair is None:
            continue
        v1, v2 = pair
        assert converge(v1, v2, kb).abstraction == converge(v2, v1, kb).abstraction
