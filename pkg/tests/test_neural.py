import warnings

import numpy as np
import pytest

from ebr.dl import AtomicRole, InverseRole, UniversalRole, Negation, Conjunction, Disjunction, Existential, \
    AtLeast, AtMost, Universal, UnknownNameError, parse_concept, parse_kb
from ebr.harness import sample_concepts
from ebr.neural import (EmbeddingPredictor, NeuralDomain, NonSimpleRoleWarning, make_perfect_predictor, retrieve,
                        role_pairs)
from ebr.oracle import materialize, oracle_retrieve
from ebr.triples import RDF_TYPE

from conftest import kb_named


def perfect(kb):
    return make_perfect_predictor(materialize(kb))


def test_atomic_and_complement():
    p = perfect(parse_kb("ClassAssertion(Person bob)"))
    dom = NeuralDomain(("ani", "bob"))
    assert retrieve(parse_concept("Person"), p, dom) == {"bob"}
    assert retrieve(parse_concept("not Person"), p, dom) == {"ani"}


def test_incomplete_knows_examples():
    kb = kb_named("incomplete-knows")
    p, dom = perfect(kb), NeuralDomain.from_kb(kb)
    assert retrieve(parse_concept("knows some Person"), p, dom) == {"Bob"}
    assert retrieve(parse_concept("knows min 1 Person"), p, dom) == {"Bob"}
    assert retrieve(parse_concept("{Bob}"), p, dom) == {"Bob"}


def test_role_pairs():
    kb = parse_kb("ObjectPropertyAssertion(knows Bob Paul)")
    p, dom = perfect(kb), NeuralDomain.from_kb(kb)
    assert role_pairs(AtomicRole("knows"), p, dom) == {("Bob", "Paul")}
    assert role_pairs(InverseRole("knows"), p, dom) == {("Paul", "Bob")}
    assert len(role_pairs(UniversalRole(), p, dom)) == 4
    with pytest.raises(UnknownNameError):
        role_pairs(AtomicRole("likes"), p, dom)


def test_perfect_predictor_follows_materialization():
    p = perfect(parse_kb("ClassAssertion(A a)\nSubClassOf(A B)\nObjectPropertyAssertion(r a b)"))
    assert p.predict("a", RDF_TYPE, "B") == 1.0
    assert p.predict("a", "r", "b") == 1.0
    assert p.predict("b", "r", "a") == 0.0
    assert p.predict("b", RDF_TYPE, "A") == 0.0


def test_gamma_bounds():
    for g in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            NeuralDomain(("a",), g)


def test_nominal_outside_domain_is_empty():
    p = perfect(parse_kb("ClassAssertion(A a)\nClassAssertion(A b)"))
    assert retrieve(parse_concept("{b}"), p, NeuralDomain(("a",))) == set()


def test_unknown_name_with_kb_domain():
    kb = kb_named("father")
    with pytest.raises(UnknownNameError):
        retrieve(parse_concept("Nope"), perfect(kb), NeuralDomain.from_kb(kb))


def test_non_simple_role_warns_but_answers():
    kb = parse_kb("TransitiveObjectProperty(r)\nObjectPropertyAssertion(r a b)\nObjectPropertyAssertion(r b c)")
    p, dom = perfect(kb), NeuralDomain.from_kb(kb)
    with pytest.warns(NonSimpleRoleWarning):
        out = retrieve(parse_concept("r min 2 Top"), p, dom)
    assert out == {"a"}
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        retrieve(parse_concept("r some Top"), p, dom)


@pytest.fixture(scope="module")
def family_setup():
    kb = kb_named("family-small")
    mkb = materialize(kb)
    return kb, mkb, make_perfect_predictor(mkb), NeuralDomain.from_kb(kb)


def test_oracle_equivalence_200(family_setup):
    kb, mkb, p, dom = family_setup
    for c in sample_concepts(kb.signature, 200, 3, seed=1, mkb=mkb):
        assert retrieve(c, p, dom) == oracle_retrieve(c, mkb)


@pytest.fixture(scope="module")
def trained_predictor(family_model):
    return EmbeddingPredictor(family_model)


def test_algebraic_identities_under_trained_predictor(family_setup, trained_predictor):
    kb, _, _, dom = family_setup
    p = trained_predictor
    q = lambda c: retrieve(c, p, dom)
    for c in sample_concepts(kb.signature, 60, 2, seed=3):
        d = parse_concept("Female or hasChild some Male")
        r = AtomicRole("hasChild")
        assert q(Negation(Negation(c))) == q(c)
        assert q(Negation(Disjunction(c, d))) == q(Conjunction(Negation(c), Negation(d)))
        assert q(Negation(Conjunction(c, d))) == q(Disjunction(Negation(c), Negation(d)))
        assert q(Universal(r, c)) == q(Negation(Existential(r, Negation(c))))
        assert q(AtLeast(1, r, c)) == q(Existential(r, c))
        assert q(AtMost(0, r, c)) == q(Negation(Existential(r, c)))


def test_universal_is_honored_directly(family_setup, trained_predictor):
    """Check ∀ against a literal per-individual reading of the thresholded role pairs."""
    kb, _, _, dom = family_setup
    p = trained_predictor
    r = AtomicRole("hasChild")
    pairs = role_pairs(r, p, dom)
    for c in sample_concepts(kb.signature, 20, 2, seed=9):
        ext = retrieve(c, p, dom)
        expected = {x for x in dom.individuals if all(y in ext for (h, y) in pairs if h == x)}
        assert retrieve(Universal(r, c), p, dom) == expected


def test_gamma_monotonicity(family_setup, trained_predictor):
    kb, _, _, _ = family_setup
    p = trained_predictor
    gammas = (0.1, 0.3, 0.5, 0.7, 0.9)
    for name in kb.signature.concepts:
        c = parse_concept(name)
        exts = [retrieve(c, p, NeuralDomain(kb.signature.individuals, g)) for g in gammas]
        assert all(b <= a for a, b in zip(exts, exts[1:]))
    for role in kb.signature.roles:
        exts = [role_pairs(AtomicRole(role), p, NeuralDomain(kb.signature.individuals, g)) for g in gammas]
        assert all(b <= a for a, b in zip(exts, exts[1:]))


def test_embedding_predictor_outputs_are_probabilities(trained_predictor):
    p = trained_predictor
    v = p.predict_all_tails("anna", "hasChild")
    assert v.shape == (len(p.entities),) and np.all((v >= 0) & (v <= 1))
    assert p.predict("nobody", "hasChild", "anna") == 0.0
    assert not p.predict_all_heads("hasChild", "nobody").any()
