from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pfl.carrier import Carrier, Subset, powerset
from pfl.geom import (
    BOTTOM,
    TOP,
    And,
    Atom,
    GeometricAxiom,
    GeometricTheory,
    Or,
    atoms,
    enumerate_models,
    format_body,
    is_model,
    is_normal_form,
    model_generators,
    rank,
    rank1_axiom,
    rank1_disjuncts,
    satisfies,
)
from pfl.generation import strongly_generates
from pfl.utils import CarrierMismatch

S = Carrier("S", (0, 1))


def test_satisfies():
    assert satisfies(S.singleton(0), Or((And((Atom(0),)),)))
    assert satisfies(S.empty(), TOP)
    assert not satisfies(S.full(), BOTTOM)
    assert satisfies(S.empty(), Or((And((Atom(0),)), And(()))))


def test_models_of_fact():
    theory = GeometricTheory(S, (rank1_axiom(S.empty(), [S.singleton(0)]),))
    assert [str(m) for m in enumerate_models(theory)] == ["{0}", "{0, 1}"]
    assert is_model(S.singleton(0), theory)
    assert not is_model(S.singleton(1), theory)


def test_empty_theory_has_every_model():
    assert enumerate_models(GeometricTheory(S, ())) == powerset(S)


def test_negative_axiom():
    theory = GeometricTheory(S, (GeometricAxiom(S.singleton(0), BOTTOM),))
    assert [str(m) for m in enumerate_models(theory)] == ["{}", "{1}"]


def test_contradiction_has_no_models():
    theory = GeometricTheory(S, (GeometricAxiom(S.empty(), BOTTOM),))
    assert len(enumerate_models(theory)) == 0


def test_unknown_atom_rejected():
    with pytest.raises(CarrierMismatch, match="atom 7"):
        GeometricTheory(S, (GeometricAxiom(S.empty(), Atom(7)),))


@pytest.mark.parametrize(
    "body, expected",
    [
        (Atom(0), 0),
        (TOP, 0),
        (BOTTOM, 1),
        (Or((And((Atom(0),)),)), 1),
        (Or((Or((Atom(0),)),)), 1),
        (Or((And((Or((Atom(0), Atom(1))),)),)), 2),
    ],
)
def test_rank(body, expected):
    assert rank(body) == expected


def test_normal_form():
    assert is_normal_form(Or((And((Atom(0), Atom(1))), And(()))), 1)
    assert not is_normal_form(And((Atom(0),)), 1)
    nested = Or((And((Or((And((Atom(0),)),)),)),))
    assert not is_normal_form(nested, 1)
    assert is_normal_form(nested, 2)


def test_rank1_disjuncts_round_trip():
    axiom = rank1_axiom(S.singleton(0), [S.full(), S.empty()])
    assert rank1_disjuncts(axiom) == (S.full(), S.empty())
    assert str(axiom) == "{0} |- 0 & 1 | top"
    assert GeometricTheory(S, (axiom,)).is_rank1()


def test_format_body():
    body = And((Or((And((Atom(0),)), And((Atom(1),)))), Atom(1)))
    assert format_body(body) == "(0 | 1) & 1"
    assert format_body(BOTTOM) == "bottom"
    assert atoms(body) == {0, 1}


def body_strategy(labels):
    atom = st.sampled_from(labels).map(Atom)
    return st.recursive(
        atom,
        lambda inner: st.one_of(
            st.lists(inner, max_size=3).map(lambda cs: And(tuple(cs))),
            st.lists(inner, max_size=3).map(lambda cs: Or(tuple(cs))),
        ),
        max_leaves=6,
    )


@given(st.lists(st.tuples(st.integers(0, 7), body_strategy([0, 1, 2])), max_size=3))
def test_vectorised_models_match_pointwise(axioms):
    c = Carrier("S", (0, 1, 2))
    theory = GeometricTheory(c, tuple(GeometricAxiom(Subset(c, p), body) for p, body in axioms))
    expected = [alpha for alpha in powerset(c) if is_model(alpha, theory)]
    assert list(enumerate_models(theory)) == expected


def test_model_generators():
    theory = GeometricTheory(S, (rank1_axiom(S.empty(), [S.singleton(0), S.singleton(1)]),))
    generators = model_generators(theory)
    assert [str(g) for g in generators] == ["{0}", "{1}"]
    report = strongly_generates(generators, enumerate_models(theory))
    assert not report
    assert [str(part) for part in report.witness] == ["{0, 1}", "{0, 1}"]
    assert strongly_generates(enumerate_models(theory), enumerate_models(theory))


@settings(max_examples=500)
@given(body_strategy([0, 1, 2]))
def test_satisfies_is_monotone(body):
    c = Carrier("S", (0, 1, 2))
    subsets = list(powerset(c))
    for alpha in subsets:
        if not satisfies(alpha, body):
            continue
        for wider in subsets:
            if alpha.mask & ~wider.mask == 0:
                assert satisfies(wider, body)


def expand(body) -> list[frozenset]:
    """disjunctive expansion of a body into the atom sets of its conjunctions"""
    if isinstance(body, Atom):
        return [frozenset((body.label,))]
    parts = [expand(child) for child in body.children]
    if isinstance(body, Or):
        return [conj for part in parts for conj in part]
    return [frozenset().union(*picks) for picks in product(*parts)]


def rank2_strategy(labels):
    conj = st.lists(st.sampled_from(labels).map(Atom), max_size=3).map(lambda cs: And(tuple(cs)))
    inner = st.lists(conj, max_size=3).map(lambda cs: Or(tuple(cs)))
    outer_conj = st.lists(inner, max_size=3).map(lambda cs: And(tuple(cs)))
    return st.lists(outer_conj, min_size=1, max_size=3).map(lambda cs: Or(tuple(cs)))


@settings(max_examples=200)
@given(rank2_strategy([0, 1, 2]), st.integers(0, 7))
def test_rank2_expansion_preserves_models(body, premise):
    c = Carrier("S", (0, 1, 2))
    flat = Or(tuple(And(tuple(Atom(label) for label in sorted(conj))) for conj in expand(body)))
    assert is_normal_form(body, 2)
    assert is_normal_form(flat, 1)
    assert rank(flat) <= 1
    for alpha in powerset(c):
        assert satisfies(alpha, flat) == satisfies(alpha, body)
    nested = GeometricTheory(c, (GeometricAxiom(Subset(c, premise), body),))
    expanded = GeometricTheory(c, (GeometricAxiom(Subset(c, premise), flat),))
    assert enumerate_models(nested) == enumerate_models(expanded)
