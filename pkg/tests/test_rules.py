from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pfl.carrier import Carrier, Subset, SubsetFamily, fin_carrier, powerset
from pfl.generation import generates, minimal_generating
from pfl.geom import And, Atom, GeometricAxiom, GeometricTheory, Or, enumerate_models, rank1_axiom
from pfl.rules import (
    STAR,
    Rule,
    RuleSet,
    biclosed_to_elementary,
    binarize,
    elementary_to_biclosed,
    enumerate_biclosed,
    enumerate_closed,
    is_biclosed,
    is_closed,
    phi,
    psi,
    restrict_generators,
    rules_from_theory,
    theory_from_rules,
)
from pfl.utils import InvalidStructure

S01 = Carrier("S", (0, 1))


def rule(c: Carrier, premise, conclusion) -> Rule:
    return Rule(c.subset(premise), c.subset(conclusion))


@pytest.fixture
def r01() -> RuleSet:
    return RuleSet(S01, (rule(S01, [0], [1]),))


def masks(family: SubsetFamily) -> list[int]:
    return list(family.masks)


def rule_sets(size: int, max_rules: int, max_premise: int | None = None):
    """every rule set over a carrier of `size` with at most `max_rules` rules, premises capped in size"""
    c = Carrier("S", tuple(range(size)))
    subsets = list(powerset(c))
    premises = [s for s in subsets if max_premise is None or len(s) <= max_premise]
    rules = [Rule(a, b) for a in premises for b in subsets]
    for n in range(max_rules + 1):
        for chosen in combinations(rules, n):
            yield RuleSet(c, chosen)


def random_rules(size: int):
    c = Carrier("S", tuple(range(size)))
    pair = st.tuples(st.integers(0, (1 << size) - 1), st.integers(0, (1 << size) - 1))
    return st.lists(pair, max_size=3).map(
        lambda pairs: RuleSet(c, tuple(Rule(Subset(c, a), Subset(c, b)) for a, b in pairs))
    )


@pytest.mark.parametrize(
    "alpha, expected",
    [([1], True), ([0], False), ([], True), ([0, 1], True)],
)
def test_is_closed(r01, alpha, expected):
    assert is_closed(S01.subset(alpha), r01) is expected


def test_no_rules_everything_closed():
    empty = RuleSet(S01, ())
    assert all(is_closed(alpha, empty) for alpha in powerset(S01))
    assert masks(enumerate_closed(empty)) == [0, 1, 2, 3]


@pytest.mark.parametrize("alpha, expected", [([0, 1], True), ([1], False), ([], True), ([0], False)])
def test_is_biclosed(r01, alpha, expected):
    assert is_biclosed(S01.subset(alpha), r01) is expected


def test_enumerate_closed_and_biclosed(r01):
    assert [str(a) for a in enumerate_closed(r01)] == ["{}", "{1}", "{0, 1}"]
    assert [str(a) for a in enumerate_biclosed(r01)] == ["{}", "{0, 1}"]


def test_biclosed_to_elementary(r01):
    out = biclosed_to_elementary(r01)
    assert set(out.rules) == {rule(S01, [0], [1]), rule(S01, [1], [0])}
    assert out.is_elementary()
    assert len(biclosed_to_elementary(RuleSet(S01, ()))) == 0
    split = biclosed_to_elementary(RuleSet(S01, (rule(S01, [0, 1], []),)))
    assert set(split.rules) == {rule(S01, [0], []), rule(S01, [1], [])}


def test_elementary_to_biclosed(r01):
    assert elementary_to_biclosed(r01).rules == (rule(S01, [0, 1], [1]),)
    loop = RuleSet(S01, (rule(S01, [0], [0]),))
    assert elementary_to_biclosed(loop).rules == (rule(S01, [0], [0]),)


def test_elementary_to_biclosed_rejects_nullary():
    with pytest.raises(InvalidStructure, match="not elementary"):
        elementary_to_biclosed(RuleSet(S01, (rule(S01, [], [0]),)))


def test_arity():
    rules = RuleSet(S01, (rule(S01, [], [0]), rule(S01, [0, 1], [1])))
    assert rules.arity() == 2
    assert rules.is_nary(2) and not rules.is_nary(1)
    assert not rules.is_elementary()


@pytest.mark.slow
def test_translations_agree_exhaustively():
    for size in range(4):
        for rules in rule_sets(size, 3):
            assert enumerate_biclosed(rules) == enumerate_closed(biclosed_to_elementary(rules))
            elementary = RuleSet(rules.carrier, tuple(r for r in rules if len(r.premise) == 1))
            assert enumerate_closed(elementary) == enumerate_biclosed(elementary_to_biclosed(elementary))


@settings(max_examples=500)
@given(random_rules(3))
def test_translations_agree(rules):
    assert enumerate_biclosed(rules) == enumerate_closed(biclosed_to_elementary(rules))
    elementary = RuleSet(rules.carrier, tuple(r for r in rules if len(r.premise) == 1))
    assert enumerate_closed(elementary) == enumerate_biclosed(elementary_to_biclosed(elementary))


def test_binarize_nullary():
    s = Carrier("S", (0,))
    extended, out = binarize(RuleSet(s, (rule(s, [], [0]),)))
    assert extended.elements == (0, STAR)
    assert out.rules == (rule(extended, [STAR], [0]),)
    closed = enumerate_closed(out)
    assert [str(a) for a in closed] == ["{}", "{0}", "{0, *}"]
    assert [str(a) for a in restrict_generators(closed, s)] == ["{0}"]


def test_binarize_keeps_inhabited_rules(r01):
    extended, out = binarize(r01)
    assert out.rules == (rule(extended, [0], [1]),)


def test_binarize_closed_without_star_are_not_closed():
    s = Carrier("S", (0, 1))
    rules = RuleSet(s, (rule(s, [], [0]),))
    extended, out = binarize(rules)
    assert is_closed(extended.singleton(1), out)
    assert not is_closed(s.singleton(1), rules)


def test_binarize_rejects_high_arity():
    c = Carrier("S", (0, 1, 2))
    with pytest.raises(InvalidStructure, match="arity 3"):
        binarize(RuleSet(c, (rule(c, [0, 1, 2], [0]),)))


def test_binarize_rejects_reserved_label():
    c = Carrier("S", (0, STAR))
    with pytest.raises(InvalidStructure):
        binarize(RuleSet(c, ()))


def test_restrict_generators_edge_cases():
    s = Carrier("S", (0,))
    extended = s.extend(STAR)
    assert len(restrict_generators(SubsetFamily.from_masks(extended, [0, 1]), s)) == 0
    assert [str(a) for a in restrict_generators(SubsetFamily.from_masks(extended, [2]), s)] == ["{}"]


@pytest.mark.slow
def test_binarize_restricts_to_generators():
    for size in range(4):
        for rules in rule_sets(size, 2, max_premise=2):
            extended, out = binarize(rules)
            closed = enumerate_closed(out)
            restricted = restrict_generators(closed, rules.carrier)
            assert restricted == enumerate_closed(rules)
            assert generates(restricted, enumerate_closed(rules))


def test_phi_psi_round_trip():
    c = Carrier("S", (0, 1, 2))
    fin = fin_carrier(c)
    for m in powerset(c):
        assert phi(psi(m, fin)) == m
    assert phi(fin.empty()) == c.empty()
    s = Carrier("S", (0,))
    assert str(psi(s.full())) == "{{}, {0}}"


def test_rules_from_theory_counts():
    s = Carrier("S", (0,))
    assert len(rules_from_theory(GeometricTheory(s, ()))) == 1 + 3 + 4
    theory = GeometricTheory(s, (rank1_axiom(s.empty(), [s.full()]),))
    rules = rules_from_theory(theory)
    fin = rules.carrier
    assert rules.rules[-1] == Rule(fin.singleton(s.empty()), fin.singleton(s.full()))


def test_rules_from_theory_empty_carrier():
    s = Carrier("S", ())
    rules = rules_from_theory(GeometricTheory(s, ()))
    assert rules.carrier.size == 1


def test_rules_from_theory_rejects_higher_rank():
    s = Carrier("S", (0, 1))
    nested = And((Or((And((Atom(0),)),)),))
    theory = GeometricTheory(s, (GeometricAxiom(s.empty(), Or((nested,))),))
    with pytest.raises(InvalidStructure, match="not rank-1"):
        rules_from_theory(theory)


def test_theory_from_rules(r01):
    theory = theory_from_rules(r01)
    assert [str(a) for a in theory.axioms] == ["{0} |- 1"]
    assert enumerate_models(theory) == enumerate_closed(r01)
    assert enumerate_models(theory_from_rules(RuleSet(S01, ()))) == powerset(S01)
    bottom = theory_from_rules(RuleSet(S01, (rule(S01, [0], []),)))
    assert str(bottom.axioms[0]) == "{0} |- bottom"
    assert masks(enumerate_models(bottom)) == [0, 2]


@pytest.mark.slow
def test_theory_from_rules_exhaustive():
    for size in range(4):
        for rules in rule_sets(size, 2):
            assert enumerate_models(theory_from_rules(rules)) == enumerate_closed(rules)


def rank1_theories(c: Carrier, max_axioms: int):
    subsets = list(powerset(c))
    shapes = [(a, ds) for a in subsets for n in range(3) for ds in combinations(subsets, n)]
    for n in range(max_axioms + 1):
        for chosen in combinations(shapes, n):
            yield GeometricTheory(c, tuple(rank1_axiom(a, list(ds)) for a, ds in chosen))


@pytest.mark.slow
def test_models_correspond_to_closed_families():
    for size in range(4):
        c = Carrier("S", tuple(range(size)))
        for theory in rank1_theories(c, 2):
            rules = rules_from_theory(theory)
            models = enumerate_models(theory)
            closed = enumerate_closed(rules)
            assert SubsetFamily.of(c, (phi(alpha) for alpha in closed)) == models
            assert SubsetFamily.of(rules.carrier, (psi(m, rules.carrier) for m in models)) == closed


@settings(max_examples=500)
@given(
    st.lists(
        st.tuples(st.integers(0, 7), st.lists(st.integers(0, 7), max_size=3)),
        max_size=2,
    )
)
def test_models_correspond_to_closed_families_random(axioms):
    c = Carrier("S", (0, 1, 2))
    theory = GeometricTheory(
        c, tuple(rank1_axiom(Subset(c, a), [Subset(c, d) for d in ds]) for a, ds in axioms)
    )
    rules = rules_from_theory(theory)
    closed = enumerate_closed(rules)
    models = enumerate_models(theory)
    assert SubsetFamily.of(c, (phi(alpha) for alpha in closed)) == models
    assert all(psi(m, rules.carrier) in closed for m in models)


def test_minimal_generators_of_closed(r01):
    assert [str(g) for g in minimal_generating(enumerate_closed(r01))] == ["{1}", "{0, 1}"]
