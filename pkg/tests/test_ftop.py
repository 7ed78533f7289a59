from functools import lru_cache
from itertools import combinations
from itertools import product as cartesian

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pfl.carrier import Carrier, Subset, SubsetFamily, powerset
from pfl.ftop import (
    ONE,
    Axiom,
    AxiomSet,
    CoverTable,
    InductiveTopology,
    Preorder,
    SetPresentation,
    down_leq,
    ftm_equal,
    ftm_generators,
    ftm_theory,
    generate_cover,
    graph_relation,
    is_formal_topology,
    is_ftm,
    is_point,
    is_point_axiomatic,
    one_point,
    point_map,
    point_rules,
    points,
    relation_graph,
    topology_from_rules,
)
from pfl.geom import enumerate_models, is_model
from pfl.relcat import Relation, identity
from pfl.rules import Rule, RuleSet, enumerate_closed
from pfl.utils import InvalidStructure, LimitExceeded

T = Carrier("T", ("a", "b"))


@pytest.fixture
def example() -> InductiveTopology:
    """discrete {a, b} with the single axiom a <| {b}"""
    axioms = AxiomSet(T, (Axiom("a", "i", T.singleton("b")),))
    return InductiveTopology(Preorder.discrete(T), axioms, name="Top")


@pytest.fixture
def chain() -> InductiveTopology:
    return InductiveTopology(Preorder.from_pairs(T, [("a", "b")]), AxiomSet(T), name="Chain")


@pytest.fixture
def discrete_pair() -> SetPresentation:
    """{p, q} with each element covered exactly by itself"""
    s = Carrier("S", ("p", "q"))
    axioms = AxiomSet(s, (Axiom("p", 0, s.singleton("p")), Axiom("q", 0, s.singleton("q"))))
    return SetPresentation(Preorder.discrete(s), axioms, name="P")


def relations(src: Carrier, dst: Carrier):
    for bits in cartesian([False, True], repeat=src.size * dst.size):
        yield Relation(src, dst, np.array(bits, dtype=bool).reshape(src.size, dst.size))


def union(point: Subset, base: Carrier) -> Subset:
    return base.subset(x for a in point for x in a)


def test_preorder_closure():
    c = Carrier("C", (0, 1, 2))
    order = Preorder.from_pairs(c, [(0, 1), (1, 2)])
    assert order.holds(0, 2)
    assert not order.holds(2, 0)
    assert order.lower(c.singleton(2)) == c.full()
    assert down_leq(order, c.singleton(1), c.singleton(2)) == c.subset([0, 1])


def test_preorder_must_be_reflexive_and_transitive():
    c = Carrier("C", (0, 1, 2))
    with pytest.raises(InvalidStructure, match="not reflexive"):
        Preorder(c, Relation.empty(c, c))
    steps = identity(c) | Relation.from_pairs(c, c, [(0, 1), (1, 2)])
    with pytest.raises(InvalidStructure, match="not transitive") as info:
        Preorder(c, steps)
    assert info.value.witness == (0, 2)


def test_axiom_set_rejects_repeated_label():
    axiom = Axiom("a", 0, T.empty())
    with pytest.raises(InvalidStructure, match="declared twice"):
        AxiomSet(T, (axiom, axiom))


def test_cover_without_axioms_is_reflexive_closure():
    cover = generate_cover(Preorder.discrete(T), AxiomSet(T))
    for u in powerset(T):
        assert cover.covered_by(u) == u
    assert is_formal_topology(Preorder.discrete(T), cover)


def test_cover_of_example(example):
    cover = example.cover
    assert cover.covers("a", T.singleton("b"))
    assert cover.covers("a", T.empty())
    assert not cover.covers("b", T.singleton("a"))
    assert cover.covered_by(T.singleton("b")) == T.full()
    assert cover.covers_subset(T.full(), T.singleton("b"))
    assert is_formal_topology(example.order, cover)


def test_cover_follows_order(chain):
    assert chain.cover.covers("a", T.singleton("b"))
    assert not chain.cover.covers("b", T.singleton("a"))


def test_points_of_example(example):
    assert [str(p) for p in points(example)] == ["{b}"]
    assert points(example, axiomatic=True) == points(example)
    assert not is_point(T.empty(), example)


def test_points_of_chain(chain):
    assert [str(p) for p in points(chain)] == ["{b}", "{a, b}"]
    assert points(chain, axiomatic=True) == points(chain)


@given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 7)), max_size=3), st.integers(0, 8))
def test_point_characterisations_agree(axioms, order_bits):
    c = Carrier("C", (0, 1, 2))
    pairs = [(i, j) for k, (i, j) in enumerate([(0, 1), (1, 2), (2, 0)]) if order_bits >> k & 1]
    axiom_set = AxiomSet(c, tuple(Axiom(a, k, Subset(c, m)) for k, (a, m) in enumerate(axioms)))
    topology = InductiveTopology(Preorder.from_pairs(c, pairs), axiom_set)
    for alpha in powerset(c):
        assert is_point(alpha, topology) == is_point_axiomatic(alpha, topology)


def test_point_rules(example, chain):
    for topology in (example, chain):
        assert enumerate_closed(point_rules(topology)) == points(topology)


def test_topology_from_rules():
    s = Carrier("S", (0, 1))
    rules = RuleSet(s, (Rule(s.singleton(0), s.singleton(1)),))
    topology = topology_from_rules(rules)
    found = points(topology)
    assert [str(p) for p in found][:2] == ["{{}}", "{{}, {1}}"]
    assert [str(union(p, s)) for p in found] == ["{}", "{1}", "{0, 1}"]


def test_topology_from_rule_with_empty_premise():
    s = Carrier("S", (0,))
    rules = RuleSet(s, (Rule(s.empty(), s.singleton(0)),))
    found = points(topology_from_rules(rules))
    assert [str(union(p, s)) for p in found] == ["{0}"]


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), max_size=3))
def test_topology_points_are_closed_subsets(pairs):
    s = Carrier("S", (0, 1))
    rules = RuleSet(s, tuple(Rule(Subset(s, p), Subset(s, c)) for p, c in pairs))
    unions = sorted(union(p, s).mask for p in points(topology_from_rules(rules)))
    assert unions == list(enumerate_closed(rules).masks)


def test_one_point_identity():
    source, target = one_point()
    assert is_ftm(identity(ONE), source, target)
    report = is_ftm(Relation.empty(ONE, ONE), source, target)
    assert not report and report.condition == "FTM1"


def test_point_maps_are_points(example, chain):
    source, _ = one_point()
    for topology in (example, chain):
        for alpha in powerset(T):
            assert bool(is_ftm(point_map(alpha), source, topology)) == is_point(alpha, topology)


def test_ftm_failures(example):
    source, _ = one_point()
    report = is_ftm(point_map(T.singleton("a")), source, example)
    assert report.condition == "FTM3b"
    assert report.witness == ("a", T.singleton("b"))
    report = is_ftm(point_map(T.full()), source, example)
    assert report.condition == "FTM2"


def test_ftm_equal():
    source, _ = one_point()
    assert ftm_equal(identity(ONE), identity(ONE), source)
    report = ftm_equal(identity(ONE), Relation.empty(ONE, ONE), source)
    assert not report and report.witness == "*"


def test_graph_round_trip(discrete_pair):
    r = Relation.from_pairs(discrete_pair.carrier, T, [("p", "b"), ("q", "a")])
    graph = relation_graph(r)
    assert str(graph) == "{p.b, q.a}"
    assert graph_relation(graph, discrete_pair.carrier, T) == r
    with pytest.raises(InvalidStructure):
        graph_relation(graph, T, ONE)


def test_ftm_theory_models_are_maps(discrete_pair, example, chain):
    for target in (example, chain):
        theory = ftm_theory(discrete_pair, target)
        for r in relations(discrete_pair.carrier, T):
            assert is_model(relation_graph(r), theory) == bool(is_ftm(r, discrete_pair, target))


def test_ftm_generators(example):
    source, _ = one_point()
    assert [str(g) for g in ftm_generators(source, example)] == ["{*.b}"]


def test_presentation_must_be_formal_topology():
    s = Carrier("S", ("p", "q"))
    axioms = AxiomSet(s, (Axiom("p", 0, s.singleton("q")),))
    with pytest.raises(InvalidStructure, match="reflexivity"):
        SetPresentation(Preorder.discrete(s), axioms)


def test_cover_is_capped():
    c = Carrier("C", tuple(range(11)))
    with pytest.raises(LimitExceeded, match="cover"):
        generate_cover(Preorder.discrete(c), AxiomSet(c))


def preorders(c: Carrier):
    """every preorder on c"""
    off = [(i, j) for i in range(c.size) for j in range(c.size) if i != j]
    for bits in range(1 << len(off)):
        m = np.eye(c.size, dtype=bool)
        for k, (i, j) in enumerate(off):
            m[i, j] = bool(bits >> k & 1)
        square = (m.astype(np.uint8) @ m.astype(np.uint8)) > 0
        if np.array_equal(square, m):
            yield Preorder(c, Relation(c, c, m))


def axiom_sets(c: Carrier, max_axioms: int):
    shapes = [(a, u) for a in c.elements for u in powerset(c)]
    for n in range(max_axioms + 1):
        for chosen in combinations(shapes, n):
            yield AxiomSet(c, tuple(Axiom(a, k, u) for k, (a, u) in enumerate(chosen)))


def topologies(c: Carrier, max_axioms: int):
    for order in preorders(c):
        for axioms in axiom_sets(c, max_axioms):
            yield InductiveTopology(order, axioms)


def presentations(c: Carrier):
    """every valid presentation on c, each element taking any set of covering subsets"""
    subsets = list(powerset(c))
    for order in preorders(c):
        for choice in cartesian(range(1 << len(subsets)), repeat=c.size):
            axioms = tuple(
                Axiom(a, k, u)
                for a, bits in zip(c.elements, choice)
                for k, u in enumerate(u for i, u in enumerate(subsets) if bits >> i & 1)
            )
            try:
                yield SetPresentation(order, AxiomSet(c, axioms))
            except InvalidStructure:
                continue


@lru_cache
def valid_presentations(size: int) -> list[SetPresentation]:
    return list(presentations(Carrier("S", ("p", "q", "r")[:size])))


def closed_under_cover_rules(topology: InductiveTopology, table: CoverTable) -> bool:
    if not is_formal_topology(topology.order, table):
        return False
    return all(table.covers(axiom.element, axiom.cover) for axiom in topology.axioms.axioms)


def assert_least_cover(topology: InductiveTopology):
    cov = topology.cover.covered
    assert closed_under_cover_rules(topology, topology.cover)
    for u in range(len(cov)):
        for a in range(topology.carrier.size):
            if int(cov[u]) >> a & 1:
                punctured = cov.copy()
                punctured[u] = np.uint64(int(cov[u]) & ~(1 << a))
                assert not closed_under_cover_rules(topology, CoverTable(topology.carrier, punctured))


def test_cover_is_least_fixpoint(example, chain):
    for topology in (example, chain, topology_from_rules(RuleSet(Carrier("S", (0,)), ()))):
        assert_least_cover(topology)


@pytest.mark.slow
def test_cover_is_least_fixpoint_exhaustive():
    for size in range(1, 3):
        for topology in topologies(Carrier("C", tuple(range(size))), 1):
            assert_least_cover(topology)


@pytest.mark.slow
def test_point_characterisations_agree_exhaustively():
    for size in range(1, 4):
        c = Carrier("C", tuple(range(size)))
        for topology in topologies(c, 2):
            for alpha in powerset(c):
                assert is_point(alpha, topology) == is_point_axiomatic(alpha, topology)


@pytest.mark.slow
def test_point_maps_are_points_exhaustively():
    source, _ = one_point()
    for size, max_axioms in ((1, 2), (2, 2), (3, 1)):
        c = Carrier("C", tuple(range(size)))
        for topology in topologies(c, max_axioms):
            for alpha in powerset(c):
                assert bool(is_ftm(point_map(alpha), source, topology)) == is_point(alpha, topology)


def test_presentations_enumerated():
    found = valid_presentations(2)
    assert found
    assert all(is_formal_topology(p.order, p.cover) for p in found)


def assert_map_theory_sound(source: SetPresentation, target: InductiveTopology):
    theory = ftm_theory(source, target)
    maps = SubsetFamily.of(
        theory.carrier,
        (relation_graph(r) for r in relations(source.carrier, target.carrier) if is_ftm(r, source, target)),
    )
    assert enumerate_models(theory) == maps


@pytest.mark.slow
def test_map_theory_sound_exhaustively():
    for s_size in range(1, 3):
        for t_size in range(1, 3):
            t = Carrier("T", ("a", "b")[:t_size])
            covers = [None, *powerset(t)]
            targets = []
            for order in preorders(t):
                for chosen in cartesian(covers, repeat=t_size):
                    axioms = tuple(Axiom(b, 0, u) for b, u in zip(t.elements, chosen) if u is not None)
                    targets.append(InductiveTopology(order, AxiomSet(t, axioms)))
            for source in valid_presentations(s_size):
                for target in targets:
                    assert_map_theory_sound(source, target)


@settings(max_examples=200)
@given(
    st.data(),
    st.integers(0, 63),
    st.lists(st.tuples(st.integers(0, 2), st.integers(0, 7)), max_size=4),
)
def test_map_theory_sound_random(data, order_bits, axioms):
    source = data.draw(st.sampled_from(valid_presentations(2)))
    t = Carrier("T", ("a", "b", "c"))
    off = [(x, y) for x in t.elements for y in t.elements if x != y]
    order = Preorder.from_pairs(t, [pair for k, pair in enumerate(off) if order_bits >> k & 1])
    axiom_set = AxiomSet(t, tuple(Axiom(t.elements[b], k, Subset(t, m)) for k, (b, m) in enumerate(axioms)))
    assert_map_theory_sound(source, InductiveTopology(order, axiom_set))


def test_ftm_equal_under_duplicate_covering():
    s = Carrier("S", ("p", "q"))
    order = Preorder.from_pairs(s, [("p", "q"), ("q", "p")])
    axioms = AxiomSet(
        s,
        (
            Axiom("p", 0, s.singleton("p")),
            Axiom("p", 1, s.singleton("q")),
            Axiom("q", 0, s.singleton("q")),
            Axiom("q", 1, s.singleton("p")),
        ),
    )
    source = SetPresentation(order, axioms)
    r = Relation.from_pairs(s, T, [("p", "b")])
    other = Relation.from_pairs(s, T, [("q", "b")])
    assert r != other
    assert ftm_equal(r, other, source)
    report = ftm_equal(r, Relation.empty(s, T), source)
    assert not report and report.witness == "b"


def test_topology_from_rules_respects_cover_cap():
    c = Carrier("S", (0, 1, 2, 3))
    with pytest.raises(LimitExceeded, match="above the cover limit of 10"):
        topology_from_rules(RuleSet(c, ()))
