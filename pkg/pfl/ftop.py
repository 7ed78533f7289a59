"""
Inductively generated formal topologies over a finite preordered carrier.

A cover table maps every subset U (by mask) to the mask of elements a with a <| U. The table generated from an
axiom-set is the least one that is reflexive, transitive, stable under the preorder meet U down V, contains
a <| {b} for a <= b, is downward closed on the left and contains every axiom a <| C(a, i).
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Any, Hashable, Iterable

import numpy as np

from pfl.carrier import (
    Carrier,
    Subset,
    SubsetFamily,
    bit_set,
    fin_carrier,
    format_label,
    powerset_masks,
    product,
    same_carrier,
    union_table,
)
from pfl.generation import minimal_generating
from pfl.geom import And, Atom, GeometricAxiom, GeometricTheory, Or, enumerate_models
from pfl.relcat import Relation, identity
from pfl.rules import Rule, RuleSet
from pfl.utils import InvalidStructure, check_limit, get_logger

logger = get_logger(__name__)

ONE = Carrier("1", ("*",))


@dataclass(frozen=True)
class Preorder:
    carrier: Carrier
    leq: Relation

    def __post_init__(self):
        same_carrier(self.carrier, self.leq.src)
        same_carrier(self.carrier, self.leq.dst)
        m = self.leq.matrix
        missing = np.flatnonzero(~np.diag(m))
        if len(missing):
            a = self.carrier.elements[missing[0]]
            raise InvalidStructure(f"order on {self.carrier.name} is not reflexive at {format_label(a)}", a)
        square = (m.astype(np.uint8) @ m.astype(np.uint8)) > 0
        cells = np.argwhere(square & ~m)
        if len(cells):
            a, c = (self.carrier.elements[i] for i in cells[0])
            raise InvalidStructure(
                f"order on {self.carrier.name} is not transitive: {format_label(a)} <= {format_label(c)} missing",
                (a, c),
            )

    @classmethod
    def discrete(cls, carrier: Carrier) -> "Preorder":
        return cls(carrier, identity(carrier))

    @classmethod
    def from_pairs(cls, carrier: Carrier, pairs: Iterable[tuple[Hashable, Hashable]]) -> "Preorder":
        """reflexive-transitive closure of the given a <= b pairs"""
        m = np.eye(carrier.size, dtype=bool) | Relation.from_pairs(carrier, carrier, pairs).matrix
        for k in range(carrier.size):
            m |= m[:, k : k + 1] & m[k : k + 1, :]
        return cls(carrier, Relation(carrier, carrier, m))

    def holds(self, a: Hashable, b: Hashable) -> bool:
        return self.leq.holds(a, b)

    @cached_property
    def lower_masks(self) -> tuple[int, ...]:
        """lower_masks[b] is the mask of every a <= b"""
        return self.leq.column_masks

    @cached_property
    def lower_table(self) -> np.ndarray:
        # down-set of every subset, indexed by mask
        return union_table(self.lower_masks)

    def lower(self, u: Subset) -> Subset:
        same_carrier(self.carrier, u.carrier)
        mask = 0
        for i in u.indices():
            mask |= self.lower_masks[i]
        return Subset(self.carrier, mask)


def down_leq(order: Preorder, u: Subset, v: Subset) -> Subset:
    """elements below some member of u and some member of v"""
    return order.lower(u) & order.lower(v)


@dataclass(frozen=True)
class Axiom:
    element: Hashable
    label: Hashable
    cover: Subset

    def __str__(self) -> str:
        return f"{format_label(self.element)} : {format_label(self.label)} => {self.cover}"


@dataclass(frozen=True)
class AxiomSet:
    carrier: Carrier
    axioms: tuple[Axiom, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "axioms", tuple(self.axioms))
        seen = set()
        for axiom in self.axioms:
            self.carrier.position(axiom.element)
            same_carrier(self.carrier, axiom.cover.carrier)
            key = (axiom.element, axiom.label)
            if key in seen:
                raise InvalidStructure(
                    f"axiom {format_label(axiom.label)} declared twice for {format_label(axiom.element)}", key
                )
            seen.add(key)

    def index(self, a: Hashable) -> tuple[Hashable, ...]:
        return tuple(axiom.label for axiom in self.axioms if axiom.element == a)

    def cover(self, a: Hashable, label: Hashable) -> Subset:
        for axiom in self.axioms:
            if axiom.element == a and axiom.label == label:
                return axiom.cover
        raise InvalidStructure(f"no axiom {format_label(label)} for {format_label(a)}", (a, label))

    @cached_property
    def cover_masks(self) -> tuple[tuple[int, ...], ...]:
        """per element position, the masks C(a, i) in declaration order"""
        per_element = [[] for _ in range(self.carrier.size)]
        for axiom in self.axioms:
            per_element[self.carrier.position(axiom.element)].append(axiom.cover.mask)
        return tuple(tuple(masks) for masks in per_element)


@dataclass(frozen=True, eq=False)
class CoverTable:
    carrier: Carrier
    covered: np.ndarray

    def covers(self, a: Hashable, u: Subset) -> bool:
        same_carrier(self.carrier, u.carrier)
        return bool(int(self.covered[u.mask]) >> self.carrier.position(a) & 1)

    def covers_subset(self, u: Subset, v: Subset) -> bool:
        """U <| V, elementwise"""
        same_carrier(self.carrier, u.carrier)
        same_carrier(self.carrier, v.carrier)
        return u.mask & ~int(self.covered[v.mask]) == 0

    def covered_by(self, u: Subset) -> Subset:
        return Subset(self.carrier, int(self.covered[u.mask]))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CoverTable):
            return NotImplemented
        return self.carrier == other.carrier and np.array_equal(self.covered, other.covered)

    def __hash__(self) -> int:
        return hash((self.carrier, self.covered.tobytes()))


def _saturate(order: Preorder, cov: np.ndarray) -> np.ndarray:
    n = order.carrier.size
    masks = np.arange(len(cov), dtype=np.uint64)
    lower = order.lower_table
    with_bit = [np.flatnonzero(bit_set(masks, i)) for i in range(n)]
    rounds = 0
    while True:
        rounds += 1
        before = cov.copy()
        cov = lower[cov.astype(np.intp)]
        for i in range(n):
            cov[with_bit[i]] |= cov[with_bit[i] ^ (1 << i)]
        cov |= cov[cov.astype(np.intp)]
        for u in range(len(cov)):
            targets = (lower[u] & lower).astype(np.intp)
            np.bitwise_or.at(cov, targets, cov[u] & cov)
        if np.array_equal(before, cov):
            logger.debug(f"cover on {order.carrier.name} saturated after {rounds} rounds")
            return cov


def generate_cover(order: Preorder, axioms: AxiomSet) -> CoverTable:
    same_carrier(order.carrier, axioms.carrier)
    carrier = order.carrier
    check_limit("cover", carrier.size, f"size of carrier {carrier.name} for cover generation")
    cov = powerset_masks(carrier).copy()
    for b in range(carrier.size):
        cov[1 << b] |= np.uint64(order.lower_masks[b])
    for a, masks in enumerate(axioms.cover_masks):
        for c in masks:
            cov[c] |= np.uint64(1 << a)
    cov = _saturate(order, cov)
    cov.setflags(write=False)
    return CoverTable(carrier, cov)


@dataclass(frozen=True)
class TopologyReport:
    holds: bool
    condition: str | None = None
    witness: Any = None

    def __bool__(self) -> bool:
        return self.holds


def is_formal_topology(order: Preorder, table: CoverTable) -> TopologyReport:
    """reflexivity, transitivity, stability under down_leq and a <= b => a <| {b}, checked over the whole table"""
    same_carrier(order.carrier, table.carrier)
    carrier = order.carrier
    cov = table.covered
    masks = np.arange(len(cov), dtype=np.uint64)
    lower = order.lower_table

    def subset(mask) -> Subset:
        return Subset(carrier, int(mask))

    bad = np.flatnonzero(masks & ~cov)
    if len(bad):
        return TopologyReport(False, "reflexivity", subset(bad[0]))
    for v in range(len(cov)):
        w = cov[v]
        below = masks[(masks & ~w) == 0]
        escaped = below[(cov[below.astype(np.intp)] & ~w) != 0]
        if len(escaped):
            return TopologyReport(False, "transitivity", (subset(escaped[0]), subset(v)))
    for u in range(len(cov)):
        meets = (lower[u] & lower).astype(np.intp)
        unstable = np.flatnonzero((cov[u] & cov) & ~cov[meets])
        if len(unstable):
            return TopologyReport(False, "meet", (subset(u), subset(unstable[0])))
    for b in range(carrier.size):
        if order.lower_masks[b] & ~int(cov[1 << b]):
            return TopologyReport(False, "order", carrier.elements[b])
    return TopologyReport(True)


@dataclass(frozen=True)
class InductiveTopology:
    order: Preorder
    axioms: AxiomSet
    name: str = "T"

    def __post_init__(self):
        same_carrier(self.order.carrier, self.axioms.carrier)

    @property
    def carrier(self) -> Carrier:
        return self.order.carrier

    @cached_property
    def cover(self) -> CoverTable:
        return generate_cover(self.order, self.axioms)


@dataclass(frozen=True)
class SetPresentation:
    """a <| U iff C(a, i) is inside U for some axiom i of a"""

    order: Preorder
    axioms: AxiomSet
    name: str = "P"

    def __post_init__(self):
        same_carrier(self.order.carrier, self.axioms.carrier)
        report = is_formal_topology(self.order, self.cover)
        if not report:
            raise InvalidStructure(
                f"presentation {self.name} is not a formal topology: {report.condition} fails at {report.witness}",
                report.witness,
            )

    @property
    def carrier(self) -> Carrier:
        return self.order.carrier

    @cached_property
    def cover(self) -> CoverTable:
        carrier = self.order.carrier
        check_limit("cover", carrier.size, f"size of carrier {carrier.name} for a presented cover")
        masks = powerset_masks(carrier)
        cov = np.zeros(len(masks), dtype=np.uint64)
        for a, covers in enumerate(self.axioms.cover_masks):
            hit = np.zeros(len(masks), dtype=bool)
            for c in covers:
                hit |= (masks & np.uint64(c)) == np.uint64(c)
            cov[hit] |= np.uint64(1 << a)
        cov.setflags(write=False)
        return CoverTable(carrier, cov)


def _pairwise_meet(order: Preorder, alpha: Subset) -> bool:
    for i in alpha.indices():
        for j in alpha.indices():
            if not order.lower_masks[i] & order.lower_masks[j] & alpha.mask:
                return False
    return True


def is_point(alpha: Subset, topology: InductiveTopology) -> bool:
    same_carrier(topology.carrier, alpha.carrier)
    if not alpha or not _pairwise_meet(topology.order, alpha):
        return False
    cov = topology.cover.covered
    masks = np.arange(len(cov), dtype=np.uint64)
    a = np.uint64(alpha.mask)
    return bool(np.all(((cov & a) == 0) | ((masks & a) != 0)))


def is_point_axiomatic(alpha: Subset, topology: InductiveTopology) -> bool:
    same_carrier(topology.carrier, alpha.carrier)
    order = topology.order
    if not alpha or not _pairwise_meet(order, alpha):
        return False
    for b in range(alpha.carrier.size):
        if order.lower_masks[b] & alpha.mask and not alpha.mask >> b & 1:
            return False
    for a in alpha.indices():
        if any(not c & alpha.mask for c in topology.axioms.cover_masks[a]):
            return False
    return True


def points(topology: InductiveTopology, axiomatic: bool = False) -> SubsetFamily:
    check = is_point_axiomatic if axiomatic else is_point
    carrier = topology.carrier
    found = [m for m in powerset_masks(carrier).tolist() if check(Subset(carrier, m), topology)]
    return SubsetFamily.from_masks(carrier, found)


def point_rules(topology: InductiveTopology) -> RuleSet:
    """Finitary rules whose closed subsets are the points of the topology"""
    c = topology.carrier
    order = topology.order
    rules = [Rule(c.empty(), c.full())]
    for a in c.elements:
        for b in c.elements:
            rules.append(Rule(c.subset([a, b]), down_leq(order, c.singleton(a), c.singleton(b))))
    for a in c.elements:
        for b in c.elements:
            if order.holds(a, b):
                rules.append(Rule(c.singleton(a), c.singleton(b)))
    for axiom in topology.axioms.axioms:
        rules.append(Rule(c.singleton(axiom.element), axiom.cover))
    return RuleSet(c, tuple(rules), name=f"{topology.name}_points")


def topology_from_rules(rules: RuleSet) -> InductiveTopology:
    """
    Finite subsets ordered by reverse inclusion, with one axiom per rule covering its premise by the singletons of
    its conclusion. Union and Fin translate its points to the closed subsets of `rules` and back.
    """
    base = rules.carrier
    check_limit("cover", 1 << base.size, f"size of Fin({base.name}) for cover generation")
    fin = fin_carrier(base)
    leq = np.array([[b & ~a == 0 for b in range(fin.size)] for a in range(fin.size)], dtype=bool)
    order = Preorder(fin, Relation(fin, fin, leq))
    axioms = []
    for k, rule in enumerate(rules):
        cover = Subset(fin, sum(1 << (1 << y) for y in rule.conclusion.indices()))
        axioms.append(Axiom(rule.premise, k, cover))
    return InductiveTopology(order, AxiomSet(fin, tuple(axioms)), name=f"{rules.name}_topology")


def one_point() -> tuple[SetPresentation, InductiveTopology]:
    order = Preorder.discrete(ONE)
    axioms = AxiomSet(ONE, (Axiom("*", 0, ONE.full()),))
    return SetPresentation(order, axioms, name="1"), InductiveTopology(order, axioms, name="1")


def point_map(alpha: Subset) -> Relation:
    """alpha as the relation from the one-point topology"""
    return Relation(ONE, alpha.carrier, alpha.to_bools().reshape(1, alpha.carrier.size))


@dataclass(frozen=True)
class FtmReport:
    holds: bool
    condition: str | None = None
    witness: Any = None

    def __bool__(self) -> bool:
        return self.holds


def _preimage_mask(r: Relation, mask: int) -> int:
    out = 0
    columns = r.column_masks
    for j in range(r.dst.size):
        if mask >> j & 1:
            out |= columns[j]
    return out


def is_ftm(r: Relation, source: SetPresentation, target: InductiveTopology) -> FtmReport:
    same_carrier(r.src, source.carrier)
    same_carrier(r.dst, target.carrier)
    cov = source.cover.covered
    s_order, t_order = source.order, target.order
    s, t = r.src, r.dst

    def covers(u: int, v: int) -> bool:
        return u & ~int(cov[v]) == 0

    def pre(mask: int) -> int:
        return _preimage_mask(r, mask)

    if not covers(s.full_mask, pre(t.full_mask)):
        return FtmReport(False, "FTM1")
    for b in range(t.size):
        for c in range(t.size):
            meet = int(s_order.lower_table[pre(1 << b)]) & int(s_order.lower_table[pre(1 << c)])
            target_meet = t_order.lower_masks[b] & t_order.lower_masks[c]
            if not covers(meet, pre(target_meet)):
                return FtmReport(False, "FTM2", (t.elements[b], t.elements[c]))
    for b in range(t.size):
        for c in range(t.size):
            if t_order.leq.matrix[b, c] and not covers(pre(1 << b), pre(1 << c)):
                return FtmReport(False, "FTM3a", (t.elements[b], t.elements[c]))
    for b, covers_of_b in enumerate(target.axioms.cover_masks):
        for d in covers_of_b:
            if not covers(pre(1 << b), pre(d)):
                return FtmReport(False, "FTM3b", (t.elements[b], Subset(t, d)))
    return FtmReport(True)


def ftm_equal(r: Relation, s: Relation, source: SetPresentation) -> FtmReport:
    same_carrier(r.src, s.src)
    same_carrier(r.dst, s.dst)
    cov = source.cover.covered
    for b in range(r.dst.size):
        pr, ps = r.column_masks[b], s.column_masks[b]
        if pr & ~int(cov[ps]) or ps & ~int(cov[pr]):
            return FtmReport(False, "equal", r.dst.elements[b])
    return FtmReport(True)


def relation_graph(r: Relation) -> Subset:
    """the pairs of r as a subset of the product carrier"""
    pairs = product(r.src, r.dst)
    return Subset.from_bools(pairs, r.matrix.reshape(-1))


def graph_relation(graph: Subset, src: Carrier, dst: Carrier) -> Relation:
    if graph.carrier.size != src.size * dst.size:
        raise InvalidStructure(f"carrier {graph.carrier.name} is not {src.name}x{dst.name}")
    return Relation(src, dst, graph.to_bools().reshape(src.size, dst.size))


def _covered_by_some(source: SetPresentation, a: Hashable, body_for) -> Or:
    """the presented cover of a, as a disjunction over a's axioms of conjunctions over the cover elements"""
    labels = source.axioms.index(a)
    return Or(tuple(And(tuple(body_for(x) for x in source.axioms.cover(a, i))) for i in labels))


def ftm_theory(source: SetPresentation, target: InductiveTopology) -> GeometricTheory:
    """
    A theory over S x T whose models are exactly the graphs of the formal topology maps from `source` to `target`.
    """
    s, t = source.carrier, target.carrier
    pairs = product(s, t)
    t_order = target.order

    def some(x: Hashable, ys: Iterable[Hashable]) -> Or:
        return Or(tuple(And((Atom((x, y)),)) for y in ys))

    axioms = []
    for a in s.elements:
        axioms.append(GeometricAxiom(pairs.empty(), _covered_by_some(source, a, lambda x: some(x, t.elements))))
    for b1 in s.elements:
        for c1 in s.elements:
            meet = down_leq(source.order, s.singleton(b1), s.singleton(c1))
            for b in t.elements:
                for c in t.elements:
                    target_meet = down_leq(t_order, t.singleton(b), t.singleton(c)).elements()
                    premise = pairs.subset([(b1, b), (c1, c)])
                    for a in meet:
                        body = _covered_by_some(source, a, lambda x: some(x, target_meet))
                        axioms.append(GeometricAxiom(premise, body))
    for b in t.elements:
        for c in t.elements:
            if not t_order.holds(b, c):
                continue
            for a in s.elements:
                body = _covered_by_some(source, a, lambda x: Atom((x, c)))
                axioms.append(GeometricAxiom(pairs.singleton((a, b)), body))
    for axiom in target.axioms.axioms:
        b, d = axiom.element, axiom.cover.elements()
        for a in s.elements:
            body = _covered_by_some(source, a, lambda x: some(x, d))
            axioms.append(GeometricAxiom(pairs.singleton((a, b)), body))
    logger.debug(f"map theory over {pairs.name}: {len(axioms)} axioms")
    return GeometricTheory(pairs, tuple(axioms), name=f"Maps({s.name},{t.name})")


def ftm_generators(source: SetPresentation, target: InductiveTopology) -> SubsetFamily:
    return minimal_generating(enumerate_models(ftm_theory(source, target)))
