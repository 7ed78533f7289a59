"""
Finite relations as boolean matrices. A relation r: X -> Y has one row per element of X; `compose(g, f)` is g after f.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Hashable, Iterable

import numpy as np

from pfl.carrier import (
    Carrier,
    Subset,
    SubsetFamily,
    bools_to_mask,
    format_label,
    powerset_masks,
    same_carrier,
    union_table,
)
from pfl.generation import minimal_generating
from pfl.rules import Rule, RuleSet
from pfl.utils import FactorizationFailed, InvalidStructure, check_limit, get_logger

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class Relation:
    src: Carrier
    dst: Carrier
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=bool).reshape(self.src.size, self.dst.size)
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def from_pairs(cls, src: Carrier, dst: Carrier, pairs: Iterable[tuple[Hashable, Hashable]]) -> "Relation":
        matrix = np.zeros((src.size, dst.size), dtype=bool)
        for x, y in pairs:
            matrix[src.position(x), dst.position(y)] = True
        return cls(src, dst, matrix)

    @classmethod
    def from_rows(cls, src: Carrier, dst: Carrier, rows: Iterable[Subset]) -> "Relation":
        rows = list(rows)
        if len(rows) != src.size:
            raise InvalidStructure(f"expected {src.size} rows for {src.name}, got {len(rows)}")
        matrix = np.zeros((src.size, dst.size), dtype=bool)
        for i, row in enumerate(rows):
            same_carrier(dst, row.carrier)
            matrix[i] = row.to_bools()
        return cls(src, dst, matrix)

    @classmethod
    def empty(cls, src: Carrier, dst: Carrier) -> "Relation":
        return cls(src, dst, np.zeros((src.size, dst.size), dtype=bool))

    @classmethod
    def full(cls, src: Carrier, dst: Carrier) -> "Relation":
        return cls(src, dst, np.ones((src.size, dst.size), dtype=bool))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Relation):
            return NotImplemented
        return self.src == other.src and self.dst == other.dst and np.array_equal(self.matrix, other.matrix)

    def __hash__(self) -> int:
        return hash((self.src, self.dst, self.matrix.tobytes()))

    def holds(self, x: Hashable, y: Hashable) -> bool:
        return bool(self.matrix[self.src.position(x), self.dst.position(y)])

    def pairs(self) -> list[tuple[Hashable, Hashable]]:
        return [(self.src.elements[i], self.dst.elements[j]) for i, j in zip(*np.nonzero(self.matrix))]

    def row(self, x: Hashable) -> Subset:
        return Subset.from_bools(self.dst, self.matrix[self.src.position(x)])

    def row_at(self, i: int) -> Subset:
        return Subset.from_bools(self.dst, self.matrix[i])

    @cached_property
    def row_masks(self) -> tuple[int, ...]:
        return tuple(bools_to_mask(row) for row in self.matrix)

    @cached_property
    def column_masks(self) -> tuple[int, ...]:
        return tuple(bools_to_mask(column) for column in self.matrix.T)

    def issubset(self, other: "Relation") -> bool:
        _same_hom(self, other)
        return not np.any(self.matrix & ~other.matrix)

    def __or__(self, other: "Relation") -> "Relation":
        _same_hom(self, other)
        return Relation(self.src, self.dst, self.matrix | other.matrix)

    def __str__(self) -> str:
        return "{" + ", ".join(f"({format_label(x)}, {format_label(y)})" for x, y in self.pairs()) + "}"


def _same_hom(r: Relation, s: Relation) -> None:
    same_carrier(r.src, s.src)
    same_carrier(r.dst, s.dst)


def first_difference(r: Relation, s: Relation) -> tuple[Hashable, Hashable] | None:
    _same_hom(r, s)
    cells = np.argwhere(r.matrix != s.matrix)
    if not len(cells):
        return None
    i, j = cells[0]
    return r.src.elements[i], r.dst.elements[j]


def identity(c: Carrier) -> Relation:
    return Relation(c, c, np.eye(c.size, dtype=bool))


def compose(g: Relation, f: Relation) -> Relation:
    """g after f: x (g o f) z iff x f y and y g z for some y"""
    same_carrier(f.dst, g.src)
    matrix = (f.matrix.astype(np.uint8) @ g.matrix.astype(np.uint8)) > 0
    return Relation(f.src, g.dst, matrix)


def converse(r: Relation) -> Relation:
    return Relation(r.dst, r.src, r.matrix.T)


def image(r: Relation, subset: Subset) -> Subset:
    same_carrier(r.src, subset.carrier)
    return Subset.from_bools(r.dst, r.matrix[subset.to_bools()].any(axis=0))


def preimage(r: Relation, subset: Subset) -> Subset:
    """r^- V: the points related to some element of V"""
    same_carrier(r.dst, subset.carrier)
    return Subset.from_bools(r.src, r.matrix[:, subset.to_bools()].any(axis=1))


def preimage_of(r: Relation, y: Hashable) -> Subset:
    return Subset.from_bools(r.src, r.matrix[:, r.dst.position(y)])


def left_residual(t: Relation, g: Relation) -> Relation:
    """Largest v: B -> C with v o g contained in t, for t: A -> C and g: A -> B"""
    same_carrier(t.src, g.src)
    violation = (g.matrix.T.astype(np.uint8) @ (~t.matrix).astype(np.uint8)) > 0
    return Relation(g.dst, t.dst, ~violation)


@dataclass(frozen=True)
class WeakEqualiser:
    apex: Carrier
    inclusion: Relation
    generators: SubsetFamily
    left: Relation
    right: Relation


def _image_tables(r1: Relation, r2: Relation) -> tuple[np.ndarray, np.ndarray]:
    check_limit("powerset", r1.src.size, f"size of {r1.src.name} for weak equaliser")
    return union_table(r1.row_masks), union_table(r2.row_masks)


def equalised_subsets(r1: Relation, r2: Relation) -> SubsetFamily:
    """Subsets U of the source with r1[U] == r2[U]"""
    _same_hom(r1, r2)
    images1, images2 = _image_tables(r1, r2)
    masks = powerset_masks(r1.src)
    return SubsetFamily.from_masks(r1.src, masks[images1 == images2])


def weak_equaliser(r1: Relation, r2: Relation, minimal: bool = True) -> WeakEqualiser:
    """
    Weak equaliser of a parallel pair X -> Y in finite relations. The apex has one element per generator of the
    subsets equalised by the pair, and the inclusion relates each generator to its own elements.
    """
    family = equalised_subsets(r1, r2)
    generators = minimal_generating(family) if minimal else family
    apex = Carrier(f"Eq({r1.src.name})", generators.members)
    inclusion = Relation.from_rows(apex, r1.src, generators.members)
    logger.debug(f"weak equaliser over {r1.src.name}: {len(family)} equalised subsets, {len(generators)} generators")
    return WeakEqualiser(apex, inclusion, generators, r1, r2)


def mediate(weq: WeakEqualiser, s: Relation) -> Relation:
    """Factor an equalising s: Z -> X through the inclusion: z is related to every generator inside s(z)"""
    left, right = compose(weq.left, s), compose(weq.right, s)
    witness = first_difference(left, right)
    if witness is not None:
        raise InvalidStructure(f"relation does not equalise the pair, first difference at {witness}", witness)
    generators = weq.generators.masks
    matrix = np.array([[g & ~row == 0 for g in generators] for row in s.row_masks], dtype=bool)
    mediator = Relation(s.src, weq.apex, matrix.reshape(s.src.size, len(generators)))
    witness = first_difference(compose(weq.inclusion, mediator), s)
    if witness is not None:
        raise FactorizationFailed(f"generators do not rebuild the relation, first difference at {witness}", witness)
    return mediator


@dataclass(frozen=True)
class WeakCoequaliser:
    apex: Carrier
    arrow: Relation
    dual: WeakEqualiser


def weak_coequaliser(r1: Relation, r2: Relation, minimal: bool = True) -> WeakCoequaliser:
    weq = weak_equaliser(converse(r1), converse(r2), minimal=minimal)
    return WeakCoequaliser(weq.apex, converse(weq.inclusion), weq)


def comediate(wcoeq: WeakCoequaliser, s: Relation) -> Relation:
    return converse(mediate(wcoeq.dual, converse(s)))


@dataclass(frozen=True)
class Biproduct:
    carrier: Carrier
    inj_left: Relation
    inj_right: Relation
    proj_left: Relation
    proj_right: Relation


def biproduct(x: Carrier, y: Carrier) -> Biproduct:
    carrier = Carrier(f"{x.name}+{y.name}", tuple((0, a) for a in x.elements) + tuple((1, b) for b in y.elements))
    inj_left = Relation(x, carrier, np.hstack([np.eye(x.size, dtype=bool), np.zeros((x.size, y.size), dtype=bool)]))
    inj_right = Relation(y, carrier, np.hstack([np.zeros((y.size, x.size), dtype=bool), np.eye(y.size, dtype=bool)]))
    return Biproduct(carrier, inj_left, inj_right, converse(inj_left), converse(inj_right))


def pairing(bp: Biproduct, f: Relation, g: Relation) -> Relation:
    """the arrow Z -> X + Y whose projections are f and g"""
    same_carrier(f.src, g.src)
    same_carrier(bp.proj_left.dst, f.dst)
    same_carrier(bp.proj_right.dst, g.dst)
    return Relation(f.src, bp.carrier, np.hstack([f.matrix, g.matrix]))


def copairing(bp: Biproduct, f: Relation, g: Relation) -> Relation:
    """the arrow X + Y -> Z that restricts to f and g along the injections"""
    same_carrier(f.dst, g.dst)
    same_carrier(bp.inj_left.src, f.src)
    same_carrier(bp.inj_right.src, g.src)
    return Relation(bp.carrier, f.dst, np.vstack([f.matrix, g.matrix]))


def rule_carrier(rules: RuleSet) -> Carrier:
    return Carrier(f"{rules.name}_rules", tuple(range(len(rules))))


def relations_from_rules(rules: RuleSet) -> tuple[Relation, Relation]:
    """
    The parallel pair S -> R relating x to every rule whose premise (first) or conclusion (second) contains x.
    Subsets equalised by the pair are exactly the biclosed subsets of `rules`.
    """
    carrier = rule_carrier(rules)
    premises = converse(Relation.from_rows(carrier, rules.carrier, [rule.premise for rule in rules]))
    conclusions = converse(Relation.from_rows(carrier, rules.carrier, [rule.conclusion for rule in rules]))
    return premises, conclusions


def rules_from_relations(r1: Relation, r2: Relation) -> RuleSet:
    """One rule (r1^- y, r2^- y) per target element y; inverse to `relations_from_rules`"""
    _same_hom(r1, r2)
    rules = [Rule(preimage_of(r1, y), preimage_of(r2, y)) for y in r1.dst.elements]
    return RuleSet(r1.src, tuple(rules), name=f"Rules({r1.src.name})")


def extract_generators(inclusion: Relation) -> SubsetFamily:
    return SubsetFamily.from_masks(inclusion.dst, inclusion.row_masks)
