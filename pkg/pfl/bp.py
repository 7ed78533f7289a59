"""
Basic pairs (X, forces, S) and relation pairs between them.

A relation pair (r, s) from (X1, f1, S1) to (X2, f2, S2) satisfies f2 o r == s o f1. Two pairs are identified when
f2 o r agrees, so the observable component only matters through the square it closes.
"""

from dataclasses import dataclass
from functools import singledispatch

from pfl.carrier import Carrier, same_carrier
from pfl.relcat import (
    Biproduct,
    Relation,
    WeakEqualiser,
    biproduct,
    compose,
    converse,
    copairing,
    first_difference,
    identity,
    mediate,
    weak_equaliser,
)
from pfl.utils import FactorizationFailed, InvalidStructure, get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class BasicPair:
    points: Carrier
    forces: Relation
    observables: Carrier
    name: str = "B"

    def __post_init__(self):
        same_carrier(self.points, self.forces.src)
        same_carrier(self.observables, self.forces.dst)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BasicPair):
            return NotImplemented
        return self.forces == other.forces

    def __hash__(self) -> int:
        return hash(self.forces)


@dataclass(frozen=True)
class RelationPair:
    source: BasicPair
    target: BasicPair
    point_rel: Relation
    obs_rel: Relation

    def __post_init__(self):
        same_carrier(self.point_rel.src, self.source.points)
        same_carrier(self.point_rel.dst, self.target.points)
        same_carrier(self.obs_rel.src, self.source.observables)
        same_carrier(self.obs_rel.dst, self.target.observables)
        forced = compose(self.target.forces, self.point_rel)
        witness = first_difference(forced, compose(self.obs_rel, self.source.forces))
        if witness is not None:
            raise InvalidStructure(f"relation pair square fails at (point, observable) {witness}", witness)

    @property
    def forced(self) -> Relation:
        """the composite source points -> target observables that identifies the pair"""
        return compose(self.target.forces, self.point_rel)


def delta_pair(c: Carrier) -> BasicPair:
    return BasicPair(c, identity(c), c, name=f"{c.name}_delta")


def is_delta_pair(b: BasicPair) -> bool:
    return b.points == b.observables and b.forces == identity(b.points)


def lift_to_delta(r: Relation) -> RelationPair:
    """r: X -> Y as the relation pair (r, r) between the diagonal pairs"""
    return RelationPair(delta_pair(r.src), delta_pair(r.dst), r, r)


def _same_endpoints(p: RelationPair, q: RelationPair) -> None:
    if p.source != q.source or p.target != q.target:
        raise InvalidStructure("relation pairs do not share source and target")


def rp_equal(p: RelationPair, q: RelationPair) -> bool:
    _same_endpoints(p, q)
    return p.forced == q.forced


def rp_compose(q: RelationPair, p: RelationPair) -> RelationPair:
    if p.target != q.source:
        raise InvalidStructure("relation pairs are not composable")
    return RelationPair(p.source, q.target, compose(q.point_rel, p.point_rel), compose(q.obs_rel, p.obs_rel))


def rp_identity(b: BasicPair) -> RelationPair:
    return RelationPair(b, b, identity(b.points), identity(b.observables))


def _close_square(source: BasicPair, target: BasicPair, point_rel: Relation, obs_rel: Relation) -> RelationPair:
    try:
        return RelationPair(source, target, point_rel, obs_rel)
    except InvalidStructure as e:
        raise FactorizationFailed(f"mediator is not a relation pair: {e}", e.witness) from e


@dataclass(frozen=True)
class BPEqualiser:
    apex: BasicPair
    arrow: RelationPair
    weak: WeakEqualiser
    left: RelationPair
    right: RelationPair


def equaliser(p1: RelationPair, p2: RelationPair, minimal: bool = True) -> BPEqualiser:
    """
    Equaliser of a parallel pair of relation pairs: weakly equalise the forced composites, keep the source
    observables and force through the inclusion.
    """
    _same_endpoints(p1, p2)
    source = p1.source
    weak = weak_equaliser(p1.forced, p2.forced, minimal=minimal)
    apex = BasicPair(weak.apex, compose(source.forces, weak.inclusion), source.observables, name=f"Eq({source.name})")
    arrow = RelationPair(apex, source, weak.inclusion, identity(source.observables))
    logger.debug(f"basic pair equaliser over {source.name}: {weak.apex.size} points")
    return BPEqualiser(apex, arrow, weak, p1, p2)


def equaliser_mediate(eq: BPEqualiser, cone: RelationPair) -> RelationPair:
    """Factor a cone (u, v) into the equalised source through the equaliser arrow as (u bar, v)"""
    if cone.target != eq.left.source:
        raise InvalidStructure("cone does not end at the source of the parallel pair")
    if not rp_equal(rp_compose(eq.left, cone), rp_compose(eq.right, cone)):
        witness = first_difference(rp_compose(eq.left, cone).forced, rp_compose(eq.right, cone).forced)
        raise InvalidStructure(f"cone does not equalise the pair, first difference at {witness}", witness)
    # equalising up to ~ means u weakly equalises the forced composites, so it factors through the inclusion
    result = _close_square(cone.source, eq.apex, mediate(eq.weak, cone.point_rel), cone.obs_rel)
    if not rp_equal(rp_compose(eq.arrow, result), cone):
        raise FactorizationFailed("mediator does not factor the cone")
    return result


def weak_equaliser_from_bp(eq: BPEqualiser) -> Relation:
    """The point component of an equaliser between diagonal pairs, a weak equaliser of the underlying relations"""
    if not (is_delta_pair(eq.left.source) and is_delta_pair(eq.left.target)):
        raise InvalidStructure("equaliser endpoints are not diagonal pairs")
    return eq.arrow.point_rel


@singledispatch
def dual(b: BasicPair) -> BasicPair:
    return BasicPair(b.observables, converse(b.forces), b.points, name=f"{b.name}_op")


@dual.register
def _(p: RelationPair) -> RelationPair:
    return RelationPair(dual(p.target), dual(p.source), converse(p.obs_rel), converse(p.point_rel))


@dataclass(frozen=True)
class BPCoequaliser:
    apex: BasicPair
    arrow: RelationPair
    dual_equaliser: BPEqualiser


def coequaliser(p1: RelationPair, p2: RelationPair, minimal: bool = True) -> BPCoequaliser:
    eq = equaliser(dual(p1), dual(p2), minimal=minimal)
    return BPCoequaliser(dual(eq.apex), dual(eq.arrow), eq)


def coequaliser_comediate(coeq: BPCoequaliser, cocone: RelationPair) -> RelationPair:
    return dual(equaliser_mediate(coeq.dual_equaliser, dual(cocone)))


@dataclass(frozen=True)
class BPCoproduct:
    pair: BasicPair
    inj_left: RelationPair
    inj_right: RelationPair
    points: Biproduct
    observables: Biproduct


def coproduct(b1: BasicPair, b2: BasicPair) -> BPCoproduct:
    points = biproduct(b1.points, b2.points)
    observables = biproduct(b1.observables, b2.observables)
    forces = copairing(
        points,
        compose(observables.inj_left, b1.forces),
        compose(observables.inj_right, b2.forces),
    )
    pair = BasicPair(points.carrier, forces, observables.carrier, name=f"{b1.name}+{b2.name}")
    inj_left = RelationPair(b1, pair, points.inj_left, observables.inj_left)
    inj_right = RelationPair(b2, pair, points.inj_right, observables.inj_right)
    return BPCoproduct(pair, inj_left, inj_right, points, observables)


def copair(co: BPCoproduct, f: RelationPair, g: RelationPair) -> RelationPair:
    if f.target != g.target:
        raise InvalidStructure("copairing needs a common target")
    return _close_square(
        co.pair,
        f.target,
        copairing(co.points, f.point_rel, g.point_rel),
        copairing(co.observables, f.obs_rel, g.obs_rel),
    )


@dataclass(frozen=True)
class BPProduct:
    pair: BasicPair
    proj_left: RelationPair
    proj_right: RelationPair
    dual_coproduct: BPCoproduct


def product(b1: BasicPair, b2: BasicPair) -> BPProduct:
    co = coproduct(dual(b1), dual(b2))
    return BPProduct(dual(co.pair), dual(co.inj_left), dual(co.inj_right), co)


def pair(prod: BPProduct, f: RelationPair, g: RelationPair) -> RelationPair:
    return dual(copair(prod.dual_coproduct, dual(f), dual(g)))
