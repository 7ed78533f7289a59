"""
Concrete spaces and convergent relation pairs.

Here `ext a` is the set of points forcing a and `a down b` collects the observables whose extension sits inside
ext a & ext b. A basic pair is concrete when every point forces something and ext a & ext b == ext(a down b).
"""

from dataclasses import dataclass
from typing import Any, Hashable

import numpy as np

from pfl.bp import BasicPair, RelationPair, delta_pair, rp_compose, rp_equal
from pfl.carrier import Carrier, FinCarrier, Subset, SubsetFamily, fin_carrier, powerset_masks, same_carrier
from pfl.generation import generates, minimal_generating
from pfl.relcat import Relation, compose, first_difference, identity, image, left_residual, preimage, rule_carrier
from pfl.rules import Rule, RuleSet, enumerate_closed, is_closed
from pfl.utils import ContractViolation, FactorizationFailed, InvalidStructure, check_limit, get_logger

logger = get_logger(__name__)

ONE = Carrier("1", ("*",))


@dataclass(frozen=True)
class ConvergenceReport:
    convergent: bool
    condition: int | None = None
    witness: Any = None

    def __bool__(self) -> bool:
        return self.convergent


def _is_observable_subset(b: BasicPair, a: Hashable | Subset) -> bool:
    # labels of a Fin carrier are subsets of its base, never of the observables themselves
    return isinstance(a, Subset) and a.carrier == b.observables


def ext(b: BasicPair, a: Hashable | Subset) -> Subset:
    """points forcing a, or some element of a when a is a subset of observables"""
    if _is_observable_subset(b, a):
        return ext_subset(b, a)
    return Subset.from_bools(b.points, b.forces.matrix[:, b.observables.position(a)])


def ext_subset(b: BasicPair, u: Subset) -> Subset:
    return preimage(b.forces, u)


def diamond(b: BasicPair, u: Subset) -> Subset:
    return image(b.forces, u)


def _ext_masks(b: BasicPair) -> tuple[int, ...]:
    return b.forces.column_masks


def down(b: BasicPair, x: Hashable | Subset, y: Hashable | Subset) -> Subset:
    """observables whose extension is inside ext x & ext y; on subsets, the union over their elements"""
    if _is_observable_subset(b, x) or _is_observable_subset(b, y):
        return down_subsets(b, _as_subset(b, x), _as_subset(b, y))
    exts = _ext_masks(b)
    bound = exts[b.observables.position(x)] & exts[b.observables.position(y)]
    return Subset(b.observables, sum(1 << c for c, e in enumerate(exts) if e & ~bound == 0))


def _as_subset(b: BasicPair, x: Hashable | Subset) -> Subset:
    return x if _is_observable_subset(b, x) else b.observables.singleton(x)


def down_subsets(b: BasicPair, u: Subset, v: Subset) -> Subset:
    same_carrier(b.observables, u.carrier)
    same_carrier(b.observables, v.carrier)
    exts = _ext_masks(b)
    mask = 0
    for i in u.indices():
        for j in v.indices():
            bound = exts[i] & exts[j]
            mask |= sum(1 << c for c, e in enumerate(exts) if e & ~bound == 0)
    return Subset(b.observables, mask)


def _down_table(b: BasicPair) -> list[list[int]]:
    # ext(a down b) as a point mask, for every pair of observables
    exts = _ext_masks(b)
    table = []
    for ea in exts:
        row = []
        for eb in exts:
            bound = ea & eb
            row.append(sum_or(e for e in exts if e & ~bound == 0))
        table.append(row)
    return table


def sum_or(masks) -> int:
    out = 0
    for m in masks:
        out |= m
    return out


def is_concrete(b: BasicPair) -> ConvergenceReport:
    covered = ext_subset(b, b.observables.full())
    if covered.mask != b.points.full_mask:
        x = (~covered).elements()[0]
        return ConvergenceReport(False, 1, x)
    exts = _ext_masks(b)
    down_ext = _down_table(b)
    for i, a in enumerate(b.observables.elements):
        for j, c in enumerate(b.observables.elements):
            if exts[i] & exts[j] != down_ext[i][j]:
                return ConvergenceReport(False, 2, (a, c))
    return ConvergenceReport(True)


@dataclass(frozen=True)
class ConcreteSpace:
    underlying: BasicPair

    def __post_init__(self):
        report = is_concrete(self.underlying)
        if not report:
            raise InvalidStructure(
                f"basic pair {self.underlying.name} is not concrete: condition {report.condition} fails at "
                f"{report.witness}",
                report.witness,
            )

    @property
    def points(self) -> Carrier:
        return self.underlying.points

    @property
    def observables(self) -> Carrier:
        return self.underlying.observables


def fin_space(s: Carrier) -> ConcreteSpace:
    """(Fin(S), contains, Fin(S))"""
    fin = fin_carrier(s)
    matrix = np.array([[b & ~a == 0 for b in range(fin.size)] for a in range(fin.size)], dtype=bool)
    return ConcreteSpace(BasicPair(fin, Relation(fin, fin, matrix), fin, name=f"{fin.name}_sup"))


def _require_concrete(b: BasicPair) -> None:
    report = is_concrete(b)
    if not report:
        raise InvalidStructure(f"basic pair {b.name} is not concrete (condition {report.condition})", report.witness)


def is_convergent_pair(p: RelationPair) -> ConvergenceReport:
    _require_concrete(p.source)
    _require_concrete(p.target)
    src, dst = p.source, p.target
    if ext_subset(src, src.observables.full()) != preimage(p.point_rel, ext_subset(dst, dst.observables.full())):
        return ConvergenceReport(False, 1)
    for a in dst.observables.elements:
        for c in dst.observables.elements:
            pulled = down_subsets(
                src,
                preimage(p.obs_rel, dst.observables.singleton(a)),
                preimage(p.obs_rel, dst.observables.singleton(c)),
            )
            if ext_subset(src, pulled) != preimage(p.point_rel, ext_subset(dst, down(dst, a, c))):
                return ConvergenceReport(False, 2, (a, c))
    return ConvergenceReport(True)


def _meets_table(masks: np.ndarray, targets: list[int]) -> np.ndarray:
    # column k: which candidate subsets meet targets[k]
    if not targets:
        return np.zeros((len(masks), 0), dtype=bool)
    return np.stack([(masks & np.uint64(t)) != 0 for t in targets], axis=1)


def convergent_subsets(b: BasicPair) -> SubsetFamily:
    masks = powerset_masks(b.points)
    exts = list(_ext_masks(b))
    meets_ext = _meets_table(masks, exts)
    ok = meets_ext.any(axis=1) if exts else np.zeros(len(masks), dtype=bool)
    down_ext = _down_table(b)
    for i in range(len(exts)):
        for j in range(i, len(exts)):
            lower = (masks & np.uint64(down_ext[i][j])) != 0
            ok &= ~(meets_ext[:, i] & meets_ext[:, j]) | lower
    return SubsetFamily.from_masks(b.points, masks[ok])


def eclass_rules(p1: RelationPair, p2: RelationPair) -> RuleSet:
    """
    Rules on the source points whose closed subsets are the convergent subsets D with
    diamond(r1 D) == diamond(r2 D) in the target.
    """
    if p1.source != p2.source or p1.target != p2.target:
        raise InvalidStructure("relation pairs do not share source and target")
    src, dst = p1.source, p1.target
    _require_concrete(src)
    _require_concrete(dst)
    x1 = src.points
    rules = [Rule(x1.empty(), ext_subset(src, src.observables.full()))]
    forced = [src.forces.row_at(i) for i in range(x1.size)]
    for x in x1.elements:
        for y in x1.elements:
            for a in forced[x1.position(x)]:
                for c in forced[x1.position(y)]:
                    rules.append(Rule(x1.subset([x, y]), ext_subset(src, down(src, a, c))))
    for first, second in ((p1, p2), (p2, p1)):
        for x in x1.elements:
            for c in diamond(dst, image(first.point_rel, x1.singleton(x))):
                rules.append(Rule(x1.singleton(x), preimage(second.point_rel, ext(dst, c))))
    logger.debug(f"equaliser class over {x1.name}: {len(rules)} rules")
    return RuleSet(x1, tuple(rules), name=f"E({x1.name})")


def _generator_space(b: BasicPair, generators: SubsetFamily, name: str) -> tuple[BasicPair, Relation]:
    """points = generators, forcing a when meeting ext a, with the membership relation back to b's points"""
    carrier = Carrier(name, generators.members)
    exts = _ext_masks(b)
    matrix = np.array([[g & e != 0 for e in exts] for g in generators.masks], dtype=bool)
    forces = Relation(carrier, b.observables, matrix.reshape(carrier.size, b.observables.size))
    membership = Relation.from_rows(carrier, b.points, generators.members)
    return BasicPair(carrier, forces, b.observables, name=name), membership


def _concrete_or_violation(b: BasicPair) -> ConcreteSpace:
    try:
        return ConcreteSpace(b)
    except InvalidStructure as e:
        logger.warning(f"constructed space {b.name} is not concrete")
        raise ContractViolation(str(e), e.witness) from e


@dataclass(frozen=True)
class CSpaEqualiser:
    apex: ConcreteSpace
    arrow: RelationPair
    generators: SubsetFamily
    left: RelationPair
    right: RelationPair


def equaliser(p1: RelationPair, p2: RelationPair, minimal: bool = True) -> CSpaEqualiser:
    rules = eclass_rules(p1, p2)
    family = enumerate_closed(rules)
    generators = minimal_generating(family) if minimal else family
    src = p1.source
    apex_pair, membership = _generator_space(src, generators, f"Eq({src.points.name})")
    apex = _concrete_or_violation(apex_pair)
    arrow = RelationPair(apex_pair, src, membership, identity(src.observables))
    report = is_convergent_pair(arrow)
    if not report:
        logger.warning(f"equaliser arrow over {src.name} is not convergent")
        raise ContractViolation(f"equaliser arrow is not convergent (condition {report.condition})", report.witness)
    if not rp_equal(rp_compose(p1, arrow), rp_compose(p2, arrow)):
        witness = first_difference(rp_compose(p1, arrow).forced, rp_compose(p2, arrow).forced)
        raise ContractViolation(f"equaliser arrow does not equalise the pair at {witness}", witness)
    logger.debug(f"concrete space equaliser over {src.name}: {len(generators)} points from {len(family)} subsets")
    return CSpaEqualiser(apex, arrow, generators, p1, p2)


def _below_generators(generators: SubsetFamily, u: Relation, apex: Carrier) -> Relation:
    # y is related to every generator contained in u(y)
    matrix = np.array([[g & ~row == 0 for g in generators.masks] for row in u.row_masks], dtype=bool)
    return Relation(u.src, apex, matrix.reshape(u.src.size, apex.size))


def equaliser_mediate(eq: CSpaEqualiser, cone: RelationPair) -> RelationPair:
    if cone.target != eq.left.source:
        raise InvalidStructure("cone does not end at the source of the parallel pair")
    if not rp_equal(rp_compose(eq.left, cone), rp_compose(eq.right, cone)):
        raise InvalidStructure("cone does not equalise the pair")
    mediator = _below_generators(eq.generators, cone.point_rel, eq.apex.points)
    try:
        result = RelationPair(cone.source, eq.apex.underlying, mediator, cone.obs_rel)
    except InvalidStructure as e:
        raise FactorizationFailed(f"mediator is not a relation pair: {e}", e.witness) from e
    if not rp_equal(rp_compose(eq.arrow, result), cone):
        witness = first_difference(rp_compose(eq.arrow, result).forced, cone.forced)
        raise FactorizationFailed(f"mediator does not factor the cone at {witness}", witness)
    return result


@dataclass(frozen=True)
class Coreflection:
    space: ConcreteSpace
    counit: RelationPair
    generators: SubsetFamily
    base: BasicPair


def coreflect(b: BasicPair, minimal: bool = True) -> Coreflection:
    """Concrete space of generators of the convergent subsets of b, with the membership counit into b"""
    family = convergent_subsets(b)
    generators = minimal_generating(family) if minimal else family
    space_pair, membership = _generator_space(b, generators, f"C({b.points.name})")
    space = _concrete_or_violation(space_pair)
    counit = RelationPair(space_pair, b, membership, identity(b.observables))
    logger.debug(f"coreflection of {b.name}: {len(generators)} points from {len(family)} convergent subsets")
    return Coreflection(space, counit, generators, b)


def coreflect_morphism(cor: Coreflection, morphism: RelationPair) -> RelationPair:
    """
    Lift (u, v) into the base through the counit: y goes to the generators inside u(y) and the observable part is
    the largest relation closing the square.
    """
    if morphism.target != cor.base:
        raise InvalidStructure("morphism does not end at the coreflected basic pair")
    source = morphism.source
    lifted = _below_generators(cor.generators, morphism.point_rel, cor.space.points)
    forced = compose(cor.space.underlying.forces, lifted)
    obs = left_residual(forced, source.forces)
    witness = first_difference(forced, compose(obs, source.forces))
    if witness is not None:
        logger.warning(f"coreflection square does not close at {witness}")
        raise FactorizationFailed(f"lifted pair does not close the square at {witness}", witness)
    result = RelationPair(source, cor.space.underlying, lifted, obs)
    witness = first_difference(rp_compose(cor.counit, result).forced, morphism.forced)
    if witness is not None:
        raise FactorizationFailed(f"lifted pair does not factor the morphism at {witness}", witness)
    return result


def rules_to_parallel_pair(rules: RuleSet) -> tuple[RelationPair, RelationPair]:
    """
    The pair Fin(S) -> R relating A to every rule whose premise A contains (first) or whose premise together with
    some conclusion element A contains (second), as pairs from the Fin space into the diagonal pair on R.
    """
    check_limit("fin_base", rules.carrier.size, f"size of carrier {rules.carrier.name}")
    space = fin_space(rules.carrier).underlying
    target = delta_pair(rule_carrier(rules))
    n = space.points.size
    first = np.zeros((n, len(rules)), dtype=bool)
    second = np.zeros((n, len(rules)), dtype=bool)
    for a in range(n):
        for k, rule in enumerate(rules):
            if rule.premise.mask & ~a == 0:
                first[a, k] = True
                second[a, k] = bool(rule.conclusion.mask & a)
    r1 = Relation(space.points, target.points, first)
    r2 = Relation(space.points, target.points, second)
    return RelationPair(space, target, r1, r1), RelationPair(space, target, r2, r2)


def probe(beta: Subset, space: ConcreteSpace | None = None) -> RelationPair:
    """The pair from the one-point diagonal space picking every finite subset of beta"""
    space = space or fin_space(beta.carrier)
    fin = space.points
    if not isinstance(fin, FinCarrier):
        raise InvalidStructure(f"carrier {fin.name} is not a Fin carrier")
    same_carrier(fin.base, beta.carrier)
    row = np.array([[a & ~beta.mask == 0 for a in range(fin.size)]], dtype=bool)
    rel = Relation(ONE, fin, row)
    return RelationPair(delta_pair(ONE), space.underlying, rel, rel)


def alpha_sets(arrow: RelationPair) -> SubsetFamily:
    """For each point x of the arrow's source, the union of the finite subsets x reaches in Fin(S)"""
    fin = arrow.target.points
    if not isinstance(fin, FinCarrier):
        raise InvalidStructure(f"arrow target {fin.name} is not a Fin carrier")
    return SubsetFamily.from_masks(fin.base, (sum_or(i for i in range(fin.size) if row >> i & 1)
                                              for row in arrow.point_rel.row_masks))


def extract_generators(rules: RuleSet, minimal: bool = True) -> SubsetFamily:
    """
    Set-generate the closed subsets of `rules` through concrete spaces: equalise the coreflected parallel pair
    out of Fin(S) and read each equaliser point off as the union of the finite subsets it reaches.
    """
    p1, p2 = rules_to_parallel_pair(rules)
    cor = coreflect(p1.target, minimal=minimal)
    e1, e2 = coreflect_morphism(cor, p1), coreflect_morphism(cor, p2)
    eq = equaliser(e1, e2, minimal=minimal)
    family = alpha_sets(eq.arrow)
    for alpha in family:
        if not is_closed(alpha, rules):
            raise ContractViolation(f"extracted subset {alpha} is not closed under {rules.name}", alpha)
    report = generates(family, enumerate_closed(rules))
    if not report:
        message = f"extracted family does not generate the closed subsets of {rules.name}"
        raise ContractViolation(message, report.witness)
    logger.debug(f"extracted {len(family)} generators for {rules.name}")
    return family
