from dataclasses import dataclass

import numpy as np

from pfl.carrier import Carrier, FinCarrier, Subset, SubsetFamily, fin_carrier, powerset_masks, same_carrier, submasks
from pfl.geom import GeometricTheory, is_normal_form, rank1_axiom, rank1_disjuncts
from pfl.utils import InvalidStructure, get_logger

logger = get_logger(__name__)

STAR = "*"


@dataclass(frozen=True)
class Rule:
    premise: Subset
    conclusion: Subset

    def __post_init__(self):
        same_carrier(self.premise.carrier, self.conclusion.carrier)

    @property
    def carrier(self) -> Carrier:
        return self.premise.carrier

    def __str__(self) -> str:
        return f"{self.premise} -> {self.conclusion}"


@dataclass(frozen=True)
class RuleSet:
    carrier: Carrier
    rules: tuple[Rule, ...]
    name: str = "R"

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        for rule in self.rules:
            same_carrier(self.carrier, rule.carrier)

    def __iter__(self):
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def arity(self) -> int:
        return max((len(rule.premise) for rule in self.rules), default=0)

    def is_elementary(self) -> bool:
        return all(len(rule.premise) == 1 for rule in self.rules)

    def is_nary(self, n: int) -> bool:
        return self.arity() <= n


def is_closed(alpha: Subset, rules: RuleSet) -> bool:
    same_carrier(rules.carrier, alpha.carrier)
    return all(not rule.premise <= alpha or rule.conclusion.meets(alpha) for rule in rules)


def is_biclosed(alpha: Subset, rules: RuleSet) -> bool:
    """every rule's premise meets alpha exactly when its conclusion does"""
    same_carrier(rules.carrier, alpha.carrier)
    return all(rule.premise.meets(alpha) == rule.conclusion.meets(alpha) for rule in rules)


def _closed_mask(rules: RuleSet, masks: np.ndarray) -> np.ndarray:
    ok = np.ones(len(masks), dtype=bool)
    for premise, conclusion in {(rule.premise.mask, rule.conclusion.mask) for rule in rules}:
        a, b = np.uint64(premise), np.uint64(conclusion)
        ok &= ~(((masks & a) == a) & ((masks & b) == 0))
    return ok


def enumerate_closed(rules: RuleSet) -> SubsetFamily:
    masks = powerset_masks(rules.carrier)
    ok = _closed_mask(rules, masks)
    logger.debug(f"rules {rules.name}: {int(ok.sum())} closed subsets out of {len(masks)}")
    return SubsetFamily.from_masks(rules.carrier, masks[ok])


def enumerate_biclosed(rules: RuleSet) -> SubsetFamily:
    masks = powerset_masks(rules.carrier)
    ok = np.ones(len(masks), dtype=bool)
    for premise, conclusion in {(rule.premise.mask, rule.conclusion.mask) for rule in rules}:
        ok &= ((masks & np.uint64(premise)) != 0) == ((masks & np.uint64(conclusion)) != 0)
    return SubsetFamily.from_masks(rules.carrier, masks[ok])


def biclosed_to_elementary(rules: RuleSet) -> RuleSet:
    c = rules.carrier
    forward = [Rule(c.singleton(x), rule.conclusion) for rule in rules for x in rule.premise]
    backward = [Rule(c.singleton(y), rule.premise) for rule in rules for y in rule.conclusion]
    return RuleSet(c, tuple(forward + backward), name=f"{rules.name}_elem")


def elementary_to_biclosed(rules: RuleSet) -> RuleSet:
    for rule in rules:
        if len(rule.premise) != 1:
            raise InvalidStructure(f"rule {rule} of {rules.name} is not elementary", rule)
    return RuleSet(
        rules.carrier,
        tuple(Rule(rule.premise | rule.conclusion, rule.conclusion) for rule in rules),
        name=f"{rules.name}_bi",
    )


def binarize(rules: RuleSet) -> tuple[Carrier, RuleSet]:
    """
    Extend the carrier with a fresh point `*` and replace every nullary rule by the unary rule {*} -> conclusion.
    The closed subsets containing `*` restrict to exactly the closed subsets of `rules`.
    """
    if rules.arity() > 2:
        raise InvalidStructure(f"rules {rules.name} have arity {rules.arity()}, binarize needs at most 2")
    if STAR in rules.carrier:
        raise InvalidStructure(f"carrier {rules.carrier.name} already contains {STAR}", STAR)
    extended = rules.carrier.extend(STAR, name=f"{rules.carrier.name}{STAR}")
    star = extended.singleton(STAR)
    nullary = [Rule(star, rule.conclusion.retarget(extended)) for rule in rules if not rule.premise]
    inhabited = [
        Rule(rule.premise.retarget(extended), rule.conclusion.retarget(extended)) for rule in rules if rule.premise
    ]
    return extended, RuleSet(extended, tuple(nullary + inhabited), name=f"{rules.name}{STAR}")


def restrict_generators(generators: SubsetFamily, base: Carrier) -> SubsetFamily:
    """Traces on `base` of the generators that contain the binarizing point"""
    star = 1 << base.size
    if generators.carrier.size != base.size + 1 or generators.carrier.elements[-1] != STAR:
        raise InvalidStructure(f"carrier {generators.carrier.name} is not {base.name} extended by {STAR}")
    return SubsetFamily.from_masks(base, (m & base.full_mask for m in generators.masks if m & star))


def phi(alpha: Subset) -> Subset:
    """union of a family of finite subsets"""
    fin = alpha.carrier
    if not isinstance(fin, FinCarrier):
        raise InvalidStructure(f"carrier {fin.name} is not a Fin carrier")
    mask = 0
    for i in alpha.indices():
        mask |= i
    return Subset(fin.base, mask)


def psi(m: Subset, fin: FinCarrier | None = None) -> Subset:
    """all finite subsets of m, as a subset of Fin"""
    fin = fin or fin_carrier(m.carrier)
    same_carrier(fin.base, m.carrier)
    mask = 0
    for sub in submasks(m.mask):
        mask |= 1 << sub
    return Subset(fin, mask)


def rules_from_theory(theory: GeometricTheory) -> RuleSet:
    """
    Encode a rank-1 theory over S as rules over Fin(S) whose closed subsets correspond to the models of the theory
    through `phi` and `psi`.
    """
    for axiom in theory.axioms:
        if not is_normal_form(axiom.body, 1):
            raise InvalidStructure(f"axiom {axiom} of theory {theory.name} is not rank-1", axiom)
    fin = fin_carrier(theory.carrier)
    n = fin.size

    def element(mask: int) -> Subset:
        return Subset(fin, 1 << mask)

    rules = [Rule(fin.empty(), element(0))]
    for a in range(n):
        rules.extend(Rule(element(a), element(b)) for b in submasks(a))
    for a in range(n):
        rules.extend(Rule(element(a) | element(b), element(a | b)) for b in range(n))
    for axiom in theory.axioms:
        conclusion = 0
        for d in rank1_disjuncts(axiom):
            conclusion |= 1 << d.mask
        rules.append(Rule(element(axiom.premise.mask), Subset(fin, conclusion)))
    logger.debug(f"theory {theory.name} encoded as {len(rules)} rules over {fin.name}")
    return RuleSet(fin, tuple(rules), name=f"{theory.name}_rules")


def theory_from_rules(rules: RuleSet) -> GeometricTheory:
    c = rules.carrier
    axioms = [rank1_axiom(rule.premise, [c.singleton(y) for y in rule.conclusion]) for rule in rules]
    return GeometricTheory(c, tuple(axioms), name=f"{rules.name}_theory")
