"""
Geometric theories over a finite carrier of atomic propositions.

A formula body is a tree of `Atom`, `And` and `Or` nodes. Empty `And` is true and empty `Or` is false. A model of a
theory is a subset of the carrier, read as the set of atoms that hold.
"""

from dataclasses import dataclass
from typing import Hashable, Sequence, Union

import numpy as np

from pfl.carrier import Carrier, Subset, SubsetFamily, bit_set, format_label, powerset_masks, same_carrier
from pfl.generation import minimal_generating
from pfl.utils import CarrierMismatch, get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class Atom:
    label: Hashable

    def __str__(self) -> str:
        return format_label(self.label)


@dataclass(frozen=True)
class And:
    children: tuple["FormulaBody", ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))


@dataclass(frozen=True)
class Or:
    children: tuple["FormulaBody", ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))


FormulaBody = Union[Atom, And, Or]

TOP = And(())
BOTTOM = Or(())


@dataclass(frozen=True)
class GeometricAxiom:
    premise: Subset
    body: FormulaBody

    def __str__(self) -> str:
        return f"{self.premise} |- {format_body(self.body)}"


@dataclass(frozen=True)
class GeometricTheory:
    carrier: Carrier
    axioms: tuple[GeometricAxiom, ...]
    name: str = "T"

    def __post_init__(self):
        object.__setattr__(self, "axioms", tuple(self.axioms))
        for axiom in self.axioms:
            same_carrier(self.carrier, axiom.premise.carrier)
            for label in atoms(axiom.body):
                if label not in self.carrier:
                    raise CarrierMismatch(
                        f"atom {format_label(label)} of theory {self.name} is not in carrier {self.carrier.name}",
                        label,
                    )

    def is_rank1(self) -> bool:
        return all(is_normal_form(axiom.body, 1) for axiom in self.axioms)


def atoms(body: FormulaBody) -> set[Hashable]:
    if isinstance(body, Atom):
        return {body.label}
    found = set()
    for child in body.children:
        found |= atoms(child)
    return found


def satisfies(alpha: Subset, body: FormulaBody) -> bool:
    if isinstance(body, Atom):
        if body.label not in alpha.carrier:
            raise CarrierMismatch(f"atom {format_label(body.label)} is not in carrier {alpha.carrier.name}", body.label)
        return body.label in alpha
    if isinstance(body, And):
        return all(satisfies(alpha, child) for child in body.children)
    return any(satisfies(alpha, child) for child in body.children)


def is_model(alpha: Subset, theory: GeometricTheory) -> bool:
    same_carrier(theory.carrier, alpha.carrier)
    return all(not axiom.premise <= alpha or satisfies(alpha, axiom.body) for axiom in theory.axioms)


def _evaluate(body: FormulaBody, carrier: Carrier, masks: np.ndarray) -> np.ndarray:
    # truth value of `body` under every model candidate in `masks` at once
    if isinstance(body, Atom):
        return bit_set(masks, carrier.position(body.label))
    values = [_evaluate(child, carrier, masks) for child in body.children]
    if isinstance(body, And):
        return np.logical_and.reduce(values) if values else np.ones(len(masks), dtype=bool)
    return np.logical_or.reduce(values) if values else np.zeros(len(masks), dtype=bool)


def enumerate_models(theory: GeometricTheory) -> SubsetFamily:
    masks = powerset_masks(theory.carrier)
    ok = np.ones(len(masks), dtype=bool)
    for axiom in theory.axioms:
        premise = np.uint64(axiom.premise.mask)
        applies = (masks & premise) == premise
        ok &= ~applies | _evaluate(axiom.body, theory.carrier, masks)
    logger.debug(f"theory {theory.name}: {int(ok.sum())} models out of {len(masks)}")
    return SubsetFamily.from_masks(theory.carrier, masks[ok])


def model_generators(theory: GeometricTheory) -> SubsetFamily:
    return minimal_generating(enumerate_models(theory))


def rank(body: FormulaBody) -> int:
    """Number of disjunctions on the longest path, counting a run of directly nested disjunctions once"""

    def walk(node: FormulaBody, under_or: bool) -> int:
        if isinstance(node, Atom):
            return 0
        deepest = max((walk(child, isinstance(node, Or)) for child in node.children), default=0)
        if isinstance(node, Or) and not under_or:
            return deepest + 1
        return deepest

    return walk(body, False)


def is_normal_form(body: FormulaBody, n: int) -> bool:
    """
    rank-n normal form: a disjunction of conjunctions whose conjuncts are atoms when n == 1 and rank-(n-1)
    normal forms otherwise
    """
    if n < 1 or not isinstance(body, Or):
        return False
    for conj in body.children:
        if not isinstance(conj, And):
            return False
        for child in conj.children:
            if n == 1 and not isinstance(child, Atom):
                return False
            if n > 1 and not is_normal_form(child, n - 1):
                return False
    return True


def rank1_body(disjuncts: Sequence[Subset]) -> Or:
    return Or(tuple(And(tuple(Atom(label) for label in d.elements())) for d in disjuncts))


def rank1_axiom(premise: Subset, disjuncts: Sequence[Subset]) -> GeometricAxiom:
    for d in disjuncts:
        same_carrier(premise.carrier, d.carrier)
    return GeometricAxiom(premise, rank1_body(disjuncts))


def rank1_disjuncts(axiom: GeometricAxiom) -> tuple[Subset, ...]:
    """The conjunct sets of a rank-1 axiom body, in body order"""
    carrier = axiom.premise.carrier
    return tuple(carrier.subset(child.label for child in conj.children) for conj in axiom.body.children)


def format_body(body: FormulaBody) -> str:
    if isinstance(body, Or):
        if not body.children:
            return "bottom"
        return " | ".join(_format_conj(child) for child in body.children)
    return _format_conj(body)


def _format_conj(body: FormulaBody) -> str:
    if isinstance(body, And):
        if not body.children:
            return "top"
        return " & ".join(_format_factor(child) for child in body.children)
    return _format_factor(body)


def _format_factor(body: FormulaBody) -> str:
    if isinstance(body, Atom):
        return str(body)
    return f"({format_body(body)})"
