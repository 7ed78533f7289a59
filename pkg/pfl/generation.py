from dataclasses import dataclass
from itertools import combinations
from typing import Any

import numpy as np

from pfl.carrier import Subset, SubsetFamily, same_carrier, submasks
from pfl.utils import check_limit, get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class GenerationReport:
    generates: bool
    # (alpha, x) for plain generation, (alpha, sigma) for strong generation
    witness: tuple[Subset, Any] | None = None

    def __bool__(self) -> bool:
        return self.generates


def generates(generators: SubsetFamily, family: SubsetFamily) -> GenerationReport:
    """every x in every alpha of `family` lies in some generator contained in alpha"""
    same_carrier(generators.carrier, family.carrier)
    gens = generators.mask_array()
    for alpha in family:
        a = np.uint64(alpha.mask)
        below = gens[(gens & ~a) == 0]
        cover = int(np.bitwise_or.reduce(below)) if len(below) else 0
        missing = alpha.mask & ~cover
        if missing:
            x = alpha.carrier.elements[(missing & -missing).bit_length() - 1]
            return GenerationReport(False, (alpha, x))
    return GenerationReport(True)


def strongly_generates(generators: SubsetFamily, family: SubsetFamily) -> GenerationReport:
    """every finite sigma below alpha sits below some generator that is itself below alpha"""
    same_carrier(generators.carrier, family.carrier)
    check_limit("fin_base", family.carrier.size, f"size of carrier {family.carrier.name} for strong generation")
    gens = generators.masks
    for alpha in family:
        below = [g for g in gens if g & ~alpha.mask == 0]
        for sigma in submasks(alpha.mask):
            if not any(sigma & ~g == 0 for g in below):
                return GenerationReport(False, (alpha, Subset(alpha.carrier, sigma)))
    return GenerationReport(True)


def generates_within(generators: SubsetFamily, family: SubsetFamily) -> GenerationReport:
    if not generators <= family:
        outside = next(g for g in generators if g not in family)
        return GenerationReport(False, (outside, None))
    return generates(generators, family)


def minimal_generating(family: SubsetFamily) -> SubsetFamily:
    """
    The members of `family` that cannot be rebuilt as a union of strictly smaller members. Any generating subfamily
    of `family` must contain all of them, and together they generate `family`.
    """
    masks = family.mask_array()
    keep = []
    for m in family.masks:
        b = np.uint64(m)
        smaller = masks[((masks & ~b) == 0) & (masks != b)]
        cover = int(np.bitwise_or.reduce(smaller)) if len(smaller) else 0
        if m & ~cover:
            keep.append(m)
    logger.debug(f"minimal generating family: {len(keep)} of {len(family)} members")
    return SubsetFamily.from_masks(family.carrier, keep)


def brute_force_generating(family: SubsetFamily) -> list[SubsetFamily]:
    """All generating subfamilies of `family`, smallest first"""
    check_limit("mediator_bits", len(family), "size of family for subfamily search")
    found = []
    for k in range(len(family) + 1):
        for members in combinations(family.members, k):
            candidate = SubsetFamily(family.carrier, members)
            if generates(candidate, family):
                found.append(candidate)
    return found
