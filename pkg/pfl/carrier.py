from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Iterator, Sequence

import numpy as np

from pfl.utils import CarrierMismatch, InvalidStructure, check_limit


def format_label(label: Hashable) -> str:
    if isinstance(label, Subset):
        return str(label)
    if isinstance(label, tuple):
        return ".".join(format_label(part) for part in label)
    return str(label)


@dataclass(frozen=True, eq=False)
class Carrier:
    name: str
    elements: tuple[Hashable, ...]

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if len(set(self.elements)) != len(self.elements):
            seen = set()
            for label in self.elements:
                if label in seen:
                    raise InvalidStructure(f"duplicate label {format_label(label)} in carrier {self.name}", label)
                seen.add(label)
        check_limit("carrier", len(self.elements), f"size of carrier {self.name}")

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Carrier):
            return NotImplemented
        return self.name == other.name and self.elements == other.elements

    def __hash__(self) -> int:
        return self._hash

    @cached_property
    def _hash(self) -> int:
        return hash((self.name, self.elements))

    @cached_property
    def index(self) -> dict[Hashable, int]:
        return {label: i for i, label in enumerate(self.elements)}

    @property
    def size(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[Hashable]:
        return iter(self.elements)

    def __contains__(self, label: Hashable) -> bool:
        return label in self.index

    def position(self, label: Hashable) -> int:
        try:
            return self.index[label]
        except KeyError:
            raise InvalidStructure(f"{format_label(label)} is not an element of carrier {self.name}", label) from None

    @property
    def full_mask(self) -> int:
        return (1 << self.size) - 1

    def subset(self, labels: Iterable[Hashable] = ()) -> "Subset":
        mask = 0
        for label in labels:
            mask |= 1 << self.position(label)
        return Subset(self, mask)

    def singleton(self, label: Hashable) -> "Subset":
        return Subset(self, 1 << self.position(label))

    def empty(self) -> "Subset":
        return Subset(self, 0)

    def full(self) -> "Subset":
        return Subset(self, self.full_mask)

    def extend(self, *labels: Hashable, name: str | None = None) -> "Carrier":
        """Same carrier with `labels` appended; subsets keep their masks"""
        return Carrier(name or self.name, self.elements + labels)

    def __repr__(self) -> str:
        return f"Carrier({self.name}, {self.size})"


@dataclass(frozen=True)
class Subset:
    carrier: Carrier
    mask: int

    def __post_init__(self):
        if self.mask < 0 or self.mask >> self.carrier.size:
            raise InvalidStructure(f"mask {self.mask} does not fit carrier {self.carrier.name}")

    @classmethod
    def from_bools(cls, carrier: Carrier, row: Sequence[bool]) -> "Subset":
        return cls(carrier, bools_to_mask(row))

    def to_bools(self) -> np.ndarray:
        return mask_to_bools(self.mask, self.carrier.size)

    def indices(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.carrier.size) if self.mask >> i & 1)

    def elements(self) -> tuple[Hashable, ...]:
        return tuple(self.carrier.elements[i] for i in self.indices())

    def __iter__(self) -> Iterator[Hashable]:
        return iter(self.elements())

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __bool__(self) -> bool:
        return self.mask != 0

    def __contains__(self, label: Hashable) -> bool:
        i = self.carrier.index.get(label)
        return i is not None and bool(self.mask >> i & 1)

    def _other(self, other: "Subset") -> int:
        same_carrier(self.carrier, other.carrier)
        return other.mask

    def __or__(self, other: "Subset") -> "Subset":
        return Subset(self.carrier, self.mask | self._other(other))

    def __and__(self, other: "Subset") -> "Subset":
        return Subset(self.carrier, self.mask & self._other(other))

    def __sub__(self, other: "Subset") -> "Subset":
        return Subset(self.carrier, self.mask & ~self._other(other))

    def __invert__(self) -> "Subset":
        return Subset(self.carrier, self.carrier.full_mask & ~self.mask)

    def __le__(self, other: "Subset") -> bool:
        return self.mask & ~self._other(other) == 0

    def __lt__(self, other: "Subset") -> bool:
        return self <= other and self.mask != other.mask

    def __ge__(self, other: "Subset") -> bool:
        return other <= self

    def __gt__(self, other: "Subset") -> bool:
        return other < self

    def meets(self, other: "Subset") -> bool:
        return self.mask & self._other(other) != 0

    def retarget(self, carrier: Carrier) -> "Subset":
        """Reinterpret the mask over `carrier`, e.g. after `Carrier.extend`"""
        return Subset(carrier, self.mask)

    def __str__(self) -> str:
        return "{" + ", ".join(format_label(label) for label in self.elements()) + "}"

    def __repr__(self) -> str:
        return f"Subset({self.carrier.name}, {self})"


@dataclass(frozen=True)
class SubsetFamily:
    """Duplicate-free family of subsets of one carrier, kept in ascending mask order"""

    carrier: Carrier
    members: tuple[Subset, ...] = field(default=())

    def __post_init__(self):
        masks = []
        for member in self.members:
            same_carrier(self.carrier, member.carrier)
            masks.append(member.mask)
        if any(a >= b for a, b in zip(masks, masks[1:])):
            canonical = tuple(Subset(self.carrier, m) for m in sorted(set(masks)))
            object.__setattr__(self, "members", canonical)

    @classmethod
    def of(cls, carrier: Carrier, subsets: Iterable[Subset]) -> "SubsetFamily":
        return cls(carrier, tuple(subsets))

    @classmethod
    def from_masks(cls, carrier: Carrier, masks: Iterable[int]) -> "SubsetFamily":
        return cls(carrier, tuple(Subset(carrier, int(m)) for m in sorted(set(int(m) for m in masks))))

    @cached_property
    def masks(self) -> tuple[int, ...]:
        return tuple(member.mask for member in self.members)

    @cached_property
    def _mask_set(self) -> frozenset[int]:
        return frozenset(self.masks)

    def mask_array(self) -> np.ndarray:
        return np.array(self.masks, dtype=np.uint64)

    def __iter__(self) -> Iterator[Subset]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __getitem__(self, i: int) -> Subset:
        return self.members[i]

    def __contains__(self, subset: Subset) -> bool:
        return subset.carrier == self.carrier and subset.mask in self._mask_set

    def union(self) -> Subset:
        mask = 0
        for m in self.masks:
            mask |= m
        return Subset(self.carrier, mask)

    def __le__(self, other: "SubsetFamily") -> bool:
        same_carrier(self.carrier, other.carrier)
        return self._mask_set <= other._mask_set

    def __str__(self) -> str:
        return "[" + ", ".join(str(member) for member in self.members) + "]"


@dataclass(frozen=True, eq=False)
class FinCarrier(Carrier):
    """Finite subsets of `base`; element i is the subset with mask i"""

    base: Carrier | None = None

    def element(self, subset: Subset) -> Subset:
        same_carrier(self.base, subset.carrier)
        return subset

    def decode(self, i: int) -> Subset:
        return self.elements[i]


def same_carrier(a: Carrier, b: Carrier) -> None:
    if a is not b and a != b:
        raise CarrierMismatch(f"carrier {a.name} does not match carrier {b.name}", (a.name, b.name))


def product(a: Carrier, b: Carrier) -> Carrier:
    """Pairs (x, y) in row-major order, so pair (i, j) sits at index i * |b| + j"""
    check_limit("product", a.size * b.size, f"size of {a.name}x{b.name}")
    return Carrier(f"{a.name}x{b.name}", tuple((x, y) for x in a.elements for y in b.elements))


def powerset_masks(c: Carrier) -> np.ndarray:
    check_limit("powerset", c.size, f"size of carrier {c.name} for powerset enumeration")
    return np.arange(1 << c.size, dtype=np.uint64)


def powerset(c: Carrier) -> SubsetFamily:
    check_limit("powerset", c.size, f"size of carrier {c.name} for powerset enumeration")
    return SubsetFamily(c, tuple(Subset(c, m) for m in range(1 << c.size)))


def fin_carrier(c: Carrier) -> FinCarrier:
    check_limit("fin_base", c.size, f"size of carrier {c.name} for Fin")
    return FinCarrier(f"Fin({c.name})", tuple(Subset(c, m) for m in range(1 << c.size)), base=c)


def meets(a: Subset, b: Subset) -> bool:
    return a.meets(b)


def submasks(mask: int) -> Iterator[int]:
    """All submasks of `mask` in ascending order"""
    sub = 0
    while True:
        yield sub
        if sub == mask:
            return
        sub = (sub - mask) & mask


def bools_to_mask(row: Sequence[bool]) -> int:
    mask = 0
    for i, bit in enumerate(row):
        if bit:
            mask |= 1 << i
    return mask


def mask_to_bools(mask: int, n: int) -> np.ndarray:
    return np.array([bool(mask >> i & 1) for i in range(n)], dtype=bool)


def union_table(rows: Sequence[int]) -> np.ndarray:
    """For every mask m over len(rows) bits, the OR of rows[i] for the bits i of m"""
    table = np.zeros(1, dtype=np.uint64)
    for row in rows:
        table = np.concatenate([table, table | np.uint64(row)])
    return table


def bit_set(masks: np.ndarray, i: int) -> np.ndarray:
    return (masks >> np.uint64(i)) & np.uint64(1) == np.uint64(1)
