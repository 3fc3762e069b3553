"""Index spaces, indices, and the space registry.

An IndexSpace is a bitset over registered base spaces (32 bits max) plus a
32-bit quantum-number word and a display label. Unions of bases share the
label/bits scheme, so set algebra on spaces is plain integer bit twiddling.
Every space that can appear in an expression must be registered: resolving an
unregistered bit combination is a configuration error, not a silent new space.

Indices are immutable values: a space, an ordinal, and an optional tuple of
protoindices (indices this one depends on, e.g. geminal-style dependent
virtuals). Dummy ordinals are handed out by a DummySession so renaming never
collides with named indices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

OCCUPIED = "occupied"
UNOCCUPIED = "unoccupied"
MIXED = "mixed"
_TRAITS = (OCCUPIED, UNOCCUPIED, MIXED)

MAX_BASES = 32


class SpaceError(Exception):
    """Raised for registry misconfiguration or unresolvable space algebra."""


@dataclass(frozen=True)
class IndexSpace:
    """A (possibly composite) index space identified by its base bitset."""

    bits: int
    qn: int
    label: str

    def __post_init__(self):
        if not (0 < self.bits < (1 << MAX_BASES)):
            raise SpaceError(f"space bits out of range: {self.bits:#x}")
        if not (0 <= self.qn < (1 << 32)):
            raise SpaceError(f"qn word out of range: {self.qn:#x}")

    def __eq__(self, other):
        if not isinstance(other, IndexSpace):
            return NotImplemented
        return self.bits == other.bits and self.qn == other.qn

    def __hash__(self):
        return hash((self.bits, self.qn))

    def includes(self, other: "IndexSpace") -> bool:
        return self.qn == other.qn and (other.bits & ~self.bits) == 0

    def overlaps(self, other: "IndexSpace") -> bool:
        return self.qn == other.qn and (self.bits & other.bits) != 0

    def __repr__(self):
        return f"IndexSpace({self.label!r}, bits={self.bits:#b})"


@dataclass(frozen=True)
class Index:
    """An index: space, ordinal, and protoindices it depends on."""

    space: IndexSpace
    ordinal: int
    protos: tuple["Index", ...] = ()

    @property
    def label(self) -> str:
        return f"{self.space.label}_{self.ordinal}"

    def key(self):
        """Deterministic total-order key (used for lexicographic tie-breaks)."""
        return (self.space.label, self.space.bits, self.space.qn, self.ordinal,
                tuple(p.key() for p in self.protos))

    def __str__(self) -> str:
        if self.protos:
            inner = ",".join(str(p) for p in self.protos)
            return f"{self.label}<{inner}>"
        return self.label

    def __repr__(self):
        return f"Index({self})"


@dataclass
class BaseSpace:
    label: str
    vacuum: str
    extent: int
    bit: int
    qn: int = 0


class DummySession:
    """Hands out fresh dummy ordinals per space, skipping reserved ones.

    Reserved ordinals are keyed by (bits, qn, base label) so that e.g. named
    p_1, p_2 force the next p dummy to be p_3 while leaving a_1 available.
    """

    def __init__(self, reserved: Iterable[Index] = ()):
        self._used: dict[tuple[int, int, str], set[int]] = {}
        for ix in reserved:
            self.reserve(ix)

    def reserve(self, ix: Index):
        self._used.setdefault(self._key(ix.space), set()).add(ix.ordinal)
        for p in ix.protos:
            self.reserve(p)

    @staticmethod
    def _key(space: IndexSpace):
        return (space.bits, space.qn, space.label)

    def next(self, space: IndexSpace, protos: Sequence[Index] = ()) -> Index:
        used = self._used.setdefault(self._key(space), set())
        n = 1
        while n in used:
            n += 1
        used.add(n)
        return Index(space, n, tuple(protos))


class IndexSpaceRegistry:
    """Registered base spaces and unions, with vacuum traits and extents."""

    def __init__(self):
        self.bases: list[BaseSpace] = []
        self._by_label: dict[str, IndexSpace] = {}
        self._by_id: dict[tuple[int, int], IndexSpace] = {}
        self.tensor_defaults: dict[str, str] = {}

    # -- construction ------------------------------------------------------

    def add_base(self, label: str, vacuum: str, extent: int, qn: int = 0) -> IndexSpace:
        if vacuum not in _TRAITS:
            raise SpaceError(f"unknown vacuum trait {vacuum!r} for {label!r}")
        if label in self._by_label:
            raise SpaceError(f"space label {label!r} already registered")
        if len(self.bases) >= MAX_BASES:
            raise SpaceError(f"more than {MAX_BASES} base spaces")
        if extent < 1:
            raise SpaceError(f"extent of {label!r} must be positive")
        base = BaseSpace(label, vacuum, extent, bit=1 << len(self.bases), qn=qn)
        self.bases.append(base)
        return self._register(IndexSpace(base.bit, qn, label))

    def add_union(self, label: str, members: Sequence[str]) -> IndexSpace:
        if label in self._by_label:
            raise SpaceError(f"space label {label!r} already registered")
        if not members:
            raise SpaceError(f"union {label!r} has no members")
        bits = 0
        qns = set()
        for m in members:
            s = self.space(m)
            bits |= s.bits
            qns.add(s.qn)
        if len(qns) != 1:
            raise SpaceError(f"union {label!r} mixes quantum-number words")
        return self._register(IndexSpace(bits, qns.pop(), label))

    def _register(self, space: IndexSpace) -> IndexSpace:
        self._by_label[space.label] = space
        self._by_id[(space.bits, space.qn)] = space
        return space

    # -- lookups -----------------------------------------------------------

    def space(self, label: str) -> IndexSpace:
        try:
            return self._by_label[label]
        except KeyError:
            raise SpaceError(f"unregistered space label {label!r}") from None

    def has_space(self, label: str) -> bool:
        return label in self._by_label

    def resolve(self, bits: int, qn: int = 0) -> IndexSpace:
        """Map a bit combination back to a registered space."""
        try:
            return self._by_id[(bits, qn)]
        except KeyError:
            raise SpaceError(
                f"space bits {bits:#b} (qn={qn}) do not name a registered space; "
                f"register the union explicitly") from None

    def intersect(self, a: IndexSpace, b: IndexSpace) -> Optional[IndexSpace]:
        """Intersection as a registered space, or None when empty."""
        if a.qn != b.qn:
            return None
        bits = a.bits & b.bits
        if bits == 0:
            return None
        return self.resolve(bits, a.qn)

    def extent(self, space: IndexSpace) -> int:
        return sum(b.extent for b in self.bases if b.bit & space.bits)

    def base_members(self, space: IndexSpace) -> list[BaseSpace]:
        return [b for b in self.bases if b.bit & space.bits]

    # -- vacuum structure ---------------------------------------------------

    @property
    def occupied_bits(self) -> int:
        return sum(b.bit for b in self.bases if b.vacuum in (OCCUPIED, MIXED))

    @property
    def unoccupied_bits(self) -> int:
        return sum(b.bit for b in self.bases if b.vacuum in (UNOCCUPIED, MIXED))

    def occupied_part(self, space: IndexSpace) -> Optional[IndexSpace]:
        bits = space.bits & self.occupied_bits
        return self.resolve(bits, space.qn) if bits else None

    def unoccupied_part(self, space: IndexSpace) -> Optional[IndexSpace]:
        bits = space.bits & self.unoccupied_bits
        return self.resolve(bits, space.qn) if bits else None

    # -- dummies -------------------------------------------------------------

    def dummy_session(self, reserved: Iterable[Index] = ()) -> DummySession:
        return DummySession(reserved)

    # -- serialization -------------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "bases": [{"label": b.label, "vacuum": b.vacuum, "extent": b.extent,
                       **({"qn": b.qn} if b.qn else {})}
                      for b in self.bases],
            "unions": [],
            "tensor_defaults": dict(self.tensor_defaults),
        }
        base_bits = {b.bit for b in self.bases}
        for (bits, _qn), s in sorted(self._by_id.items()):
            if bits not in base_bits:
                members = [b.label for b in self.bases if b.bit & bits]
                doc["unions"].append({"label": s.label, "members": members})
        return json.dumps(doc, ensure_ascii=False, indent=2)

    @staticmethod
    def from_json(text: str) -> "IndexSpaceRegistry":
        doc = json.loads(text)
        reg = IndexSpaceRegistry()
        for b in doc.get("bases", []):
            reg.add_base(b["label"], b["vacuum"], int(b["extent"]),
                         qn=int(b.get("qn", 0)))
        for u in doc.get("unions", []):
            reg.add_union(u["label"], u["members"])
        reg.tensor_defaults.update(doc.get("tensor_defaults", {}))
        return reg

    @staticmethod
    def from_file(path: str) -> "IndexSpaceRegistry":
        with open(path, "r", encoding="utf-8") as fh:
            return IndexSpaceRegistry.from_json(fh.read())


def default_registry() -> IndexSpaceRegistry:
    """Occupied i (10), unoccupied a (100), and their union p."""
    reg = IndexSpaceRegistry()
    reg.add_base("i", OCCUPIED, 10)
    reg.add_base("a", UNOCCUPIED, 100)
    reg.add_union("p", ["i", "a"])
    reg.tensor_defaults.update({"ḡ": "A", "t": "A"})
    return reg
