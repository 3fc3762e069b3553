"""Tensor and normal-ordered operator atoms.

A Tensor has three slot bundles: bra (subscripts), ket (superscripts), and aux
(auxiliary, e.g. density-fitting). Bra/ket entries may be None for an empty
slot; when the bundles are column-paired (nonsymmetric permutational symmetry)
the shorter bundle is implicitly padded. Symmetry is carried per tensor:

  perm_symmetry    antisymm | symm | nonsymm   within bra and within ket
  braket_symmetry  symm | conjugate | nonsymm  under bra <-> ket exchange
  column_symmetry  symm | nonsymm              exchange of whole columns

A NormalOperator is a normal-ordered string of elementary operators written
with creators in the ket and annihilators in the bra. Its flattened elementary
order is: creators in stored ket order, then annihilators in reversed stored
bra order. Operators are always antisymmetric in each bundle.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Optional, Sequence

from .expr import Constant, Expr, Product, Sum, Variable, mk_product, mk_sum, register_atom_type
from .scalars import CRational
from .spaces import Index, IndexSpaceRegistry

ANTISYMM = "antisymm"
SYMM = "symm"
NONSYMM = "nonsymm"
CONJUGATE = "conjugate"

_PERM_TAGS = (ANTISYMM, SYMM, NONSYMM)
_BRAKET_TAGS = (SYMM, CONJUGATE, NONSYMM)
_COLUMN_TAGS = (SYMM, NONSYMM)

GENUINE = "genuine"
FERMI = "fermi"
_VACUA = (GENUINE, FERMI)

DELTA_LABEL = "δ"
OVERLAP_LABEL = "s"


class LayoutError(Exception):
    """Raised for ill-formed slot bundles or symmetry declarations."""


def _check_bundle(name: str, slots: Sequence[Optional[Index]], allow_empty: bool):
    for s in slots:
        if s is None:
            if not allow_empty:
                raise LayoutError(f"empty slot not allowed in {name} bundle here")
        elif not isinstance(s, Index):
            raise LayoutError(f"{name} slot holds {type(s).__name__}, not an Index")


class Tensor(Expr):
    __slots__ = ("label", "bra", "ket", "aux", "perm_symmetry",
                 "braket_symmetry", "column_symmetry", "conjugated")
    rank = 2

    def __init__(self, label: str,
                 bra: Sequence[Optional[Index]] = (),
                 ket: Sequence[Optional[Index]] = (),
                 aux: Sequence[Index] = (),
                 perm_symmetry: str = NONSYMM,
                 braket_symmetry: str = NONSYMM,
                 column_symmetry: str = NONSYMM,
                 conjugated: bool = False):
        if not label:
            raise LayoutError("tensor label must be non-empty")
        if perm_symmetry not in _PERM_TAGS:
            raise LayoutError(f"unknown permutational symmetry {perm_symmetry!r}")
        if braket_symmetry not in _BRAKET_TAGS:
            raise LayoutError(f"unknown bra-ket symmetry {braket_symmetry!r}")
        if column_symmetry not in _COLUMN_TAGS:
            raise LayoutError(f"unknown column symmetry {column_symmetry!r}")
        allow_empty = perm_symmetry == NONSYMM
        _check_bundle("bra", bra, allow_empty)
        _check_bundle("ket", ket, allow_empty)
        _check_bundle("aux", aux, False)
        if braket_symmetry == SYMM and len(bra) != len(ket):
            raise LayoutError("bra-ket symmetric tensor needs equal bundle sizes")
        bra = tuple(bra)
        ket = tuple(ket)
        if perm_symmetry == NONSYMM and (bra or ket) and len(bra) != len(ket):
            # column-pair the bundles explicitly so equivalent writings agree
            n = max(len(bra), len(ket))
            bra = bra + (None,) * (n - len(bra))
            ket = ket + (None,) * (n - len(ket))
        if perm_symmetry == NONSYMM:
            for b, k in zip(bra, ket):
                if b is None and k is None:
                    raise LayoutError("column with both slots empty")
        self.label = label
        self.bra = bra
        self.ket = ket
        self.aux = tuple(aux)
        self.perm_symmetry = perm_symmetry
        self.braket_symmetry = braket_symmetry
        self.column_symmetry = column_symmetry
        self.conjugated = conjugated
        self._hash = hash(("tensor", label, self.bra, self.ket, self.aux,
                           perm_symmetry, braket_symmetry, column_symmetry,
                           conjugated))

    def n_columns(self) -> int:
        return max(len(self.bra), len(self.ket))

    def column(self, k: int) -> tuple[Optional[Index], Optional[Index]]:
        b = self.bra[k] if k < len(self.bra) else None
        t = self.ket[k] if k < len(self.ket) else None
        return (b, t)

    def sort_key(self):
        return (self.rank, self.label, self.conjugated,
                len(self.bra), len(self.ket), len(self.aux),
                tuple(ix.key() if ix else () for ix in self.bra),
                tuple(ix.key() if ix else () for ix in self.ket),
                tuple(ix.key() for ix in self.aux))

    def __eq__(self, other):
        return (isinstance(other, Tensor)
                and self.label == other.label
                and self.bra == other.bra and self.ket == other.ket
                and self.aux == other.aux
                and self.perm_symmetry == other.perm_symmetry
                and self.braket_symmetry == other.braket_symmetry
                and self.column_symmetry == other.column_symmetry
                and self.conjugated == other.conjugated)

    __hash__ = Expr.__hash__


class NormalOperator(Expr):
    __slots__ = ("creators", "annihilators", "vacuum")
    rank = 3

    def __init__(self, creators: Sequence[Index], annihilators: Sequence[Index],
                 vacuum: str = GENUINE):
        if vacuum not in _VACUA:
            raise LayoutError(f"unknown vacuum {vacuum!r}")
        _check_bundle("creator", creators, False)
        _check_bundle("annihilator", annihilators, False)
        self.creators = tuple(creators)
        self.annihilators = tuple(annihilators)
        self.vacuum = vacuum
        self._hash = hash(("nop", self.creators, self.annihilators, vacuum))

    # bra/ket views so slot bookkeeping can treat atoms uniformly
    @property
    def bra(self) -> tuple[Index, ...]:
        return self.annihilators

    @property
    def ket(self) -> tuple[Index, ...]:
        return self.creators

    @property
    def aux(self) -> tuple[Index, ...]:
        return ()

    def n_elementary(self) -> int:
        return len(self.creators) + len(self.annihilators)

    def sort_key(self):
        return (self.rank, self.vacuum, len(self.creators), len(self.annihilators),
                tuple(ix.key() for ix in self.creators),
                tuple(ix.key() for ix in self.annihilators))

    def __eq__(self, other):
        return (isinstance(other, NormalOperator)
                and self.creators == other.creators
                and self.annihilators == other.annihilators
                and self.vacuum == other.vacuum)

    __hash__ = Expr.__hash__


register_atom_type(Tensor)
register_atom_type(NormalOperator)


def _has_antisymm_repeat(slots: Sequence[Optional[Index]]) -> bool:
    seen = set()
    for s in slots:
        if s is None:
            continue
        if s in seen:
            return True
        seen.add(s)
    return False


def make_tensor(label: str,
                bra: Sequence[Optional[Index]] = (),
                ket: Sequence[Optional[Index]] = (),
                aux: Sequence[Index] = (),
                perm_symmetry: Optional[str] = None,
                braket_symmetry: Optional[str] = None,
                column_symmetry: Optional[str] = None,
                conjugated: bool = False,
                registry: Optional[IndexSpaceRegistry] = None) -> Expr:
    """Validating tensor factory.

    Symmetries default from the registry's tensor_defaults for the label (the
    Kronecker delta is always bra-ket symmetric), otherwise to nonsymmetric.
    An antisymmetric bundle holding the same index twice gives Constant 0.
    """
    if perm_symmetry is None or braket_symmetry is None or column_symmetry is None:
        tag = registry.tensor_defaults.get(label) if registry else None
        p, b, c = parse_symmetry_tag(tag) if tag else (NONSYMM, NONSYMM, NONSYMM)
        if label == DELTA_LABEL:
            b = SYMM
        perm_symmetry = perm_symmetry if perm_symmetry is not None else p
        braket_symmetry = braket_symmetry if braket_symmetry is not None else b
        column_symmetry = column_symmetry if column_symmetry is not None else c
    t = Tensor(label, bra, ket, aux, perm_symmetry, braket_symmetry,
               column_symmetry, conjugated)
    if perm_symmetry == ANTISYMM and (_has_antisymm_repeat(t.bra)
                                      or _has_antisymm_repeat(t.ket)):
        return Constant(0)
    return t


def parse_symmetry_tag(tag: str) -> tuple[str, str, str]:
    """Decode a symmetry tag like "A", "S-C", or "N-N-S".

    Fields are perm, braket, column; letters A/S/N mean antisymm/symm/nonsymm
    except in the braket field where C means conjugate-symmetric.
    """
    perm_map = {"A": ANTISYMM, "S": SYMM, "N": NONSYMM}
    braket_map = {"S": SYMM, "C": CONJUGATE, "N": NONSYMM}
    col_map = {"S": SYMM, "N": NONSYMM}
    parts = tag.split("-")
    if not 1 <= len(parts) <= 3 or any(len(p) != 1 for p in parts):
        raise LayoutError(f"bad symmetry tag {tag!r}")
    try:
        perm = perm_map[parts[0]]
        braket = braket_map[parts[1]] if len(parts) > 1 else NONSYMM
        col = col_map[parts[2]] if len(parts) > 2 else NONSYMM
    except KeyError as exc:
        raise LayoutError(f"bad symmetry tag {tag!r}") from exc
    return perm, braket, col


def symmetry_tag(t: Tensor) -> str:
    perm = {ANTISYMM: "A", SYMM: "S", NONSYMM: "N"}[t.perm_symmetry]
    braket = {SYMM: "S", CONJUGATE: "C", NONSYMM: "N"}[t.braket_symmetry]
    col = {SYMM: "S", NONSYMM: "N"}[t.column_symmetry]
    if col != "N":
        return f"{perm}-{braket}-{col}"
    if braket != "N":
        return f"{perm}-{braket}"
    return perm


def make_delta(bra: Index, ket: Index) -> Tensor:
    return Tensor(DELTA_LABEL, (bra,), (ket,), braket_symmetry=SYMM)


def make_overlap(bra: Index, ket: Index) -> Tensor:
    return Tensor(OVERLAP_LABEL, (bra,), (ket,))


def make_operator(creators: Sequence[Index], annihilators: Sequence[Index],
                  vacuum: str = GENUINE) -> Expr:
    """Operator factory; a repeated index within a bundle annihilates it."""
    if _has_antisymm_repeat(creators) or _has_antisymm_repeat(annihilators):
        return Constant(0)
    return NormalOperator(creators, annihilators, vacuum)


# -- slot permutation phases ---------------------------------------------------

def permutation_parity(perm: Sequence[int]) -> int:
    """+1 for even, -1 for odd. perm[k] is the source position of new slot k."""
    seen = [False] * len(perm)
    sign = 1
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def slot_permutation_phase(symmetry: str, perm: Sequence[int]) -> int:
    """Phase for permuting slots of a bundle with the given perm symmetry."""
    if sorted(perm) != list(range(len(perm))):
        raise ValueError(f"not a permutation: {perm}")
    if symmetry == ANTISYMM:
        return permutation_parity(perm)
    if symmetry == SYMM:
        return 1
    if any(p != k for k, p in enumerate(perm)):
        raise ValueError("cannot permute slots of a nonsymmetric bundle")
    return 1


# -- adjoint --------------------------------------------------------------------

def adjoint(e: Expr) -> Expr:
    """Hermitian adjoint: reverses products, swaps bra and ket, conjugates."""
    if isinstance(e, Constant):
        return Constant(e.value.conjugate())
    if isinstance(e, Variable):
        return Variable(e.name, not e.conjugated)
    if isinstance(e, Tensor):
        return Tensor(e.label, e.ket, e.bra, e.aux, e.perm_symmetry,
                      e.braket_symmetry, e.column_symmetry,
                      conjugated=not e.conjugated)
    if isinstance(e, NormalOperator):
        # (a^{p...}_{q...})+ = a^{q...}_{p...}; stored bundles swap in place
        return NormalOperator(e.annihilators, e.creators, e.vacuum)
    if isinstance(e, Product):
        return mk_product(e.prefactor.conjugate(),
                          [adjoint(f) for f in reversed(e.factors)])
    if isinstance(e, Sum):
        return mk_sum(adjoint(t) for t in e.terms)
    raise TypeError(f"adjoint undefined for {type(e).__name__}")


# -- index iteration -------------------------------------------------------------

def slot_indices(atom) -> Iterator[tuple[str, int, Index]]:
    """Yield (bundle, position, index) over occupied slots in bra, ket, aux order."""
    for kind, slots in (("bra", atom.bra), ("ket", atom.ket), ("aux", atom.aux)):
        for k, ix in enumerate(slots):
            if ix is not None:
                yield (kind, k, ix)


def atom_indices(atom) -> Iterator[Index]:
    for _, _, ix in slot_indices(atom):
        yield ix


def index_closure(indices: Iterable[Index]) -> set[Index]:
    """The given indices together with all protoindices, transitively."""
    out: set[Index] = set()
    stack = list(indices)
    while stack:
        ix = stack.pop()
        if ix in out:
            continue
        out.add(ix)
        stack.extend(ix.protos)
    return out


# -- contraction structure (shared by the Wick engine and canonicalization) -----

def elementary_sequence(op: NormalOperator) -> list[tuple[str, Index, int]]:
    """Flattened elementary operators as (kind, index, stored slot position).

    Creators come first in stored ket order, then annihilators in reversed
    stored bra order.
    """
    seq = [("cre", ix, k) for k, ix in enumerate(op.creators)]
    nb = len(op.annihilators)
    seq.extend(("ann", op.annihilators[k], k) for k in range(nb - 1, -1, -1))
    return seq


def qp_annihilator_capable(kind: str, ix: Index, vacuum: str,
                           registry: IndexSpaceRegistry) -> bool:
    """Can this elementary operator kill the reference on its right?"""
    if vacuum == GENUINE:
        return kind == "ann"
    if kind == "ann":
        return (ix.space.bits & registry.unoccupied_bits) != 0
    return (ix.space.bits & registry.occupied_bits) != 0


def qp_creator_capable(kind: str, ix: Index, vacuum: str,
                       registry: IndexSpaceRegistry) -> bool:
    if vacuum == GENUINE:
        return kind == "cre"
    if kind == "cre":
        return (ix.space.bits & registry.unoccupied_bits) != 0
    return (ix.space.bits & registry.occupied_bits) != 0


def contraction_channel(kind_left: str, ix_left: Index, kind_right: str,
                        ix_right: Index, vacuum: str,
                        registry: IndexSpaceRegistry) -> Optional[str]:
    """Channel of a nonzero elementary contraction (left factor before right),
    or None. Channels: "direct" (genuine), "particle", "hole" (Fermi)."""
    if ix_left.space.qn != ix_right.space.qn:
        return None
    if vacuum == GENUINE:
        if kind_left == "ann" and kind_right == "cre":
            if ix_left.space.bits & ix_right.space.bits:
                return "direct"
        return None
    u = registry.unoccupied_bits
    o = registry.occupied_bits
    if (kind_left == "ann" and kind_right == "cre"
            and ix_left.space.bits & u and ix_right.space.bits & u):
        return "particle"
    if (kind_left == "cre" and kind_right == "ann"
            and ix_left.space.bits & o and ix_right.space.bits & o):
        return "hole"
    return None


def can_touch(left: NormalOperator, right: NormalOperator,
              registry: IndexSpaceRegistry) -> bool:
    """True if any elementary contraction exists with `left` before `right`."""
    for kl, il, _ in elementary_sequence(left):
        for kr, ir, _ in elementary_sequence(right):
            if contraction_channel(kl, il, kr, ir, left.vacuum, registry):
                return True
    return False


def operators_commute(a: NormalOperator, b: NormalOperator,
                      registry: IndexSpaceRegistry) -> bool:
    """True when a and b reorder freely (up to the sign of crossing their
    elementary strings): no contraction survives in either arrangement."""
    if a.vacuum != b.vacuum:
        return False
    return not (can_touch(a, b, registry) or can_touch(b, a, registry))
