"""Canonical forms for tensor networks and expressions.

The canonicalizer rewrites a product of tensors/operators into a unique
representative of its equivalence class under: dummy index renaming,
slot permutations allowed by the declared symmetries (with their phases),
bra-ket exchange for bra-ket symmetric tensors, column reordering for
column-symmetric tensors, and reordering of commuting factors (with the
fermionic exchange phase for operator pairs).

Pipeline, in order:
  1. build the colored graph and compute a canonical labeling;
  2. reorder factors toward canonical core-vertex order, swapping only
     commuting neighbours (bubble passes, so blocked pairs act as walls);
  3. inside each factor, sort symmetric/antisymmetric bundles by canonical
     slot positions, exchange bra and ket of bra-ket symmetric tensors when
     the labeling says so, and reorder symmetric columns;
  4. (lexicographic mode) re-sort factors by label rank, pushing operators
     to the right without disturbing their relative order;
  5. rename dummy indices in order of appearance over the final factor list,
     protoindices before their dependents;
  6. (lexicographic mode) final index-name sort inside symmetric bundles.

Phases from antisymmetric permutations and operator exchanges are collected
into a single +-1 factor: the input product equals phase * canonical product.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .expr import (Constant, Expr, Product, Sum, Variable, as_terms, expand,
                   mk_product, mk_sum, rapid_simplify)
from .graph import (Atom, ColoredGraph, TensorNetwork, build_graph,
                    make_network)
from .labeling import CanonResult, canonical_labeling
from .scalars import CRational
from .spaces import DummySession, Index, IndexSpaceRegistry
from .tensors import (ANTISYMM, NONSYMM, SYMM, NormalOperator, Tensor,
                      operators_commute, slot_indices, slot_permutation_phase)


@dataclass
class NetworkCanon:
    """Result of canonicalizing one tensor network."""

    factors: tuple[Atom, ...]       # rewritten factors, canonical order
    phase: int                      # input == phase * canonical
    identity: int                   # 64-bit digest of the graph certificate
    layout: tuple[Index, ...]       # named indices in canonical vertex order
    network: TensorNetwork          # the validated input network
    graph: ColoredGraph             # graph of the *input* factors
    labeling: CanonResult
    mapping: dict[Index, Index] = field(default_factory=dict)


def _swap_phase(a: Atom, b: Atom, registry: IndexSpaceRegistry) -> Optional[int]:
    """Phase for exchanging adjacent factors a, b; None if they don't commute."""
    if isinstance(a, NormalOperator) and isinstance(b, NormalOperator):
        if not operators_commute(a, b, registry):
            return None
        return -1 if (a.n_elementary() * b.n_elementary()) % 2 else 1
    return 1


def _sorted_bundle(slots: Sequence[Index], fi: int, kind: str, symmetry: str,
                   g: ColoredGraph, pos: Sequence[int]):
    if len(slots) <= 1:
        return tuple(slots), 1
    order = sorted(range(len(slots)),
                   key=lambda k: pos[g.slot_of[(fi, kind, k)]])
    return tuple(slots[k] for k in order), slot_permutation_phase(symmetry, order)


def _rewrite_slots(f: Atom, fi: int, g: ColoredGraph, pos: Sequence[int]):
    """Apply step 3 to one factor. Returns (new factor, phase)."""
    if isinstance(f, NormalOperator):
        cre, p1 = _sorted_bundle(f.creators, fi, "ket", ANTISYMM, g, pos)
        ann, p2 = _sorted_bundle(f.annihilators, fi, "bra", ANTISYMM, g, pos)
        if cre == f.creators and ann == f.annihilators:
            return f, p1 * p2
        return NormalOperator(cre, ann, f.vacuum), p1 * p2

    bra, ket, phase = f.bra, f.ket, 1
    if f.perm_symmetry in (SYMM, ANTISYMM):
        bra, p1 = _sorted_bundle(bra, fi, "bra", f.perm_symmetry, g, pos)
        ket, p2 = _sorted_bundle(ket, fi, "ket", f.perm_symmetry, g, pos)
        phase = p1 * p2
    elif f.column_symmetry == SYMM and f.n_columns() > 1:
        order = sorted(range(f.n_columns()),
                       key=lambda k: pos[g.column_of[(fi, k)]])
        bra = tuple(bra[k] for k in order)
        ket = tuple(ket[k] for k in order)
    if f.braket_symmetry == SYMM and bra:
        bv = g.bundle_of.get((fi, "bra"))
        kv = g.bundle_of.get((fi, "ket"))
        if bv is not None and kv is not None and pos[kv] < pos[bv]:
            bra, ket = ket, bra
    if bra == f.bra and ket == f.ket:
        return f, phase
    return Tensor(f.label, bra, ket, f.aux, f.perm_symmetry,
                  f.braket_symmetry, f.column_symmetry, f.conjugated), phase


def _ixkey(ix: Optional[Index]):
    return ix.key() if ix is not None else ()


def _lex_bundle(slots: Sequence[Index], symmetry: str):
    if len(slots) <= 1:
        return tuple(slots), 1
    order = sorted(range(len(slots)), key=lambda k: slots[k].key())
    return tuple(slots[k] for k in order), slot_permutation_phase(symmetry, order)


def _lex_slots(f: Atom):
    """Step 6: order slots of symmetric bundles by (renamed) index names."""
    if isinstance(f, NormalOperator):
        cre, p1 = _lex_bundle(f.creators, ANTISYMM)
        ann, p2 = _lex_bundle(f.annihilators, ANTISYMM)
        if cre == f.creators and ann == f.annihilators:
            return f, p1 * p2
        return NormalOperator(cre, ann, f.vacuum), p1 * p2

    bra, ket, phase = f.bra, f.ket, 1
    if f.perm_symmetry in (SYMM, ANTISYMM):
        bra, p1 = _lex_bundle(bra, f.perm_symmetry)
        ket, p2 = _lex_bundle(ket, f.perm_symmetry)
        phase = p1 * p2
    elif f.column_symmetry == SYMM and f.n_columns() > 1:
        order = sorted(range(f.n_columns()),
                       key=lambda k: (_ixkey(bra[k]), _ixkey(ket[k])))
        bra = tuple(bra[k] for k in order)
        ket = tuple(ket[k] for k in order)
    if f.braket_symmetry == SYMM and bra:
        bkey = tuple(_ixkey(ix) for ix in bra)
        kkey = tuple(_ixkey(ix) for ix in ket)
        if kkey < bkey:
            bra, ket = ket, bra
    if bra == f.bra and ket == f.ket:
        return f, phase
    return Tensor(f.label, bra, ket, f.aux, f.perm_symmetry,
                  f.braket_symmetry, f.column_symmetry, f.conjugated), phase


def _map_atom(f: Atom, mapping: dict[Index, Index]) -> Atom:
    def m(ix):
        return mapping.get(ix, ix) if ix is not None else None

    if isinstance(f, NormalOperator):
        return NormalOperator(tuple(m(ix) for ix in f.creators),
                              tuple(m(ix) for ix in f.annihilators), f.vacuum)
    return Tensor(f.label, tuple(m(ix) for ix in f.bra),
                  tuple(m(ix) for ix in f.ket), tuple(m(ix) for ix in f.aux),
                  f.perm_symmetry, f.braket_symmetry, f.column_symmetry,
                  f.conjugated)


def canonicalize_network(factors: Iterable[Atom],
                         registry: IndexSpaceRegistry,
                         named: Optional[Iterable[Index]] = None,
                         lexicographic: bool = False,
                         lex_order: Optional[dict] = None,
                         pin_named: bool = True) -> NetworkCanon:
    tn = make_network(factors, named)
    g = build_graph(tn, registry, pin_named=pin_named)
    lab = canonical_labeling(g.colors, g.adj)
    pos = lab.position

    # step 2: bubble factors toward canonical core order
    nf = len(tn.factors)
    rank = [pos[g.core_of[fi]] for fi in range(nf)]
    arrange = list(range(nf))
    phase = 1
    moved = True
    while moved:
        moved = False
        for k in range(nf - 1):
            a, b = arrange[k], arrange[k + 1]
            if rank[a] <= rank[b]:
                continue
            ph = _swap_phase(tn.factors[a], tn.factors[b], registry)
            if ph is None:
                continue
            arrange[k], arrange[k + 1] = b, a
            phase *= ph
            moved = True

    # step 3: slot rewrites, tracked by original factor position
    rewritten: dict[int, Atom] = {}
    for fi, f in enumerate(tn.factors):
        new, ph = _rewrite_slots(f, fi, g, pos)
        rewritten[fi] = new
        phase *= ph

    # step 4: lexicographic factor ordering (scalars by label, operators last)
    if lexicographic:
        lexr = lex_order or {}

        def fkey(item):
            slot, fi = item
            f = rewritten[fi]
            if isinstance(f, NormalOperator):
                return (1, slot)
            return (0, lexr.get(f.label, 0), f.label, len(f.bra), len(f.ket),
                    len(f.aux), f.conjugated, rank[fi])

        arrange = [fi for _, fi in sorted(enumerate(arrange), key=fkey)]

    final = [rewritten[fi] for fi in arrange]

    # step 5: rename dummies in appearance order, protoindices first
    session = DummySession(reserved=tn.named)
    mapping: dict[Index, Index] = {}

    def resolve(ix: Index) -> Index:
        got = mapping.get(ix)
        if got is not None:
            return got
        protos = tuple(resolve(p) for p in ix.protos)
        new = ix if ix in tn.named else session.next(ix.space, protos)
        mapping[ix] = new
        return new

    for f in final:
        for _, _, ix in slot_indices(f):
            resolve(ix)
    final = [_map_atom(f, mapping) for f in final]

    # step 6: final name-order inside symmetric bundles
    if lexicographic:
        polished = []
        for f in final:
            f2, ph = _lex_slots(f)
            polished.append(f2)
            phase *= ph
        final = polished

    occupied = {ix for f in tn.factors for _, _, ix in slot_indices(f)}
    ext = [ix for ix in tn.named if ix in occupied]
    ext.sort(key=lambda ix: pos[g.index_of[ix]])
    return NetworkCanon(tuple(final), phase, lab.identity, tuple(ext),
                        tn, g, lab, mapping)


# -- orbit reports ------------------------------------------------------------


@dataclass
class EquivalenceGroups:
    """Automorphism orbits of a network, reported on network handles."""

    factor_groups: list[list[int]]
    slot_groups: list[list[tuple[int, str, int]]]
    index_groups: list[list[Index]]


def equivalent_groups(factors: Iterable[Atom],
                      registry: IndexSpaceRegistry,
                      named: Optional[Iterable[Index]] = None) -> EquivalenceGroups:
    tn = make_network(factors, named)
    g = build_graph(tn, registry)
    lab = canonical_labeling(g.colors, g.adj)
    uf = lab.orbits

    fgroups: dict[int, list[int]] = {}
    for fi, core in enumerate(g.core_of):
        fgroups.setdefault(uf.find(core), []).append(fi)
    sgroups: dict[int, list[tuple[int, str, int]]] = {}
    for handle in sorted(g.slot_of):
        sgroups.setdefault(uf.find(g.slot_of[handle]), []).append(handle)
    igroups: dict[int, list[Index]] = {}
    for ix in sorted(g.index_of, key=lambda ix: ix.key()):
        igroups.setdefault(uf.find(g.index_of[ix]), []).append(ix)
    return EquivalenceGroups(sorted(fgroups.values()),
                             sorted(sgroups.values()),
                             sorted(igroups.values(),
                                    key=lambda grp: grp[0].key()))


def slot_generator_maps(g: ColoredGraph, lab: CanonResult):
    """Project automorphism generators onto slot handles and factor indices.

    Returns a list of (slot_map, factor_map) pairs. Generators that do not
    restrict to slots cleanly (never the case for well-formed graphs) are
    skipped.
    """
    core_pos = {v: fi for fi, v in enumerate(g.core_of)}
    out = []
    for gen in lab.generators:
        smap: dict[tuple[int, str, int], tuple[int, str, int]] = {}
        fmap: dict[int, int] = {}
        ok = True
        for handle, v in g.slot_of.items():
            target = g.slot_at.get(gen[v])
            if target is None:
                ok = False
                break
            smap[handle] = target
        if not ok:
            continue
        for fi, v in enumerate(g.core_of):
            tgt = core_pos.get(gen[v])
            if tgt is None:
                ok = False
                break
            fmap[fi] = tgt
        if ok:
            out.append((smap, fmap))
    return out


# -- expression-level API -------------------------------------------------------


def _canonicalize_product(pref, factors: Sequence[Expr],
                          registry: IndexSpaceRegistry, named, lexicographic,
                          lex_order) -> Expr:
    atoms: list[Atom] = []
    variables: list[Variable] = []
    other: list[Expr] = []
    for f in factors:
        if isinstance(f, (Tensor, NormalOperator)):
            atoms.append(f)
        elif isinstance(f, Variable):
            variables.append(f)
        else:
            other.append(canonicalize(f, registry, named=named,
                                      lexicographic=lexicographic,
                                      lex_order=lex_order))
    variables.sort(key=lambda v: (v.name, v.conjugated))
    if not atoms:
        return mk_product(pref, variables + other)
    nc = canonicalize_network(atoms, registry, named=named,
                              lexicographic=lexicographic, lex_order=lex_order)
    return mk_product(pref * nc.phase, variables + other + list(nc.factors))


def canonicalize(e: Expr, registry: IndexSpaceRegistry,
                 named: Optional[Iterable[Index]] = None,
                 lexicographic: bool = False,
                 lex_order: Optional[dict] = None) -> Expr:
    """Canonical form of an expression, term by term.

    Dummy renaming is decided per term; indices listed in `named` (or free in
    a term) keep their names. Nested composite factors are canonicalized
    recursively but not expanded; call simplify() for that.
    """
    if isinstance(e, Sum):
        return mk_sum(canonicalize(t, registry, named=named,
                                   lexicographic=lexicographic,
                                   lex_order=lex_order) for t in e.terms)
    if isinstance(e, Product):
        return _canonicalize_product(e.prefactor, e.factors, registry, named,
                                     lexicographic, lex_order)
    if isinstance(e, (Tensor, NormalOperator)):
        return _canonicalize_product(1, [e], registry, named, lexicographic,
                                     lex_order)
    return e


def simplify(e: Expr, registry: IndexSpaceRegistry,
             named: Optional[Iterable[Index]] = None,
             lex_order: Optional[dict] = None) -> Expr:
    """Expand, canonicalize every term, and collect like terms exactly."""
    flat = rapid_simplify(expand(e))
    buckets: dict[tuple, list] = {}
    for t in as_terms(flat):
        ct = canonicalize(t, registry, named=named, lexicographic=True,
                          lex_order=lex_order)
        if isinstance(ct, Constant):
            key, coeff, factors = (), ct.value, ()
        elif isinstance(ct, Product):
            key, coeff, factors = ct.factors, ct.prefactor, ct.factors
        else:
            key, coeff, factors = (ct,), CRational.coerce(1), (ct,)
        got = buckets.get(key)
        if got is None:
            buckets[key] = [coeff, factors]
        else:
            got[0] = got[0] + coeff
    terms = []
    for coeff, factors in buckets.values():
        t = mk_product(coeff, factors)
        if not (isinstance(t, Constant) and t.value.is_zero()):
            terms.append(t)
    terms.sort(key=lambda t: t.sort_key())
    return mk_sum(terms)
