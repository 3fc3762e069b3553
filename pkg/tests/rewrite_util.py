"""Random networks and random phase-tracked rewrites for canonicalizer tests.

A rewrite here is one of the algebra-preserving moves the canonicalizer must
be blind to: renaming dummy indices, permuting slots of a symmetric or
antisymmetric bundle (with parity phase), exchanging bra and ket of a bra-ket
symmetric tensor, permuting matched columns of a column-symmetric tensor, and
exchanging adjacent commuting factors (with the operator exchange phase).
Every helper returns the rewritten factor list together with the exact +-1
phase so the caller can assert: original == phase * rewritten.
"""

from __future__ import annotations

import random
from typing import Optional

from tenet.canon import _swap_phase
from tenet.graph import free_indices
from tenet.spaces import Index, IndexSpaceRegistry
from tenet.tensors import (ANTISYMM, FERMI, GENUINE, NONSYMM, SYMM,
                           NormalOperator, Tensor, slot_indices,
                           slot_permutation_phase)


def random_network(rng: random.Random, registry: IndexSpaceRegistry,
                   max_factors: int = 6, max_slots: int = 12,
                   with_operators: bool = True):
    """A random covariant network: list of atoms, each index in <= 1 bra and
    <= 1 ket slot. Occasionally adds protoindices, aux slots and operators."""
    spaces = [registry.space("i"), registry.space("a"), registry.space("p")]
    bra_used: set[Index] = set()
    ket_used: set[Index] = set()
    counter = [0]

    def fresh_index(space, protos=()):
        counter[0] += 1
        return Index(space, counter[0], tuple(protos))

    pool: list[Index] = []

    def pick(side_used: set[Index], exclude: set[Index]) -> Index:
        candidates = [ix for ix in pool if ix not in side_used
                      and ix not in exclude]
        if candidates and rng.random() < 0.6:
            return rng.choice(candidates)
        space = rng.choice(spaces)
        protos = ()
        if rng.random() < 0.25:
            protos = tuple(fresh_index(spaces[0])
                           for _ in range(rng.randint(1, 2)))
        ix = fresh_index(space, protos)
        pool.append(ix)
        return ix

    factors = []
    slots_left = max_slots
    vacuum = rng.choice([FERMI, GENUINE])
    for _ in range(rng.randint(1, max_factors)):
        if slots_left <= 0:
            break
        is_op = with_operators and rng.random() < 0.3
        if is_op:
            ncre = rng.randint(0, min(2, slots_left))
            nann = rng.randint(0 if ncre else 1, min(2, slots_left - ncre))
            cre, ann = [], []
            taken: set[Index] = set()
            for _ in range(ncre):
                ix = pick(ket_used, taken)
                taken.add(ix)
                ket_used.add(ix)
                cre.append(ix)
            for _ in range(nann):
                ix = pick(bra_used, taken)
                taken.add(ix)
                bra_used.add(ix)
                ann.append(ix)
            slots_left -= ncre + nann
            factors.append(NormalOperator(cre, ann, vacuum))
            continue
        label = rng.choice("tuvwg")
        perm = rng.choice([SYMM, ANTISYMM, NONSYMM])
        nb = rng.randint(0, min(2, slots_left))
        nk = rng.randint(0 if nb else 1, min(2, slots_left - nb))
        braket = NONSYMM
        if nb == nk and rng.random() < 0.3:
            braket = SYMM
        column = SYMM if (perm == NONSYMM and rng.random() < 0.3) else NONSYMM
        bra, ket = [], []
        taken = set()
        for _ in range(nb):
            ix = pick(bra_used, taken)
            taken.add(ix)
            bra_used.add(ix)
            bra.append(ix)
        for _ in range(nk):
            ix = pick(ket_used, taken)
            taken.add(ix)
            ket_used.add(ix)
            ket.append(ix)
        aux = []
        if rng.random() < 0.2:
            aux = [fresh_index(rng.choice(spaces))]
        slots_left -= nb + nk + len(aux)
        factors.append(Tensor(label, bra, ket, aux, perm_symmetry=perm,
                              braket_symmetry=braket, column_symmetry=column))
    return factors


def _closure_map(factors, base_map):
    """Extend a map on base indices to all (nested) indices in the network."""
    full: dict[Index, Index] = {}

    def resolve(ix: Index) -> Index:
        got = full.get(ix)
        if got is not None:
            return got
        protos = tuple(resolve(p) for p in ix.protos)
        target = base_map.get(ix)
        if target is not None:
            new = Index(target.space, target.ordinal, protos)
        elif protos != ix.protos:
            new = Index(ix.space, ix.ordinal, protos)
        else:
            new = ix
        full[ix] = new
        return new

    for f in factors:
        for _, _, ix in slot_indices(f):
            resolve(ix)
    return full


def _apply_map(factors, full):
    def m(ix):
        return full.get(ix, ix) if ix is not None else None

    out = []
    for f in factors:
        if isinstance(f, NormalOperator):
            out.append(NormalOperator(tuple(m(ix) for ix in f.creators),
                                      tuple(m(ix) for ix in f.annihilators),
                                      f.vacuum))
        else:
            out.append(Tensor(f.label, tuple(m(ix) for ix in f.bra),
                              tuple(m(ix) for ix in f.ket),
                              tuple(m(ix) for ix in f.aux),
                              f.perm_symmetry, f.braket_symmetry,
                              f.column_symmetry, f.conjugated))
    return out


def rename_dummies(rng, factors, named):
    """Random bijective rename of the non-named indices. Phase +1."""
    all_ix = {ix for f in factors for _, _, ix in slot_indices(f)}
    dummies = sorted((ix for ix in all_ix if ix not in named),
                     key=lambda ix: ix.key())
    offsets = list(range(100, 100 + len(dummies)))
    rng.shuffle(offsets)
    base = {ix: Index(ix.space, off, ix.protos)
            for ix, off in zip(dummies, offsets)}
    return _apply_map(factors, _closure_map(factors, base)), 1


def permute_bundle(rng, factors):
    """Permute one symmetric/antisymmetric bundle; returns tracked phase."""
    targets = []
    for k, f in enumerate(factors):
        if isinstance(f, NormalOperator):
            if len(f.creators) > 1:
                targets.append((k, "cre"))
            if len(f.annihilators) > 1:
                targets.append((k, "ann"))
        elif f.perm_symmetry in (SYMM, ANTISYMM):
            if len(f.bra) > 1:
                targets.append((k, "bra"))
            if len(f.ket) > 1:
                targets.append((k, "ket"))
    if not targets:
        return list(factors), 1
    k, which = rng.choice(targets)
    f = factors[k]
    slots = {"cre": lambda: f.creators, "ann": lambda: f.annihilators,
             "bra": lambda: f.bra, "ket": lambda: f.ket}[which]()
    perm = list(range(len(slots)))
    rng.shuffle(perm)
    new_slots = tuple(slots[j] for j in perm)
    symmetry = ANTISYMM if isinstance(f, NormalOperator) else f.perm_symmetry
    phase = slot_permutation_phase(symmetry, perm)
    if isinstance(f, NormalOperator):
        new = NormalOperator(new_slots if which == "cre" else f.creators,
                             new_slots if which == "ann" else f.annihilators,
                             f.vacuum)
    else:
        new = Tensor(f.label, new_slots if which == "bra" else f.bra,
                     new_slots if which == "ket" else f.ket, f.aux,
                     f.perm_symmetry, f.braket_symmetry, f.column_symmetry,
                     f.conjugated)
    out = list(factors)
    out[k] = new
    return out, phase


def swap_braket(rng, factors):
    targets = [k for k, f in enumerate(factors)
               if isinstance(f, Tensor) and f.braket_symmetry == SYMM and f.bra]
    if not targets:
        return list(factors), 1
    k = rng.choice(targets)
    f = factors[k]
    out = list(factors)
    out[k] = Tensor(f.label, f.ket, f.bra, f.aux, f.perm_symmetry,
                    f.braket_symmetry, f.column_symmetry, f.conjugated)
    return out, 1


def permute_columns(rng, factors):
    targets = [k for k, f in enumerate(factors)
               if isinstance(f, Tensor) and f.perm_symmetry == NONSYMM
               and f.column_symmetry == SYMM and f.n_columns() > 1]
    if not targets:
        return list(factors), 1
    k = rng.choice(targets)
    f = factors[k]
    perm = list(range(f.n_columns()))
    rng.shuffle(perm)
    out = list(factors)
    out[k] = Tensor(f.label, tuple(f.bra[j] for j in perm),
                    tuple(f.ket[j] for j in perm), f.aux, f.perm_symmetry,
                    f.braket_symmetry, f.column_symmetry, f.conjugated)
    return out, 1


def exchange_factors(rng, factors, registry):
    """A few random adjacent exchanges of commuting factors."""
    out = list(factors)
    phase = 1
    for _ in range(rng.randint(1, 4)):
        if len(out) < 2:
            break
        k = rng.randrange(len(out) - 1)
        ph = _swap_phase(out[k], out[k + 1], registry)
        if ph is None:
            continue
        out[k], out[k + 1] = out[k + 1], out[k]
        phase *= ph
    return out, phase


def scaling_network(n: int, rng: random.Random,
                    registry: IndexSpaceRegistry) -> list:
    """The pairwise family: D{i1,i2} D{i3,i4} ... U{;perm(i1..in)}, all
    symmetric. Many equivalent factors, so a good canonicalizer stress."""
    space = registry.space("i")
    idx = [Index(space, k + 1) for k in range(n)]
    ds = [Tensor("D", (idx[2 * k], idx[2 * k + 1]), (), perm_symmetry=SYMM)
          for k in range(n // 2)]
    shuffled = list(idx)
    rng.shuffle(shuffled)
    u = Tensor("U", (), tuple(shuffled), perm_symmetry=SYMM)
    return ds + [u]


def random_rewrite(rng, factors, named, registry, steps: Optional[int] = None):
    """Compose several random rewrites; returns (factors, phase)."""
    moves = [lambda fs: rename_dummies(rng, fs, named),
             lambda fs: permute_bundle(rng, fs),
             lambda fs: swap_braket(rng, fs),
             lambda fs: permute_columns(rng, fs),
             lambda fs: exchange_factors(rng, fs, registry)]
    phase = 1
    out = list(factors)
    for _ in range(rng.randint(1, 5) if steps is None else steps):
        out, ph = rng.choice(moves)(out)
        phase *= ph
    return out, phase
