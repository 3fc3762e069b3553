"""Canonicalizer tests: graph encoding, pinned pair relations, rewrite axioms."""

import random
import time

import pytest

from tenet import (NetworkError, canonicalize, canonicalize_network,
                   default_registry, equivalent_groups, make_network, parse,
                   serialize, simplify)
from tenet.canon import slot_generator_maps
from tenet.expr import Constant, Product, as_terms, mk_product, mk_sum
from tenet.graph import build_graph, free_indices
from tenet.labeling import canonical_labeling
from tenet.parser import parse_index
from tenet.spaces import Index
from tenet.tensors import SYMM, NormalOperator, Tensor

from rewrite_util import random_network, random_rewrite, scaling_network

REG = default_registry()


def atoms_of(e):
    if isinstance(e, Product):
        return [f for f in e.factors if isinstance(f, (Tensor, NormalOperator))]
    if isinstance(e, (Tensor, NormalOperator)):
        return [e]
    raise AssertionError(f"no atoms in {e!r}")


def as_parts(e):
    """(prefactor, factor tuple) view of a canonicalized term."""
    if isinstance(e, Product):
        return e.prefactor, e.factors
    if isinstance(e, Constant):
        return e.value, ()
    return 1, (e,)


# -- network plumbing --------------------------------------------------------


def test_named_defaults_include_protoindex_closure():
    e = parse("g{i_2,i_3;a_2<i_4,i_5>,a_3<i_4,i_5>} s{i_4;i_2}", REG)
    tn = make_network(atoms_of(e))
    expect = {parse_index(s, REG) for s in
              ("i_3", "a_2<i_4,i_5>", "a_3<i_4,i_5>", "i_4", "i_5")}
    assert tn.named == expect


def test_covariance_rejects_double_bra_occupancy():
    e = parse("u{i_1;} v{i_1;}", REG)
    with pytest.raises(NetworkError):
        make_network(atoms_of(e))


def test_aux_occupancy_is_unrestricted():
    e = parse("h{;;p_3} u{;;p_3} v{;;p_3}", REG)
    make_network(atoms_of(e))  # no error


# -- single-factor symmetries --------------------------------------------------


def test_braket_symmetric_exchange():
    a = canonicalize(parse("δ{p_1;p_2}", REG), REG)
    b = canonicalize(parse("δ{p_2;p_1}", REG), REG)
    assert a == b


def test_column_symmetric_reorder():
    a = canonicalize(parse("v{i_1,_;a_1,a_2}:N-N-S", REG), REG)
    b = canonicalize(parse("v{_,i_1;a_2,a_1}:N-N-S", REG), REG)
    assert a == b


def test_antisymmetric_sum_collapses():
    e = parse("t{a_2,a_1;i_5,i_9} u{i_5,i_9;a_2,a_1}"
              " + t{a_7,a_3;i_1,i_2} u{i_1,i_2;a_3,a_7}", REG)
    assert simplify(e, REG) == Constant(0)


# -- pinned pair relations -----------------------------------------------------


def test_equal_networks_modulo_sign():
    # an operator flanked by two equivalent scalars, written two ways; the
    # slot permutation of the operator carries the relative sign
    tn1 = parse("ã{i_2,i_1;a_2,a_1} t{a_2;i_2} t{a_1;i_1}", REG)
    tn2 = parse("t{a_2;i_1} ã{i_2,i_1;a_2,a_1} t{a_1;i_2}", REG)
    c1, c2 = canonicalize(tn1, REG), canonicalize(tn2, REG)
    p1, f1 = as_parts(c1)
    p2, f2 = as_parts(c2)
    assert f1 == f2
    assert p2 == p1 * -1
    assert simplify(mk_sum([tn1, tn2]), REG) == Constant(0)
    nc1 = canonicalize_network(atoms_of(tn1), REG)
    nc2 = canonicalize_network(atoms_of(tn2), REG)
    assert nc1.identity == nc2.identity


def _slotwise_bijection(fs1, fs2):
    """Assert fs1 and fs2 are identical up to a consistent index bijection."""
    mapping = {}

    def match(x, y):
        if (x is None) != (y is None):
            return False
        if x is None:
            return True
        if x.space != y.space or len(x.protos) != len(y.protos):
            return False
        got = mapping.get(x)
        if got is not None and got != y:
            return False
        mapping[x] = y
        return all(match(p, q) for p, q in zip(x.protos, y.protos))

    assert len(fs1) == len(fs2)
    for f1, f2 in zip(fs1, fs2):
        assert type(f1) is type(f2)
        if isinstance(f1, NormalOperator):
            assert f1.vacuum == f2.vacuum
            bundles = (("cre", f1.creators, f2.creators),
                       ("ann", f1.annihilators, f2.annihilators))
        else:
            assert (f1.label, f1.perm_symmetry, f1.braket_symmetry,
                    f1.column_symmetry, f1.conjugated) == \
                   (f2.label, f2.perm_symmetry, f2.braket_symmetry,
                    f2.column_symmetry, f2.conjugated)
            bundles = (("bra", f1.bra, f2.bra), ("ket", f1.ket, f2.ket),
                       ("aux", f1.aux, f2.aux))
        for _, s1, s2 in bundles:
            assert len(s1) == len(s2)
            for x, y in zip(s1, s2):
                assert match(x, y)
    targets = [v for v in mapping.values()]
    assert len(set(targets)) == len(targets)  # injective


def test_leaf_pair_same_identity_opposite_phase():
    # antisymmetric two-body tensor written twice, indices renamed + one
    # ket transposition: same cache identity, relative phase -1
    g1 = atoms_of(parse("ḡ{i_2,a_1<i_1>;a_2<i_3>,a_3<i_4>}", REG))
    g2 = atoms_of(parse("ḡ{i_2,a_1<i_4>;a_3<i_1>,a_2<i_3>}", REG))
    nc1 = canonicalize_network(g1, REG, pin_named=False)
    nc2 = canonicalize_network(g2, REG, pin_named=False)
    assert nc1.identity == nc2.identity
    assert nc1.phase * nc2.phase == -1
    _slotwise_bijection(nc2.factors, nc1.factors)


def test_leaf_pair_distinct_identities_same_shape():
    # non-symmetric tensor: exchanging two ket slots is NOT a rewrite
    g1 = atoms_of(parse("g{i_2,a_1<i_1>;i_3,a_2<i_4>}", REG))
    g2 = atoms_of(parse("g{i_2,a_1<i_1>;a_2<i_4>,i_3}", REG))
    nc1 = canonicalize_network(g1, REG, pin_named=False)
    nc2 = canonicalize_network(g2, REG, pin_named=False)
    assert nc1.identity != nc2.identity


def test_intermediate_pair_swapped_index_roles_equivalent():
    # i_4 and i_5 trade roles (slot occupant vs protoindex-only); the
    # order-blind protoindex bundles make the two networks isomorphic
    e1 = atoms_of(parse("g{i_2,i_3;a_2<i_4,i_5>,a_3<i_4,i_5>} s{i_4;i_2}", REG))
    e2 = atoms_of(parse("g{i_2,i_3;a_2<i_4,i_5>,a_3<i_4,i_5>} s{i_5;i_2}", REG))
    nc1 = canonicalize_network(e1, REG, pin_named=False)
    nc2 = canonicalize_network(e2, REG, pin_named=False)
    assert nc1.identity == nc2.identity


def test_intermediate_pair_subtle_permutation_distinct():
    # storage tensors without permutational symmetry: the two writings wire
    # the last factor's ket slots differently and must not be identified
    f1 = atoms_of(parse(
        "g{i_2,i_3;a_2<i_5>,a_3<i_4,i_6>} s{i_5;i_3} t{a_2<i_5>;i_5}:N"
        " s{i_6;i_2} t{a_3<i_4,i_6>,a_4<i_4,i_6>;i_6,i_4}:N", REG))
    f2 = atoms_of(parse(
        "g{i_2,i_3;a_2<i_5>,a_3<i_4,i_6>} s{i_5;i_3} t{a_2<i_5>;i_5}:N"
        " s{i_6;i_2} t{a_3<i_4,i_6>,a_4<i_4,i_6>;i_4,i_6}:N", REG))
    nc1 = canonicalize_network(f1, REG, pin_named=False)
    nc2 = canonicalize_network(f2, REG, pin_named=False)
    assert nc1.identity != nc2.identity
    # sanity: the layouts still agree as index sets
    assert set(nc1.layout) == set(nc2.layout)


# -- orbit reports ------------------------------------------------------------


def test_equivalent_slots_and_factors():
    e = parse("ã{i_2,i_1;a_2,a_1} t{a_2;i_2} t{a_1;i_1}", REG)
    groups = equivalent_groups(atoms_of(e), REG)
    assert [1, 2] in groups.factor_groups  # the two t factors
    slot_sets = [set(g) for g in groups.slot_groups]
    assert {(0, "bra", 0), (0, "bra", 1)} in slot_sets
    assert {(0, "ket", 0), (0, "ket", 1)} in slot_sets


def test_slot_generator_maps_cover_factor_swap():
    e = parse("ã{i_2,i_1;a_2,a_1} t{a_2;i_2} t{a_1;i_1}", REG)
    tn = make_network(atoms_of(e))
    g = build_graph(tn, REG)
    lab = canonical_labeling(g.colors, g.adj)
    maps = slot_generator_maps(g, lab)
    assert maps, "network has a nontrivial automorphism"
    assert any(fmap.get(1) == 2 and fmap.get(2) == 1 for _, fmap in maps)


# -- canonicalization axioms under random rewrites ------------------------------


def test_axioms_under_random_rewrites():
    rng = random.Random(20240817)
    checked = 0
    for _ in range(12):
        factors = random_network(rng, REG)
        tn = make_network(factors)
        base = canonicalize(mk_product(1, factors), REG)
        base_lex = canonicalize(mk_product(1, factors), REG,
                                lexicographic=True)
        for _ in range(8):
            rewritten, phase = random_rewrite(rng, factors, tn.named, REG)
            got = canonicalize(mk_product(1, rewritten), REG)
            p0, f0 = as_parts(base)
            p1, f1 = as_parts(got)
            assert f0 == f1, (serialize(base), serialize(got))
            assert p1 * phase == p0
            got_lex = canonicalize(mk_product(1, rewritten), REG,
                                   lexicographic=True)
            q0, g0 = as_parts(base_lex)
            q1, g1 = as_parts(got_lex)
            assert g0 == g1
            assert q1 * phase == q0
            checked += 1
        # idempotence, both modes
        assert canonicalize(base, REG) == base
        assert canonicalize(base_lex, REG, lexicographic=True) == base_lex
    assert checked == 96


def test_canonicalize_roundtrips_through_text():
    rng = random.Random(7)
    for _ in range(10):
        factors = random_network(rng, REG)
        c = canonicalize(mk_product(1, factors), REG, lexicographic=True)
        again = canonicalize(parse(serialize(c, REG), REG), REG,
                             lexicographic=True)
        assert c == again


# -- scaling smoke -------------------------------------------------------------


def test_pairwise_family_smoke():
    rng = random.Random(3)
    factors = scaling_network(16, rng, REG)
    t0 = time.perf_counter()
    nc = canonicalize_network(factors, REG)
    dt = time.perf_counter() - t0
    assert dt < 2.0
    # a rewrite (slot shuffle inside U and D reorder) lands on the same form
    tn = make_network(factors)
    rewritten, phase = random_rewrite(rng, factors, tn.named, REG, steps=4)
    nc2 = canonicalize_network(rewritten, REG)
    assert nc.identity == nc2.identity
    assert nc.factors == nc2.factors
    assert phase == 1 and nc.phase == nc2.phase
