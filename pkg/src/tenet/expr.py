"""Immutable expression trees.

Node types: Constant (exact complex-rational), Variable (symbolic scalar),
Sum, Product, plus the tensor-layer atoms defined in tensors.py (Tensor,
NormalOperator) which subclass Expr. Equality and hashing are structural and
cached; nodes are never mutated after construction.

Products carry an exact prefactor and an ordered factor tuple. Factor order is
meaningful (normal operators do not commute), so nothing in this module ever
reorders factors. The mk_* factories flatten one nesting level and fold
constants; deeper cleanup is rapid_simplify's job.
"""

from __future__ import annotations

import itertools
from typing import Callable, Iterable, Sequence

from .scalars import CRational, ONE, ZERO


class Expr:
    """Base class for all expression nodes."""

    __slots__ = ("_hash",)

    #: class rank used as the leading component of sort keys
    rank = -1

    def children(self) -> tuple["Expr", ...]:
        return ()

    def sort_key(self):
        raise NotImplementedError

    def __eq__(self, other):
        raise NotImplementedError

    def __hash__(self):
        return self._hash

    def __repr__(self):
        from .parser import serialize
        try:
            return serialize(self)
        except Exception:
            return object.__repr__(self)


class Constant(Expr):
    """A literal exact scalar."""

    __slots__ = ("value",)
    rank = 0

    def __init__(self, value):
        self.value = CRational.coerce(value)
        self._hash = hash(("const", self.value))

    def sort_key(self):
        return (self.rank, self.value.sort_key())

    def __eq__(self, other):
        return isinstance(other, Constant) and self.value == other.value

    __hash__ = Expr.__hash__


class Variable(Expr):
    """A symbolic scalar, optionally complex-conjugated."""

    __slots__ = ("name", "conjugated")
    rank = 1

    def __init__(self, name: str, conjugated: bool = False):
        self.name = name
        self.conjugated = conjugated
        self._hash = hash(("var", name, conjugated))

    def sort_key(self):
        return (self.rank, self.name, self.conjugated)

    def __eq__(self, other):
        return (isinstance(other, Variable) and self.name == other.name
                and self.conjugated == other.conjugated)

    __hash__ = Expr.__hash__


class Sum(Expr):
    __slots__ = ("terms",)
    rank = 5

    def __init__(self, terms: Sequence[Expr]):
        self.terms = tuple(terms)
        self._hash = hash(("sum", self.terms))

    def children(self):
        return self.terms

    def sort_key(self):
        return (self.rank, tuple(t.sort_key() for t in self.terms))

    def __eq__(self, other):
        return isinstance(other, Sum) and self.terms == other.terms

    __hash__ = Expr.__hash__


class Product(Expr):
    __slots__ = ("prefactor", "factors")
    rank = 4

    def __init__(self, prefactor, factors: Sequence[Expr]):
        self.prefactor = CRational.coerce(prefactor)
        self.factors = tuple(factors)
        self._hash = hash(("prod", self.prefactor, self.factors))

    def children(self):
        return self.factors

    def sort_key(self):
        return (self.rank, tuple(f.sort_key() for f in self.factors),
                self.prefactor.sort_key())

    def __eq__(self, other):
        return (isinstance(other, Product) and self.prefactor == other.prefactor
                and self.factors == other.factors)

    __hash__ = Expr.__hash__


# -- factories (one-level flattening) ---------------------------------------

def mk_sum(terms: Iterable[Expr]) -> Expr:
    """Sum of terms. Flattens one level of nested Sums; [] gives 0."""
    flat: list[Expr] = []
    for t in terms:
        if isinstance(t, Sum):
            flat.extend(t.terms)
        else:
            flat.append(t)
    if not flat:
        return Constant(ZERO)
    if len(flat) == 1:
        return flat[0]
    return Sum(flat)


def mk_product(prefactor, factors: Iterable[Expr]) -> Expr:
    """Product with exact prefactor. Splices one level of nested Products,
    folds Constant factors, and collapses trivial cases. Factor order is kept."""
    pref = CRational.coerce(prefactor)
    flat: list[Expr] = []
    for f in factors:
        if isinstance(f, Product):
            pref = pref * f.prefactor
            flat.extend(f.factors)
        elif isinstance(f, Constant):
            pref = pref * f.value
        else:
            flat.append(f)
    if pref.is_zero():
        return Constant(ZERO)
    if not flat:
        return Constant(pref)
    if pref.is_one() and len(flat) == 1:
        return flat[0]
    return Product(pref, flat)


# -- traversal ----------------------------------------------------------------

_ATOM_TYPES = (Constant, Variable)  # tensor layer extends this via register_atom


def register_atom_type(cls) -> None:
    global _ATOM_TYPES
    if cls not in _ATOM_TYPES:
        _ATOM_TYPES = _ATOM_TYPES + (cls,)


def is_atom(e: Expr) -> bool:
    return isinstance(e, _ATOM_TYPES)


def visit(e: Expr, callback: Callable[[Expr], None], atoms_only: bool = False) -> None:
    """Preorder walk. With atoms_only, the callback sees only leaf atoms."""
    if not atoms_only or is_atom(e):
        callback(e)
    for c in e.children():
        visit(c, callback, atoms_only)


# -- expansion and cheap cleanup ---------------------------------------------

def expand(e: Expr) -> Expr:
    """Distribute products over sums. Factor order within terms is preserved."""
    if isinstance(e, Sum):
        return mk_sum(expand(t) for t in e.terms)
    if isinstance(e, Product):
        choice_lists: list[list[Expr]] = []
        for f in e.factors:
            fe = expand(f)
            if isinstance(fe, Sum):
                choice_lists.append(list(fe.terms))
            else:
                choice_lists.append([fe])
        if any(len(c) > 1 for c in choice_lists):
            out = [mk_product(e.prefactor, picks)
                   for picks in itertools.product(*choice_lists)]
            return mk_sum(out)
        return mk_product(e.prefactor, [c[0] for c in choice_lists])
    return e


def _term_parts(e: Expr) -> tuple[CRational, tuple[Expr, ...]]:
    """Split a term into (coefficient, factor tuple) for like-term collection."""
    if isinstance(e, Product):
        return e.prefactor, e.factors
    if isinstance(e, Constant):
        return e.value, ()
    return ONE, (e,)


def rapid_simplify(e: Expr) -> Expr:
    """Structural cleanup: recursive flattening, constant folding, and
    collection of structurally identical terms. No canonicalization, so terms
    that differ only by dummy names or factor order are not merged here."""
    if isinstance(e, Sum):
        groups: dict[tuple[Expr, ...], CRational] = {}
        order: list[tuple[Expr, ...]] = []
        for t in e.terms:
            ts = rapid_simplify(t)
            for term in (ts.terms if isinstance(ts, Sum) else (ts,)):
                coeff, facs = _term_parts(term)
                if coeff.is_zero():
                    continue
                if facs not in groups:
                    groups[facs] = coeff
                    order.append(facs)
                else:
                    groups[facs] = groups[facs] + coeff
        out = []
        for facs in order:
            coeff = groups[facs]
            if coeff.is_zero():
                continue
            out.append(mk_product(coeff, facs))
        return mk_sum(out)
    if isinstance(e, Product):
        return mk_product(e.prefactor, (rapid_simplify(f) for f in e.factors))
    return e


def as_terms(e: Expr) -> list[Expr]:
    """View an expression as a flat list of terms."""
    return list(e.terms) if isinstance(e, Sum) else [e]
