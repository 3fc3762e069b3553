"""Tensor networks and their colored-graph encoding.

A network is an ordered tuple of Tensor/NormalOperator factors plus the set of
named (externally pinned) indices. Its colored graph is built so that two
networks are equal up to allowed rewrites (dummy renaming, symmetric slot
permutations, commuting factor reorderings) exactly when their graphs are
isomorphic as vertex-colored graphs.

Vertex kinds: factor core, bra-ket bundle, bra bundle, ket bundle, aux bundle,
column, slot, index, protoindex bundle. Colors are deterministic 64-bit values
derived with blake2b from structural data only (never from Python's salted
hash), so canonical forms are stable across processes.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

from .spaces import Index, IndexSpaceRegistry
from .tensors import (ANTISYMM, NONSYMM, SYMM, NormalOperator, Tensor,
                      index_closure, slot_indices)

Atom = Union[Tensor, NormalOperator]


class NetworkError(Exception):
    """Raised for covariance violations and malformed networks."""


@dataclass(frozen=True)
class TensorNetwork:
    factors: tuple[Atom, ...]
    named: frozenset[Index]


def free_indices(factors: Sequence[Atom]) -> set[Index]:
    """Indices occupying at most one slot, plus every protoindex of such an
    index (transitively). These default to named: renaming them would change
    what the network means."""
    counts: dict[Index, int] = {}
    for f in factors:
        for _, _, ix in slot_indices(f):
            counts[ix] = counts.get(ix, 0) + 1
    for f in factors:
        for _, _, ix in slot_indices(f):
            for p in index_closure(ix.protos):
                if p not in counts:
                    counts[p] = 0
    seed = {ix for ix, c in counts.items() if c <= 1}
    return index_closure(seed)


def make_network(factors: Iterable[Atom],
                 named: Optional[Iterable[Index]] = None) -> TensorNetwork:
    """Validate covariance and build a TensorNetwork.

    Every index may occupy at most one bra slot and at most one ket slot over
    the whole network (aux occupancy is unrestricted). Named indices default
    to the free indices of the network.
    """
    fs = tuple(factors)
    for f in fs:
        if not isinstance(f, (Tensor, NormalOperator)):
            raise NetworkError(f"network factor {type(f).__name__} is not an atom")
    bra_seen: dict[Index, int] = {}
    ket_seen: dict[Index, int] = {}
    for fi, f in enumerate(fs):
        for kind, _, ix in slot_indices(f):
            if kind == "bra":
                if ix in bra_seen:
                    raise NetworkError(f"index {ix} occupies two bra slots")
                bra_seen[ix] = fi
            elif kind == "ket":
                if ix in ket_seen:
                    raise NetworkError(f"index {ix} occupies two ket slots")
                ket_seen[ix] = fi
    if named is None:
        named_set = frozenset(free_indices(fs))
    else:
        named_set = frozenset(index_closure(named))
    return TensorNetwork(fs, named_set)


# -- deterministic colors -------------------------------------------------------


def _enc(obj) -> bytes:
    if isinstance(obj, bool):
        return b"b" + (b"1" if obj else b"0")
    if isinstance(obj, int):
        raw = obj.to_bytes(16, "big", signed=True)
        return b"i" + raw
    if isinstance(obj, str):
        raw = obj.encode("utf-8")
        return b"s" + len(raw).to_bytes(4, "big") + raw
    if isinstance(obj, bytes):
        return b"y" + len(obj).to_bytes(4, "big") + obj
    if isinstance(obj, tuple):
        body = b"".join(_enc(x) for x in obj)
        return b"t" + len(obj).to_bytes(4, "big") + body
    raise TypeError(f"cannot encode {type(obj).__name__}")


def hash64(*parts) -> int:
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(_enc(p))
    return int.from_bytes(h.digest(), "big")


# -- the colored graph ------------------------------------------------------------


class ColoredGraph:
    """Colored graph of a network, with bookkeeping back to the network."""

    def __init__(self, n: int):
        self.n = n
        self.colors: list[int] = [0] * n
        self.adj: list[list[int]] = [[] for _ in range(n)]
        self._edges: set[tuple[int, int]] = set()
        # bookkeeping
        self.core_of: list[int] = []            # factor -> core vertex
        self.slot_of: dict[tuple[int, str, int], int] = {}
        self.slot_at: dict[int, tuple[int, str, int]] = {}
        self.bundle_of: dict[tuple[int, str], int] = {}
        self.column_of: dict[tuple[int, int], int] = {}
        self.index_of: dict[Index, int] = {}
        self.index_at: dict[int, Index] = {}
        self.kind_at: list[str] = [""] * n      # vertex kind tag for dumps

    def add_edge(self, u: int, v: int):
        if u == v:
            raise NetworkError("self edge in network graph")
        key = (u, v) if u < v else (v, u)
        if key in self._edges:
            return
        self._edges.add(key)
        self.adj[u].append(v)
        self.adj[v].append(u)

    def finish(self):
        for lst in self.adj:
            lst.sort()
        return self


class _GraphBuilder:
    def __init__(self, tn: TensorNetwork, registry: IndexSpaceRegistry,
                 named: Optional[frozenset[Index]] = None,
                 pin_named: bool = True):
        self.tn = tn
        self.reg = registry
        self.named = tn.named if named is None else named
        self.pin_named = pin_named
        self.vertices: list[tuple[int, str]] = []  # (color, kind)
        self.edges: list[tuple[int, int]] = []
        self.core_of: list[int] = []
        self.slot_of: dict[tuple[int, str, int], int] = {}
        self.bundle_of: dict[tuple[int, str], int] = {}
        self.column_of: dict[tuple[int, int], int] = {}
        self.index_of: dict[Index, int] = {}
        self._index_colors: dict[Index, int] = {}
        # indices that appear inside some protoindex list: these are labels
        # of a parametric dependency, interchangeable for the cache identity
        self._proto_members: set[Index] = set()
        for f in tn.factors:
            for _, _, ix in slot_indices(f):
                self._proto_members |= index_closure(ix.protos)

    def vertex(self, color: int, kind: str) -> int:
        self.vertices.append((color, kind))
        return len(self.vertices) - 1

    # -- index colors --

    def index_color(self, ix: Index) -> int:
        got = self._index_colors.get(ix)
        if got is not None:
            return got
        if ix in self.named:
            if self.pin_named or ix not in self._proto_members:
                c = hash64("named", ix.space.bits, ix.space.qn, ix.space.label,
                           ix.ordinal,
                           tuple(self.index_color(p) for p in ix.protos))
            else:
                # identity mode: protoindex constituents are anonymous
                c = hash64("ext", ix.space.bits, ix.space.qn)
        else:
            c = hash64("dummy", ix.space.bits, ix.space.qn)
        self._index_colors[ix] = c
        return c

    def index_vertex(self, ix: Index) -> int:
        got = self.index_of.get(ix)
        if got is not None:
            return got
        # protoindices first so their vertices exist and carry lower ids
        for p in ix.protos:
            self.index_vertex(p)
        v = self.vertex(self.index_color(ix), "index")
        self.index_of[ix] = v
        return v

    # -- factors --

    def add_factor(self, fi: int, f: Atom):
        if isinstance(f, NormalOperator):
            core_c = hash64("core", "nop", f.vacuum,
                            len(f.creators), len(f.annihilators))
            perm, braket, col = ANTISYMM, NONSYMM, NONSYMM
        else:
            core_c = hash64("core", "tensor", f.label, f.conjugated,
                            f.perm_symmetry, f.braket_symmetry,
                            f.column_symmetry, len(f.bra), len(f.ket),
                            len(f.aux))
            perm, braket, col = (f.perm_symmetry, f.braket_symmetry,
                                 f.column_symmetry)
        core = self.vertex(core_c, "core")
        self.core_of.append(core)

        bra, ket, aux = f.bra, f.ket, f.aux
        bundle_v: dict[str, int] = {}
        if bra or ket:
            bk = self.vertex(hash64("braket", core_c), "braket")
            self.edges.append((core, bk))
            self.bundle_of[(fi, "braket")] = bk
            if braket == SYMM:
                bra_c = ket_c = hash64("part", core_c)
            else:
                bra_c, ket_c = hash64("bra", core_c), hash64("ket", core_c)
            if bra:
                bundle_v["bra"] = self.vertex(bra_c, "bra")
                self.edges.append((bk, bundle_v["bra"]))
            if ket:
                bundle_v["ket"] = self.vertex(ket_c, "ket")
                self.edges.append((bk, bundle_v["ket"]))
        if aux:
            bundle_v["aux"] = self.vertex(hash64("aux", core_c), "aux")
            self.edges.append((core, bundle_v["aux"]))
        for kind, v in bundle_v.items():
            self.bundle_of[(fi, kind)] = v

        # column vertices pair bra/ket positionally for nonsymmetric tensors
        columns: list[int] = []
        if isinstance(f, Tensor) and perm == NONSYMM and (bra or ket):
            for k in range(f.n_columns()):
                if col == SYMM:
                    cc = hash64("column", core_c)
                else:
                    cc = hash64("column", core_c, k)
                cv = self.vertex(cc, "column")
                self.edges.append((core, cv))
                self.column_of[(fi, k)] = cv
                columns.append(cv)

        bundle_colors = {"bra": None, "ket": None}
        if bra or ket:
            bundle_colors = {"bra": bra_c, "ket": ket_c}
        for kind, slots in (("bra", bra), ("ket", ket), ("aux", aux)):
            for k, ix in enumerate(slots):
                if kind == "aux":
                    sc = hash64("slot", "aux", core_c, k)
                elif perm == NONSYMM and col == NONSYMM:
                    sc = hash64("slot", bundle_colors[kind], k)
                else:
                    sc = hash64("slot", bundle_colors[kind])
                sv = self.vertex(sc, "slot")
                self.slot_of[(fi, kind, k)] = sv
                owner = bundle_v[kind]
                self.edges.append((owner, sv))
                if kind != "aux" and columns:
                    self.edges.append((columns[k], sv))
                if ix is not None:
                    self.edges.append((sv, self.index_vertex(ix)))

    def add_proto_bundles(self):
        # one vertex per distinct protoindex sequence, order-blind color
        sequences: dict[tuple[Index, ...], list[Index]] = {}
        for ix in list(self.index_of):
            if ix.protos:
                sequences.setdefault(ix.protos, []).append(ix)
        for protos, dependents in sequences.items():
            color = hash64("protos",
                           tuple(sorted(self.index_color(p) for p in protos)))
            bv = self.vertex(color, "protobundle")
            for p in protos:
                self.edges.append((bv, self.index_vertex(p)))
            for d in dependents:
                self.edges.append((bv, self.index_of[d]))

    def build(self) -> ColoredGraph:
        for fi, f in enumerate(self.tn.factors):
            self.add_factor(fi, f)
        self.add_proto_bundles()
        g = ColoredGraph(len(self.vertices))
        for v, (color, kind) in enumerate(self.vertices):
            g.colors[v] = color
            g.kind_at[v] = kind
        for u, v in self.edges:
            g.add_edge(u, v)
        g.core_of = self.core_of
        g.slot_of = dict(self.slot_of)
        g.slot_at = {v: key for key, v in self.slot_of.items()}
        g.bundle_of = dict(self.bundle_of)
        g.column_of = dict(self.column_of)
        g.index_of = dict(self.index_of)
        g.index_at = {v: ix for ix, v in self.index_of.items()}
        return g.finish()


def build_graph(tn: TensorNetwork, registry: IndexSpaceRegistry,
                named: Optional[frozenset[Index]] = None,
                pin_named: bool = True) -> ColoredGraph:
    return _GraphBuilder(tn, registry, named, pin_named).build()


def dot_dump(tn: TensorNetwork, registry: IndexSpaceRegistry) -> str:
    """Graphviz rendering of the colored graph, for debugging."""
    g = build_graph(tn, registry)
    lines = ["graph network {", "  node [style=filled];"]
    palette = ["lightblue", "lightyellow", "lightgreen", "salmon", "plum",
               "khaki", "lightgray", "orange", "cyan"]
    kinds = ["core", "braket", "bra", "ket", "aux", "column", "slot", "index",
             "protobundle"]
    for v in range(g.n):
        kind = g.kind_at[v]
        label = kind
        if v in g.index_at:
            label = str(g.index_at[v])
        elif v in g.slot_at:
            fi, k, pos = g.slot_at[v]
            label = f"{k}{pos}@{fi}"
        elif v in g.core_of:
            f = tn.factors[g.core_of.index(v)]
            label = f.label if isinstance(f, Tensor) else "op"
        color = palette[kinds.index(kind) % len(palette)]
        lines.append(f'  v{v} [label="{label}\\n{g.colors[v]:08x}"'
                     f' fillcolor={color}];')
    for u in range(g.n):
        for v in g.adj[u]:
            if u < v:
                lines.append(f"  v{u} -- v{v};")
    lines.append("}")
    return "\n".join(lines)
