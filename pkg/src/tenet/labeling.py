"""Canonical labeling of vertex-colored graphs with automorphism discovery.

Individualization-refinement search: keep an ordered partition of the
vertices, refine it to equitability with a splitter queue, pick the first
non-singleton cell as target, and branch on its members in vertex-id order.
Discrete partitions are leaves; a leaf's certificate is the color sequence
plus the adjacency bitmap rows under its labeling. The minimal certificate
wins. Leaves whose certificate matches the first or the best leaf yield
automorphism generators, which drive two prunings: candidates in the orbit of
an already-explored sibling are skipped, and after a generator is found the
search backjumps to the deepest ancestor shared with the first leaf's path.

The backjump is what keeps highly symmetric inputs (automorphism groups of
factorial size) tractable: each redundant subtree costs one root-to-leaf path
instead of an exhaustive traversal.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional, Sequence


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True

    def groups(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for x in range(len(self.parent)):
            out.setdefault(self.find(x), []).append(x)
        return out


@dataclass
class CanonResult:
    order: list[int]            # canonical position -> vertex
    position: list[int]         # vertex -> canonical position
    certificate: bytes
    generators: list[list[int]]  # automorphism generators (vertex permutations)
    orbits: UnionFind

    @property
    def identity(self) -> int:
        h = hashlib.blake2b(self.certificate, digest_size=8)
        return int.from_bytes(h.digest(), "big")


class _Backjump(Exception):
    def __init__(self, level: int):
        self.level = level


def _refine(adj: Sequence[Sequence[int]], cells: list[list[int]],
            cell_of: list[int], queue: list[list[int]]) -> None:
    """Equitable refinement in place. queue holds splitter snapshots."""
    qi = 0
    while qi < len(queue):
        splitter = queue[qi]
        qi += 1
        counts: dict[int, int] = {}
        for w in splitter:
            for u in adj[w]:
                counts[u] = counts.get(u, 0) + 1
        touched = sorted({cell_of[u] for u in counts}, reverse=True)
        for ci in touched:
            cell = cells[ci]
            if len(cell) == 1:
                continue
            groups: dict[int, list[int]] = {}
            for v in cell:
                groups.setdefault(counts.get(v, 0), []).append(v)
            if len(groups) == 1:
                continue
            parts = [groups[c] for c in sorted(groups)]
            cells[ci:ci + 1] = parts
            for k in range(ci, len(cells)):
                for v in cells[k]:
                    cell_of[v] = k
            queue.extend(parts)


def _first_target(cells: list[list[int]]) -> int:
    for k, cell in enumerate(cells):
        if len(cell) > 1:
            return k
    return -1


def _leaf_certificate(colors: Sequence[int], adj: Sequence[Sequence[int]],
                      order: list[int]) -> bytes:
    n = len(order)
    pos = [0] * n
    for p, v in enumerate(order):
        pos[v] = p
    nbytes = (n + 7) // 8
    chunks = [c.to_bytes(8, "big") for c in (colors[v] for v in order)]
    for v in order:
        row = 0
        for u in adj[v]:
            row |= 1 << pos[u]
        chunks.append(row.to_bytes(nbytes, "big"))
    return b"".join(chunks)


def canonical_labeling(colors: Sequence[int],
                       adj: Sequence[Sequence[int]]) -> CanonResult:
    """Canonical vertex order, certificate, and automorphism generators."""
    n = len(colors)
    if n == 0:
        return CanonResult([], [], b"", [], UnionFind(0))

    # initial partition: cells grouped by color, ascending
    by_color: dict[int, list[int]] = {}
    for v in range(n):
        by_color.setdefault(colors[v], []).append(v)
    cells0 = [by_color[c] for c in sorted(by_color)]
    cell_of0 = [0] * n
    for k, cell in enumerate(cells0):
        for v in cell:
            cell_of0[v] = k
    _refine(adj, cells0, cell_of0, list(cells0))

    best_cert: Optional[bytes] = None
    best_order: Optional[list[int]] = None
    first_cert: Optional[bytes] = None
    first_order: Optional[list[int]] = None
    first_path: tuple[int, ...] = ()
    generators: list[list[int]] = []
    orbits = UnionFind(n)

    def automorphism_from(o1: list[int], o2: list[int]) -> Optional[list[int]]:
        g = [0] * n
        nontrivial = False
        for p in range(n):
            g[o1[p]] = o2[p]
            if o1[p] != o2[p]:
                nontrivial = True
        return g if nontrivial else None

    def record(g: list[int]) -> None:
        generators.append(g)
        for v in range(n):
            orbits.union(v, g[v])

    def handle_leaf(cells: list[list[int]], path: tuple[int, ...]) -> None:
        nonlocal best_cert, best_order, first_cert, first_order, first_path
        order = [cell[0] for cell in cells]
        cert = _leaf_certificate(colors, adj, order)
        if first_cert is None:
            first_cert, first_order, first_path = cert, order, path
            best_cert, best_order = cert, order
            return
        found = None
        if cert == first_cert:
            found = automorphism_from(first_order, order)
        elif cert == best_cert:
            found = automorphism_from(best_order, order)
        if cert < best_cert:
            best_cert, best_order = cert, order
        if found is not None:
            record(found)
            common = 0
            for a, b in zip(path, first_path):
                if a != b:
                    break
                common += 1
            raise _Backjump(common)

    def explore(cells: list[list[int]], cell_of: list[int],
                path: tuple[int, ...]) -> None:
        tc = _first_target(cells)
        if tc < 0:
            handle_leaf(cells, path)
            return
        target = sorted(cells[tc])
        explored: list[int] = []
        gen_watermark = -1
        sub_orbits: Optional[UnionFind] = None
        for v in target:
            if explored:
                if gen_watermark != len(generators):
                    sub_orbits = UnionFind(n)
                    for g in generators:
                        if all(g[x] == x for x in path):
                            for x in range(n):
                                sub_orbits.union(x, g[x])
                    gen_watermark = len(generators)
                if sub_orbits is not None and any(
                        sub_orbits.find(v) == sub_orbits.find(u)
                        for u in explored):
                    continue
            child_cells = [list(c) for c in cells]
            rest = [u for u in child_cells[tc] if u != v]
            child_cells[tc:tc + 1] = [[v], rest]
            child_of = [0] * n
            for k, cell in enumerate(child_cells):
                for u in cell:
                    child_of[u] = k
            try:
                _refine(adj, child_cells, child_of, [[v]])
                explore(child_cells, child_of, path + (v,))
            except _Backjump as bj:
                if bj.level < len(path):
                    raise
                # landed at this node: new generators may prune the rest
            explored.append(v)

    explore(cells0, cell_of0, ())
    assert best_order is not None
    position = [0] * n
    for p, v in enumerate(best_order):
        position[v] = p
    return CanonResult(best_order, position, best_cert, generators, orbits)


def automorphisms_brute_force(colors: Sequence[int],
                              adj: Sequence[Sequence[int]]) -> list[list[int]]:
    """All color-preserving automorphisms by exhaustive search (tiny graphs
    only; used as a test oracle)."""
    import itertools
    n = len(colors)
    adjsets = [set(a) for a in adj]
    by_color: dict[int, list[int]] = {}
    for v in range(n):
        by_color.setdefault(colors[v], []).append(v)
    cells = [by_color[c] for c in sorted(by_color)]
    out = []
    perms_per_cell = [list(itertools.permutations(c)) for c in cells]
    for combo in itertools.product(*perms_per_cell):
        g = [0] * n
        for cell, image in zip(cells, combo):
            for src, dst in zip(cell, image):
                g[src] = dst
        if all((g[u] in adjsets[g[v]]) == (u in adjsets[v])
               for v in range(n) for u in range(v + 1, n)):
            out.append(g)
    return out
