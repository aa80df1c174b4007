"""Reachability and cycle structure.

tree(V) is everything reachable from V by directed paths (including V),
root(V) everything that reaches V.  Both run through the window-stability
harness, so they return exact eventually-periodic answers or refuse.

Cycles never cross between the core and a tail, and never use inter
bundles (those shift the copy index monotonically), so enumeration splits
into plain cycles on the core subgraph and intra-only cycles that repeat
in every copy of a tail.  Classification distinguishes cycles without any
exit, extreme cycles (every vertex reachable from the cycle reaches back),
and the rest; for copy cycles the verdict is a level set per kind, since
copy 0 of a tail can behave unlike all later copies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import networkx as nx

from .eps import EPSet
from .model import OMEGA, Graph, VertexRef, VertexSet, classify_vertex
from .unroll import FiniteView, materialize, stable_sets

__all__ = [
    "tree",
    "root",
    "window_forward",
    "window_backward",
    "CoreCycle",
    "CopyCycle",
    "cycles",
    "NO_EXIT",
    "EXTREME",
    "OTHER",
]

NO_EXIT = "no-exit"
EXTREME = "extreme"
OTHER = "other"


def window_forward(view: FiniteView, starts: Iterable[VertexRef]) -> set[VertexRef]:
    seen = set(starts)
    stack = list(seen)
    while stack:
        v = stack.pop()
        for _, t in view.out_edges(v):
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return seen


def window_backward(view: FiniteView, starts: Iterable[VertexRef]) -> set[VertexRef]:
    seen = set(starts)
    stack = list(seen)
    while stack:
        v = stack.pop()
        for _, s in view.in_edges(v):
            if s not in seen:
                seen.add(s)
                stack.append(s)
    return seen


def tree(g: Graph, s: VertexSet) -> VertexSet:
    return stable_sets(g, lambda view: window_forward(view, view.members(s)), inputs=(s,), what="tree")


def root(g: Graph, s: VertexSet) -> VertexSet:
    return stable_sets(g, lambda view: window_backward(view, view.members(s)), inputs=(s,), what="root")


@dataclass(frozen=True)
class CoreCycle:
    verts: tuple[str, ...]  # rotation starting at the least vertex
    kind: str

    def vset(self, g: Graph) -> VertexSet:
        return g.vset(self.verts)

    @property
    def length(self) -> int:
        return len(self.verts)


@dataclass(frozen=True)
class CopyCycle:
    tid: str
    verts: tuple[str, ...]
    kinds: Mapping[str, EPSet]  # level sets, keyed by NO_EXIT / EXTREME / OTHER

    @property
    def anchor(self) -> str:
        return self.verts[0]

    @property
    def length(self) -> int:
        return len(self.verts)

    def level_vset(self, g: Graph, level: int) -> VertexSet:
        return g.vset([VertexRef(p, level) for p in self.verts])


def _rotate(seq: list[str]) -> tuple[str, ...]:
    k = seq.index(min(seq))
    return tuple(seq[k:] + seq[:k])


def _core_digraph(g: Graph) -> "nx.DiGraph":
    dg = nx.DiGraph()
    dg.add_nodes_from(g.core)
    dg.add_edges_from((b.src, b.dst) for b in g.edges)
    return dg


def _intra_digraph(t) -> "nx.DiGraph":
    dg = nx.DiGraph()
    dg.add_nodes_from(t.pattern)
    dg.add_edges_from((b.src, b.dst) for b in t.intra)
    return dg


def _out_degree_level(g: Graph, t, p: str, n: int) -> float:
    return sum(b.mult for b in _level_bundles(t, p, n))


def _level_bundles(t, p: str, n: int):
    for b in t.intra:
        if b.src == p:
            yield b
    if t.outward or n >= 1:
        for b in t.inter:
            if b.src == p:
                yield b
    if n == 0:
        for b in t.attach_out0:
            if b.src == p:
                yield b
    for b in t.attach_out_all:
        if b.src == p:
            yield b


def _no_exit_levels(g: Graph, t, verts: tuple[str, ...]) -> EPSet:
    """Levels where every cycle vertex emits exactly its one cycle edge.
    Degrees differ from the generic copy only at level 0, so two levels tell all."""
    def ok(n: int) -> bool:
        return all(_out_degree_level(g, t, p, n) == 1 for p in verts)

    generic = EPSet.all_from(1) if ok(1) else EPSet.empty()
    return generic.union(EPSet.finite([0])) if ok(0) else generic


def _extreme_flags(view: FiniteView, tid: str, verts: tuple[str, ...]) -> set[VertexRef]:
    """Window guess at the levels whose cycle copy is extreme.  The whole
    window supplies witnesses; the harness keeps only depth-stable levels."""
    out: set[VertexRef] = set()
    for n in range(view.depth):
        c0 = [VertexRef(p, n, tail=tid) for p in verts]
        fwd = window_forward(view, c0)
        back = window_backward(view, c0)
        if fwd <= back:
            out.add(VertexRef(verts[0], n))
    return out


def cycles(g: Graph) -> tuple[list[CoreCycle], list[CopyCycle]]:
    core_out: list[CoreCycle] = []
    for raw in nx.simple_cycles(_core_digraph(g)):
        verts = _rotate(list(raw))
        cset = g.vset(verts)
        degs = [classify_vertex(g, VertexRef(v)).out_degree for v in verts]
        if all(d == 1 for d in degs):
            kind = NO_EXIT
        else:
            kind = EXTREME if tree(g, cset).issubset(root(g, cset)) else OTHER
        core_out.append(CoreCycle(verts, kind))
    core_out.sort(key=lambda c: c.verts)

    copy_out: list[CopyCycle] = []
    for t in g.tails:
        found = [_rotate(list(raw)) for raw in nx.simple_cycles(_intra_digraph(t))]
        for verts in sorted(found):
            no_exit = _no_exit_levels(g, t, verts)
            if no_exit.is_full():
                kinds = {NO_EXIT: no_exit, EXTREME: EPSet.empty(), OTHER: EPSet.empty()}
            else:
                flags = stable_sets(
                    g,
                    lambda view, tt=t, vv=verts: _extreme_flags(view, tt.tid, vv),
                    what=f"extreme levels of cycle {'>'.join(verts)} in tail {t.tid}",
                )
                extreme = flags.column(verts[0]).difference(no_exit)
                other = EPSet.full().difference(no_exit).difference(extreme)
                kinds = {NO_EXIT: no_exit, EXTREME: extreme, OTHER: other}
            copy_out.append(CopyCycle(t.tid, verts, kinds))
    return core_out, copy_out
