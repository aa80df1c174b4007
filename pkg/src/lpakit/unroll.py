"""Finite windows over graphs with tails, and the stability harness.

materialize() lays out the first `depth` copies of every tail next to the
core and records which window vertices have truncated adjacency: cut_out
vertices are missing out-edges that leave the window, cut_in vertices are
missing in-edges from beyond it.  Window computations must consult these
sets whenever completeness of a vertex's adjacency matters; ignoring them
lets boundary artifacts masquerade as stable answers.

stable_sets() runs a window computation at two depths, trusts only the
half of each window farthest from the boundary, and accepts the result
once the trusted regions agree and every tail column matches an inferable
eventually-periodic set.  On disagreement the depth doubles, a bounded
number of times, after which NeedsDeeperUnroll is raised.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .eps import EPSet, infer_epset
from .errors import NeedsDeeperUnroll
from .model import Bundle, Graph, VertexClass, VertexRef, VertexSet, classify_vertex

__all__ = ["FiniteView", "materialize", "stable_sets", "base_depth"]

ENV_DEPTH = "LPAKIT_UNROLL"
MAX_DOUBLINGS = 4


@dataclass(frozen=True)
class FiniteView:
    g: Graph
    depth: int
    verts: tuple[VertexRef, ...]
    out: Mapping[VertexRef, tuple[tuple[Bundle, VertexRef], ...]]
    inn: Mapping[VertexRef, tuple[tuple[Bundle, VertexRef], ...]]
    cut_out: frozenset[VertexRef]
    cut_in: frozenset[VertexRef]

    def out_edges(self, v: VertexRef) -> tuple[tuple[Bundle, VertexRef], ...]:
        return self.out.get(v, ())

    def in_edges(self, v: VertexRef) -> tuple[tuple[Bundle, VertexRef], ...]:
        return self.inn.get(v, ())

    def classify(self, v: VertexRef) -> VertexClass:
        """Exact from the presentation, immune to window truncation."""
        return classify_vertex(self.g, v)

    def members(self, s: VertexSet) -> list[VertexRef]:
        return [v for v in self.verts if v in s]


def materialize(g: Graph, depth: int) -> FiniteView:
    if depth < 1:
        raise ValueError("depth must be >= 1")
    verts: list[VertexRef] = [VertexRef(v) for v in g.core]
    out: dict[VertexRef, list[tuple[Bundle, VertexRef]]] = {}
    inn: dict[VertexRef, list[tuple[Bundle, VertexRef]]] = {}
    cut_out: set[VertexRef] = set()
    cut_in: set[VertexRef] = set()

    def add(b: Bundle, s: VertexRef, t: VertexRef) -> None:
        out.setdefault(s, []).append((b, t))
        inn.setdefault(t, []).append((b, s))

    for t in g.tails:
        for p in t.pattern:
            verts.extend(VertexRef(p, n, tail=t.tid) for n in range(depth))

    def tref(t, p: str, n: int) -> VertexRef:
        return VertexRef(p, n, tail=t.tid)

    for b in g.edges:
        add(b, VertexRef(b.src), VertexRef(b.dst))
    for t in g.tails:
        for b in t.intra:
            for n in range(depth):
                add(b, tref(t, b.src, n), tref(t, b.dst, n))
        for b in t.inter:
            for n in range(depth - 1):
                if t.outward:
                    add(b, tref(t, b.src, n), tref(t, b.dst, n + 1))
                else:
                    add(b, tref(t, b.src, n + 1), tref(t, b.dst, n))
            if t.outward:
                cut_out.add(tref(t, b.src, depth - 1))
            else:
                cut_in.add(tref(t, b.dst, depth - 1))
        for b in t.attach_in:
            add(b, VertexRef(b.src), tref(t, b.dst, 0))
        for b in t.attach_out0:
            add(b, tref(t, b.src, 0), VertexRef(b.dst))
        for b in t.attach_out_all:
            for n in range(depth):
                add(b, tref(t, b.src, n), VertexRef(b.dst))
            cut_in.add(VertexRef(b.dst))

    return FiniteView(
        g,
        depth,
        tuple(sorted(verts)),
        {v: tuple(e) for v, e in out.items()},
        {v: tuple(e) for v, e in inn.items()},
        frozenset(cut_out),
        frozenset(cut_in),
    )


def base_depth(g: Graph, inputs: Sequence[VertexSet] = ()) -> int:
    env = os.environ.get(ENV_DEPTH)
    if env:
        d = int(env)
    else:
        maxpat = max((len(t.pattern) for t in g.tails), default=1)
        d = 4 * maxpat * (len(g.tails) + 1)
    for s in inputs:
        for eps in s.tails.values():
            d = max(d, 2 * (eps.threshold + 2 * eps.period))
    return max(d, 4)


def stable_sets(
    g: Graph,
    compute: Callable[[FiniteView], Iterable[VertexRef]],
    inputs: Sequence[VertexSet] = (),
    retries: int = MAX_DOUBLINGS,
    what: str = "window computation",
) -> VertexSet:
    """Run `compute` until its answer is depth-stable; return it as a VertexSet.

    `compute` sees the whole window including the taint sets; only its
    answers on the half farthest from the boundary are trusted here.
    """
    if g.is_tail_free():
        result = set(compute(materialize(g, 1)))
        return VertexSet(frozenset(v.name for v in result), {})

    pats = [p for t in g.tails for p in t.pattern]
    d = base_depth(g, inputs)
    for _ in range(retries + 1):
        near = frozenset(compute(materialize(g, 2 * d)))
        far = frozenset(compute(materialize(g, 4 * d)))
        core_near = frozenset(v.name for v in near if v.is_core)
        core_far = frozenset(v.name for v in far if v.is_core)
        if core_near == core_far:
            cols: dict[str, EPSet] = {}
            ok = True
            for p in pats:
                bits_far = [VertexRef(p, n) in far for n in range(2 * d)]
                bits_near = [VertexRef(p, n) in near for n in range(d)]
                if bits_far[:d] != bits_near:
                    ok = False
                    break
                eps = infer_epset(bits_far)
                if eps is None:
                    ok = False
                    break
                cols[p] = eps
            if ok:
                return VertexSet(core_far, cols)
        d *= 2
    raise NeedsDeeperUnroll(
        f"{what} did not stabilize by depth {d} on {g.name}; "
        f"set {ENV_DEPTH} higher to push the window out",
        depth=d,
    )
