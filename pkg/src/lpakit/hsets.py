"""Hereditary and saturated vertex sets, and admissible pairs.

A set H is hereditary when every edge out of H lands in H, and saturated
when no regular vertex outside H sends all its edges into H.  Most checks
here are exact: membership of a tail vertex p@n in an eventually-periodic
set is an eventually-periodic function of n, so any predicate built from
finitely many such lookups (plus level facts that only distinguish copy 0)
can be evaluated over one combined period and read off as an EPSet.

The saturation *closure* is the exception: joins can cascade without
bound, so it runs in finite windows under the stability harness.  Inside
a window a vertex whose out-edges are truncated (cut_out) never joins;
otherwise the truncated boundary fabricates joins that every window
repeats and the harness cannot catch.

Admissible pairs (H, S) take a hereditary saturated H plus a set S of
breaking vertices: infinite emitters outside H that keep only finitely
many (but some) edges once H is deleted.  Pairs order by
(H1,S1) <= (H2,S2) iff H1 <= H2 and S1 <= H2 u S2.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .eps import EPSet
from .errors import DomainError, LatticeViolation, PreconditionError
from .model import (
    OMEGA,
    Graph,
    VertexRef,
    VertexSet,
    bundle_targets,
    classify_vertex,
    out_bundles,
)
from .reach import cycles, root, tree
from .unroll import stable_sets

__all__ = [
    "column_predicate",
    "is_hereditary",
    "is_saturated",
    "saturated_closure",
    "bar_closure",
    "breaking_vertices",
    "edges_into",
    "AdmissiblePair",
    "admissible_pair",
    "pair_leq",
    "enumerate_pairs",
    "pair_meet",
    "pair_join",
    "ClosureVerdict",
    "characterize_closure",
]


def column_predicate(
    g: Graph, p: str, pred: Callable[[int], bool], inputs: Sequence[EPSet]
) -> EPSet:
    """Exact level set {n : pred(n)} for a predicate built from EPSet lookups
    at offsets -1..1 plus presentation facts.  Such predicates repeat with the
    lcm of the input periods once past every threshold and the copy-0 quirks."""
    period = math.lcm(1, *(e.period for e in inputs))
    thresh = max((e.threshold for e in inputs), default=0) + 2
    bits = [pred(n) for n in range(thresh + period)]
    return EPSet.make(
        thresh,
        period,
        frozenset(n % period for n in range(thresh, thresh + period) if bits[n]),
        frozenset(n for n in range(thresh) if bits[n]),
    )


def _all_columns(*sets: VertexSet) -> list[EPSet]:
    return [eps for s in sets for eps in s.tails.values()]


def _exact_scan(g: Graph, keep: Callable[[VertexRef], bool], inputs: Sequence[EPSet]) -> VertexSet:
    """VertexSet {v : keep(v)}, evaluated exactly via column_predicate."""
    core = frozenset(v for v in g.core if keep(VertexRef(v)))
    cols = {}
    for t in g.tails:
        for p in t.pattern:
            cols[p] = column_predicate(
                g, p, lambda n: keep(VertexRef(p, n, tail=t.tid)), inputs
            )
    return VertexSet(core, cols)


def hereditary_defect(g: Graph, h: VertexSet) -> VertexSet:
    def leaks(v: VertexRef) -> bool:
        if v not in h:
            return False
        return any(bundle_targets(g, v, b) not in h for b in out_bundles(g, v))

    return _exact_scan(g, leaks, _all_columns(h))


def is_hereditary(g: Graph, h: VertexSet) -> bool:
    return hereditary_defect(g, h).is_empty()


def saturation_defect(g: Graph, h: VertexSet) -> VertexSet:
    def joins(v: VertexRef) -> bool:
        if v in h or classify_vertex(g, v).kind != "regular":
            return False
        return all(bundle_targets(g, v, b) in h for b in out_bundles(g, v))

    return _exact_scan(g, joins, _all_columns(h))


def is_saturated(g: Graph, h: VertexSet) -> bool:
    return saturation_defect(g, h).is_empty()


def saturated_closure(g: Graph, v: VertexSet) -> VertexSet:
    def compute(view) -> set[VertexRef]:
        s = set(view.members(v))
        changed = True
        while changed:
            changed = False
            for u in view.verts:
                if u in s or u in view.cut_out:
                    continue
                if view.classify(u).kind != "regular":
                    continue
                es = view.out_edges(u)
                if es and all(t in s for _, t in es):
                    s.add(u)
                    changed = True
        return s

    return stable_sets(g, compute, inputs=(v,), what="saturated closure")


def bar_closure(g: Graph, v: VertexSet) -> VertexSet:
    """Smallest hereditary saturated set containing v."""
    return saturated_closure(g, tree(g, v))


def edges_into(g: Graph, v: VertexRef, target: VertexSet) -> float:
    """Number of edge instances from v landing in `target`."""
    n: float = 0
    for b in out_bundles(g, v):
        if bundle_targets(g, v, b) in target:
            n += b.mult
    return n


def breaking_vertices(g: Graph, h: VertexSet, into: VertexSet | None = None) -> VertexSet:
    """Infinite emitters outside H with 0 < finitely many edges into `into`
    (default: the complement of H)."""
    into = h.complement(g) if into is None else into

    def breaks(v: VertexRef) -> bool:
        if v in h or classify_vertex(g, v).kind != "infinite-emitter":
            return False
        return 0 < edges_into(g, v, into) < OMEGA

    return _exact_scan(g, breaks, _all_columns(h, into))


@dataclass(frozen=True)
class AdmissiblePair:
    h: VertexSet
    s: tuple[VertexRef, ...]

    def __repr__(self) -> str:
        return f"({self.h!r}, {{{', '.join(r.key() for r in self.s)}}})"

    def s_set(self, g: Graph) -> VertexSet:
        return g.vset(self.s) if self.s else g.empty_set()

    def to_json(self) -> dict:
        return {"h": self.h.to_json(), "s": [r.key() for r in self.s]}


def admissible_pair(
    g: Graph, h: VertexSet | Iterable[VertexRef | str], s: Iterable[VertexRef | str] = ()
) -> AdmissiblePair:
    if not isinstance(h, VertexSet):
        h = g.vset(h)
    s_refs = tuple(sorted(g.ref(r) if isinstance(r, str) else r for r in s))
    if not is_hereditary(g, h):
        raise PreconditionError(f"H is not hereditary: leaks at {hereditary_defect(g, h).min_ref()}")
    if not is_saturated(g, h):
        raise PreconditionError(f"H is not saturated: {saturation_defect(g, h).min_ref()} joins")
    bh = breaking_vertices(g, h)
    for r in s_refs:
        if r not in bh:
            raise PreconditionError(f"{r.key()} does not break H")
    if len(set(s_refs)) != len(s_refs):
        raise PreconditionError("S has repeats")
    return AdmissiblePair(h, s_refs)


def pair_leq(p1: AdmissiblePair, p2: AdmissiblePair) -> bool:
    if not p1.h.issubset(p2.h):
        return False
    return all(r in p2.h or r in p2.s for r in p1.s)


def enumerate_pairs(g: Graph, max_core: int = 14) -> list[AdmissiblePair]:
    """Every admissible pair of a tail-free graph, sorted by (|H|, H, S)."""
    if not g.is_tail_free():
        raise DomainError("pair enumeration needs a tail-free graph")
    if len(g.core) > max_core:
        raise DomainError(f"{len(g.core)} vertices is past the enumeration guard")
    out: list[AdmissiblePair] = []
    for bits in itertools.product((False, True), repeat=len(g.core)):
        hv = g.vset([v for v, b in zip(g.core, bits) if b])
        if not (is_hereditary(g, hv) and is_saturated(g, hv)):
            continue
        bh = sorted(breaking_vertices(g, hv).finite_refs(g))
        for k in range(len(bh) + 1):
            for s in itertools.combinations(bh, k):
                out.append(AdmissiblePair(hv, tuple(s)))
    out.sort(key=lambda p: (p.h.count(), sorted(p.h.core), p.s))
    return out


def _lattice_pick(
    cands: list[AdmissiblePair], better: Callable[[AdmissiblePair, AdmissiblePair], bool]
) -> AdmissiblePair:
    best = [c for c in cands if all(better(c, o) for o in cands)]
    if len(best) != 1 or not all(any(better(b, c) for b in best) for c in cands):
        raise LatticeViolation("meet/join is not unique over the enumerated pairs")
    return best[0]


def pair_meet(g: Graph, p1: AdmissiblePair, p2: AdmissiblePair) -> AdmissiblePair:
    pairs = enumerate_pairs(g)
    below = [p for p in pairs if pair_leq(p, p1) and pair_leq(p, p2)]
    return _lattice_pick(below, lambda a, b: pair_leq(b, a))


def pair_join(g: Graph, p1: AdmissiblePair, p2: AdmissiblePair) -> AdmissiblePair:
    pairs = enumerate_pairs(g)
    above = [p for p in pairs if pair_leq(p1, p) and pair_leq(p2, p)]
    return _lattice_pick(above, lambda a, b: pair_leq(a, b))


@dataclass(frozen=True)
class ClosureVerdict:
    equal: bool
    reason: str  # "Equal" | "FailsNoInfiniteEmitters" | "FailsInfinitePathAvoidsT"
    witness: object = None

    def to_json(self) -> dict:
        return {"equal": self.equal, "reason": self.reason, "witness": repr(self.witness)}


def _climb_cycles(t) -> list[tuple[tuple[str, ...], list[int]]]:
    """Vertex-simple cycles of an outward tail's intra+inter graph that use at
    least one inter bundle.  Returns (verts, prefix inter-counts per position)."""
    steps: dict[str, list[tuple[str, int]]] = {}
    for b in t.intra:
        steps.setdefault(b.src, []).append((b.dst, 0))
    for b in t.inter:
        steps.setdefault(b.src, []).append((b.dst, 1))
    found: list[tuple[tuple[str, ...], list[int]]] = []

    def dfs(start: str, v: str, path: list[str], shifts: list[int]) -> None:
        for w, dn in steps.get(v, ()):
            if w == start:
                if sum(shifts) + dn > 0:
                    found.append((tuple(path), shifts + [dn]))
            elif w > start and w not in path:
                dfs(start, w, path + [w], shifts + [dn])

    for v in t.pattern:
        dfs(v, v, [v], [])
    return found


def _climb_witness(g: Graph, region: VertexSet) -> tuple | None:
    """A forever-climbing route through an outward tail staying in `region`."""
    for t in g.tails:
        if not t.outward:
            continue
        for verts, shifts in _climb_cycles(t):
            delta = sum(shifts)
            cols = [region.column(p) for p in verts]
            period = math.lcm(delta, *(c.period for c in cols))
            base = max((c.threshold for c in cols), default=0) + 2
            pref = list(itertools.accumulate(shifts[:-1], initial=0))
            for r in range(base, base + period):
                levels = (
                    (j, r + pref[j] + k * delta)
                    for k in range(period // delta)
                    for j in range(len(verts))
                )
                if all(lvl in cols[j] for j, lvl in levels):
                    return (t.tid, verts, r)
    return None


def characterize_closure(g: Graph, v: VertexSet, h: VertexSet) -> ClosureVerdict:
    """Decide whether a hereditary H sandwiched over v equals the full
    closure of v, and report what blocks it when not."""
    t_v = tree(g, v)
    bar = saturated_closure(g, t_v)
    if not is_hereditary(g, h):
        raise PreconditionError("H must be hereditary")
    if not bar.issubset(h):
        raise PreconditionError("H must contain the closure of v")
    if not h.issubset(root(g, t_v)):
        raise PreconditionError("every vertex of H must reach T(v)")

    region = h.difference(t_v)
    emitters = _exact_scan(
        g,
        lambda r: r in region and classify_vertex(g, r).kind == "infinite-emitter",
        _all_columns(region),
    )
    if not emitters.is_empty():
        return ClosureVerdict(False, "FailsNoInfiniteEmitters", emitters.min_ref())

    core_cycles, copy_cycles = cycles(g)
    for c in core_cycles:
        if all(VertexRef(x) in region for x in c.verts):
            return ClosureVerdict(False, "FailsInfinitePathAvoidsT", c.verts)
    for c in copy_cycles:
        lvls = EPSet.full()
        for p in c.verts:
            lvls = lvls.intersection(region.column(p))
        if not lvls.is_empty():
            return ClosureVerdict(
                False, "FailsInfinitePathAvoidsT", (c.tid, c.verts, lvls.min_element())
            )
    climb = _climb_witness(g, region)
    if climb is not None:
        return ClosureVerdict(False, "FailsInfinitePathAvoidsT", climb)
    return ClosureVerdict(h == bar, "Equal" if h == bar else "FailsInfinitePathAvoidsT")
