"""Terminal vertices, their clusters, cofinality, and localization.

A vertex is terminal when every journey leaving it can be herded back:
sinks (nowhere to go), cycles without exits (one forced orbit), extreme
cycles (every escape returns), and vertices on terminal rays, infinite
paths whose forward tree is free of cycles and infinite emitters and
funnels back into the ray.  Everything here reduces to three exact
ingredients: the cycle census, saturated closures, and one windowed
computation for the ray case.

Equivalent terminal vertices cluster together, and a cluster is recovered
from any single member: the hereditary saturated closure is the same for
every member, so that closure doubles as the canonical cluster key.  A
graph whose terminal vertices form a single cluster with full closure is
cofinal, which is the graded-simplicity criterion, and the cluster's class
fixes the case tag: A (sink), B (cycle without exits), C (extreme cycle),
D (terminal ray).

Rays never materialize as infinite objects.  Whether a ray through v is
terminal depends only on v, so the windowed search marks vertices, and
canonical_ray() returns a finite description (prefix plus a climbing
block) whenever an explicit path is wanted.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping

import networkx as nx

from .constructions import porcupine_quotient
from .eps import EPSet
from .errors import (
    DomainError,
    NoInfinitePaths,
    PreconditionError,
    TailUnsupported,
    TargetHypothesisViolated,
    Unrepresentable,
)
from .hsets import (
    AdmissiblePair,
    admissible_pair,
    bar_closure,
    breaking_vertices,
    column_predicate,
    edges_into,
)
from .model import (
    Graph,
    VertexRef,
    VertexSet,
    bundle_targets,
    classify_vertex,
    out_bundles,
)
from .reach import EXTREME, NO_EXIT, cycles, root, tree, window_backward, window_forward
from .unroll import FiniteView, stable_sets

__all__ = [
    "SINK",
    "NO_EXIT_CYCLE",
    "EXTREME_CYCLE",
    "TERMINAL_PATH",
    "TerminalClass",
    "TerminalMap",
    "terminal_vertices",
    "terminal_path_vertices",
    "cycle_vertices",
    "emits_infinite",
    "Ray",
    "canonical_ray",
    "is_terminal_path",
    "Cluster",
    "ClusterReport",
    "clusters",
    "SimplicityVerdict",
    "is_cofinal",
    "cofinal_oracle",
    "ter_sets",
    "is_graded_purely_infinite_simple",
    "SinkTarget",
    "EmitterTarget",
    "CycleTarget",
    "RayTarget",
    "Localization",
    "localize",
]

SINK = "sink"
NO_EXIT_CYCLE = "no-exit-cycle"
EXTREME_CYCLE = "extreme-cycle"
TERMINAL_PATH = "terminal-path"

CASE_OF_TAG = {SINK: "A", NO_EXIT_CYCLE: "B", EXTREME_CYCLE: "C", TERMINAL_PATH: "D"}


def _scan(g: Graph, keep) -> VertexSet:
    core = frozenset(v for v in g.core if keep(VertexRef(v)))
    cols = {}
    for t in g.tails:
        for p in t.pattern:
            cols[p] = column_predicate(
                g, p, lambda n, p=p, t=t: keep(VertexRef(p, n, tail=t.tid)), ()
            )
    return VertexSet(core, cols)


def cycle_vertices(g: Graph) -> VertexSet:
    """Every vertex lying on some cycle.  Intra cycles repeat in every copy
    of their tail, so a pattern vertex on one is on-cycle at every level."""
    core_cycles, copy_cycles = cycles(g)
    names = frozenset(v for c in core_cycles for v in c.verts)
    cols = {p: EPSet.full() for c in copy_cycles for p in c.verts}
    return VertexSet(names, cols)


def _emitter_vertices(g: Graph) -> VertexSet:
    return _scan(g, lambda r: classify_vertex(g, r).kind == "infinite-emitter")


def _sink_vertices(g: Graph) -> VertexSet:
    return _scan(g, lambda r: classify_vertex(g, r).kind == "sink")


def emits_infinite(g: Graph) -> VertexSet:
    """Vertices from which some infinite path departs: those reaching a
    cycle, plus those feeding an unbounded outward climb."""
    onto = root(g, cycle_vertices(g))
    if not any(t.outward for t in g.tails):
        return onto
    climbs = stable_sets(
        g, lambda view: window_backward(view, view.cut_out), what="climb roots"
    )
    return onto.union(climbs)


def _backward_within(view: FiniteView, starts, region) -> set[VertexRef]:
    seen = set(v for v in starts if v in region)
    stack = list(seen)
    while stack:
        v = stack.pop()
        for _, s in view.in_edges(v):
            if s in region and s not in seen:
                seen.add(s)
                stack.append(s)
    return seen


def terminal_path_vertices(g: Graph) -> VertexSet:
    """Vertices sitting on a terminal ray.

    Whether such a ray through v exists depends on v alone: v qualifies when
    its forward tree is clean (no cycle vertices, no infinite emitters), some
    ray leaves v, and no vertex u below v has both a path to a vertex w and a
    ray that avoids w's tree entirely.  The last condition is what forces
    every infinite path out of the tree to be funneled back.
    """
    if not any(t.outward for t in g.tails):
        return g.empty_set()
    dirty = cycle_vertices(g).union(_emitter_vertices(g))
    clean = g.full_set() if dirty.is_empty() else root(g, dirty).complement(g)
    if clean.is_empty():
        return g.empty_set()

    def compute(view: FiniteView) -> set[VertexRef]:
        w = frozenset(v for v in view.verts if v in clean)
        frontier = frozenset(v for v in view.cut_out if v in clean)
        good = w & window_backward(view, frontier)
        for v in w:
            below = window_forward(view, (v,))
            region = w - below
            escape = _backward_within(view, frontier & region, region)
            if escape:
                good = good - (escape & window_backward(view, (v,)))
        return good

    return stable_sets(g, compute, inputs=(clean,), what="terminal rays")


# ---------------------------------------------------------------------------
# Per-vertex classification


@dataclass(frozen=True)
class TerminalClass:
    """One of the four terminal colors, with a witness: the sink itself, a
    cycle rotation, or the tail a terminal ray climbs."""

    tag: str
    witness: object = None

    def to_json(self) -> dict:
        return {"tag": self.tag, "witness": _witness_json(self.witness)}


def _witness_json(w: object):
    if w is None or isinstance(w, (str, int)):
        return w
    if isinstance(w, VertexRef):
        return w.key()
    if isinstance(w, Ray):
        return w.to_json()
    if isinstance(w, tuple):
        return [_witness_json(x) for x in w]
    return repr(w)


@dataclass(frozen=True)
class TerminalMap:
    """Terminal class per vertex: core vertices by name, tail columns as
    disjoint (level set, class) pieces.  Absent means not terminal."""

    core: Mapping[str, TerminalClass]
    tails: Mapping[str, tuple[tuple[EPSet, TerminalClass], ...]]

    def at(self, ref: VertexRef) -> TerminalClass | None:
        if ref.is_core:
            return self.core.get(ref.name)
        for eps, cls in self.tails.get(ref.name, ()):
            if ref.index in eps:
                return cls
        return None

    def tag_vset(self, tag: str) -> VertexSet:
        core = frozenset(v for v, c in self.core.items() if c.tag == tag)
        cols: dict[str, EPSet] = {}
        for p, pieces in self.tails.items():
            eps = EPSet.empty()
            for piece, cls in pieces:
                if cls.tag == tag:
                    eps = eps.union(piece)
            if not eps.is_empty():
                cols[p] = eps
        return VertexSet(core, cols)

    def terminal_set(self) -> VertexSet:
        out = VertexSet(frozenset(self.core), {})
        for p, pieces in self.tails.items():
            eps = EPSet.empty()
            for piece, _ in pieces:
                eps = eps.union(piece)
            out = out.union(VertexSet(frozenset(), {p: eps}))
        return out

    def to_json(self) -> dict:
        return {
            "core": {v: c.to_json() for v, c in sorted(self.core.items())},
            "tails": {
                p: [{"levels": e.to_json(), "class": c.to_json()} for e, c in pieces]
                for p, pieces in sorted(self.tails.items())
            },
        }


def terminal_vertices(g: Graph) -> TerminalMap:
    """Classify every vertex.  The four tags are mutually exclusive: sinks
    have no out-edges, no-exit and extreme cycles cannot share a vertex, and
    a terminal ray's tree excludes cycles and emitters altogether."""
    core_cycles, copy_cycles = cycles(g)
    tp = terminal_path_vertices(g)
    sinks = _sink_vertices(g)

    core: dict[str, TerminalClass] = {}
    for v in g.core:
        r = VertexRef(v)
        if r in sinks:
            core[v] = TerminalClass(SINK, r)
            continue
        mine = [c for c in core_cycles if v in c.verts]
        ne = next((c for c in mine if c.kind == NO_EXIT), None)
        ex = next((c for c in mine if c.kind == EXTREME), None)
        if ne is not None:
            core[v] = TerminalClass(NO_EXIT_CYCLE, ne.verts)
        elif ex is not None:
            core[v] = TerminalClass(EXTREME_CYCLE, ex.verts)
        elif r in tp:
            core[v] = TerminalClass(TERMINAL_PATH, r)

    tails: dict[str, tuple[tuple[EPSet, TerminalClass], ...]] = {}
    for t in g.tails:
        for p in t.pattern:
            pieces: list[tuple[EPSet, TerminalClass]] = []
            s_eps = sinks.column(p)
            if not s_eps.is_empty():
                pieces.append((s_eps, TerminalClass(SINK, p)))
            for c in copy_cycles:
                if c.tid != t.tid or p not in c.verts:
                    continue
                for kind, tag in ((NO_EXIT, NO_EXIT_CYCLE), (EXTREME, EXTREME_CYCLE)):
                    eps = c.kinds[kind]
                    if not eps.is_empty():
                        pieces.append((eps, TerminalClass(tag, (c.tid, c.verts))))
            tp_eps = tp.column(p)
            if not tp_eps.is_empty():
                pieces.append((tp_eps, TerminalClass(TERMINAL_PATH, t.tid)))
            if pieces:
                tails[p] = tuple(pieces)
    return TerminalMap(core, tails)


# ---------------------------------------------------------------------------
# Concrete rays


@dataclass(frozen=True)
class Ray:
    """A materialized infinite path: the entry vertex and the exact vertex
    set it visits.  tid names the tail an eventually climbing ray ascends;
    an eventually cyclic walk has finite verts and an empty tid."""

    tid: str
    entry: VertexRef
    verts: VertexSet

    def to_json(self) -> dict:
        return {"tid": self.tid, "entry": self.entry.key(), "verts": self.verts.to_json()}


def _resolve_entry(g: Graph, at, inf: VertexSet) -> VertexRef:
    if isinstance(at, VertexRef):
        return g.ref(at.key())
    tids = {t.tid: t for t in g.tails}
    if at in tids:
        for p in sorted(tids[at].pattern):
            r = VertexRef(p, 0, tail=at)
            if r in inf:
                return r
        raise PreconditionError(f"tail {at} carries no infinite path")
    return g.ref(at)


def canonical_ray(g: Graph, at: "Ray | VertexRef | str") -> Ray:
    """Materialize an infinite path from `at` (a Ray is returned untouched;
    a tail id starts at its least copy-0 vertex with an infinite future).

    The walk always takes the least continuation that still has an infinite
    future and stops at the first provable repetition: a revisited vertex
    closes an eventually cyclic walk, and a pattern vertex seen again some
    levels higher, with the whole segment inside one tail, closes a climbing
    block that pumps upward forever.
    """
    if isinstance(at, Ray):
        return at
    inf = emits_infinite(g)
    entry = _resolve_entry(g, at, inf)
    if entry not in inf:
        raise PreconditionError(f"{entry.key()} does not start an infinite path")

    path = [entry]
    seen = {entry: 0}
    by_name: dict[str, list[int]] = {}
    if not entry.is_core:
        by_name[entry.name] = [0]
    cap = (max(entry.index, 0) + 2) * (
        len(g.core) + sum(len(t.pattern) for t in g.tails) + 2
    ) + 64
    for _ in range(cap):
        cur = path[-1]
        nxt = min(
            t
            for b in out_bundles(g, cur)
            for t in (bundle_targets(g, cur, b),)
            if t in inf
        )
        if nxt in seen:
            return Ray("", entry, g.vset(path))
        if not nxt.is_core:
            for pos in by_name.get(nxt.name, ()):
                old = path[pos]
                block = path[pos:]
                if (
                    old.tail == nxt.tail
                    and old.index < nxt.index
                    and all(v.tail == nxt.tail for v in block)
                ):
                    shift = nxt.index - old.index
                    cols: dict[str, EPSet] = {}
                    for v in block:
                        eps = EPSet.make(v.index, shift, (v.index % shift,))
                        cols[v.name] = cols.get(v.name, EPSet.empty()).union(eps)
                    verts = g.vset(path[:pos]).union(VertexSet(frozenset(), cols))
                    return Ray(nxt.tail, entry, verts)
            by_name.setdefault(nxt.name, []).append(len(path))
        path.append(nxt)
        seen[nxt] = len(path) - 1
    raise DomainError(f"no repeating shape along the walk from {entry.key()}")


def is_terminal_path(g: Graph, ray: "Ray | VertexRef | str") -> bool:
    """Whether the denoted infinite path is terminal.  Terminality depends
    only on the starting vertex: its tree equals the tree of any path it
    emits, so the continuation cannot change the verdict."""
    if g.is_tail_free():
        raise NoInfinitePaths("a tail-free core has no rays to test")
    r = canonical_ray(g, ray)
    return r.entry in terminal_path_vertices(g)


# ---------------------------------------------------------------------------
# Clusters


@dataclass(frozen=True)
class Cluster:
    tag: str
    members: VertexSet
    closure: VertexSet
    witness: object = None

    def to_json(self) -> dict:
        return {
            "tag": self.tag,
            "members": self.members.to_json(),
            "closure": self.closure.to_json(),
            "witness": _witness_json(self.witness),
        }


@dataclass(frozen=True)
class ClusterReport:
    """The partition of terminal vertices into equivalence clusters, or an
    infinite per-copy family (pattern, level set, tag) when a tail column
    contributes one cluster per level."""

    clusters: tuple[Cluster, ...]
    infinite_family: tuple | None = None

    @property
    def is_finite(self) -> bool:
        return self.infinite_family is None

    def to_json(self) -> dict:
        fam = None
        if self.infinite_family is not None:
            p, eps, tag = self.infinite_family
            fam = {"pattern": p, "levels": eps.to_json(), "tag": tag}
        return {"clusters": [c.to_json() for c in self.clusters], "infinite_family": fam}


def _column_reps(g: Graph, p: str, eps: EPSet, tid: str):
    """Cluster representatives for one column piece.  A finite level set
    lists its members; an infinite one collapses to one representative per
    residue when three closures one period apart agree past the threshold.
    Disagreement means a fresh cluster per level, an infinite family."""
    if eps.is_finite():
        return [
            (VertexRef(p, n, tail=tid), EPSet.finite((n,))) for n in eps.iter_members()
        ], True
    reps: list[tuple[VertexRef, EPSet]] = []
    for n in sorted(eps.exceptions):
        reps.append((VertexRef(p, n, tail=tid), EPSet.finite((n,))))
    for r in sorted(eps.mask):
        m0 = eps.threshold + ((r - eps.threshold) % eps.period)
        keys = [
            bar_closure(g, g.vset([VertexRef(p, m, tail=tid)]))
            for m in (m0, m0 + eps.period, m0 + 2 * eps.period)
        ]
        if not (keys[0] == keys[1] == keys[2]):
            return [], False
        cover = EPSet.make(eps.threshold, eps.period, (r,))
        reps.append((VertexRef(p, m0, tail=tid), cover))
    return reps, True


def clusters(g: Graph) -> ClusterReport:
    """Group terminal vertices by equivalence.  The closure of any single
    member determines the cluster, so closures serve as grouping keys; the
    members are assembled piecewise from the classification."""
    tmap = terminal_vertices(g)
    core_cycles, copy_cycles = cycles(g)
    entries: list[list] = []  # [closure key, tag, members, witness]

    def add(key: VertexSet, tag: str, members: VertexSet, witness: object) -> None:
        entries.append([key, tag, members, witness])

    def column_pieces(p: str, eps: EPSet, tag: str, members_of) -> tuple | None:
        tid = g.pattern_owner[p].tid
        reps, ok = _column_reps(g, p, eps, tid)
        if not ok:
            return (p, eps, tag)
        for ref, cover in reps:
            add(bar_closure(g, g.vset([ref])), tag, members_of(cover), ref)
        return None

    # Sinks: always singleton clusters.
    sset = tmap.tag_vset(SINK)
    for v in sorted(sset.core):
        r = VertexRef(v)
        add(bar_closure(g, g.vset([r])), SINK, g.vset([r]), r)
    for p, eps in sset.tails.items():
        fam = column_pieces(p, eps, SINK, lambda cover, p=p: VertexSet(frozenset(), {p: cover}))
        if fam:
            return ClusterReport((), fam)

    # Cycles: a no-exit cluster is the cycle itself, an extreme cluster its tree.
    for c in core_cycles:
        cset = g.vset(c.verts)
        if c.kind == NO_EXIT:
            add(bar_closure(g, cset), NO_EXIT_CYCLE, cset, c.verts)
        elif c.kind == EXTREME:
            add(bar_closure(g, cset), EXTREME_CYCLE, tree(g, cset), c.verts)
    for c in copy_cycles:
        for kind, tag in ((NO_EXIT, NO_EXIT_CYCLE), (EXTREME, EXTREME_CYCLE)):
            eps = c.kinds[kind]
            if eps.is_empty():
                continue

            def members_of(cover: EPSet, c=c, tag=tag) -> VertexSet:
                level_sets = VertexSet(frozenset(), {q: cover for q in c.verts})
                return level_sets if tag == NO_EXIT_CYCLE else tree(g, level_sets)

            fam = column_pieces(c.anchor, eps, tag, members_of)
            if fam:
                return ClusterReport((), fam)

    # Terminal rays.
    tset = tmap.tag_vset(TERMINAL_PATH)
    for v in sorted(tset.core):
        r = VertexRef(v)
        add(bar_closure(g, g.vset([r])), TERMINAL_PATH, g.vset([r]), r)
    for p, eps in tset.tails.items():
        fam = column_pieces(
            p, eps, TERMINAL_PATH, lambda cover, p=p: VertexSet(frozenset(), {p: cover})
        )
        if fam:
            return ClusterReport((), fam)

    merged: list[list] = []
    for key, tag, members, witness in entries:
        for m in merged:
            if m[0] == key:
                m[2] = m[2].union(members)
                break
        else:
            merged.append([key, tag, members, witness])
    merged.sort(key=lambda m: m[2].min_ref())

    out = []
    for key, tag, members, witness in merged:
        if tag == TERMINAL_PATH:
            witness = canonical_ray(g, g.ref(members.min_ref().key()))
        out.append(Cluster(tag, members, key, witness))
    return ClusterReport(tuple(out))


# ---------------------------------------------------------------------------
# Cofinality


@dataclass(frozen=True)
class SimplicityVerdict:
    cofinal: bool
    case: str = ""
    reason: str = ""
    witness: object = None

    def to_json(self) -> dict:
        out: dict = {"cofinal": self.cofinal}
        if self.cofinal:
            out["case"] = self.case
        else:
            out["reason"] = self.reason
        out["witness"] = _witness_json(self.witness)
        return out


def _least_failing(g: Graph, member_sets: list[VertexSet]):
    """Least vertex that misses some cluster, with the cluster it misses."""
    roots = [root(g, m) for m in member_sets]
    reach_all = g.full_set()
    for r in roots:
        reach_all = reach_all.intersection(r)
    u = g.full_set().difference(reach_all).min_ref()
    missed = next(m.min_ref() for m, r in zip(member_sets, roots) if u not in r)
    return u, missed


def is_cofinal(g: Graph) -> SimplicityVerdict:
    """Cofinal means one cluster whose closure is everything; the witness on
    failure is the least vertex that cannot reach some terminal cluster, or
    the least vertex left outside the single cluster's closure."""
    rep = clusters(g)
    if not rep.is_finite:
        p, eps, _tag = rep.infinite_family
        tid = g.pattern_owner[p].tid
        pair = [
            g.vset([VertexRef(p, n, tail=tid)])
            for n in itertools.islice(eps.iter_members(), 2)
        ]
        u, missed = _least_failing(g, pair)
        return SimplicityVerdict(False, reason="InfiniteClusters", witness=(u, missed))
    if not rep.clusters:
        return SimplicityVerdict(
            False, reason="NoTerminalVertices", witness=g.full_set().min_ref()
        )
    if len(rep.clusters) > 1:
        u, missed = _least_failing(g, [c.members for c in rep.clusters])
        return SimplicityVerdict(False, reason="MultipleClusters", witness=(u, missed))
    c = rep.clusters[0]
    deficit = g.full_set().difference(c.closure)
    if not deficit.is_empty():
        return SimplicityVerdict(False, reason="ClosureDeficit", witness=deficit.min_ref())
    return SimplicityVerdict(True, case=CASE_OF_TAG[c.tag], witness=c.witness)


def cofinal_oracle(g: Graph) -> bool:
    """Independent finite check: every vertex reaches every sink, every
    infinite emitter, and every strongly connected component that carries a
    cycle.  Deliberately avoids the closure and cluster machinery."""
    if g.tails:
        raise TailUnsupported("the cofinality oracle reads tail-free graphs only")
    if not g.core:
        return False
    adj: dict[str, set[str]] = {v: set() for v in g.core}
    for b in g.edges:
        adj[b.src].add(b.dst)

    def bfs(v: str) -> set[str]:
        seen = {v}
        stack = [v]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return seen

    reach = {v: bfs(v) for v in g.core}
    targets: list[set[str]] = []
    for v in g.core:
        kind = classify_vertex(g, VertexRef(v)).kind
        if kind in ("sink", "infinite-emitter"):
            targets.append({v})
    dg = nx.DiGraph()
    dg.add_nodes_from(g.core)
    dg.add_edges_from((b.src, b.dst) for b in g.edges)
    for comp in nx.strongly_connected_components(dg):
        if len(comp) > 1 or any(v in adj[v] for v in comp):
            targets.append(set(comp))
    return all(reach[u] & t for u in g.core for t in targets)


def ter_sets(g: Graph):
    """The five closures: of the sinks, the no-exit cycle vertices, the
    extreme cycle vertices, the terminal ray vertices, and of all terminal
    vertices together."""
    tmap = terminal_vertices(g)

    def bar(s: VertexSet) -> VertexSet:
        return g.empty_set() if s.is_empty() else bar_closure(g, s)

    return (
        bar(tmap.tag_vset(SINK)),
        bar(tmap.tag_vset(NO_EXIT_CYCLE)),
        bar(tmap.tag_vset(EXTREME_CYCLE)),
        bar(tmap.tag_vset(TERMINAL_PATH)),
        bar(tmap.terminal_set()),
    )


def is_graded_purely_infinite_simple(g: Graph) -> tuple[bool, SimplicityVerdict]:
    """Purely infinite simple in the graded sense is exactly cofinality with
    an extreme cycle cluster, case C."""
    v = is_cofinal(g)
    return (v.cofinal and v.case == "C", v)


# ---------------------------------------------------------------------------
# Localization


@dataclass(frozen=True)
class SinkTarget:
    at: object


@dataclass(frozen=True)
class EmitterTarget:
    at: object


@dataclass(frozen=True)
class CycleTarget:
    at: object


@dataclass(frozen=True)
class RayTarget:
    at: object


@dataclass(frozen=True)
class Localization:
    """Nested admissible pairs whose porcupine quotient isolates the target
    as the sole cluster.  The quotient and its verdict are included whenever
    the quotient is representable; `case` is the predicted cofinality case."""

    low: AdmissiblePair
    high: AdmissiblePair
    case: str
    quotient: Graph | None
    verdict: SimplicityVerdict | None

    def to_json(self) -> dict:
        return {
            "low": self.low.to_json(),
            "high": self.high.to_json(),
            "case": self.case,
            "quotient": None if self.quotient is None else self.quotient.name,
            "verdict": None if self.verdict is None else self.verdict.to_json(),
        }


def _vertex_localization(g: Graph, v: VertexRef):
    succ = sorted({bundle_targets(g, v, b) for b in out_bundles(g, v)})
    h = bar_closure(g, g.vset(succ)) if succ else g.empty_set()
    return h, bar_closure(g, g.vset([v])), (), "A"


def _cycle_localization(g: Graph, v: VertexRef):
    core_cycles, copy_cycles = cycles(g)
    if v.is_core:
        mine = [c for c in core_cycles if v.name in c.verts]
        if not mine:
            raise TargetHypothesisViolated(f"{v.key()} is not on a cycle")
        cset = g.vset(mine[0].verts)
    else:
        mine = [c for c in copy_cycles if v.name in c.verts]
        if not mine:
            raise TargetHypothesisViolated(f"{v.key()} is not on a cycle")
        cset = mine[0].level_vset(g, v.index)
    tset = tree(g, cset)
    rset = root(g, cset)
    h = bar_closure(g, tset.difference(rset))
    gset = bar_closure(g, cset)
    b = breaking_vertices(g, h).intersection(gset)
    if not b.is_finite():
        raise Unrepresentable("infinitely many breaking vertices in the localization")
    keep = gset.difference(h)
    exits = max(edges_into(g, r, keep) for r in cset.finite_refs(g))
    return h, gset, tuple(b.finite_refs(g)), ("B" if exits == 1 else "C")


def _ray_localization(g: Graph, at):
    ray = canonical_ray(g, at)
    tset = tree(g, g.vset([ray.entry]))
    blocked = cycle_vertices(g).union(_emitter_vertices(g)).union(_sink_vertices(g))
    hit = tset.intersection(blocked)
    if not hit.is_empty():
        raise TargetHypothesisViolated(
            f"the tree of {ray.entry.key()} meets {hit.min_ref().key()}, which is "
            "a sink, an infinite emitter, or on a cycle"
        )

    def compute(view: FiniteView) -> set[VertexRef]:
        in_tree = frozenset(v for v in view.verts if v in tset)
        alpha = frozenset(v for v in in_tree if v in ray.verts)
        frontier = frozenset(v for v in view.cut_out if v in tset)
        out = set()
        for v in in_tree:
            anchors = alpha & window_backward(view, (v,))
            if not anchors:
                continue
            region = in_tree - window_forward(view, (v,))
            escape = _backward_within(view, frontier & region, region)
            if escape & anchors:
                out.add(v)
        return out

    div = stable_sets(g, compute, inputs=(tset, ray.verts), what="ray divergence")
    h = g.empty_set() if div.is_empty() else bar_closure(g, div)
    return h, bar_closure(g, g.vset([ray.entry])), (), "D"


def localize(g: Graph, target) -> Localization:
    """Build the admissible pairs isolating a terminal-shaped target, so the
    porcupine quotient of the pair is cofinal with the target's class."""
    if isinstance(target, (SinkTarget, EmitterTarget)):
        v = g.ref(target.at.key() if isinstance(target.at, VertexRef) else target.at)
        kind = classify_vertex(g, v).kind
        if isinstance(target, SinkTarget):
            if kind != "sink":
                raise TargetHypothesisViolated(f"{v.key()} is not a sink")
        else:
            if kind != "infinite-emitter":
                raise TargetHypothesisViolated(f"{v.key()} is not an infinite emitter")
            if v in cycle_vertices(g):
                raise TargetHypothesisViolated(f"{v.key()} sits on a cycle")
        h, gset, s, case = _vertex_localization(g, v)
    elif isinstance(target, CycleTarget):
        v = g.ref(target.at.key() if isinstance(target.at, VertexRef) else target.at)
        h, gset, s, case = _cycle_localization(g, v)
    elif isinstance(target, RayTarget):
        if g.is_tail_free():
            raise TargetHypothesisViolated("a tail-free core carries no rays")
        h, gset, s, case = _ray_localization(g, target.at)
    else:
        raise DomainError(f"unknown localization target {target!r}")

    low = admissible_pair(g, h, s)
    high = admissible_pair(g, gset, ())
    try:
        q, _report = porcupine_quotient(g, low, high, name=f"{g.name}.loc")
    except Unrepresentable:
        return Localization(low, high, case, None, None)
    return Localization(low, high, case, q, is_cofinal(q))
