"""Graph surgery: restriction with tail rebasing, quotients, porcupines.

Deleting a vertex set and keeping the rest is easy on the core but touchy
on tails: the kept levels of a column form an eventually periodic set, so
the survivors regroup into a finite prefix (materialized as core vertices
"p.n") plus a rebased tail whose pattern has one vertex "p%r" per kept
residue.  All edge arithmetic stays exact.

The porcupine quotient of a nested pair of admissible pairs keeps a body
(the vertex difference, restricted), then grafts on one spine per edge
that used to enter the body from outside: the spine has one vertex per
backward path feeding that edge.  Backward cones are usually finite; a
cone pumped by exactly one cycle or one inward climb is emitted as an
inward tail after its slices are checked to repeat, and anything pumped
twice over is refused as Unrepresentable rather than approximated.
Infinite emitters that lose edges get primed sink copies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Mapping, Sequence

from .eps import EPSet
from .errors import PreconditionError, Unrepresentable
from .hsets import (
    AdmissiblePair,
    admissible_pair,
    breaking_vertices,
    column_predicate,
    is_hereditary,
    pair_leq,
)
from .model import (
    INWARD,
    OMEGA,
    Bundle,
    Graph,
    Tail,
    VertexRef,
    VertexSet,
    in_edges_of,
)
from .reach import cycles, root

__all__ = [
    "RebaseMap",
    "restrict_and_rebase",
    "relative_quotient",
    "QuotientMap",
    "quotient_graph",
    "porcupine_quotient",
    "porcupine_graph",
    "PqReport",
]

SPINE_CAP = 4000
SLICE_CAP = 48
PUMP_PERIODS = range(1, 13)
PUMP_STARTS = range(1, 17)

EdgeOk = Callable[[Bundle, VertexRef, VertexRef], bool]


@dataclass(frozen=True)
class RebaseMap:
    """Vertex translation for one restriction.

    Non-plain tails split at n_star: original level n < n_star becomes the
    core vertex "p.n", level n_star + k*p_star + r becomes copy k of the
    rebased pattern vertex "p%r".  Plain tails keep their names.
    """

    keep: VertexSet
    n_star: Mapping[str, int]
    p_star: Mapping[str, int]
    plain: frozenset[str]
    owner: Mapping[str, str]
    prefix: Mapping[str, VertexRef]

    def to_new(self, ref: VertexRef) -> VertexRef | None:
        if ref not in self.keep:
            return None
        if ref.is_core:
            return VertexRef(ref.name)
        tid = self.owner[ref.name]
        if tid in self.plain:
            return VertexRef(ref.name, ref.index, tail=tid)
        ns, ps = self.n_star[tid], self.p_star[tid]
        if ref.index < ns:
            return VertexRef(f"{ref.name}.{ref.index}")
        off = ref.index - ns
        return VertexRef(f"{ref.name}%{off % ps}", off // ps, tail=tid)

    def to_old(self, ref: VertexRef) -> VertexRef:
        if ref.is_core:
            return self.prefix.get(ref.name, ref)
        if "%" not in ref.name:
            return ref
        p, _, r = ref.name.rpartition("%")
        tid = self.owner[p]
        lvl = self.n_star[tid] + ref.index * self.p_star[tid] + int(r)
        return VertexRef(p, lvl, tail=tid)


def restrict_and_rebase(
    g: Graph,
    keep: VertexSet,
    name: str | None = None,
    min_prefix: int = 0,
    align_with: Sequence[VertexSet] = (),
    edge_ok: EdgeOk | None = None,
) -> tuple[Graph, RebaseMap]:
    """Induced subgraph on `keep`, with tails rebased onto kept levels.

    Edges survive when both endpoints are kept and `edge_ok` (checked per
    instance family) accepts them.  `align_with` sets join the period and
    threshold computation so that an `edge_ok` reading their membership is
    constant on each rebased residue.  The prefix is at least `min_prefix`
    levels deep.  Raises Unrepresentable when a rebased tail would need
    attachments on both sides.
    """
    ok = edge_ok or (lambda b, s, d: True)
    core = [v for v in g.core if VertexRef(v) in keep]
    edges = [
        b
        for b in g.edges
        if VertexRef(b.src) in keep
        and VertexRef(b.dst) in keep
        and ok(b, VertexRef(b.src), VertexRef(b.dst))
    ]
    tails: list[Tail] = []
    n_star: dict[str, int] = {}
    p_star: dict[str, int] = {}
    plain: set[str] = set()
    prefix_map: dict[str, VertexRef] = {}

    for t in g.tails:
        cols = [s.column(p) for s in (keep, *align_with) for p in t.pattern]
        ps = math.lcm(1, *(c.period for c in cols))
        raw = max([min_prefix] + [c.threshold for c in cols])
        ns = ((raw + ps - 1) // ps) * ps
        n_star[t.tid], p_star[t.tid] = ns, ps
        pl = ns == 0 and ps == 1
        if pl:
            plain.add(t.tid)

        def kept(p: str, lvl: int) -> bool:
            return VertexRef(p, lvl, tail=t.tid) in keep

        def tref(p: str, lvl: int) -> VertexRef:
            return VertexRef(p, lvl, tail=t.tid)

        def pname(p: str, r: int) -> str:
            return p if pl else f"{p}%{r}"

        def bid(e: str, r: int) -> str:
            return e if pl else f"{e}%{r}"

        for n in range(ns):
            for p in t.pattern:
                if kept(p, n):
                    core.append(f"{p}.{n}")
                    prefix_map[f"{p}.{n}"] = tref(p, n)
        pattern = tuple(
            pname(p, r) for p in t.pattern for r in range(ps) if kept(p, ns + r)
        )
        intra_, inter_, ain_, aout0_, aoall_ = [], [], [], [], []

        for b in t.intra:
            for n in range(ns):
                if kept(b.src, n) and kept(b.dst, n) and ok(b, tref(b.src, n), tref(b.dst, n)):
                    edges.append(Bundle(f"{b.eid}.{n}", f"{b.src}.{n}", f"{b.dst}.{n}", b.mult))
            for r in range(ps):
                lv = ns + r
                if kept(b.src, lv) and kept(b.dst, lv) and ok(b, tref(b.src, lv), tref(b.dst, lv)):
                    intra_.append(Bundle(bid(b.eid, r), pname(b.src, r), pname(b.dst, r), b.mult))
        for b in t.inter:
            if t.outward:
                for n in range(ns - 1):
                    if kept(b.src, n) and kept(b.dst, n + 1) and ok(b, tref(b.src, n), tref(b.dst, n + 1)):
                        edges.append(Bundle(f"{b.eid}.{n}", f"{b.src}.{n}", f"{b.dst}.{n + 1}", b.mult))
                if ns >= 1 and kept(b.src, ns - 1) and kept(b.dst, ns) and ok(b, tref(b.src, ns - 1), tref(b.dst, ns)):
                    ain_.append(Bundle(f"{b.eid}.b", f"{b.src}.{ns - 1}", pname(b.dst, 0), b.mult))
                for r in range(ps):
                    sl, dl = ns + r, ns + r + 1
                    if kept(b.src, sl) and kept(b.dst, dl) and ok(b, tref(b.src, sl), tref(b.dst, dl)):
                        if r < ps - 1:
                            intra_.append(Bundle(bid(b.eid, r), pname(b.src, r), pname(b.dst, r + 1), b.mult))
                        else:
                            inter_.append(Bundle(bid(b.eid, r), pname(b.src, ps - 1), pname(b.dst, 0), b.mult))
            else:
                for n in range(ns - 1):
                    if kept(b.src, n + 1) and kept(b.dst, n) and ok(b, tref(b.src, n + 1), tref(b.dst, n)):
                        edges.append(Bundle(f"{b.eid}.{n}", f"{b.src}.{n + 1}", f"{b.dst}.{n}", b.mult))
                if ns >= 1 and kept(b.src, ns) and kept(b.dst, ns - 1) and ok(b, tref(b.src, ns), tref(b.dst, ns - 1)):
                    aout0_.append(Bundle(f"{b.eid}.b", pname(b.src, 0), f"{b.dst}.{ns - 1}", b.mult))
                for r in range(ps):
                    sl, dl = ns + r + 1, ns + r
                    if kept(b.src, sl) and kept(b.dst, dl) and ok(b, tref(b.src, sl), tref(b.dst, dl)):
                        if r < ps - 1:
                            intra_.append(Bundle(bid(b.eid, r), pname(b.src, r + 1), pname(b.dst, r), b.mult))
                        else:
                            inter_.append(Bundle(bid(b.eid, r), pname(b.src, 0), pname(b.dst, ps - 1), b.mult))
        for b in t.attach_in:
            if VertexRef(b.src) in keep and kept(b.dst, 0) and ok(b, VertexRef(b.src), tref(b.dst, 0)):
                if ns > 0:
                    edges.append(Bundle(b.eid, b.src, f"{b.dst}.0", b.mult))
                else:
                    ain_.append(Bundle(b.eid, b.src, pname(b.dst, 0), b.mult))
        for b in t.attach_out0:
            if kept(b.src, 0) and VertexRef(b.dst) in keep and ok(b, tref(b.src, 0), VertexRef(b.dst)):
                if ns > 0:
                    edges.append(Bundle(b.eid, f"{b.src}.0", b.dst, b.mult))
                else:
                    aout0_.append(Bundle(b.eid, pname(b.src, 0), b.dst, b.mult))
        for b in t.attach_out_all:
            if VertexRef(b.dst) not in keep:
                continue
            for n in range(ns):
                if kept(b.src, n) and ok(b, tref(b.src, n), VertexRef(b.dst)):
                    edges.append(Bundle(f"{b.eid}.{n}", f"{b.src}.{n}", b.dst, b.mult))
            for r in range(ps):
                if kept(b.src, ns + r) and ok(b, tref(b.src, ns + r), VertexRef(b.dst)):
                    aoall_.append(Bundle(bid(b.eid, r), pname(b.src, r), b.dst, b.mult))

        if pattern:
            if ain_ and (aout0_ or aoall_):
                raise Unrepresentable(
                    "restriction needs attachments on both sides of one tail", t.tid
                )
            tails.append(
                Tail(t.tid, t.direction, pattern, tuple(intra_), tuple(inter_),
                     tuple(ain_), tuple(aout0_), tuple(aoall_))
            )

    rmap = RebaseMap(
        keep,
        n_star,
        p_star,
        frozenset(plain),
        {p: t.tid for t in g.tails for p in t.pattern},
        prefix_map,
    )
    return _assemble(name or f"{g.name}.sub", core, edges, tails), rmap


def relative_quotient(g: Graph, big: VertexSet, small: VertexSet, name: str | None = None) -> Graph:
    """The graph induced on big - small, both sets hereditary."""
    if not is_hereditary(g, big) or not is_hereditary(g, small):
        raise PreconditionError("relative quotient needs hereditary sets")
    if not small.issubset(big):
        raise PreconditionError("relative quotient needs nested sets")
    out, _ = restrict_and_rebase(
        g, big.difference(small), name=name or f"{g.name}.rq", align_with=(big, small)
    )
    return out


# --- quotient by an admissible pair -------------------------------------

@dataclass(frozen=True)
class QuotientMap:
    """Where quotient vertices came from: the body rebase plus, for each
    primed sink, the vertex whose edge copies feed it."""

    rebase: RebaseMap
    primes: Mapping[str, VertexRef]


def quotient_graph(
    g: Graph,
    pair: AdmissiblePair,
    name: str | None = None,
    with_map: bool = False,
) -> Graph | tuple[Graph, QuotientMap]:
    """Delete H, prime the breaking vertices not in S.

    Kept vertices and the edges between them survive unchanged (modulo
    rebasing); each primed vertex v' is a new sink receiving a copy of
    every edge that entered v.  Sources of those copies are never in H,
    so the copies always land in the quotient.  With `with_map` the
    result also carries the QuotientMap tracing vertices back.
    """
    h = pair.h
    comp = h.complement(g)
    p_set = breaking_vertices(g, h).difference(pair.s_set(g))
    if not p_set.is_finite():
        raise Unrepresentable("infinitely many vertices need primes", p_set.to_json())
    primes = p_set.finite_refs(g)
    need = max([0] + [v.index + 2 for v in primes if not v.is_core])
    body, rmap = restrict_and_rebase(
        g, comp, name=name or f"{g.name}.q", min_prefix=need, align_with=(h,)
    )
    core = list(body.core)
    edges = list(body.edges)
    tails = {t.tid: t for t in body.tails}
    prime_of: dict[str, VertexRef] = {}
    for v in primes:
        pn = f"{rmap.to_new(v).name}'"
        core.append(pn)
        prime_of[pn] = v
        skipped = _prime_plain_edges(g, v, pn, comp, rmap, edges, tails)
        if skipped:
            raise Unrepresentable("a primed copy lost in-edges", (v.key(), skipped))
    out = _assemble(body.name, core, edges, tails.values())
    if with_map:
        return out, QuotientMap(rmap, prime_of)
    return out


def _prime_plain_edges(
    g: Graph,
    v: VertexRef,
    prime: str,
    keep: VertexSet,
    rmap: RebaseMap,
    edges: list[Bundle],
    tails: dict[str, Tail],
) -> list[str]:
    """Copy v's in-edges with kept sources onto the prime sink.

    Returns tokens of instances whose source is not kept; the caller
    decides whether those are covered elsewhere or an error.
    """
    skipped: list[str] = []
    for b, src in in_edges_of(g, v):
        if src is None:  # every copy of a column sends one edge
            t = g.pattern_owner[b.src]
            ns, ps = rmap.n_star[t.tid], rmap.p_star[t.tid]
            col = keep.column(b.src)
            for n in range(ns):
                if n in col:
                    edges.append(Bundle(f"{b.eid}.{n}'", f"{b.src}.{n}", prime, b.mult))
                else:
                    skipped.append(_tok(b, VertexRef(b.src, n, tail=t.tid), 0))
            for r in range(ps):
                if ns + r not in col:
                    skipped.append(_tok(b, VertexRef(b.src, ns + r, tail=t.tid), 0))
                    continue
                pat = b.src if t.tid in rmap.plain else f"{b.src}%{r}"
                eid = f"{b.eid}'" if t.tid in rmap.plain else f"{b.eid}%{r}'"
                _add_attach(tails, t.tid, "attach_out_all", Bundle(eid, pat, prime, b.mult))
            continue
        nn = rmap.to_new(src)
        if nn is None:
            skipped.append(_tok(b, src, 0))
            continue
        eid = f"{b.eid}'" if src.is_core else f"{b.eid}.{src.index}'"
        if nn.is_core:
            edges.append(Bundle(eid, nn.name, prime, b.mult))
        else:  # only an attach_out0 source can stay a tail vertex
            _add_attach(tails, nn.tail, "attach_out0", Bundle(eid, nn.name, prime, b.mult))
    return skipped


def _add_attach(tails: dict[str, Tail], tid: str, slot: str, b: Bundle) -> None:
    t = tails[tid]
    if t.attach_in:
        raise Unrepresentable("attachments on both sides of one tail", tid)
    tails[tid] = replace(t, **{slot: getattr(t, slot) + (b,)})


# --- porcupine quotients ------------------------------------------------

@dataclass(frozen=True)
class _Final:
    """One edge instance that the body loses and a spine must feed."""

    eid: str
    level: int | None
    k: int
    tok: str
    src: VertexRef
    dst: VertexRef
    kind: str  # "f1": entered from outside the kept set; "f2": entered T-S

    def sort_key(self) -> tuple:
        return (self.eid, -1 if self.level is None else self.level, self.k)


def _tok(b: Bundle, src: VertexRef, k: int) -> str:
    s = b.eid
    if not src.is_core:
        s += f".{src.index}"
    if b.mult != OMEGA and b.mult > 1:
        s += f":{k}"
    return s


def _enumerate_finals(g: Graph, gmh: VertexSet, tms: VertexSet, keep: VertexSet) -> list[_Final]:
    cols = [c for s in (gmh, tms) for c in s.tails.values()]
    finals: list[_Final] = []

    def emit(b: Bundle, src: VertexRef, dst: VertexRef, level: int | None) -> None:
        if dst in tms:
            kind = "f2"
        elif dst in gmh and src not in keep:
            kind = "f1"
        else:
            return
        if b.mult == OMEGA:
            raise Unrepresentable("infinitely many spine roots", (b.eid, level))
        for k in range(int(b.mult)):
            finals.append(_Final(b.eid, level, k, _tok(b, src, k), src, dst, kind))

    def family(b: Bundle, mk: Callable[[int], tuple[VertexRef, VertexRef]]) -> None:
        def pred(n: int) -> bool:
            s, d = mk(n)
            return d in tms or (d in gmh and s not in keep)

        lv = column_predicate(g, b.dst, pred, cols)
        if not lv.is_finite():
            raise Unrepresentable("a spine family at every copy", b.eid)
        for n in lv.iter_members():
            emit(b, *mk(n), n)

    for b in g.edges:
        emit(b, VertexRef(b.src), VertexRef(b.dst), None)
    for t in g.tails:
        for b in t.intra:
            family(b, lambda n, b=b: (VertexRef(b.src, n, tail=t.tid), VertexRef(b.dst, n, tail=t.tid)))
        for b in t.inter:
            if t.outward:
                family(b, lambda n, b=b: (VertexRef(b.src, n, tail=t.tid), VertexRef(b.dst, n + 1, tail=t.tid)))
            else:
                family(b, lambda n, b=b: (VertexRef(b.src, n + 1, tail=t.tid), VertexRef(b.dst, n, tail=t.tid)))
        for b in t.attach_in:
            emit(b, VertexRef(b.src), VertexRef(b.dst, 0, tail=t.tid), None)
        for b in t.attach_out0:
            emit(b, VertexRef(b.src, 0, tail=t.tid), VertexRef(b.dst), 0)
        for b in t.attach_out_all:
            family(b, lambda n, b=b: (VertexRef(b.src, n, tail=t.tid), VertexRef(b.dst)))
    finals.sort(key=_Final.sort_key)
    return finals


@dataclass(frozen=True)
class _Node:
    vert: VertexRef
    parent: int | None
    step: tuple[str, int] | None
    toks: tuple[str, ...]


@dataclass
class _Shape:
    kind: str  # "finite" | "ray"
    slices: list[list[_Node]]
    k0: int = 0
    period: int = 0
    shift: int = 0


def _cone_guard(g: Graph, cone: VertexSet) -> None:
    """Refuse backward cones with infinite in-branching at one vertex."""
    for b in g.edges:
        if b.mult == OMEGA and VertexRef(b.dst) in cone:
            raise Unrepresentable("an omega bundle feeds the backward cone", b.eid)
    for t in g.tails:
        for b in t.attach_out_all:
            if VertexRef(b.dst) in cone:
                raise Unrepresentable("an every-copy attachment feeds the backward cone", b.eid)
        for b in t.attach_out0:
            if b.mult == OMEGA and VertexRef(b.dst) in cone:
                raise Unrepresentable("an omega bundle feeds the backward cone", b.eid)
        for b in t.attach_in:
            if b.mult == OMEGA and 0 in cone.column(b.dst):
                raise Unrepresentable("an omega bundle feeds the backward cone", b.eid)
        for b in t.intra + t.inter:
            if b.mult != OMEGA:
                continue
            col = cone.column(b.dst)
            if t.outward and any(b is x for x in t.inter):
                col = col.difference(EPSet.finite([0]))
            if not col.is_empty():
                raise Unrepresentable("an omega bundle feeds the backward cone", b.eid)


def _cone_pumps(g: Graph, cone: VertexSet) -> tuple[int, list, int | None, list[str]]:
    """Count independent ways the cone regenerates: cycle instances plus
    climbing inward tails.  Returns (count, witnesses, cycle len, climbs)."""
    core_c, copy_c = cycles(g)
    wits: list = []
    total = 0
    cyc_len: int | None = None
    for c in core_c:
        if not all(VertexRef(x) in cone for x in c.verts):
            continue
        m = 1
        for u, w in zip(c.verts, c.verts[1:] + c.verts[:1]):
            m *= int(sum(b.mult for b in g.edges if b.src == u and b.dst == w))
        total += m
        wits.append((c.verts, m))
        cyc_len = c.length
    for c in copy_c:
        lv = EPSet.full()
        for p in c.verts:
            lv = lv.intersection(cone.column(p))
        if lv.is_empty():
            continue
        if not lv.is_finite():
            raise Unrepresentable(
                "cycles at infinitely many copies feed the backward cone", (c.tid, c.verts)
            )
        t = next(t for t in g.tails if t.tid == c.tid)
        m = 1
        for u, w in zip(c.verts, c.verts[1:] + c.verts[:1]):
            m *= int(sum(b.mult for b in t.intra if b.src == u and b.dst == w))
        for n in lv.iter_members():
            total += m
            wits.append((c.verts, n, m))
            cyc_len = c.length
    climbs = []
    for t in g.tails:
        inf = [p for p in t.pattern if not cone.column(p).is_finite()]
        if not inf:
            continue
        if t.outward:
            raise Unrepresentable("outward-infinite backward cone", t.tid)
        climbs.append(t.tid)
        total += 1
        wits.append((t.tid, inf))
    return total, wits, cyc_len, climbs


def _children(g: Graph, nd: _Node, i: int) -> list[_Node]:
    out = []
    for b, src in sorted(in_edges_of(g, nd.vert), key=lambda e: e[0].eid):
        if src is None or b.mult == OMEGA:  # the cone guard already refused these
            raise Unrepresentable("unbounded in-branching inside a spine", b.eid)
        for k in range(int(b.mult)):
            out.append(_Node(src, i, (b.eid, k), (_tok(b, src, k),) + nd.toks))
    return out


def _find_pump(slices: list[list[_Node]], starts: Iterable[int], periods: Iterable[int]):
    for l in periods:
        for k0 in starts:
            if k0 + 3 * l > len(slices) - 1:
                continue
            shift = None
            ok = True
            for d in range(k0, k0 + 2 * l):
                a, b = slices[d], slices[d + l]
                if len(a) != len(b) or not a:
                    ok = False
                    break
                for x, y in zip(a, b):
                    if x.step != y.step or x.parent != y.parent:
                        ok = False
                        break
                    if x.vert.is_core != y.vert.is_core or x.vert.name != y.vert.name:
                        ok = False
                        break
                    if not x.vert.is_core:
                        dd = y.vert.index - x.vert.index
                        if dd < 0 or (shift is not None and dd != shift):
                            ok = False
                            break
                        shift = dd
                if not ok:
                    break
            if ok:
                return k0, l, shift or 0
    return None


def _spine(g: Graph, src: VertexRef) -> _Shape:
    cone = root(g, g.vset([src]))
    _cone_guard(g, cone)
    total, wits, cyc_len, climbs = _cone_pumps(g, cone)
    if total >= 2:
        raise Unrepresentable("the backward cone pumps in two ways", wits)
    slices: list[list[_Node]] = [[_Node(src, None, None, ())]]
    if total == 0:
        count = 1
        while slices[-1]:
            nxt = []
            for i, nd in enumerate(slices[-1]):
                nxt.extend(_children(g, nd, i))
            count += len(nxt)
            if count > SPINE_CAP:
                raise Unrepresentable("backward cone too large to enumerate", count)
            slices.append(nxt)
        slices.pop()
        return _Shape("finite", slices)

    periods = [cyc_len * m for m in (1, 2, 3)] if cyc_len else list(PUMP_PERIODS)
    tmax = max((c.threshold for c in cone.tails.values()), default=0)
    starts = sorted(set(PUMP_STARTS) | {min(tmax, 64) + j for j in range(1, 5)})
    depth = max(starts) + 3 * max(periods) + 1
    for _ in range(depth):
        nxt = []
        for i, nd in enumerate(slices[-1]):
            nxt.extend(_children(g, nd, i))
        if not nxt:
            raise Unrepresentable("a pumped backward cone ended early", src.key())
        if len(nxt) > SLICE_CAP:
            raise Unrepresentable("backward cone too wide for a single pump", len(nxt))
        slices.append(nxt)
    hit = _find_pump(slices, starts, periods)
    if hit is None:
        raise Unrepresentable("no repeating backward shape found", src.key())
    return _Shape("ray", slices, *hit)


def _emit_spine(shape: _Shape, final: _Final, dst_name: str):
    """Vertices, edges and the optional ray tail realizing one spine."""

    def sfx(nd: _Node) -> str:
        return "~".join(nd.toks + (final.tok,))

    cut = len(shape.slices) if shape.kind == "finite" else shape.k0
    names = [["w." + sfx(nd) for nd in sl] for sl in shape.slices[:cut]]
    verts = [n for sl in names for n in sl]
    smap = {
        names[d][i]: shape.slices[d][i].vert.key()
        for d in range(cut)
        for i in range(len(names[d]))
    }
    edges = [Bundle("f." + final.tok, names[0][0], dst_name, 1)]
    for d in range(1, cut):
        for i, nd in enumerate(shape.slices[d]):
            edges.append(Bundle("f." + sfx(nd), names[d][i], names[d - 1][nd.parent], 1))
    if shape.kind == "finite":
        return verts, edges, None, smap

    k0, l = shape.k0, shape.period
    tid = f"wt.{final.tok}"
    win = [(i, q) for i in range(l) for q in range(len(shape.slices[k0 + i]))]
    jmap = {pos: j for j, pos in enumerate(win)}
    pats = tuple(f"{tid}.p{j}" for j in range(len(win)))
    intra, inter, aout0 = [], [], []
    for j, (i, q) in enumerate(win):
        nd = shape.slices[k0 + i][q]
        if i > 0:
            intra.append(Bundle(f"{tid}.e{j}", pats[j], pats[jmap[(i - 1, nd.parent)]], 1))
        else:
            aout0.append(Bundle(f"{tid}.a{j}", pats[j], names[k0 - 1][nd.parent], 1))
    for q, nd in enumerate(shape.slices[k0 + l]):
        j = jmap[(0, q)]
        inter.append(Bundle(f"{tid}.x{j}", pats[j], pats[jmap[(l - 1, nd.parent)]], 1))
    tail = Tail(tid, INWARD, pats, tuple(intra), tuple(inter), (), tuple(aout0), ())
    return verts, edges, tail, smap


@dataclass
class PqReport:
    """Provenance of the spine and prime vertices of one porcupine quotient."""

    finals: list[dict]
    spines: dict[str, str]
    rays: dict[str, dict]
    primes: dict[str, str]
    rebase: RebaseMap

    def to_json(self) -> dict:
        return {
            "finals": self.finals,
            "spines": self.spines,
            "rays": self.rays,
            "primes": self.primes,
        }


def porcupine_quotient(
    g: Graph, low: AdmissiblePair, high: AdmissiblePair, name: str | None = None
) -> tuple[Graph, PqReport]:
    """The quotient of the pair `high` by the nested pair `low`.

    Body: the vertices of high minus low, with the edges among them that
    end inside the hereditary difference.  Edges that used to enter the
    body from elsewhere (and every edge into T-S) get a spine: one new
    vertex per backward path feeding them, each path pointing at its own
    one-step shortening.  Breaking vertices of low.h that stay visible
    and are not in low.s get primed sink copies fed per in-edge instance.
    """
    low = admissible_pair(g, low.h, low.s)
    high = admissible_pair(g, high.h, high.s)
    if not pair_leq(low, high):
        raise PreconditionError("porcupine quotient needs nested pairs: low <= high")
    gmh = high.h.difference(low.h)
    tms_refs = tuple(r for r in high.s if r not in set(low.s))
    tms = g.vset(tms_refs) if tms_refs else g.empty_set()
    keep = gmh.union(tms)

    finals = _enumerate_finals(g, gmh, tms, keep)
    p_set = breaking_vertices(g, low.h, into=gmh).intersection(keep).difference(low.s_set(g))
    if not p_set.is_finite():
        raise Unrepresentable("infinitely many vertices need primes", p_set.to_json())
    primes = p_set.finite_refs(g)
    need = max(
        [0]
        + [f.dst.index + 1 for f in finals if not f.dst.is_core]
        + [v.index + 2 for v in primes if not v.is_core]
    )
    body, rmap = restrict_and_rebase(
        g,
        keep,
        name=name or f"{g.name}.pq",
        min_prefix=need,
        align_with=(gmh, tms, low.h),
        edge_ok=lambda b, s, d: d in gmh,
    )
    core = list(body.core)
    edges = list(body.edges)
    tails = {t.tid: t for t in body.tails}
    report = PqReport([], {}, {}, {}, rmap)

    shapes: dict[tuple[str, int], _Shape] = {}
    for f in finals:
        report.finals.append(
            {"token": f.tok, "kind": f.kind, "src": f.src.key(), "dst": f.dst.key()}
        )
        key = (f.src.name, f.src.index)
        if key not in shapes:
            shapes[key] = _spine(g, f.src)
        shape = shapes[key]
        dst_new = rmap.to_new(f.dst)
        verts, sedges, ray, smap = _emit_spine(shape, f, dst_new.name)
        core.extend(verts)
        edges.extend(sedges)
        report.spines.update(smap)
        if ray is not None:
            tails[ray.tid] = ray
            report.rays[ray.tid] = {
                "final": f.tok,
                "start": shape.k0,
                "period": shape.period,
                "shift": shape.shift,
            }

    for v in primes:
        pn = f"{rmap.to_new(v).name}'"
        core.append(pn)
        report.primes[pn] = v.key()
        if v in tms:
            for f in finals:
                if f.dst == v:
                    edges.append(Bundle(f.tok + "'", "w." + f.tok, pn, 1))
            continue
        for f in finals:
            if f.dst == v and f.kind == "f1":
                edges.append(Bundle(f.tok + "'", "w." + f.tok, pn, 1))
        _prime_plain_edges(g, v, pn, keep, rmap, edges, tails)

    return _assemble(body.name, core, edges, tails.values()), report


def porcupine_graph(g: Graph, pair: AdmissiblePair, name: str | None = None):
    """The porcupine of a pair: quotient of the pair by the empty pair."""
    low = AdmissiblePair(g.empty_set(), ())
    return porcupine_quotient(g, low, pair, name=name or f"{g.name}.porc")


def _assemble(name: str, core: Iterable[str], edges: Iterable[Bundle], tails: Iterable[Tail]) -> Graph:
    def tsort(t: Tail) -> Tail:
        return Tail(
            t.tid,
            t.direction,
            t.pattern,
            tuple(sorted(t.intra, key=lambda b: b.eid)),
            tuple(sorted(t.inter, key=lambda b: b.eid)),
            tuple(sorted(t.attach_in, key=lambda b: b.eid)),
            tuple(sorted(t.attach_out0, key=lambda b: b.eid)),
            tuple(sorted(t.attach_out_all, key=lambda b: b.eid)),
        )

    return Graph(
        name,
        tuple(sorted(core)),
        tuple(sorted(edges, key=lambda b: b.eid)),
        tuple(tsort(t) for t in sorted(tails, key=lambda t: t.tid)),
    )
