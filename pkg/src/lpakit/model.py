"""Core graph model: finite cores plus one-sided infinite tails.

A Graph has finitely many core vertices and edge bundles, plus zero or more
tails.  A tail is a finitely presented infinite row of copies of a pattern:
copy n holds one vertex per pattern id, intra bundles repeat inside every
copy, inter bundles connect copy n to n+1 (outward) or n+1 to n (inward).
Attachments tie a tail to the core on one side only: either edges from core
vertices into copy 0 (attach_in), or edges from the tail out to the core
(attach_out0 from copy 0, attach_out_all from every copy), never both.

Multiplicities are positive integers or OMEGA (infinitely many parallel
edges).  Pattern ids are globally unique across the graph, so a tail vertex
is addressed as pattern id + copy index and displayed "p@n".
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .eps import EPSet
from .errors import ModelError

__all__ = [
    "OMEGA",
    "VertexRef",
    "Bundle",
    "Tail",
    "Graph",
    "VertexSet",
    "VertexClass",
    "classify_vertex",
]

OMEGA = float("inf")

OUTWARD = "outward"
INWARD = "inward"

_ID_BAD = set(" \t\r\n#@*")


@dataclass(frozen=True, order=True)
class VertexRef:
    """A core vertex (index -1) or the copy-`index` vertex of a tail column."""

    name: str
    index: int = -1
    tail: str = field(default="", compare=False)

    @property
    def is_core(self) -> bool:
        return self.index < 0

    def key(self) -> str:
        return self.name if self.is_core else f"{self.name}@{self.index}"

    def __repr__(self) -> str:
        return self.key()


def core_ref(name: str) -> VertexRef:
    return VertexRef(name)


@dataclass(frozen=True)
class Bundle:
    """A bundle of `mult` parallel edges. Endpoints are core or pattern ids."""

    eid: str
    src: str
    dst: str
    mult: float = 1

    def instances(self, cap: int = 0) -> list[tuple[str, int]]:
        """Edge instances (eid, k). OMEGA bundles yield min(cap,1) stand-ins."""
        if self.mult == OMEGA:
            return [(self.eid, 0)] if cap else []
        return [(self.eid, k) for k in range(int(self.mult))]


@dataclass(frozen=True)
class Tail:
    tid: str
    direction: str
    pattern: tuple[str, ...]
    intra: tuple[Bundle, ...] = ()
    inter: tuple[Bundle, ...] = ()
    attach_in: tuple[Bundle, ...] = ()
    attach_out0: tuple[Bundle, ...] = ()
    attach_out_all: tuple[Bundle, ...] = ()

    @property
    def outward(self) -> bool:
        return self.direction == OUTWARD

    def has_out_attach(self) -> bool:
        return bool(self.attach_out0 or self.attach_out_all)


@dataclass(frozen=True)
class Graph:
    name: str
    core: tuple[str, ...] = ()
    edges: tuple[Bundle, ...] = ()
    tails: tuple[Tail, ...] = ()

    def __post_init__(self) -> None:
        _validate(self)

    # Lookup helpers. Graphs are small; linear scans are fine, but the maps
    # below are built once per graph because closures hammer them.

    @functools.cached_property
    def pattern_owner(self) -> Mapping[str, Tail]:
        return {p: t for t in self.tails for p in t.pattern}

    @functools.cached_property
    def bundle_by_id(self) -> Mapping[str, Bundle]:
        out = {}
        for b in self.all_bundles():
            out[b.eid] = b
        return out

    def all_bundles(self) -> Iterator[Bundle]:
        yield from self.edges
        for t in self.tails:
            yield from t.intra
            yield from t.inter
            yield from t.attach_in
            yield from t.attach_out0
            yield from t.attach_out_all

    def is_tail_free(self) -> bool:
        return not self.tails

    def is_vertex(self, ref: VertexRef) -> bool:
        if ref.is_core:
            return ref.name in self.core
        return ref.name in self.pattern_owner

    def ref(self, name: str, index: int = -1) -> VertexRef:
        """Resolve a vertex by display name ("u" or "p@3")."""
        if index < 0 and "@" in name:
            name, _, idx = name.rpartition("@")
            index = int(idx)
        if index < 0:
            if name not in self.core:
                raise ModelError(f"unknown core vertex {name!r}")
            return VertexRef(name)
        t = self.pattern_owner.get(name)
        if t is None:
            raise ModelError(f"unknown pattern vertex {name!r}")
        return VertexRef(name, index, tail=t.tid)

    def core_refs(self) -> list[VertexRef]:
        return [VertexRef(v) for v in self.core]

    def full_set(self) -> "VertexSet":
        return VertexSet(
            frozenset(self.core),
            {p: EPSet.full() for t in self.tails for p in t.pattern},
        )

    def empty_set(self) -> "VertexSet":
        return VertexSet(frozenset(), {})

    def vset(self, refs: Iterable[VertexRef | str]) -> "VertexSet":
        """A finite VertexSet from refs or display names."""
        core: set[str] = set()
        tails: dict[str, set[int]] = {}
        for r in refs:
            if isinstance(r, str):
                r = self.ref(r)
            if not self.is_vertex(r):
                raise ModelError(f"unknown vertex {r!r}")
            if r.is_core:
                core.add(r.name)
            else:
                tails.setdefault(r.name, set()).add(r.index)
        return VertexSet(frozenset(core), {p: EPSet.finite(ix) for p, ix in tails.items()})


@dataclass(frozen=True)
class VertexSet:
    """A set of vertices: finitely many core ids plus an EPSet per column."""

    core: frozenset[str]
    tails: Mapping[str, EPSet]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "tails", {p: s for p, s in sorted(self.tails.items()) if not s.is_empty()}
        )

    def __contains__(self, ref: VertexRef) -> bool:
        if ref.is_core:
            return ref.name in self.core
        eps = self.tails.get(ref.name)
        return eps is not None and ref.index in eps

    def column(self, pat: str) -> EPSet:
        return self.tails.get(pat, EPSet.empty())

    def is_empty(self) -> bool:
        return not self.core and not self.tails

    def is_finite(self) -> bool:
        return all(s.is_finite() for s in self.tails.values())

    def count(self) -> float:
        return len(self.core) + sum(s.count() for s in self.tails.values())

    def union(self, other: "VertexSet") -> "VertexSet":
        cols = {p: self.column(p).union(other.column(p)) for p in set(self.tails) | set(other.tails)}
        return VertexSet(self.core | other.core, cols)

    def intersection(self, other: "VertexSet") -> "VertexSet":
        cols = {p: self.column(p).intersection(other.column(p)) for p in set(self.tails)}
        return VertexSet(self.core & other.core, cols)

    def difference(self, other: "VertexSet") -> "VertexSet":
        cols = {p: self.column(p).difference(other.column(p)) for p in set(self.tails)}
        return VertexSet(self.core - other.core, cols)

    def issubset(self, other: "VertexSet") -> bool:
        return self.difference(other).is_empty()

    def complement(self, g: Graph) -> "VertexSet":
        return g.full_set().difference(self)

    def finite_refs(self, g: Graph) -> list[VertexRef]:
        """All members, sorted; raises if any column is infinite."""
        if not self.is_finite():
            raise ModelError("infinite vertex set")
        out = [VertexRef(v) for v in self.core]
        for p, s in self.tails.items():
            t = g.pattern_owner[p]
            out.extend(VertexRef(p, n, tail=t.tid) for n in s.iter_members())
        return sorted(out)

    def members_in_window(self, g: Graph, depth: int) -> list[VertexRef]:
        out = [VertexRef(v) for v in self.core]
        for p, s in self.tails.items():
            t = g.pattern_owner[p]
            out.extend(VertexRef(p, n, tail=t.tid) for n in s.members_below(depth))
        return sorted(out)

    def min_ref(self) -> VertexRef | None:
        best: VertexRef | None = None
        for v in self.core:
            r = VertexRef(v)
            if best is None or r < best:
                best = r
        for p, s in self.tails.items():
            n = s.min_element()
            if n is not None:
                r = VertexRef(p, n)
                if best is None or r < best:
                    best = r
        return best

    def to_json(self) -> dict:
        return {
            "core": sorted(self.core),
            "tails": {p: s.to_json() for p, s in self.tails.items()},
        }

    @staticmethod
    def from_json(obj: dict) -> "VertexSet":
        return VertexSet(
            frozenset(obj.get("core", ())),
            {p: EPSet.from_json(s) for p, s in obj.get("tails", {}).items()},
        )

    def __repr__(self) -> str:
        parts = sorted(self.core)
        parts += [f"{p}:{s!r}" for p, s in self.tails.items()]
        return "{%s}" % ", ".join(parts)


@dataclass(frozen=True)
class VertexClass:
    kind: str  # "sink" | "regular" | "infinite-emitter"
    out_degree: float
    omega_bundles: tuple[str, ...] = ()

    def to_json(self) -> dict:
        deg = "omega" if self.out_degree == OMEGA else int(self.out_degree)
        return {"kind": self.kind, "out_degree": deg, "omega_bundles": list(self.omega_bundles)}


def out_bundles(g: Graph, ref: VertexRef) -> list[Bundle]:
    """Every bundle leaving `ref`, exact from the presentation."""
    if ref.is_core:
        out = [b for b in g.edges if b.src == ref.name]
        for t in g.tails:
            out.extend(b for b in t.attach_in if b.src == ref.name)
        return out
    t = g.pattern_owner[ref.name]
    out = [b for b in t.intra if b.src == ref.name]
    if t.outward or ref.index >= 1:
        out.extend(b for b in t.inter if b.src == ref.name)
    if ref.index == 0:
        out.extend(b for b in t.attach_out0 if b.src == ref.name)
    out.extend(b for b in t.attach_out_all if b.src == ref.name)
    return out


def bundle_targets(g: Graph, ref: VertexRef, b: Bundle) -> VertexRef:
    """The target vertex of bundle `b` when leaving from `ref`."""
    if ref.is_core:
        owner = g.pattern_owner.get(b.dst)
        if owner is not None:  # attach_in lands on copy 0
            return VertexRef(b.dst, 0, tail=owner.tid)
        return VertexRef(b.dst)
    t = g.pattern_owner[ref.name]
    if any(b is x for x in t.intra):
        return VertexRef(b.dst, ref.index, tail=t.tid)
    if any(b is x for x in t.inter):
        step = 1 if t.outward else -1
        return VertexRef(b.dst, ref.index + step, tail=t.tid)
    return VertexRef(b.dst)  # attach_out lands on the core


def in_edges_of(g: Graph, ref: VertexRef) -> list[tuple[Bundle, VertexRef | None]]:
    """Exact in-edges of `ref`.  A None source stands for a whole column:
    an attach_out_all bundle sends one edge from every copy of its tail."""
    out: list[tuple[Bundle, VertexRef | None]] = []
    if ref.is_core:
        for b in g.edges:
            if b.dst == ref.name:
                out.append((b, VertexRef(b.src)))
        for t in g.tails:
            for b in t.attach_out0:
                if b.dst == ref.name:
                    out.append((b, VertexRef(b.src, 0, tail=t.tid)))
            for b in t.attach_out_all:
                if b.dst == ref.name:
                    out.append((b, None))
        return out
    t = g.pattern_owner[ref.name]
    for b in t.intra:
        if b.dst == ref.name:
            out.append((b, VertexRef(b.src, ref.index, tail=t.tid)))
    for b in t.inter:
        if b.dst == ref.name:
            if t.outward and ref.index >= 1:
                out.append((b, VertexRef(b.src, ref.index - 1, tail=t.tid)))
            elif not t.outward:
                out.append((b, VertexRef(b.src, ref.index + 1, tail=t.tid)))
    if ref.index == 0:
        for b in t.attach_in:
            if b.dst == ref.name:
                out.append((b, VertexRef(b.src)))
    return out


def classify_vertex(g: Graph, ref: VertexRef) -> VertexClass:
    """Sink / regular / infinite emitter, exact from the presentation."""
    bundles = out_bundles(g, ref)
    omega = tuple(sorted(b.eid for b in bundles if b.mult == OMEGA))
    degree: float = sum(b.mult for b in bundles)
    if degree == 0:
        return VertexClass("sink", 0)
    if omega:
        return VertexClass("infinite-emitter", OMEGA, omega)
    return VertexClass("regular", degree)


def _check_id(kind: str, s: str) -> None:
    if not s or any(c in _ID_BAD for c in s):
        raise ModelError(f"bad {kind} id {s!r}: nonempty, no whitespace or # @ *")


def _validate(g: Graph) -> None:
    _check_id("graph", g.name.replace(" ", "_") or "g")
    seen: set[str] = set()
    for v in g.core:
        _check_id("vertex", v)
        if v in seen:
            raise ModelError(f"duplicate vertex id {v!r}")
        seen.add(v)
    for t in g.tails:
        _check_id("tail", t.tid)
        if t.direction not in (OUTWARD, INWARD):
            raise ModelError(f"tail {t.tid}: bad direction {t.direction!r}")
        if not t.pattern:
            raise ModelError(f"tail {t.tid}: empty pattern")
        if t.attach_in and t.has_out_attach():
            raise ModelError(f"tail {t.tid}: attachments must be one-sided")
        for p in t.pattern:
            _check_id("pattern vertex", p)
            if p in seen:
                raise ModelError(f"duplicate vertex id {p!r}")
            seen.add(p)
    eids: set[str] = set()
    pats = {p for t in g.tails for p in t.pattern}
    core = set(g.core)

    def need(kind: str, name: str, pool: set[str]) -> None:
        if name not in pool:
            raise ModelError(f"{kind} endpoint {name!r} is not a vertex of the right kind")

    for b in g.all_bundles():
        if b.eid in eids:
            raise ModelError(f"duplicate edge id {b.eid!r}")
        eids.add(b.eid)
        if not (b.mult == OMEGA or (isinstance(b.mult, int) and b.mult >= 1)):
            raise ModelError(f"edge {b.eid}: multiplicity must be a positive int or omega")
    for b in g.edges:
        need("edge source", b.src, core)
        need("edge target", b.dst, core)
    for t in g.tails:
        mine = set(t.pattern)
        for b in t.intra + t.inter:
            need(f"tail {t.tid} bundle source", b.src, mine)
            need(f"tail {t.tid} bundle target", b.dst, mine)
        for b in t.attach_in:
            need("attach_in source", b.src, core)
            need("attach_in target", b.dst, mine)
        for b in t.attach_out0 + t.attach_out_all:
            need("attach_out source", b.src, mine)
            need("attach_out target", b.dst, core)
