"""Typing the shift-graded monoid attached to a graph.

The monoid ("talented monoid") is freely generated, over a shift action
of the integers, by one generator per vertex plus partial-sum generators
for omega emitters, modulo one relation per regular non-sink vertex that
trades it for its one-step successors at shift one.  Against its own
shifts every element is periodic (equal to some positive shift),
aperiodic (strictly above one), or incomparable.

The graph criteria read types off closure regions: periodic means the
vertex lies in the saturated closure of the no-exit cycle vertices,
comparable means the closure of all cycle vertices, and the witnessing
exponent is the lcm of the reachable cycle lengths.  The leftover region
is reported incomparable, although the partial-sum relations of an omega
emitter can make such a generator comparable anyway; the oracle certifies
those cases when its search finds one.  Minimal shift-stable order ideals
correspond one to one with terminal clusters, with the cluster class
dictating the ideal's type.

The oracle works the presentation directly: states are canonically
sorted multisets of shifted generators, searched in both rewrite
directions because the presentation is not confluent as given.  It is a
bounded semi-decision: Equal and Geq answers are certificates, Unknown
is not a refutation, and incomparability is never certified by search,
only concluded from the graph criteria.
"""

from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .eps import EPSet
from .errors import DomainError, InfiniteClusterFamily
from .hsets import AdmissiblePair, admissible_pair, saturated_closure
from .model import (
    OMEGA,
    Bundle,
    Graph,
    VertexRef,
    VertexSet,
    bundle_targets,
    in_edges_of,
    out_bundles,
)
from .reach import NO_EXIT, CopyCycle, CoreCycle, cycles, tree
from .terminal import (
    EXTREME_CYCLE,
    NO_EXIT_CYCLE,
    SINK,
    TERMINAL_PATH,
    Cluster,
    clusters,
    ter_sets,
)

__all__ = [
    "TypeVerdict",
    "MonoidVerdict",
    "TwoTypeProfile",
    "element_type",
    "monoid_type",
    "minimal_ideals",
    "largest_periodic_ideal",
    "two_type_profile",
    "GenV",
    "GenQ",
    "MonElem",
    "vertex_elem",
    "DEFAULT_BOUNDS",
    "EqResult",
    "GeqResult",
    "oracle_expand",
    "oracle_eq",
    "oracle_geq",
    "oracle_type",
]

PERIODIC = "periodic"
APERIODIC = "aperiodic"
INCOMPARABLE = "incomparable"

# The theorem behind minimal_ideals: a cluster's class fixes its ideal type.
TYPE_OF_TAG = {
    NO_EXIT_CYCLE: PERIODIC,
    EXTREME_CYCLE: APERIODIC,
    SINK: INCOMPARABLE,
    TERMINAL_PATH: INCOMPARABLE,
}


@dataclass(frozen=True)
class TypeVerdict:
    """Element type plus, for the comparable kinds, a witnessing exponent.

    `n` comes from the lcm of the reachable cycle lengths, the exponent
    the closure argument actually constructs.  For periodic elements it
    is the least one; an aperiodic element can admit smaller strict
    witnesses.  Kind "unknown" is only ever produced by the oracle.
    """

    kind: str
    n: int | None = None

    @staticmethod
    def periodic(n: int) -> "TypeVerdict":
        return TypeVerdict(PERIODIC, n)

    @staticmethod
    def aperiodic(n: int) -> "TypeVerdict":
        return TypeVerdict(APERIODIC, n)

    @staticmethod
    def incomparable() -> "TypeVerdict":
        return TypeVerdict(INCOMPARABLE)

    @staticmethod
    def unknown() -> "TypeVerdict":
        return TypeVerdict("unknown")

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.n is not None:
            out["n"] = self.n
        return out


@dataclass(frozen=True)
class MonoidVerdict:
    """Whole-monoid type; `census` is filled for mixed graphs only and
    counts vertices per element type (a count may be OMEGA)."""

    kind: str
    census: Mapping[str, float] | None = None

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.census is not None:
            out["census"] = {
                k: ("omega" if v == OMEGA else int(v)) for k, v in self.census.items()
            }
        return out


def _sat(g: Graph, s: VertexSet) -> VertexSet:
    # Saturation only, no downstream absorption: a sink below an exitful
    # cycle must stay outside both regions.
    return s if s.is_empty() else saturated_closure(g, s)


def _census(g: Graph):
    """Cycle lists plus the two closures the criteria compare against:
    of the no-exit cycle vertices and of all cycle vertices."""
    core_cs, copy_cs = cycles(g)
    ne_core: set[str] = set()
    cyc_core: set[str] = set()
    ne_cols: dict[str, EPSet] = {}
    cyc_cols: dict[str, EPSet] = {}
    for c in core_cs:
        cyc_core.update(c.verts)
        if c.kind == NO_EXIT:
            ne_core.update(c.verts)
    for c in copy_cs:
        for p in c.verts:
            cyc_cols[p] = EPSet.full()
            ne_cols[p] = ne_cols.get(p, EPSet.empty()).union(c.kinds[NO_EXIT])
    ne = VertexSet(frozenset(ne_core), ne_cols)
    cyc = VertexSet(frozenset(cyc_core), cyc_cols)
    return core_cs, copy_cs, _sat(g, ne), _sat(g, cyc)


def _resolve(g: Graph, v: "VertexRef | str") -> VertexRef:
    ref = g.ref(v) if isinstance(v, str) else v
    if ref not in g.full_set():
        raise DomainError(f"no vertex {ref!r} in graph {g.name}")
    return ref


def _reachable_lcm(
    g: Graph, ref: VertexRef, core_cs: Sequence[CoreCycle], copy_cs: Sequence[CopyCycle]
) -> int:
    t = tree(g, g.vset([ref]))
    lens = [c.length for c in core_cs if any(v in t.core for v in c.verts)]
    lens += [
        c.length for c in copy_cs if any(not t.column(p).is_empty() for p in c.verts)
    ]
    return math.lcm(*lens)


def element_type(g: Graph, v: "VertexRef | str") -> TypeVerdict:
    """Type of the vertex generator, decided from the graph.

    Periodic when the vertex sits in the saturated closure of the no-exit
    cycle vertices, aperiodic when only the closure of all cycle vertices
    contains it, incomparable otherwise.  The exponent is the lcm of the
    lengths of the cycles the vertex reaches.

    Incomparable here means outside both regions.  When an omega emitter
    is reachable, its partial-sum relations can make such a generator
    comparable regardless; oracle_type upgrades the answer when its
    search certifies that.
    """
    ref = _resolve(g, v)
    core_cs, copy_cs, ne_bar, cyc_bar = _census(g)
    if ref in ne_bar:
        return TypeVerdict.periodic(_reachable_lcm(g, ref, core_cs, copy_cs))
    if ref in cyc_bar:
        return TypeVerdict.aperiodic(_reachable_lcm(g, ref, core_cs, copy_cs))
    return TypeVerdict.incomparable()


def monoid_type(g: Graph) -> MonoidVerdict:
    """Type of the whole monoid when uniform, else a mixed census.

    Incomparable exactly for acyclic graphs; periodic exactly when the
    no-exit closure is everything; aperiodic exactly when every cycle has
    an exit and the cycle closure is everything.
    """
    core_cs, copy_cs, ne_bar, cyc_bar = _census(g)
    full = g.full_set()
    if not core_cs and not copy_cs:
        return MonoidVerdict(INCOMPARABLE)
    if ne_bar == full:
        return MonoidVerdict(PERIODIC)
    no_noexit = all(c.kind != NO_EXIT for c in core_cs) and all(
        c.kinds[NO_EXIT].is_empty() for c in copy_cs
    )
    if no_noexit and cyc_bar == full:
        return MonoidVerdict(APERIODIC)
    counts = (
        ne_bar.count(),
        cyc_bar.difference(ne_bar).count(),
        full.difference(cyc_bar).count(),
    )
    census = {
        k: (OMEGA if c == OMEGA else int(c))
        for k, c in zip((PERIODIC, APERIODIC, INCOMPARABLE), counts)
    }
    return MonoidVerdict("mixed", census)


def minimal_ideals(g: Graph) -> list[tuple[Cluster, TypeVerdict, AdmissiblePair]]:
    """One entry per cluster: the cluster, the type of its generating
    vertex, and the pair (closure of the cluster, no breaking vertices)
    that generates the corresponding minimal ideal.

    The type is recomputed from a representative member rather than read
    off the cluster tag, so the tag correspondence stays checkable."""
    rep = clusters(g)
    if not rep.is_finite:
        raise InfiniteClusterFamily(
            f"{g.name} has infinitely many clusters", witness=rep.infinite_family
        )
    out = []
    for c in rep.clusters:
        tv = element_type(g, c.members.min_ref())
        out.append((c, tv, admissible_pair(g, c.closure)))
    return out


def largest_periodic_ideal(g: Graph) -> AdmissiblePair:
    """The pair generating the largest shift-stable order ideal all of
    whose nonzero elements are periodic: the no-exit closure with no
    breaking vertices."""
    ne = ter_sets(g)[1]
    return AdmissiblePair(ne, ())


@dataclass(frozen=True)
class TwoTypeProfile:
    """Three graph conditions and the factor types they rule out across
    cofinal porcupine quotients.  Mutually disjoint cycles ban aperiodic
    factors; every cycle meeting another bans periodic factors.  The third
    flag, every vertex in the closure of finitely many cycle vertices,
    bans incomparable factors only when all multiplicities are finite: an
    infinite bundle can leave a breaking vertex behind, and the one-step
    factor splitting it off has a sink.  Acyclic graphs satisfy the first
    two vacuously and force every factor incomparable."""

    disjoint_cycles: bool
    every_cycle_meets_another: bool
    every_vertex_in_cycle_closure: bool

    def to_json(self) -> dict:
        return {
            "disjoint_cycles": self.disjoint_cycles,
            "every_cycle_meets_another": self.every_cycle_meets_another,
            "every_vertex_in_cycle_closure": self.every_vertex_in_cycle_closure,
        }


def _arcs(verts: tuple[str, ...]):
    return [(verts[i], verts[(i + 1) % len(verts)]) for i in range(len(verts))]


def _doubled(bundles: Iterable[Bundle], verts: tuple[str, ...]) -> bool:
    """A cycle arc carried by two or more parallel edges duplicates the
    whole cycle, so the copies share every vertex."""
    for u, w in _arcs(verts):
        if sum(b.mult for b in bundles if b.src == u and b.dst == w) >= 2:
            return True
    return False


def two_type_profile(g: Graph) -> TwoTypeProfile:
    core_cs, copy_cs, _, cyc_bar = _census(g)
    by_tid = {t.tid: t for t in g.tails}

    core_sets = [set(c.verts) for c in core_cs]
    core_dbl = [_doubled(g.edges, c.verts) for c in core_cs]
    copy_sets = [(c.tid, set(c.verts)) for c in copy_cs]
    copy_dbl = [_doubled(by_tid[c.tid].intra, c.verts) for c in copy_cs]

    def meets(i: int, core: bool) -> bool:
        if core:
            return core_dbl[i] or any(
                core_sets[i] & core_sets[j] for j in range(len(core_sets)) if j != i
            )
        tid, verts = copy_sets[i]
        return copy_dbl[i] or any(
            verts & w for j, (tj, w) in enumerate(copy_sets) if j != i and tj == tid
        )

    all_meet = all(meets(i, True) for i in range(len(core_cs))) and all(
        meets(i, False) for i in range(len(copy_cs))
    )
    disjoint = not any(core_dbl) and not any(copy_dbl)
    if disjoint:
        disjoint = all(
            not (core_sets[i] & core_sets[j])
            for i in range(len(core_sets))
            for j in range(i + 1, len(core_sets))
        ) and all(
            not (copy_sets[i][1] & copy_sets[j][1])
            for i in range(len(copy_sets))
            for j in range(i + 1, len(copy_sets))
            if copy_sets[i][0] == copy_sets[j][0]
        )
    return TwoTypeProfile(disjoint, all_meet, cyc_bar == g.full_set())


# ---------------------------------------------------------------------------
# The bounded rewriting oracle


@dataclass(frozen=True)
class GenV:
    """The generator of a vertex."""

    at: VertexRef


@dataclass(frozen=True)
class GenQ:
    """Partial-sum generator of an omega emitter: the vertex minus the
    finite edge selection `z`, stored as (bundle, count) pairs.  Parallel
    edges stay anonymous; only ranges and counts enter any relation."""

    at: VertexRef
    z: tuple[tuple[str, int], ...]


Atom = tuple[int, "GenV | GenQ"]


def _akey(atom: Atom):
    k, gen = atom
    if isinstance(gen, GenV):
        return (k, 0, gen.at, ())
    return (k, 1, gen.at, gen.z)


def _shift_str(k: int) -> str:
    if k == 0:
        return ""
    return "t" if k == 1 else f"t^{k}"


def _gen_str(gen: "GenV | GenQ") -> str:
    if isinstance(gen, GenV):
        return f"[{gen.at.key()}]"
    inner = ",".join(e if c == 1 else f"{e}*{c}" for e, c in gen.z)
    return f"[q^{gen.at.key()}|{inner}]"


@dataclass(frozen=True)
class MonElem:
    """A finite multiset of shifted generators, kept canonically sorted so
    that equal multisets are equal values.  The empty multiset is zero."""

    atoms: tuple[Atom, ...] = ()

    @staticmethod
    def make(pairs: Iterable[Atom]) -> "MonElem":
        return MonElem(tuple(sorted(pairs, key=_akey)))

    @property
    def is_zero(self) -> bool:
        return not self.atoms

    @property
    def size(self) -> int:
        return len(self.atoms)

    def __add__(self, other: "MonElem") -> "MonElem":
        return MonElem.make(self.atoms + other.atoms)

    def shifted(self, n: int) -> "MonElem":
        return MonElem.make((k + n, gen) for k, gen in self.atoms)

    def minus(self, other: "MonElem") -> "MonElem | None":
        """Multiset difference, or None when `other` is not contained."""
        cnt = Counter(self.atoms)
        cnt.subtract(other.atoms)
        if any(v < 0 for v in cnt.values()):
            return None
        return MonElem.make(cnt.elements())

    def contains(self, other: "MonElem") -> bool:
        return self.minus(other) is not None

    def __str__(self) -> str:
        if not self.atoms:
            return "0"
        return " + ".join(f"{_shift_str(k)}{_gen_str(g)}" for k, g in self.atoms)

    def to_json(self) -> list:
        out = []
        for k, gen in self.atoms:
            d: dict = {"shift": k, "v": gen.at.key()}
            if isinstance(gen, GenQ):
                d["z"] = [list(p) for p in gen.z]
            out.append(d)
        return out


def vertex_elem(g: Graph, v: "VertexRef | str", shift: int = 0) -> MonElem:
    return MonElem.make([(shift, GenV(_resolve(g, v)))])


DEFAULT_BOUNDS = (24, 8, 200_000)


class _Walker:
    """Successor generation over one graph.  Out- and in-edge censuses are
    cached per vertex; the deterministic iteration order is atoms in
    canonical order, then bundles in presentation order."""

    def __init__(self, g: Graph):
        self.g = g
        self._out: dict[VertexRef, list[tuple[VertexRef, Bundle]]] = {}
        self._in: dict[VertexRef, list] = {}

    def out(self, ref: VertexRef) -> list[tuple[VertexRef, Bundle]]:
        got = self._out.get(ref)
        if got is None:
            got = [(bundle_targets(self.g, ref, b), b) for b in out_bundles(self.g, ref)]
            self._out[ref] = got
        return got

    def in_of(self, ref: VertexRef) -> list:
        got = self._in.get(ref)
        if got is None:
            got = in_edges_of(self.g, ref)
            self._in[ref] = got
        return got

    def _tweak(self, cnt: Counter, minus: Iterable[Atom], plus: Iterable[Atom]) -> MonElem:
        c = cnt.copy()
        c.subtract(minus)
        for a in plus:
            c[a] += 1
        return MonElem.make(c.elements())

    def _collapse_parents(self, atoms: tuple[Atom, ...]) -> list[VertexRef]:
        refs = {gen.at for _, gen in atoms if isinstance(gen, GenV)}
        cands: set[VertexRef] = set()
        for ref in refs:
            for b, src in self.in_of(ref):
                if src is not None:
                    cands.add(src)
                    continue
                # attach_out_all feeds from every copy; try only copies
                # already in play, their neighbours, and copy 0
                t = self.g.pattern_owner[b.src]
                levels = {
                    r.index
                    for r in refs
                    if not r.is_core and r.name == b.src and r.index >= 0
                }
                pool = {0} | levels | {n + 1 for n in levels} | {n - 1 for n in levels if n >= 1}
                cands.update(VertexRef(b.src, n, tail=t.tid) for n in sorted(pool))
        return sorted(cands)

    def successors(self, elem: MonElem) -> list[tuple[str, MonElem]]:
        out: list[tuple[str, MonElem]] = []
        cnt = Counter(elem.atoms)
        distinct = sorted(cnt, key=_akey)
        for atom in distinct:
            k, gen = atom
            edges = self.out(gen.at)
            if isinstance(gen, GenV):
                if not edges:
                    continue  # sink: no relation
                if any(b.mult == OMEGA for _, b in edges):
                    for dst, b in edges:
                        q = (k, GenQ(gen.at, ((b.eid, 1),)))
                        out.append(
                            ("q-intro", self._tweak(cnt, [atom], [q, (k + 1, GenV(dst))]))
                        )
                else:
                    add = [
                        (k + 1, GenV(dst))
                        for dst, b in edges
                        for _ in range(int(b.mult))
                    ]
                    out.append(("expand", self._tweak(cnt, [atom], add)))
                continue
            dst_of = {b.eid: dst for dst, b in edges}
            zc = dict(gen.z)
            for dst, b in edges:
                if b.mult == OMEGA or zc.get(b.eid, 0) < int(b.mult):
                    w = dict(zc)
                    w[b.eid] = w.get(b.eid, 0) + 1
                    grown = (k, GenQ(gen.at, tuple(sorted(w.items()))))
                    out.append(
                        ("q-grow", self._tweak(cnt, [atom], [grown, (k + 1, GenV(dst))]))
                    )
            for eid, n in gen.z:
                partner = (k + 1, GenV(dst_of[eid]))
                if cnt[partner] < 1:
                    continue
                w = dict(zc)
                if n > 1:
                    w[eid] = n - 1
                else:
                    del w[eid]
                if w:
                    back = (k, GenQ(gen.at, tuple(sorted(w.items()))))
                    rule = "q-shrink"
                else:
                    back = (k, GenV(gen.at))
                    rule = "q-elim"
                out.append((rule, self._tweak(cnt, [atom, partner], [back])))
        shifts = sorted({k for k, gen in distinct if isinstance(gen, GenV)})
        for parent in self._collapse_parents(elem.atoms):
            edges = self.out(parent)
            if not edges or any(b.mult == OMEGA for _, b in edges):
                continue
            need = Counter(
                (0, GenV(dst)) for dst, b in edges for _ in range(int(b.mult))
            )
            for k1 in shifts:
                shifted = Counter({(k1, gen): m for (_, gen), m in need.items()})
                if all(cnt[a] >= m for a, m in shifted.items()):
                    out.append(
                        (
                            "collapse",
                            self._tweak(cnt, shifted.elements(), [(k1 - 1, GenV(parent))]),
                        )
                    )
        return out


def _within(elem: MonElem, size_b: int, shift_b: int) -> bool:
    return elem.size <= size_b and all(abs(k) <= shift_b for k, _ in elem.atoms)


def _expand_all(g: Graph, x: MonElem, bounds) -> dict[MonElem, tuple[MonElem | None, str]]:
    size_b, shift_b, states_b = bounds
    w = _Walker(g)
    seen: dict[MonElem, tuple[MonElem | None, str]] = {x: (None, "")}
    queue = deque([x])
    while queue and len(seen) < states_b:
        cur = queue.popleft()
        for rule, nxt in w.successors(cur):
            if nxt in seen or not _within(nxt, size_b, shift_b):
                continue
            seen[nxt] = (cur, rule)
            queue.append(nxt)
            if len(seen) >= states_b:
                break
    return seen


def oracle_expand(g: Graph, x: MonElem, bounds=DEFAULT_BOUNDS) -> set[MonElem]:
    """Everything congruent to `x` reachable within the bounds (max
    multiset size, max absolute shift, max visited states).  The search
    applies each relation in both directions at every occurrence; which
    states fit under a state cap is deterministic."""
    return set(_expand_all(g, x, bounds))


def _trace(
    seen: dict[MonElem, tuple[MonElem | None, str]], end: MonElem, side: str
) -> list[str]:
    chain: list[tuple[str, MonElem]] = []
    cur: MonElem | None = end
    while cur is not None:
        prev, rule = seen[cur]
        chain.append((rule or "start", cur))
        cur = prev
    chain.reverse()
    return [f"{side} {rule}: {elem}" for rule, elem in chain]


@dataclass(frozen=True)
class EqResult:
    """`equal=False` means the bounded search found nothing, never that
    the two elements are distinct."""

    equal: bool
    trace: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {"verdict": "equal" if self.equal else "unknown", "trace": list(self.trace)}


@dataclass(frozen=True)
class GeqResult:
    geq: bool
    residual: MonElem | None = None
    trace: tuple[str, ...] = ()

    def to_json(self) -> dict:
        out: dict = {"verdict": "geq" if self.geq else "unknown", "trace": list(self.trace)}
        if self.residual is not None:
            out["residual"] = self.residual.to_json()
        return out


def _contains_sorted(big: tuple[Atom, ...], small: tuple[Atom, ...]) -> bool:
    """Multiset inclusion over canonically sorted atom tuples."""
    i = 0
    for a in small:
        ka = _akey(a)
        while i < len(big) and _akey(big[i]) < ka:
            i += 1
        if i >= len(big) or _akey(big[i]) != ka:
            return False
        i += 1
    return True


def _two_sided(g: Graph, x: MonElem, y: MonElem, bounds, check):
    """Alternating breadth-first expansion of both sides.  `check(elem,
    side)` is called once per newly reached representative and returns a
    (rep, other-rep, payload) triple to stop the search."""
    size_b, shift_b, states_b = bounds
    w = _Walker(g)
    sides = ({x: (None, "")}, {y: (None, "")})
    queues = (deque([x]), deque([y]))
    got = check(x, 0, sides) or check(y, 1, sides)
    if got:
        return sides, got
    turn = 0
    while (queues[0] or queues[1]) and len(sides[0]) + len(sides[1]) < states_b:
        if not queues[turn]:
            turn = 1 - turn
        cur = queues[turn].popleft()
        for rule, nxt in w.successors(cur):
            if nxt in sides[turn] or not _within(nxt, size_b, shift_b):
                continue
            sides[turn][nxt] = (cur, rule)
            queues[turn].append(nxt)
            got = check(nxt, turn, sides)
            if got:
                return sides, got
        turn = 1 - turn
    return sides, None


def oracle_eq(g: Graph, x: MonElem, y: MonElem, bounds=DEFAULT_BOUNDS) -> EqResult:
    """Certify x = y by meeting in the middle, or give up within bounds."""

    def check(elem, side, sides):
        if elem in sides[1 - side]:
            return (elem, elem, True)
        return None

    sides, got = _two_sided(g, x, y, bounds, check)
    if got is None:
        return EqResult(False)
    r, s, _ = got
    trace = _trace(sides[0], r, "lhs") + _trace(sides[1], s, "rhs")
    return EqResult(True, tuple(trace))


def oracle_geq(g: Graph, x: MonElem, y: MonElem, bounds=DEFAULT_BOUNDS) -> GeqResult:
    """Certify x >= y: some representative of x contains one of y as a
    sub-multiset.  The residual is their difference, a representative of
    the slack z in x = y + z.  Pair checking is quadratic in the visited
    states; keep the state cap modest when the answer may be Unknown."""

    def check(elem, side, sides):
        if side == 0:
            for s in sides[1]:
                if s.size <= elem.size and _contains_sorted(elem.atoms, s.atoms):
                    return (elem, s, elem.minus(s))
        else:
            for r in sides[0]:
                if elem.size <= r.size and _contains_sorted(r.atoms, elem.atoms):
                    return (r, elem, r.minus(elem))
        return None

    sides, got = _two_sided(g, x, y, bounds, check)
    if got is None:
        return GeqResult(False)
    r, s, residual = got
    trace = _trace(sides[0], r, "lhs") + _trace(sides[1], s, "rhs")
    trace.append(f"residual: {residual}")
    return GeqResult(True, residual, tuple(trace))


def oracle_type(g: Graph, v: "VertexRef | str", bounds=DEFAULT_BOUNDS) -> TypeVerdict:
    """Search for a periodicity or strict-inequality certificate for the
    vertex generator.

    One bounded expansion of the generator is shared across all exponent
    probes; equality (a representative whose n-shift is again reachable)
    is tried at every exponent up to the shift bound before strictness (a
    representative strictly containing the shifted generator), first
    under small state caps, escalating toward the full budget only when
    nothing certifies.  Unknown is consistent with incomparability but
    never proof of it.  A certificate can also land outside the closure
    regions element_type reads: near omega emitters the search sometimes
    proves comparable what the region answer calls incomparable."""
    ref = _resolve(g, v)
    size_b, shift_b, states_b = bounds
    x = vertex_elem(g, ref)
    caps = sorted({min(1500, states_b), min(20_000, states_b), states_b})
    for cap in caps:
        reps = _expand_all(g, x, (size_b, shift_b, cap))
        for n in range(1, shift_b + 1):
            if any(r.shifted(n) in reps for r in reps):
                return TypeVerdict.periodic(n)
        for n in range(1, shift_b + 1):
            probe = (n, GenV(ref))
            if any(probe in r.atoms and r.size >= 2 for r in reps):
                return TypeVerdict.aperiodic(n)
    return TypeVerdict.unknown()
