"""Stage quotients and the composition chains they carry.

Collapsing the closure of every terminal vertex at once, with the full
breaking set as S so nothing gets primed, produces a quotient whose
vertices all translate back to the input graph.  Iterating gives a tower
of stage graphs that ends exactly when some stage is swallowed whole.
build_series turns the tower into a chain of admissible pairs over the
input: each stage contributes its clusters one closure at a time, then
its breaking vertices one at a time, every contribution lifted backward
through the rebase maps.  Lifted pairs stay admissible by a saturation
argument; LiftingViolation enforces that claim at runtime instead of
trusting it.

Three conditions gate each stage: (a) some vertex is terminal, (b) the
cluster census is finite, (c) the breaking set of the terminal closure
is finite.  A failed condition is final, whatever later stages would
have looked like.  A tower that reproduces a stage verbatim can never
finish either; the repeat is detected on canonical presentations and
certified by the presentation that recurs.

Factors of a finished chain are checked on two routes where possible:
the two-pair quotient is materialized and tested for cofinality, and
when tails cannot carry that graph the check falls back to a cluster
argument inside the one-pair quotient.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

from .constructions import QuotientMap, RebaseMap, porcupine_quotient, quotient_graph
from .eps import EPSet
from .errors import LiftingViolation, LpakitError, PreconditionError, Unrepresentable
from .gformat import emit_graph
from .hsets import AdmissiblePair, admissible_pair, bar_closure, breaking_vertices, pair_leq
from .model import Graph, VertexRef, VertexSet
from .terminal import (
    EXTREME_CYCLE,
    NO_EXIT_CYCLE,
    SINK,
    TERMINAL_PATH,
    Cluster,
    ClusterReport,
    SimplicityVerdict,
    clusters,
    is_cofinal,
    terminal_vertices,
)

__all__ = [
    "STAGE_CAP",
    "MONOID_TYPE_OF_TAG",
    "Condition",
    "StageReport",
    "StageRun",
    "Factor",
    "SeriesReport",
    "VerifyReport",
    "composition_quotients",
    "necessary_conditions",
    "default_cluster_order",
    "build_series",
    "verify_series",
]

STAGE_CAP = 64

MONOID_TYPE_OF_TAG = {
    NO_EXIT_CYCLE: "periodic",
    EXTREME_CYCLE: "aperiodic",
    SINK: "incomparable",
    TERMINAL_PATH: "incomparable",
}

_CLUSTER_RANK = {NO_EXIT_CYCLE: 0, EXTREME_CYCLE: 1, SINK: 2, TERMINAL_PATH: 3}


def _json_witness(w: object) -> object:
    if isinstance(w, (VertexSet, EPSet)):
        return w.to_json()
    if isinstance(w, VertexRef):
        return w.key()
    if isinstance(w, tuple):
        return [_json_witness(x) for x in w]
    return w


@dataclass(frozen=True)
class Condition:
    """One gate verdict; `label` matches the Fails{label} chain reason."""

    label: str
    ok: bool
    witness: object = None

    def to_json(self) -> dict:
        return {"condition": self.label, "ok": self.ok, "witness": _json_witness(self.witness)}


@dataclass(frozen=True)
class StageReport:
    """One stage of the quotient tower."""

    n: int
    graph: Graph
    terminal: VertexSet
    closure: VertexSet
    clusters: ClusterReport
    breaking: VertexSet
    conditions: tuple[Condition, Condition, Condition]

    def to_json(self) -> dict:
        return {
            "stage": self.n,
            "graph": emit_graph(self.graph),
            "terminal": self.terminal.to_json(),
            "closure": self.closure.to_json(),
            "clusters": self.clusters.to_json(),
            "breaking": self.breaking.to_json(),
            "conditions": [c.to_json() for c in self.conditions],
        }


@dataclass(frozen=True)
class StageRun:
    """The tower plus how it stopped.

    status: Done, FailsA, FailsB, FailsC, NonTerminating, or CapReached.
    `witness` holds the failing condition's evidence, or the repeating
    presentation for NonTerminating.
    """

    stages: tuple[StageReport, ...]
    status: str
    at_stage: int
    witness: object = None

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "at_stage": self.at_stage,
            "witness": _json_witness(self.witness),
            "stages": [s.to_json() for s in self.stages],
        }


@dataclass(frozen=True)
class Factor:
    """One step of a finished chain.

    `members` is the lifted cluster (or the single breaking vertex) the
    step came from, `graph` the materialized two-pair quotient when tails
    could represent it, and `checked` the route that confirmed the step:
    "pq" for the materialized graph, "direct" for the cluster argument,
    "open" when neither route applied, "" before checking.
    """

    low: AdmissiblePair
    high: AdmissiblePair
    stage: int
    kind: str
    tag: str
    montype: str
    members: VertexSet
    graph: Graph | None = None
    verdict: SimplicityVerdict | None = None
    checked: str = ""

    def to_json(self) -> dict:
        return {
            "low": self.low.to_json(),
            "high": self.high.to_json(),
            "stage": self.stage,
            "kind": self.kind,
            "class": self.tag,
            "monoid_type": self.montype,
            "members": self.members.to_json(),
            "graph": None if self.graph is None else emit_graph(self.graph),
            "checked": self.checked,
        }


@dataclass(frozen=True)
class SeriesReport:
    """Verdict plus whatever chain prefix was honestly established."""

    verdict: str
    chain: tuple[AdmissiblePair, ...]
    factors: tuple[Factor, ...]
    reason: str = ""
    stage: int = -1
    witness: object = None

    @property
    def length(self) -> int:
        return max(len(self.chain) - 1, 0)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "reason": self.reason,
            "stage": self.stage,
            "length": self.length,
            "chain": [p.to_json() for p in self.chain],
            "factors": [f.to_json() for f in self.factors],
            "witness": _json_witness(self.witness),
        }


@dataclass(frozen=True)
class VerifyReport:
    """First failure of a claimed chain, or Valid with its length.

    `step` is the chain index for pair problems and the factor number
    (counted from 1) for step problems.
    """

    valid: bool
    length: int
    step: int = -1
    problem: str = ""

    def to_json(self) -> dict:
        return {
            "valid": self.valid,
            "length": self.length,
            "step": self.step,
            "problem": self.problem,
        }


def _stage_of(f: Graph, n: int) -> StageReport:
    union = terminal_vertices(f).terminal_set()
    rep = clusters(f)
    cond_a = Condition("a", not union.is_empty())
    closure = bar_closure(f, union) if cond_a.ok else f.empty_set()
    cond_b = Condition("b", rep.is_finite, rep.infinite_family)
    brk = breaking_vertices(f, closure)
    cond_c = Condition("c", brk.is_finite(), None if brk.is_finite() else brk)
    return StageReport(n, f, union, closure, rep, brk, (cond_a, cond_b, cond_c))


def necessary_conditions(stage: StageReport) -> tuple[Condition, Condition, Condition]:
    """The three gate verdicts of a stage (evaluated while staging)."""
    return stage.conditions


def _canonical_text(g: Graph) -> str:
    """Name-free presentation: equal texts mean isomorphic graphs.  The
    positional relabeling keys on sorted original names, so the converse
    can fail; a missed repeat only costs iterations, never a verdict."""
    cmap = {v: f"c{i}" for i, v in enumerate(sorted(g.core))}
    lines = [f"core {len(g.core)}"]
    lines += sorted(f"edge {cmap[b.src]} {cmap[b.dst]} {b.mult}" for b in g.edges)
    blocks = []
    for t in g.tails:
        pmap = {p: f"q{i}" for i, p in enumerate(sorted(t.pattern))}
        block = [f"tail {t.direction} {len(t.pattern)}"]
        block += sorted(f"intra {pmap[b.src]} {pmap[b.dst]} {b.mult}" for b in t.intra)
        block += sorted(f"inter {pmap[b.src]} {pmap[b.dst]} {b.mult}" for b in t.inter)
        block += sorted(f"in {cmap[b.src]} {pmap[b.dst]} {b.mult}" for b in t.attach_in)
        block += sorted(f"out0 {pmap[b.src]} {cmap[b.dst]} {b.mult}" for b in t.attach_out0)
        block += sorted(f"outall {pmap[b.src]} {cmap[b.dst]} {b.mult}" for b in t.attach_out_all)
        blocks.append(";".join(block))
    lines += sorted(blocks)
    return "\n".join(lines)


def _run_stages(g: Graph, max_stages: int) -> tuple[StageRun, list[QuotientMap]]:
    stages: list[StageReport] = []
    maps: list[QuotientMap] = []
    f = g
    for n in range(max_stages):
        if f.full_set().is_empty():
            return StageRun(tuple(stages), "Done", n), maps
        st = _stage_of(f, n)
        stages.append(st)
        for cond in st.conditions:
            if not cond.ok:
                status = f"Fails{cond.label.upper()}"
                return StageRun(tuple(stages), status, n, cond.witness), maps
        if st.closure == f.full_set():
            return StageRun(tuple(stages), "Done", n), maps
        pair = admissible_pair(f, st.closure, tuple(st.breaking.finite_refs(f)))
        nxt, qmap = quotient_graph(f, pair, with_map=True)
        maps.append(qmap)
        if n >= 1 and _canonical_text(nxt) == _canonical_text(f):
            cert = {"stage": n + 1, "repeats": n, "presentation": _canonical_text(f)}
            return StageRun(tuple(stages), "NonTerminating", n + 1, cert), maps
        f = nxt
    return StageRun(tuple(stages), "CapReached", max_stages), maps


def composition_quotients(g: Graph, max_stages: int = STAGE_CAP) -> StageRun:
    """Quotient by (terminal closure, full breaking set) until nothing is
    left, a gate condition fails, the tower provably repeats, or the cap
    ends the attempt."""
    run, _maps = _run_stages(g, max_stages)
    return run


def _affine_image(eps: EPSet, scale: int, offset: int) -> EPSet:
    """{scale*n + offset : n in eps}.  Exact: each residue class of the
    period maps onto one class modulo scale*period."""
    if eps.is_finite():
        return EPSet.finite(tuple(scale * n + offset for n in eps.iter_members()))
    period = scale * eps.period
    mask = tuple((scale * m + offset) % period for m in eps.mask)
    exc = tuple(scale * x + offset for x in eps.exceptions)
    return EPSet.make(scale * eps.threshold + offset, period, mask, exc)


def _lift_set(rmap: RebaseMap, vs: VertexSet) -> VertexSet:
    """Translate a vertex set of a rebased graph back to its parent.
    Rebased columns lift level by residue; prefix vertices land back on
    their original tail levels."""
    core: set[str] = set()
    cols: dict[str, EPSet] = {}

    def add_col(pat: str, eps: EPSet) -> None:
        cols[pat] = cols.get(pat, EPSet.empty()).union(eps)

    for name in vs.core:
        old = rmap.to_old(VertexRef(name))
        if old.is_core:
            core.add(old.name)
        else:
            add_col(old.name, EPSet.finite((old.index,)))
    for pname, eps in vs.tails.items():
        if "%" not in pname:
            add_col(pname, eps)
            continue
        base, _, res = pname.rpartition("%")
        tid = rmap.owner[base]
        add_col(base, _affine_image(eps, rmap.p_star[tid], rmap.n_star[tid] + int(res)))
    return VertexSet(frozenset(core), cols)


def _affine_preimage(eps: EPSet, scale: int, offset: int) -> EPSet:
    """{k >= 0 : scale*k + offset in eps}.  Exact for the same reason as
    _affine_image, read backward: a class of k lands in one class of n."""
    if eps.is_finite():
        ks = tuple(
            (x - offset) // scale
            for x in eps.iter_members()
            if x >= offset and (x - offset) % scale == 0
        )
        return EPSet.finite(ks)
    k0 = max(0, -((offset - eps.threshold) // scale))
    mask = tuple(r for r in range(eps.period) if ((scale * r + offset) % eps.period) in eps.mask)
    exc = tuple(k for k in range(k0) if scale * k + offset in eps)
    return EPSet.make(k0, eps.period, mask, exc)


def _push_set(rmap: RebaseMap, vs: VertexSet) -> VertexSet:
    """Image of a parent vertex set in the rebased graph (kept part only)."""
    core: set[str] = set()
    cols: dict[str, EPSet] = {}

    def add_col(pat: str, eps: EPSet) -> None:
        if not eps.is_empty():
            cols[pat] = cols.get(pat, EPSet.empty()).union(eps)

    for name in vs.core:
        nv = rmap.to_new(VertexRef(name))
        if nv is not None:
            core.add(nv.name)
    for pname, eps in vs.tails.items():
        eps = eps.intersection(rmap.keep.column(pname))
        if eps.is_empty():
            continue
        tid = rmap.owner[pname]
        if tid in rmap.plain:
            add_col(pname, eps)
            continue
        ns, ps = rmap.n_star[tid], rmap.p_star[tid]
        core.update(f"{pname}.{n}" for n in eps.members_below(ns))
        for r in range(ps):
            add_col(f"{pname}%{r}", _affine_preimage(eps, ps, ns + r))
    return VertexSet(frozenset(core), cols)


def _lift_through(maps: Sequence[QuotientMap], k: int, vs: VertexSet) -> VertexSet:
    for qm in reversed(maps[:k]):
        vs = _lift_set(qm.rebase, vs)
    return vs


def _ref_through(maps: Sequence[QuotientMap], k: int, ref: VertexRef) -> VertexRef:
    for qm in reversed(maps[:k]):
        ref = qm.rebase.to_old(ref)
    return ref


def default_cluster_order(cs: Sequence[Cluster]) -> tuple[Cluster, ...]:
    """Cycle clusters first, then sinks, then path clusters; later members
    first within a rank.  Any order yields a chain of the same length;
    this one surfaces periodic factors before the rest."""
    by_member = sorted(cs, key=lambda c: c.members.min_ref(), reverse=True)
    return tuple(sorted(by_member, key=lambda c: _CLUSTER_RANK[c.tag]))


def _lifted_pair(g: Graph, h: VertexSet, s: Sequence[VertexRef], stage_n: int) -> AdmissiblePair:
    try:
        return admissible_pair(g, h, s)
    except PreconditionError as e:
        raise LiftingViolation(f"stage {stage_n} lift is not admissible: {e}") from e


def build_series(
    g: Graph,
    max_stages: int = STAGE_CAP,
    order: Callable[[int, tuple[Cluster, ...]], Sequence[Cluster]] | None = None,
) -> SeriesReport:
    """Assemble a full chain from the stage tower.

    `order` permutes each stage's clusters before they enter the chain;
    it exists for order-invariance checks, and default_cluster_order
    applies when it is omitted.  Verdicts: HasSeries with every factor
    checked, NoSeries on a failed gate or a repeating tower (the chain
    field then holds the strictly increasing prefix that was built),
    Undetermined when the cap ran out first.
    """
    run, maps = _run_stages(g, max_stages)
    chain: list[AdmissiblePair] = [AdmissiblePair(g.empty_set(), ())]
    factors: list[Factor] = []

    def push(pair: AdmissiblePair, stage_n: int, kind: str, tag: str, members: VertexSet) -> None:
        low = chain[-1]
        if not pair_leq(low, pair) or pair == low:
            raise LiftingViolation(f"chain stalled at stage {stage_n}")
        chain.append(pair)
        factors.append(Factor(low, pair, stage_n, kind, tag, MONOID_TYPE_OF_TAG[tag], members))

    contributing = run.stages[:-1] if run.status.startswith("Fails") else run.stages
    for st in contributing:
        k = st.n
        cs = tuple(st.clusters.clusters)
        ordered = tuple(order(k, cs)) if order is not None else default_cluster_order(cs)
        if sorted(map(repr, ordered)) != sorted(map(repr, cs)):
            raise PreconditionError("order must permute the stage clusters")
        acc = st.graph.empty_set()
        for c in ordered:
            acc = bar_closure(st.graph, acc.union(c.members))
            h_new = chain[-1].h.union(_lift_through(maps, k, acc))
            s_new = tuple(r for r in chain[-1].s if r not in h_new)
            pair = _lifted_pair(g, h_new, s_new, k)
            push(pair, k, "cluster", c.tag, _lift_through(maps, k, c.members))
        for b in st.breaking.finite_refs(st.graph):
            b_e = _ref_through(maps, k, b)
            if b_e in chain[-1].s:
                continue
            s_new = tuple(sorted((*chain[-1].s, b_e)))
            pair = _lifted_pair(g, chain[-1].h, s_new, k)
            push(pair, k, "breaking", SINK, g.vset([b_e]))

    if run.status == "Done":
        final = chain[-1]
        if final.h != g.full_set() or final.s:
            raise LiftingViolation("finished tower did not close the chain")
        checked = _checked_factors(g, chain, factors)
        return SeriesReport("HasSeries", tuple(chain), tuple(checked))
    if run.status in ("FailsA", "FailsB", "FailsC", "NonTerminating"):
        return SeriesReport(
            "NoSeries",
            tuple(chain),
            tuple(factors),
            reason=run.status,
            stage=run.at_stage,
            witness=run.witness,
        )
    return SeriesReport(
        "Undetermined", tuple(chain), tuple(factors), reason="CapReached", stage=run.at_stage
    )


def _checked_factors(
    g: Graph, chain: Sequence[AdmissiblePair], factors: Sequence[Factor]
) -> list[Factor]:
    out = []
    for i, f in enumerate(factors):
        fg, verdict, how, ok = _check_factor(g, f.low, f.high)
        if ok is False:
            raise LiftingViolation(f"factor {i + 1} is not simple")
        out.append(replace(f, graph=fg, verdict=verdict, checked=how))
    return out


def _check_factor(
    g: Graph, low: AdmissiblePair, high: AdmissiblePair
) -> tuple[Graph | None, SimplicityVerdict | None, str, bool | None]:
    """Materialize the step quotient and test cofinality; when tails
    cannot carry it, fall back to the cluster argument inside the
    one-pair quotient.  ok None means neither route could answer."""
    try:
        fg, _rep = porcupine_quotient(g, low, high, name=f"{g.name}.step")
    except Unrepresentable:
        ok = _factor_by_clusters(g, low, high)
        return None, None, "direct" if ok is not None else "open", ok
    v = is_cofinal(fg)
    return fg, v, "pq", v.cofinal


def _factor_by_clusters(g: Graph, low: AdmissiblePair, high: AdmissiblePair) -> bool | None:
    """The step ideal, pushed into Q = g/low, is generated by the images
    of the new H vertices plus one primed sink per new S vertex; an S
    vertex with no prime would leave an unmaterialized defect, so the
    step cannot be one cluster.  Otherwise the ideal corresponds to the
    closure of the pushed generators inside Q, and it is simple exactly
    when that closure is the closure of a single cluster of Q."""
    try:
        q, qmap = quotient_graph(g, low, name=f"{g.name}.by", with_map=True)
    except Unrepresentable:
        return None
    try:
        rep = clusters(q)
    except LpakitError:
        return None
    if not rep.is_finite:
        return None
    s_low = set(low.s)
    s_added = [r for r in high.s if r not in s_low]
    prime_name = {ref.key(): name for name, ref in qmap.primes.items()}
    if any(b.key() not in prime_name for b in s_added):
        return False
    pushed = _push_set(qmap.rebase, high.h.difference(low.h))
    pushed = pushed.union(
        VertexSet(frozenset(prime_name[b.key()] for b in s_added), {})
    )
    if pushed.is_empty():
        return False
    k_set = bar_closure(q, pushed)
    cands = [c for c in rep.clusters if c.members.issubset(k_set)]
    if len(cands) != 1:
        return False
    return cands[0].closure == k_set


def verify_series(g: Graph, chain: Sequence[AdmissiblePair]) -> VerifyReport:
    """Re-derive every claim a chain makes: pairs admissible, strictly
    increasing, endpoints trivial and full, each consecutive factor
    cofinal.  First failure wins."""
    pairs = list(chain)
    if not pairs:
        return VerifyReport(False, 0, 0, "EmptyChain")
    n = len(pairs) - 1
    for i, p in enumerate(pairs):
        try:
            admissible_pair(g, p.h, p.s)
        except (LpakitError, KeyError) as e:
            return VerifyReport(False, n, i, f"NotAdmissible: {e}")
    if not pairs[0].h.is_empty() or pairs[0].s:
        return VerifyReport(False, n, 0, "BadEndpoints")
    if pairs[-1].h != g.full_set() or pairs[-1].s:
        return VerifyReport(False, n, len(pairs) - 1, "BadEndpoints")
    for i in range(n):
        if not pair_leq(pairs[i], pairs[i + 1]) or pairs[i] == pairs[i + 1]:
            return VerifyReport(False, n, i + 1, "NotIncreasing")
    for i in range(n):
        _fg, _v, _how, ok = _check_factor(g, pairs[i], pairs[i + 1])
        if ok is None:
            return VerifyReport(False, n, i + 1, "FactorUnverifiable")
        if not ok:
            return VerifyReport(False, n, i + 1, "FactorNotCofinal")
    return VerifyReport(True, n)
