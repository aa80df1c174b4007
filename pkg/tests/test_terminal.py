import random

import pytest

from lpakit.eps import EPSet
from lpakit.errors import (
    NoInfinitePaths,
    PreconditionError,
    TailUnsupported,
    TargetHypothesisViolated,
)
from lpakit.fixtures import fixture
from lpakit.gformat import emit_graph, parse_graph
from lpakit.hsets import bar_closure, pair_leq
from lpakit.model import VertexRef, VertexSet, classify_vertex
from lpakit.reach import cycles, root, tree
from lpakit.terminal import (
    EXTREME_CYCLE,
    NO_EXIT_CYCLE,
    SINK,
    TERMINAL_PATH,
    CycleTarget,
    EmitterTarget,
    Ray,
    RayTarget,
    SinkTarget,
    canonical_ray,
    clusters,
    cofinal_oracle,
    emits_infinite,
    is_cofinal,
    is_graded_purely_infinite_simple,
    is_terminal_path,
    localize,
    ter_sets,
    terminal_path_vertices,
    terminal_vertices,
)

from _rand import rand_core_graph

# Two columns, both climbing; p also leaks into q at every level, so only
# the q rays are terminal and the p rays diverge from them.
TWOCOL = """\
graph twocol
tail t outward
  pattern p q
  inter p p 1
  inter p q 1
  inter q q 1
"""

# One vertex, one loop, nothing else: every class test below needs a
# smallest sanity case and this is it.
DOT = """\
graph dot
vertex v
"""


def tags_of(g):
    return {v: c.tag for v, c in terminal_vertices(g).core.items()}


# --- classification


def test_terminal_map_uvw():
    g = fixture("uvw")
    assert tags_of(g) == {"u": NO_EXIT_CYCLE, "w": SINK}
    tm = terminal_vertices(g)
    assert tm.at(g.ref("v")) is None
    assert tm.at(g.ref("u")).witness == ("u",)


def test_terminal_map_grid23():
    g = fixture("grid23")
    assert tags_of(g) == {"u0": SINK, "v0": SINK, "w0": SINK}


def test_terminal_map_rose_and_loop():
    assert tags_of(fixture("rose2")) == {"b": EXTREME_CYCLE}
    assert tags_of(fixture("loop1")) == {"v": NO_EXIT_CYCLE}
    assert tags_of(fixture("loopomega")) == {"w": SINK}


def test_terminal_map_sinkrow_column():
    tm = terminal_vertices(fixture("sinkrow"))
    ((eps, cls),) = tm.tails["p"]
    assert eps == EPSet.full() and cls.tag == SINK


def test_terminal_map_loopchain_in():
    g = fixture("loopchain_in")
    tm = terminal_vertices(g)
    assert tm.at(g.ref("p@0")).tag == NO_EXIT_CYCLE
    assert tm.at(g.ref("p@1")) is None
    assert tm.at(g.ref("p@7")) is None


def test_terminal_map_ray_columns():
    for name in ("ray1", "ray2"):
        g = fixture(name)
        tm = terminal_vertices(g)
        ((eps, cls),) = tm.tails["p"]
        assert eps == EPSet.full() and cls.tag == TERMINAL_PATH


def test_terminal_path_vertices_twocol():
    g = parse_graph(TWOCOL)
    tp = terminal_path_vertices(g)
    assert tp == VertexSet(frozenset(), {"q": EPSet.full()})


def test_terminal_path_vertices_empty_cases():
    assert terminal_path_vertices(fixture("path4")).is_empty()
    assert terminal_path_vertices(fixture("sinkrow")).is_empty()
    assert terminal_path_vertices(fixture("omegarow")).is_empty()
    assert terminal_path_vertices(fixture("loopchain_noend")).is_empty()


def test_tags_exclusive_and_cover():
    rng = random.Random(5)
    for _ in range(120):
        g = rand_core_graph(rng)
        tm = terminal_vertices(g)
        union = tm.terminal_set()
        per_tag = [tm.tag_vset(t) for t in (SINK, NO_EXIT_CYCLE, EXTREME_CYCLE, TERMINAL_PATH)]
        seen = g.empty_set()
        for s in per_tag:
            assert seen.intersection(s).is_empty()
            seen = seen.union(s)
        assert seen == union
        # a finite walk ends in a sink or enters a bottom cycle component
        assert g.full_set().difference(root(g, union)).is_empty() or union.is_empty()
        if union.is_empty():
            assert not g.core


def test_tail_cover_includes_climbs():
    for name in ("ray1", "ray2", "loopchain_noend", "omegarow", "sinkrow"):
        g = fixture(name)
        union = terminal_vertices(g).terminal_set()
        cover = emits_infinite(g)
        if not union.is_empty():
            cover = cover.union(root(g, union))
        assert g.full_set().difference(cover).is_empty()


# --- rays


def test_canonical_ray_climbing():
    g = fixture("ray2")
    r = canonical_ray(g, "t")
    assert r.tid == "t" and r.entry == g.ref("p@0")
    assert r.verts == VertexSet(frozenset(), {"p": EPSet.full()})
    assert canonical_ray(g, r) is r


def test_canonical_ray_eventually_cyclic():
    g = fixture("loopchain_noend")
    r = canonical_ray(g, "t")
    assert r.tid == "" and r.verts == g.vset(["p@0"])


def test_is_terminal_path():
    assert is_terminal_path(fixture("ray1"), "t")
    assert is_terminal_path(fixture("ray2"), "p@0")
    assert not is_terminal_path(fixture("loopchain_noend"), "t")
    assert not is_terminal_path(fixture("omegarow"), "p@3")


def test_is_terminal_path_guards():
    with pytest.raises(NoInfinitePaths):
        is_terminal_path(fixture("path4"), "a")
    with pytest.raises(PreconditionError):
        canonical_ray(fixture("sinkrow"), "t")


def test_terminality_is_a_property_of_the_start():
    g = parse_graph(TWOCOL)
    for n in (0, 1, 5):
        assert is_terminal_path(g, f"q@{n}")
        assert not is_terminal_path(g, f"p@{n}")
    g = fixture("ray2")
    for n in (0, 2, 9):
        assert is_terminal_path(g, f"p@{n}")


# --- clusters


def test_clusters_grid23():
    g = fixture("grid23")
    rep = clusters(g)
    assert rep.is_finite and len(rep.clusters) == 3
    got = [(c.tag, sorted(c.members.core), sorted(c.closure.core)) for c in rep.clusters]
    assert got == [
        (SINK, ["u0"], ["u0"]),
        (SINK, ["v0"], ["v0"]),
        (SINK, ["w0"], ["w0", "w1"]),
    ]


def test_clusters_extreme_merges_tree():
    g = fixture("uvw")
    rep = clusters(g)
    assert [(c.tag, sorted(c.members.core)) for c in rep.clusters] == [
        (NO_EXIT_CYCLE, ["u"]),
        (SINK, ["w"]),
    ]
    g = fixture("rose2")
    (c,) = clusters(g).clusters
    assert c.tag == EXTREME_CYCLE and c.members == g.full_set()


def test_clusters_ray_column_collapses():
    g = fixture("ray2")
    rep = clusters(g)
    (c,) = rep.clusters
    assert c.tag == TERMINAL_PATH
    assert c.members == g.full_set() and c.closure == g.full_set()
    assert isinstance(c.witness, Ray) and c.witness.tid == "t"


def test_clusters_sinkrow_infinite_family():
    rep = clusters(fixture("sinkrow"))
    assert not rep.is_finite and rep.clusters == ()
    p, eps, tag = rep.infinite_family
    assert p == "p" and eps == EPSet.full() and tag == SINK


def test_clusters_none():
    rep = clusters(fixture("loopchain_noend"))
    assert rep.is_finite and rep.clusters == ()


def test_cluster_key_lemma_random():
    rng = random.Random(23)
    for _ in range(120):
        g = rand_core_graph(rng)
        rep = clusters(g)
        union = g.empty_set()
        for c in rep.clusters:
            assert union.intersection(c.members).is_empty()
            union = union.union(c.members)
            assert tree(g, c.members) == c.members
            for r in c.members.finite_refs(g):
                assert bar_closure(g, g.vset([r])) == c.closure
        assert union == terminal_vertices(g).terminal_set()


# --- cofinality and the four cases


def test_cofinal_cases():
    assert is_cofinal(fixture("path4")).case == "A"
    assert is_cofinal(fixture("loop1")).case == "B"
    assert is_cofinal(fixture("rose2")).case == "C"
    assert is_cofinal(fixture("ray1")).case == "D"
    assert is_cofinal(fixture("ray2")).case == "D"
    assert is_cofinal(parse_graph(DOT)).case == "A"


def test_not_cofinal_witnesses():
    v = is_cofinal(fixture("uvw"))
    assert v.reason == "MultipleClusters" and v.witness[0] == VertexRef("u")
    v = is_cofinal(fixture("grid23"))
    assert v.reason == "MultipleClusters" and v.witness[0] == VertexRef("u0")
    v = is_cofinal(fixture("loopomega"))
    assert v.reason == "ClosureDeficit" and v.witness == VertexRef("v")
    v = is_cofinal(fixture("sinkrow"))
    assert v.reason == "InfiniteClusters"
    v = is_cofinal(fixture("loopchain_noend"))
    assert v.reason == "NoTerminalVertices" and v.witness == VertexRef("p", 0, tail="t")
    v = is_cofinal(parse_graph(TWOCOL))
    assert v.reason == "ClosureDeficit" and v.witness == VertexRef("p", 0, tail="t")


def test_cofinal_oracle_examples():
    assert cofinal_oracle(fixture("loop1"))
    assert not cofinal_oracle(fixture("grid23"))
    assert not cofinal_oracle(fixture("e22a"))
    with pytest.raises(TailUnsupported):
        cofinal_oracle(fixture("ray1"))


def test_cofinal_matches_oracle_random():
    rng = random.Random(11)
    for _ in range(300):
        g = rand_core_graph(rng)
        assert is_cofinal(g).cofinal == cofinal_oracle(g), g.name


def test_ter_sets_uvw():
    g = fixture("uvw")
    s, ne, ex, tp, all_ = ter_sets(g)
    assert s == g.vset(["w"]) and ne == g.vset(["u"])
    assert ex.is_empty() and tp.is_empty()
    assert all_ == g.vset(["u", "w"])


def test_ter_sets_degenerate():
    g = fixture("loopchain_noend")
    assert all(x.is_empty() for x in ter_sets(g))
    g = parse_graph(DOT)
    s, ne, ex, tp, all_ = ter_sets(g)
    assert s == g.full_set() == all_
    assert ne.is_empty() and ex.is_empty() and tp.is_empty()


def test_purely_infinite_simple():
    ok, v = is_graded_purely_infinite_simple(fixture("rose2"))
    assert ok and v.case == "C"
    ok, v = is_graded_purely_infinite_simple(fixture("loop1"))
    assert not ok and v.case == "B"
    ok, v = is_graded_purely_infinite_simple(fixture("ray2"))
    assert not ok and v.case == "D"
    ok, _ = is_graded_purely_infinite_simple(fixture("uvw"))
    assert not ok


# --- localization


def test_localize_sink():
    g = fixture("grid23")
    loc = localize(g, SinkTarget("w0"))
    assert loc.low.h.is_empty() and loc.low.s == ()
    assert loc.high.h == g.vset(["w0", "w1"])
    assert loc.case == "A"
    assert loc.verdict is not None and loc.verdict.cofinal and loc.verdict.case == "A"


def test_localize_emitter():
    g = fixture("e22a")
    loc = localize(g, EmitterTarget("w"))
    assert loc.low.h == g.vset(["v", "y", "z"])
    assert loc.high.h == g.full_set()
    assert sorted(loc.quotient.core) == ["w", "x"]
    assert loc.verdict.cofinal and loc.verdict.case == "A"


def test_localize_cycle():
    g = fixture("loop1")
    loc = localize(g, CycleTarget("v"))
    assert loc.case == "B" and loc.verdict.cofinal and loc.verdict.case == "B"
    g = fixture("uvw")
    loc = localize(g, CycleTarget("u"))
    assert loc.case == "B"
    assert loc.quotient is None and loc.verdict is None  # doubling spine has no tail shape
    g = fixture("rose2")
    loc = localize(g, CycleTarget("b"))
    assert loc.case == "C" and loc.verdict.cofinal and loc.verdict.case == "C"


def test_localize_ray():
    g = fixture("ray2")
    loc = localize(g, RayTarget("t"))
    assert loc.low.h.is_empty() and loc.high.h == g.full_set()
    assert loc.case == "D" and loc.verdict.cofinal and loc.verdict.case == "D"


def test_localize_ray_prunes_divergence():
    g = parse_graph(TWOCOL)
    loc = localize(g, RayTarget("p@0"))
    assert loc.low.h == VertexSet(frozenset(), {"q": EPSet.full()})
    assert loc.high.h == g.full_set()
    assert loc.case == "D"
    assert sorted(t.tid for t in loc.quotient.tails) == ["t"]
    assert loc.verdict.cofinal and loc.verdict.case == "D"


def test_localize_guards():
    with pytest.raises(TargetHypothesisViolated):
        localize(fixture("grid23"), SinkTarget("u1"))
    with pytest.raises(TargetHypothesisViolated):
        localize(fixture("loopomega"), EmitterTarget("v"))
    with pytest.raises(TargetHypothesisViolated):
        localize(fixture("e22a"), CycleTarget("x"))
    with pytest.raises(TargetHypothesisViolated):
        localize(fixture("uvw"), RayTarget("v"))
    with pytest.raises(TargetHypothesisViolated):
        localize(fixture("loopchain_noend"), RayTarget("t"))


def test_localize_random_cycles():
    rng = random.Random(37)
    tried = verified = 0
    for _ in range(80):
        g = rand_core_graph(rng)
        core_cycles, _ = cycles(g)
        for c in core_cycles[:2]:
            tried += 1
            try:
                loc = localize(g, CycleTarget(c.verts[0]))
            except Exception:
                continue
            assert pair_leq(loc.low, loc.high)
            assert loc.case in "BC"
            if loc.verdict is not None:
                verified += 1
                assert loc.verdict.cofinal and loc.verdict.case == loc.case
    assert verified >= tried // 3


def test_localization_json_roundtrip_shape():
    loc = localize(fixture("grid23"), SinkTarget("w0"))
    j = loc.to_json()
    assert j["case"] == "A" and j["verdict"]["cofinal"] is True
    assert set(j) == {"low", "high", "case", "quotient", "verdict"}
