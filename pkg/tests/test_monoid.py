import json
import random
from collections import Counter

import networkx as nx
import pytest

from lpakit.errors import DomainError, InfiniteClusterFamily, ModelError
from lpakit.fixtures import fixture
from lpakit.gformat import parse_graph
from lpakit.hsets import enumerate_pairs, pair_leq
from lpakit.model import OMEGA, Graph, VertexRef
from lpakit.monoid import (
    DEFAULT_BOUNDS,
    MonElem,
    element_type,
    largest_periodic_ideal,
    minimal_ideals,
    monoid_type,
    oracle_eq,
    oracle_expand,
    oracle_geq,
    oracle_type,
    two_type_profile,
    vertex_elem,
)
from lpakit.series import MONOID_TYPE_OF_TAG, build_series
from lpakit.terminal import SINK

from _rand import rand_core_graph

# Two vertex-disjoint no-exit loops of lengths 2 and 3 fed by one vertex,
# so the fed vertex certifies at the lcm rather than either length.
PERI6 = """\
graph peri6
vertex a b0 b1 c0 c1 c2
edge f0 b0 b1 1
edge f1 b1 b0 1
edge g0 c0 c1 1
edge g1 c1 c2 1
edge g2 c2 c0 1
edge h0 a b0 1
edge h1 a c0 1
"""

# A 2-cycle whose exit lands on a no-exit 3-cycle.
TWOSIX = """\
graph twosix
vertex a0 a1 b0 b1 b2
edge e0 a0 a1 1
edge e1 a1 a0 1
edge x a0 b0 1
edge f0 b0 b1 1
edge f1 b1 b2 1
edge f2 b2 b0 1
"""

# a escapes to a sink, so the closure regions miss it, yet the partial-sum
# relations at b absorb the escape: [a] swallows t[a] plus a remainder.
ABSORB = """\
graph absorb
vertex a b s
edge l b b *
edge e b s 1
edge f a b 1
edge g a s 1
"""


def keys(g, vs):
    return sorted(r.key() for r in vs.finite_refs(g))


def test_element_types_on_the_mixed_fixture():
    g = fixture("uvw")
    u, v, w = (element_type(g, x) for x in ("u", "v", "w"))
    assert (u.kind, u.n) == ("periodic", 1)
    assert (v.kind, v.n) == ("aperiodic", 1)
    assert (w.kind, w.n) == ("incomparable", None)
    assert u.to_json() == {"kind": "periodic", "n": 1}
    assert w.to_json() == {"kind": "incomparable"}


def test_element_types_down_an_inward_chain():
    g = fixture("loopchain_in")
    assert element_type(g, "p@0").kind == "periodic"
    for v in ("p@1", "p@2", "p@7"):
        tv = element_type(g, v)
        assert (tv.kind, tv.n) == ("aperiodic", 1)


def test_sink_below_an_exitful_loop_stays_incomparable():
    # Saturation never pulls w in: w is not regular and nothing w emits
    # lands on the cycle, so only v is comparable here.
    g = fixture("loopomega")
    assert element_type(g, "v").kind == "aperiodic"
    assert element_type(g, "w").kind == "incomparable"


def test_witness_exponent_is_the_reachable_cycle_lcm():
    g = parse_graph(PERI6)
    assert (element_type(g, "a").kind, element_type(g, "a").n) == ("periodic", 6)
    assert element_type(g, "b0").n == 2
    assert element_type(g, "c0").n == 3
    h = parse_graph(TWOSIX)
    assert (element_type(h, "a0").kind, element_type(h, "a0").n) == ("aperiodic", 6)
    assert element_type(h, "a1").n == 6
    assert (element_type(h, "b0").kind, element_type(h, "b0").n) == ("periodic", 3)


def test_element_type_rejects_unknown_vertices():
    g = fixture("loop1")
    with pytest.raises(ModelError):
        element_type(g, "nope")
    with pytest.raises(DomainError):
        element_type(g, VertexRef("stranger"))


def test_monoid_type_uniform_fixtures():
    assert monoid_type(fixture("loop1")).kind == "periodic"
    assert monoid_type(fixture("rose2")).kind == "aperiodic"
    for name in ("grid23", "e22a", "sinkrow"):
        mv = monoid_type(fixture(name))
        assert (mv.kind, mv.census) == ("incomparable", None)
    assert monoid_type(Graph("void")).kind == "incomparable"


def test_monoid_type_mixed_census():
    mv = monoid_type(fixture("uvw"))
    assert mv.kind == "mixed"
    assert mv.census == {"periodic": 1, "aperiodic": 1, "incomparable": 1}
    mv = monoid_type(fixture("loopomega"))
    assert mv.census == {"periodic": 0, "aperiodic": 1, "incomparable": 1}
    assert mv.to_json() == {
        "kind": "mixed",
        "census": {"periodic": 0, "aperiodic": 1, "incomparable": 1},
    }


def test_monoid_type_census_counts_whole_columns():
    mv = monoid_type(fixture("loopchain_in"))
    assert mv.kind == "mixed"
    assert mv.census == {"periodic": 1, "aperiodic": OMEGA, "incomparable": 0}
    assert mv.to_json()["census"]["aperiodic"] == "omega"


def test_monoid_type_census_matches_per_vertex_types():
    rng = random.Random(23)
    for _ in range(80):
        g = rand_core_graph(rng)
        mv = monoid_type(g)
        got = Counter(element_type(g, v).kind for v in g.core)
        if mv.kind == "mixed":
            assert mv.census == {
                k: got.get(k, 0) for k in ("periodic", "aperiodic", "incomparable")
            }
            assert len(set(got)) > 1
        else:
            assert set(got) <= {mv.kind}


def test_monoid_type_incomparable_exactly_for_acyclic_graphs():
    rng = random.Random(5)
    for _ in range(120):
        g = rand_core_graph(rng)
        dg = nx.DiGraph((b.src, b.dst) for b in g.edges)
        dg.add_nodes_from(g.core)
        acyclic = nx.is_directed_acyclic_graph(dg)
        assert (monoid_type(g).kind == "incomparable") == acyclic


def test_minimal_ideals_on_the_mixed_fixture():
    g = fixture("uvw")
    got = [(c.tag, keys(g, c.members), tv.kind, keys(g, p.h), p.s) for c, tv, p in minimal_ideals(g)]
    assert got == [
        ("no-exit-cycle", ["u"], "periodic", ["u"], ()),
        ("sink", ["w"], "incomparable", ["w"], ()),
    ]


def test_minimal_ideals_on_the_grid():
    g = fixture("grid23")
    got = [(keys(g, c.members), tv.kind, keys(g, p.h)) for c, tv, p in minimal_ideals(g)]
    assert got == [
        (["u0"], "incomparable", ["u0"]),
        (["v0"], "incomparable", ["v0"]),
        (["w0"], "incomparable", ["w0", "w1"]),
    ]


def test_minimal_ideal_members_can_be_infinite():
    g = fixture("ray2")
    (c, tv, p), = minimal_ideals(g)
    assert c.tag == "terminal-path"
    assert tv.kind == "incomparable"
    assert not p.h.is_finite()
    assert p.s == ()

    g = fixture("loopchain_in")
    (c, tv, p), = minimal_ideals(g)
    assert (c.tag, tv.kind) == ("no-exit-cycle", "periodic")
    assert p.h.column("p").members_below(4) == [0]


def test_minimal_ideals_refuse_infinite_cluster_families():
    with pytest.raises(InfiniteClusterFamily) as exc:
        minimal_ideals(fixture("sinkrow"))
    pattern, levels, tag = exc.value.witness
    assert pattern == "p"
    assert not levels.is_finite()
    assert tag == SINK


def test_minimal_ideal_types_match_cluster_tags():
    names = ("uvw", "grid23", "ray2", "loop1", "loopomega", "loopchain_in")
    rng = random.Random(31)
    graphs = [fixture(n) for n in names] + [rand_core_graph(rng) for _ in range(60)]
    for g in graphs:
        for c, tv, _p in minimal_ideals(g):
            assert tv.kind == MONOID_TYPE_OF_TAG[c.tag]


def test_minimal_ideal_pairs_are_minimal_in_the_lattice():
    rng = random.Random(47)
    for _ in range(40):
        g = rand_core_graph(rng, max_verts=5)
        pairs = enumerate_pairs(g)
        for _c, _tv, p in minimal_ideals(g):
            below = [q for q in pairs if pair_leq(q, p) and not q.h.is_empty()]
            assert below == [p]


def test_largest_periodic_ideal_fixtures():
    g = fixture("uvw")
    p = largest_periodic_ideal(g)
    assert (keys(g, p.h), p.s) == (["u"], ())
    g = fixture("loop1")
    assert largest_periodic_ideal(g).h == g.full_set()
    for name in ("grid23", "e22a", "ray1", "loopomega"):
        assert largest_periodic_ideal(fixture(name)).h.is_empty()
    g = fixture("loopchain_in")
    assert largest_periodic_ideal(g).h.column("p").members_below(4) == [0]


def test_largest_periodic_ideal_is_exactly_the_periodic_region():
    rng = random.Random(67)
    for _ in range(100):
        g = rand_core_graph(rng, omega_p=0.0)
        p = largest_periodic_ideal(g)
        peri = sorted(v for v in g.core if element_type(g, v).kind == "periodic")
        assert keys(g, p.h) == peri
        assert p.s == ()


def test_two_type_profiles_of_the_fixtures():
    rows = {
        "uvw": (False, False, False),
        "loop1": (True, False, True),
        "rose2": (False, True, True),
        "f2loops": (False, True, False),
        "grid23": (True, True, False),
        "loopchain_in": (True, False, True),
    }
    for name, want in rows.items():
        p = two_type_profile(fixture(name))
        got = (p.disjoint_cycles, p.every_cycle_meets_another, p.every_vertex_in_cycle_closure)
        assert got == want, name
    p = two_type_profile(Graph("void"))
    assert (p.disjoint_cycles, p.every_cycle_meets_another) == (True, True)


def test_profile_counts_cycles_through_multiplicities():
    # A doubled bundle, two parallel bundles, and an omega bundle each
    # put two distinct cycles through the same vertex.
    for text in (
        "graph a\nvertex a\nedge l a a 2\n",
        "graph b\nvertex a\nedge l1 a a 1\nedge l2 a a 1\n",
        "graph c\nvertex a\nedge l a a *\n",
    ):
        p = two_type_profile(parse_graph(text))
        assert (p.disjoint_cycles, p.every_cycle_meets_another) == (False, True)


def test_profile_json():
    p = two_type_profile(fixture("uvw"))
    assert p.to_json() == {
        "disjoint_cycles": False,
        "every_cycle_meets_another": False,
        "every_vertex_in_cycle_closure": False,
    }


def test_profile_bans_hold_across_composition_factors():
    # The third ban needs finite multiplicities: an omega bundle can leave
    # a breaking vertex whose one-step factor is a sink, so it is checked
    # on the omega-free sweep only.
    rng = random.Random(91)
    for i in range(120):
        g = rand_core_graph(rng, max_verts=5, omega_p=(0.0 if i < 60 else 0.15))
        prof = two_type_profile(g)
        rep = build_series(g)
        assert rep.verdict == "HasSeries"
        types = {f.montype for f in rep.factors}
        if prof.disjoint_cycles:
            assert "aperiodic" not in types
        if prof.every_cycle_meets_another:
            assert "periodic" not in types
        if i < 60 and prof.every_vertex_in_cycle_closure:
            assert "incomparable" not in types


def test_monelem_algebra():
    g = fixture("uvw")
    x = vertex_elem(g, "u") + vertex_elem(g, "v", shift=2) + vertex_elem(g, "v", shift=2)
    y = vertex_elem(g, "v", shift=2) + vertex_elem(g, "u") + vertex_elem(g, "v", shift=2)
    assert x == y
    assert x.size == 3
    assert str(x) == "[u] + t^2[v] + t^2[v]"
    assert str(x.shifted(-1)) == "t^-1[u] + t[v] + t[v]"
    assert x.minus(vertex_elem(g, "v", shift=2)) == vertex_elem(g, "u") + vertex_elem(g, "v", shift=2)
    assert x.minus(vertex_elem(g, "w")) is None
    assert x.contains(vertex_elem(g, "u"))
    zero = MonElem.make([])
    assert zero.is_zero and str(zero) == "0"
    assert x.to_json() == [
        {"shift": 0, "v": "u"},
        {"shift": 2, "v": "v"},
        {"shift": 2, "v": "v"},
    ]


def test_vertex_elem_resolution():
    g = fixture("loop1")
    assert vertex_elem(g, "v") == vertex_elem(g, g.ref("v"))
    with pytest.raises(ModelError):
        vertex_elem(g, "ghost")
    with pytest.raises(DomainError):
        vertex_elem(g, VertexRef("ghost"))


def test_expand_reaches_the_one_step_relation():
    g = fixture("uvw")
    got = {str(e) for e in oracle_expand(g, vertex_elem(g, "v"), bounds=(8, 3, 200))}
    assert "t[u] + t[v] + t[v] + t[w]" in got
    assert "[v]" in got
    assert {str(e) for e in oracle_expand(g, MonElem.make([]))} == {"0"}


def test_expand_respects_bounds_and_is_deterministic():
    g = fixture("uvw")
    first = oracle_expand(g, vertex_elem(g, "v"), bounds=(8, 3, 150))
    assert first == oracle_expand(g, vertex_elem(g, "v"), bounds=(8, 3, 150))
    assert len(first) <= 150
    for e in first:
        assert e.size <= 8
        assert all(abs(k) <= 3 for k, _gen in e.atoms)


def test_expand_generates_infinite_emitter_relations():
    g = fixture("loopomega")
    got = {str(e) for e in oracle_expand(g, vertex_elem(g, "v"), bounds=(6, 2, 60))}
    assert "[q^v|e] + t[v]" in got
    assert "[q^v|g] + t[w]" in got
    assert "[q^v|e,g] + t[v] + t[w]" in got
    assert "[v]" in got


def test_everything_reachable_stays_equal():
    for name in ("loop1", "uvw", "loopomega"):
        g = fixture(name)
        x = vertex_elem(g, "v")
        for y in sorted(oracle_expand(g, x, bounds=(6, 2, 40)), key=str)[:10]:
            assert oracle_eq(g, x, y, bounds=(10, 3, 4000)).equal, (name, str(y))


def test_eq_on_the_single_loop():
    g = fixture("loop1")
    x = vertex_elem(g, "v")
    r = oracle_eq(g, x, x.shifted(1))
    assert r.equal
    assert any("expand" in line for line in r.trace)
    assert r.to_json()["verdict"] == "equal"
    r = oracle_eq(g, x, x + x)
    assert not r.equal
    assert r.to_json()["verdict"] == "unknown"


def test_geq_finds_the_residual():
    g = fixture("uvw")
    r = oracle_geq(g, vertex_elem(g, "v"), vertex_elem(g, "v", shift=1))
    assert r.geq
    want = (
        vertex_elem(g, "u", shift=1)
        + vertex_elem(g, "v", shift=1)
        + vertex_elem(g, "w", shift=1)
    )
    assert r.residual == want
    assert r.to_json()["verdict"] == "geq"


def test_geq_on_a_bare_sink_is_unknown():
    g = fixture("uvw")
    r = oracle_geq(g, vertex_elem(g, "w"), vertex_elem(g, "w", shift=1))
    assert not r.geq
    assert r.residual is None
    assert r.to_json()["verdict"] == "unknown"


def test_geq_degenerate_sides():
    g = fixture("loop1")
    x = vertex_elem(g, "v")
    r = oracle_geq(g, x, MonElem.make([]))
    assert r.geq and r.residual == x
    assert not oracle_geq(g, MonElem.make([]), x).geq


def test_geq_verdict_grows_with_the_bounds():
    g = fixture("loop1")
    x = vertex_elem(g, "v")
    assert not oracle_geq(g, x, x.shifted(5), bounds=(4, 3, 100)).geq
    assert oracle_geq(g, x, x.shifted(5), bounds=(8, 6, 1000)).geq


def test_oracle_type_fixture_matrix():
    cases = [
        ("loop1", "v", "periodic", 1),
        ("rose2", "b", "aperiodic", 1),
        ("uvw", "u", "periodic", 1),
        ("uvw", "v", "aperiodic", 1),
        ("uvw", "w", "unknown", None),
        ("loopomega", "v", "aperiodic", 1),
        ("loopomega", "w", "unknown", None),
        ("loopchain_in", "p@0", "periodic", 1),
        ("loopchain_in", "p@1", "aperiodic", 1),
        ("grid23", "u0", "unknown", None),
    ]
    for name, v, kind, n in cases:
        tv = oracle_type(fixture(name), v)
        assert (tv.kind, tv.n) == (kind, n), (name, v)
    assert oracle_type(fixture("uvw"), "w").to_json() == {"kind": "unknown"}


def test_oracle_and_classifier_certificates_are_consistent():
    # Periodicity is decided by the same region on both routes, so those
    # answers must coincide.  An aperiodic certificate only rules out
    # periodic: near omega emitters the search can prove comparable what
    # the region answer calls incomparable.
    rng = random.Random(101)
    for _ in range(100):
        g = rand_core_graph(rng, max_verts=5, omega_p=0.15)
        for v in g.core:
            et = element_type(g, v)
            ot = oracle_type(g, v, bounds=(12, 5, 1500))
            if ot.kind == "periodic":
                assert et.kind == "periodic", (g.edges, v)
                x = vertex_elem(g, v)
                assert oracle_eq(g, x, x.shifted(ot.n), bounds=(12, 5, 3000)).equal
            if et.kind == "periodic":
                assert ot.kind in ("periodic", "unknown"), (g.edges, v)
            if ot.kind == "aperiodic":
                assert et.kind != "periodic", (g.edges, v)
            if et.kind == "aperiodic":
                assert ot.kind in ("aperiodic", "unknown"), (g.edges, v)


def test_oracle_can_certify_outside_the_regions():
    g = parse_graph(ABSORB)
    assert element_type(g, "a").kind == "incomparable"
    tv = oracle_type(g, "a", bounds=(10, 4, 4000))
    assert (tv.kind, tv.n) == ("aperiodic", 1)
    assert oracle_type(g, "b", bounds=(10, 4, 4000)).kind == "aperiodic"


def test_default_bounds_are_frozen():
    assert DEFAULT_BOUNDS == (24, 8, 200_000)


def test_monoid_reports_serialize():
    g = fixture("loopomega")
    q = sorted(oracle_expand(g, vertex_elem(g, "v"), bounds=(4, 1, 20)), key=str)
    blob = {
        "type": element_type(g, "v").to_json(),
        "monoid": monoid_type(g).to_json(),
        "profile": two_type_profile(g).to_json(),
        "elems": [e.to_json() for e in q],
        "eq": oracle_eq(g, vertex_elem(g, "v"), vertex_elem(g, "v")).to_json(),
    }
    json.dumps(blob)
    qj = next(e.to_json() for e in q if any("z" in a for a in e.to_json()))
    assert all(set(a) <= {"shift", "v", "z"} for a in qj)
