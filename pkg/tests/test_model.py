import random

import pytest

from lpakit.errors import FormatError, ModelError
from lpakit.eps import EPSet
from lpakit.fixtures import FIXTURES, fixture, fixture_names
from lpakit.gformat import emit_graph, parse_graph
from lpakit.model import OMEGA, Bundle, Graph, Tail, VertexRef, classify_vertex


def test_fixture_roundtrip_byte_exact():
    for name in fixture_names():
        g = fixture(name)
        assert emit_graph(g) == FIXTURES[name], name
        assert parse_graph(emit_graph(g)) == g


def test_parse_explicit_and_auto_ids_mix():
    g = parse_graph("vertex a b\nedge named a b 1\nedge a b 2\nedge b a *\n")
    assert [b.eid for b in g.edges] == ["named", "_e0", "_e1"]
    assert g.edges[2].mult == OMEGA
    assert parse_graph(emit_graph(g)) == g


def test_parse_errors():
    with pytest.raises(FormatError):
        parse_graph("frobnicate x\n")
    with pytest.raises(FormatError):
        parse_graph("vertex a\nedge a a 0\n")
    with pytest.raises(FormatError):
        parse_graph("  intra p p 1\n")  # indented outside a tail block
    with pytest.raises(FormatError):
        parse_graph("tail t outward\nvertex a\n")  # tail without pattern
    with pytest.raises(FormatError):
        parse_graph("tail t sideways\n  pattern p\n")


def test_model_validation():
    with pytest.raises(ModelError):
        Graph("g", ("a", "a"))
    with pytest.raises(ModelError):
        Graph("g", ("a",), (Bundle("e", "a", "missing", 1),))
    with pytest.raises(ModelError):
        Graph("g", ("a",), (Bundle("e", "a", "a", 1), Bundle("e", "a", "a", 1)))
    with pytest.raises(ModelError):
        Graph("g", ("a b",))
    # attachments must stay one-sided
    with pytest.raises(ModelError):
        Graph(
            "g",
            ("c",),
            (),
            (
                Tail(
                    "t",
                    "outward",
                    ("p",),
                    inter=(Bundle("i", "p", "p", 1),),
                    attach_in=(Bundle("x", "c", "p", 1),),
                    attach_out0=(Bundle("y", "p", "c", 1),),
                ),
            ),
        )


def test_classify_vertex_fixture_facts():
    g = fixture("e22a")
    assert classify_vertex(g, g.ref("x")).kind == "regular"
    w = classify_vertex(g, g.ref("w"))
    assert w.kind == "infinite-emitter" and w.omega_bundles == ("g",)
    assert classify_vertex(g, g.ref("v")).kind == "sink"
    assert classify_vertex(g, g.ref("y")).out_degree == 2
    assert classify_vertex(g, g.ref("z")).kind == "sink"

    g = fixture("uvw")
    assert classify_vertex(g, g.ref("v")).out_degree == 4
    assert classify_vertex(g, g.ref("u")).out_degree == 1

    g = fixture("sinkrow")
    for n in range(5):
        assert classify_vertex(g, g.ref("p", n)).kind == "sink"

    g = fixture("omegarow")
    c = classify_vertex(g, g.ref("p", 3))
    assert c.kind == "infinite-emitter" and c.omega_bundles == ("t.w0",)
    assert classify_vertex(g, g.ref("s")).kind == "sink"

    # copy 0 of an inward tail has no inter edge out; later copies do
    g = fixture("loopchain_in")
    assert classify_vertex(g, g.ref("p", 0)).out_degree == 1
    assert classify_vertex(g, g.ref("p", 1)).out_degree == 2


def test_vertexref_ordering_and_display():
    a = VertexRef("p", 3)
    b = VertexRef("p", 10)
    c = VertexRef("q")
    assert a < b < c
    assert a.key() == "p@3" and c.key() == "q"
    g = fixture("ray1")
    assert g.ref("p@7") == VertexRef("p", 7, tail="t")


def test_vertexset_ops_and_json():
    g = fixture("omegarow")
    full = g.full_set()
    s = g.vset(["s", "p@0", "p@2"])
    assert g.ref("p@2") in s and g.ref("p@1") not in s
    assert s.issubset(full) and not full.issubset(s)
    assert s.count() == 3
    comp = s.complement(g)
    assert g.ref("p@1") in comp and g.ref("s") not in comp
    assert s.union(comp) == full
    assert s.intersection(comp).is_empty()
    from lpakit.model import VertexSet

    assert VertexSet.from_json(s.to_json()) == s
    evens = VertexSet(frozenset(), {"p": EPSet.make(0, 2, {0})})
    assert not evens.is_finite() and evens.count() == OMEGA
    assert evens.min_ref() == VertexRef("p", 0)
    assert [r.key() for r in evens.members_in_window(g, 5)] == ["p@0", "p@2", "p@4"]


def test_vertexset_random_algebra():
    g = fixture("omegarow")
    rng = random.Random(77)

    def rand_set():
        core = frozenset(v for v in g.core if rng.random() < 0.5)
        cols = {}
        if rng.random() < 0.8:
            period = rng.randrange(1, 4)
            mask = frozenset(r for r in range(period) if rng.random() < 0.5)
            exc = frozenset(n for n in range(4) if rng.random() < 0.3)
            cols["p"] = EPSet.make(rng.randrange(5), period, mask, exc)
        from lpakit.model import VertexSet

        return VertexSet(core, cols)

    probes = [VertexRef("s")] + [VertexRef("p", n, tail="t") for n in range(40)]
    for _ in range(60):
        a, b = rand_set(), rand_set()
        for r in probes:
            assert (r in a.union(b)) == (r in a or r in b)
            assert (r in a.intersection(b)) == (r in a and r in b)
            assert (r in a.difference(b)) == (r in a and r not in b)
        assert a.issubset(a.union(b))
