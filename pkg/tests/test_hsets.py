import itertools
import random

import pytest

from lpakit.eps import EPSet
from lpakit.errors import DomainError, PreconditionError
from lpakit.fixtures import fixture
from lpakit.gformat import parse_graph
from lpakit.hsets import (
    AdmissiblePair,
    admissible_pair,
    bar_closure,
    breaking_vertices,
    characterize_closure,
    enumerate_pairs,
    is_hereditary,
    is_saturated,
    pair_join,
    pair_leq,
    pair_meet,
    saturated_closure,
)
from lpakit.model import OMEGA, VertexSet
from lpakit.reach import tree

from _rand import rand_core_graph

# Joins cascade down this one forever: a@n joins only if a@n+1 already did.
CASCADE = """\
graph cascade
tail t outward
  pattern a b
  intra a b 1
  inter a a 1
"""


def b_col():
    return VertexSet(frozenset(), {"b": EPSet.full()})


# Brute instance-level oracles, tail-free only.


def _outs(g):
    return {v: [b for b in g.edges if b.src == v] for v in g.core}


def _regular(g, v):
    bs = _outs(g)[v]
    return bool(bs) and all(b.mult != OMEGA for b in bs)


def brute_sat_closure(g, vs):
    s = set(vs)
    changed = True
    while changed:
        changed = False
        for v in g.core:
            if v in s or not _regular(g, v):
                continue
            if all(b.dst in s for b in _outs(g)[v]):
                s.add(v)
                changed = True
    return s


def brute_bar(g, vs):
    s = set(vs)
    while True:
        grown = set(s)
        for v in s:
            grown.update(b.dst for b in _outs(g)[v])
        grown = brute_sat_closure(g, grown)
        if grown == s:
            return s
        s = grown


def brute_breaking(g, hs):
    out = set()
    for v in g.core:
        if v in hs:
            continue
        bs = _outs(g)[v]
        if not any(b.mult == OMEGA for b in bs):
            continue
        surviving = sum(b.mult for b in bs if b.dst not in hs)
        if 0 < surviving < OMEGA:
            out.add(v)
    return out


def pv_infinite(g, v, ts):
    """Whether infinitely many paths run from v into ts with all earlier
    vertices outside ts."""
    if v in ts:
        return False
    outs = _outs(g)
    avoid = {v}
    stack = [v]
    while stack:
        u = stack.pop()
        for b in outs[u]:
            if b.dst not in ts and b.dst not in avoid:
                avoid.add(b.dst)
                stack.append(b.dst)
    reach_t = set()
    changed = True
    while changed:
        changed = False
        for u in g.core:
            if u in ts or u in reach_t:
                continue
            if any(b.dst in ts or b.dst in reach_t for b in outs[u]):
                reach_t.add(u)
                changed = True
    for u in avoid:
        on_cycle = u in brute_bar_cycle_verts(g, ts)
        if on_cycle and u in reach_t:
            return True
        for b in outs[u]:
            if b.mult == OMEGA and (b.dst in ts or b.dst in reach_t):
                return True
    return False


def brute_bar_cycle_verts(g, ts):
    """Vertices on a cycle that never touches ts."""
    keep = [v for v in g.core if v not in ts]
    outs = _outs(g)
    on = set()
    for v in keep:
        seen, stack = set(), [v]
        while stack:
            u = stack.pop()
            for b in outs[u]:
                w = b.dst
                if w == v:
                    on.add(v)
                elif w in keep and w not in seen:
                    seen.add(w)
                    stack.append(w)
    return on


def test_closures_on_rays():
    g = fixture("ray1")
    assert saturated_closure(g, g.vset(["p@3"])).column("p") == EPSet.finite(range(4))
    assert bar_closure(g, g.vset(["p@3"])) == g.full_set()
    assert bar_closure(g, g.empty_set()).is_empty()


def test_closures_on_grid23():
    g = fixture("grid23")
    assert saturated_closure(g, g.vset(["w0"])).core == {"w0", "w1"}
    assert bar_closure(g, g.vset(["u0"])).core == {"u0"}
    assert bar_closure(g, g.vset(["u0", "v0", "w0"])) == g.full_set()


def test_cascade_needs_taint():
    g = parse_graph(CASCADE)
    got = saturated_closure(g, b_col())
    assert got.column("b").is_full() and got.column("a").is_empty()


def test_closures_random_vs_brute():
    rng = random.Random(31)
    for _ in range(100):
        g = rand_core_graph(rng)
        vs = {v for v in g.core if rng.random() < 0.4}
        assert saturated_closure(g, g.vset(vs)).core == brute_sat_closure(g, vs)
        bar = bar_closure(g, g.vset(vs))
        assert bar.core == brute_bar(g, vs)
        assert is_hereditary(g, bar) and is_saturated(g, bar)


def test_breaking_fixtures():
    g = fixture("e22a")
    assert breaking_vertices(g, bar_closure(g, g.vset(["v"]))).core == {"w"}
    assert breaking_vertices(g, g.vset(["z"])).is_empty()
    g = fixture("loopomega")
    assert breaking_vertices(g, g.vset(["w"])).core == {"v"}
    g = fixture("omegarow")
    bs = breaking_vertices(g, g.vset(["s"]))
    assert bs.column("p") == EPSet.full()


def test_breaking_random_vs_brute():
    rng = random.Random(47)
    for _ in range(100):
        g = rand_core_graph(rng, omega_p=0.35)
        vs = {v for v in g.core if rng.random() < 0.4}
        hv = g.vset(brute_bar(g, vs))
        assert breaking_vertices(g, hv).core == brute_breaking(g, hv.core)


def test_admissible_pair_validation():
    g = fixture("e22a")
    p = admissible_pair(g, ["v"], ["w"])
    assert p.s[0].key() == "w"
    with pytest.raises(PreconditionError):
        admissible_pair(g, ["y"])  # not hereditary
    with pytest.raises(PreconditionError):
        admissible_pair(g, ["v", "z"])  # y joins, not saturated
    with pytest.raises(PreconditionError):
        admissible_pair(g, ["z"], ["w"])  # w does not break {z}


def test_enumerate_pairs_e22a():
    g = fixture("e22a")
    pairs = enumerate_pairs(g)
    shapes = [(tuple(sorted(p.h.core)), tuple(r.key() for r in p.s)) for p in pairs]
    assert shapes == [
        ((), ()),
        (("v",), ()),
        (("v",), ("w",)),
        (("z",), ()),
        (("v", "y", "z"), ()),
        (("v", "w", "x", "y", "z"), ()),
    ]
    full = pairs[-1]
    assert not pair_leq(pairs[2], pairs[4])  # S must be absorbed to go up
    assert pair_leq(pairs[2], full)
    with pytest.raises(DomainError):
        enumerate_pairs(fixture("ray1"))


def test_pair_lattice_laws_random():
    rng = random.Random(53)
    for _ in range(25):
        g = rand_core_graph(rng, max_verts=4, omega_p=0.3)
        pairs = enumerate_pairs(g)
        sample = pairs if len(pairs) <= 8 else rng.sample(pairs, 8)
        for p1 in sample:
            for p2 in sample:
                m = pair_meet(g, p1, p2)
                j = pair_join(g, p1, p2)
                assert pair_leq(m, p1) and pair_leq(m, p2)
                assert pair_leq(p1, j) and pair_leq(p2, j)
                assert pair_meet(g, p1, j) == p1
                assert pair_join(g, p1, m) == p1


def test_characterize_fixture_witnesses():
    g = fixture("loopomega")
    verdict = characterize_closure(g, g.vset(["w"]), g.vset(["v", "w"]))
    assert verdict.reason == "FailsNoInfiniteEmitters" and verdict.witness.key() == "v"

    g = fixture("f2loops")
    verdict = characterize_closure(g, g.vset(["s"]), g.full_set())
    assert verdict.reason == "FailsInfinitePathAvoidsT" and verdict.witness == ("b",)

    g = parse_graph(CASCADE)
    verdict = characterize_closure(g, b_col(), g.full_set())
    assert verdict.reason == "FailsInfinitePathAvoidsT"
    assert verdict.witness[0] == "t" and verdict.witness[1] == ("a",)

    g = fixture("e22a")
    assert characterize_closure(g, g.vset(["v"]), g.vset(["v"])).equal

    with pytest.raises(PreconditionError):
        characterize_closure(g, g.vset(["v"]), g.vset(["v", "x"]))  # not hereditary
    with pytest.raises(PreconditionError):
        characterize_closure(g, g.vset(["v"]), g.vset(["z"]))  # misses the closure


def test_characterize_matches_path_count_route():
    rng = random.Random(61)
    done = 0
    while done < 60:
        g = rand_core_graph(rng, max_verts=5, omega_p=0.25)
        vs = {v for v in g.core if rng.random() < 0.4}
        ts = set()
        for v in vs:  # forward closure of vs
            stack = [v]
            while stack:
                u = stack.pop()
                if u in ts:
                    continue
                ts.add(u)
                stack.extend(b.dst for b in g.edges if b.src == u)
        bar = brute_bar(g, vs)
        rt = {u for u in g.core if any(t in ts for t in _reachable(g, u))}
        for bits in itertools.product((False, True), repeat=len(g.core)):
            hs = {v for v, b in zip(g.core, bits) if b}
            if not (bar <= hs <= rt):
                continue
            if any(b.dst not in hs for v in hs for b in _outs(g)[v]):
                continue
            verdict = characterize_closure(g, g.vset(vs), g.vset(hs))
            assert verdict.equal == (hs == bar)
            assert verdict.equal == all(not pv_infinite(g, v, ts) for v in hs)
            done += 1


def _reachable(g, v):
    seen, stack = {v}, [v]
    while stack:
        u = stack.pop()
        for b in g.edges:
            if b.src == u and b.dst not in seen:
                seen.add(b.dst)
                stack.append(b.dst)
    return seen
