"""Built-in example graphs.

Each entry is canonical text for the parser; round-trips through
emit_graph byte for byte.  Accessible from the CLI via `lpakit fixtures`.
"""

from __future__ import annotations

from .gformat import parse_graph
from .model import Graph

__all__ = ["FIXTURES", "fixture", "fixture_names"]

FIXTURES: dict[str, str] = {
    # Two rows of a grid: u-column feeds nothing, w-column is fed by all.
    "grid23": """\
graph grid23
vertex u0 u1 v0 v1 w0 w1
edge f0 u1 u0 1
edge e u1 v1 1
edge h v1 v0 1
edge g v1 w1 1
edge f1 w1 w0 1
""",
    # One omega emitter feeding a diamond; x sees everything.
    "e22a": """\
graph e22a
vertex x w v y z
edge e1 x w 1
edge g w v *
edge e2 w y 1
edge e3 y v 1
edge e4 y z 1
""",
    # A loop that also emits infinitely many edges to a sink.
    "loopomega": """\
graph loopomega
vertex v w
edge e v v 1
edge g v w *
""",
    # Single loop at u, doubled loop at v, v feeds u and the sink w.
    "uvw": """\
graph uvw
vertex u v w
edge cu u u 1
edge cv v v 2
edge a v u 1
edge b v w 1
""",
    # Doubled loop with an exit to a sink.
    "f2loops": """\
graph f2loops
vertex b s
edge c b b 2
edge a b s 1
""",
    # One-way infinite path p@0 -> p@1 -> ...
    "ray1": """\
graph ray1
tail t outward
  pattern p
  inter p p 1
""",
    # Same ray with doubled steps.
    "ray2": """\
graph ray2
tail t outward
  pattern p
  inter p p 2
""",
    # Every copy loops once and feeds the previous copy; chain flows inward.
    "loopchain_in": """\
graph loopchain_in
tail t inward
  pattern p
  intra p p 1
  inter p p 1
""",
    # Loops chained away from copy 0; nothing ever comes back.
    "loopchain_noend": """\
graph loopchain_noend
tail t outward
  pattern p
  intra p p 1
  inter p p 1
""",
    # Infinitely many isolated sinks.
    "sinkrow": """\
graph sinkrow
tail t outward
  pattern p
""",
    # A ray whose every copy also omega-emits into one core sink.
    "omegarow": """\
graph omegarow
vertex s
tail t outward
  pattern p
  inter p p 1
  attach_out_all p s *
""",
    # Straight path to a sink.
    "path4": """\
graph path4
vertex a b c d
edge e0 a b 1
edge e1 b c 1
edge e2 c d 1
""",
    # A single loop and nothing else.
    "loop1": """\
graph loop1
vertex v
edge c v v 1
""",
    # One vertex with a doubled loop.
    "rose2": """\
graph rose2
vertex b
edge c b b 2
""",
}


def fixture_names() -> list[str]:
    return sorted(FIXTURES)


def fixture(name: str) -> Graph:
    try:
        text = FIXTURES[name]
    except KeyError:
        raise KeyError(f"no fixture named {name!r}; see fixture_names()") from None
    return parse_graph(text)
