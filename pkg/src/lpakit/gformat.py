"""Plain-text graph format.

    graph grid23
    vertex u0 u1 v0 v1 w0 w1
    edge f0 u1 u0 1
    edge e u1 v1 1
    tail t outward
      pattern p q
      intra p q 1
      inter q p 2
      attach_in c p 1

One statement per line, `#` starts a comment.  Edge-like statements take
either 4 tokens (id src dst mult) or 3 (src dst mult, id auto-assigned).
Multiplicity is a positive integer or `*` for omega.  Indented lines belong
to the most recent `tail` header; a tail block holds one `pattern` line and
any number of intra / inter / attach_in / attach_out0 / attach_out_all
bundles.  emit_graph() omits ids that match the deterministic auto scheme,
so parse -> emit round-trips id-less input byte for byte.
"""

from __future__ import annotations

from pathlib import Path

from .errors import FormatError
from .model import OMEGA, Bundle, Graph, Tail

__all__ = ["parse_graph", "emit_graph", "load_graph", "save_graph"]

_AUTO = {
    "edge": "_e",
    "intra": ".i",
    "inter": ".x",
    "attach_in": ".a",
    "attach_out0": ".o",
    "attach_out_all": ".w",
}


def _fmt_mult(m: float) -> str:
    return "*" if m == OMEGA else str(int(m))


def _parse_mult(tok: str, where: str) -> float:
    if tok == "*":
        return OMEGA
    try:
        n = int(tok)
    except ValueError:
        raise FormatError(f"{where}: multiplicity {tok!r} is not an integer or *") from None
    if n < 1:
        raise FormatError(f"{where}: multiplicity must be >= 1")
    return n


class _AutoIds:
    """Deterministic ids for id-less bundle lines, shared by parse and emit."""

    def __init__(self) -> None:
        self.taken: set[str] = set()
        self.counters: dict[str, int] = {}

    def claim(self, eid: str) -> None:
        self.taken.add(eid)

    def peek(self, kind: str, tid: str = "") -> str:
        prefix = (tid + _AUTO[kind]) if kind != "edge" else _AUTO[kind]
        k = self.counters.get(prefix, 0)
        while f"{prefix}{k}" in self.taken:
            k += 1
        return f"{prefix}{k}"

    def next_for(self, kind: str, tid: str = "") -> str:
        prefix = (tid + _AUTO[kind]) if kind != "edge" else _AUTO[kind]
        eid = self.peek(kind, tid)
        self.counters[prefix] = int(eid[len(prefix):]) + 1
        self.taken.add(eid)
        return eid


def _edge_tokens(kind: str, toks: list[str], lineno: int, auto: _AutoIds, tid: str = "") -> Bundle:
    where = f"line {lineno}"
    if len(toks) == 4:
        eid, src, dst, mtok = toks
        auto.claim(eid)
    elif len(toks) == 3:
        src, dst, mtok = toks
        eid = auto.next_for(kind, tid)
    else:
        raise FormatError(f"{where}: {kind} takes 3 or 4 tokens, got {len(toks)}")
    return Bundle(eid, src, dst, _parse_mult(mtok, where))


def parse_graph(text: str, name: str = "g") -> Graph:
    core: list[str] = []
    edges: list[Bundle] = []
    tails: list[Tail] = []
    auto = _AutoIds()

    cur: dict | None = None  # open tail block

    def close_tail() -> None:
        nonlocal cur
        if cur is None:
            return
        if not cur["pattern"]:
            raise FormatError(f"tail {cur['tid']!r} has no pattern line")
        tails.append(
            Tail(
                cur["tid"],
                cur["direction"],
                tuple(cur["pattern"]),
                intra=tuple(cur["intra"]),
                inter=tuple(cur["inter"]),
                attach_in=tuple(cur["attach_in"]),
                attach_out0=tuple(cur["attach_out0"]),
                attach_out_all=tuple(cur["attach_out_all"]),
            )
        )
        cur = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indented = line[0] in " \t"
        toks = line.split()
        kw, rest = toks[0], toks[1:]

        if indented:
            if cur is None:
                raise FormatError(f"line {lineno}: indented line outside a tail block")
            if kw == "pattern":
                if not rest:
                    raise FormatError(f"line {lineno}: pattern needs at least one vertex")
                cur["pattern"].extend(rest)
            elif kw in ("intra", "inter", "attach_in", "attach_out0", "attach_out_all"):
                cur[kw].append(_edge_tokens(kw, rest, lineno, auto, cur["tid"]))
            else:
                raise FormatError(f"line {lineno}: unknown tail statement {kw!r}")
            continue

        close_tail()
        if kw == "graph":
            if len(rest) != 1:
                raise FormatError(f"line {lineno}: graph takes one name")
            name = rest[0]
        elif kw == "vertex":
            if not rest:
                raise FormatError(f"line {lineno}: vertex needs at least one id")
            core.extend(rest)
        elif kw == "edge":
            edges.append(_edge_tokens("edge", rest, lineno, auto))
        elif kw == "tail":
            if len(rest) != 2 or rest[1] not in ("outward", "inward"):
                raise FormatError(f"line {lineno}: tail takes <id> outward|inward")
            cur = {
                "tid": rest[0],
                "direction": rest[1],
                "pattern": [],
                "intra": [],
                "inter": [],
                "attach_in": [],
                "attach_out0": [],
                "attach_out_all": [],
            }
        else:
            raise FormatError(f"line {lineno}: unknown statement {kw!r}")
    close_tail()
    return Graph(name, tuple(core), tuple(edges), tuple(tails))


def emit_graph(g: Graph) -> str:
    auto = _AutoIds()
    out: list[str] = [f"graph {g.name}"]
    if g.core:
        out.append("vertex " + " ".join(g.core))

    def line(kind: str, b: Bundle, tid: str = "", indent: str = "") -> None:
        if b.eid == auto.peek(kind, tid):
            auto.next_for(kind, tid)
            out.append(f"{indent}{kind} {b.src} {b.dst} {_fmt_mult(b.mult)}")
        else:
            auto.claim(b.eid)
            out.append(f"{indent}{kind} {b.eid} {b.src} {b.dst} {_fmt_mult(b.mult)}")

    for b in g.edges:
        line("edge", b)
    for t in g.tails:
        out.append(f"tail {t.tid} {t.direction}")
        out.append("  pattern " + " ".join(t.pattern))
        for kind in ("intra", "inter", "attach_in", "attach_out0", "attach_out_all"):
            for b in getattr(t, kind):
                line(kind, b, t.tid, "  ")
    return "\n".join(out) + "\n"


def load_graph(path: str | Path) -> Graph:
    p = Path(path)
    return parse_graph(p.read_text(), name=p.stem)


def save_graph(g: Graph, path: str | Path) -> None:
    Path(path).write_text(emit_graph(g))
