"""DOT text for graphs and their finite windows.

Every bundle becomes one arrow labelled with its multiplicity, the
infinite ones with an infinity sign.  A graph with tails is laid out
through a finite window first, and window vertices with truncated
adjacency are drawn dashed so the cut stays visible.

Colorings are overlays.  provenance_colors fills the spine and prime
vertices of a porcupine quotient while the body stays plain;
cluster_colors cycles a palette over the clusters of a terminal
report.  Both return plain name-to-color maps, so any hand-rolled
assignment plugs into to_dot the same way.
"""

from __future__ import annotations

from typing import Mapping

from .constructions import PqReport
from .model import OMEGA, Graph
from .terminal import ClusterReport
from .unroll import FiniteView, base_depth, materialize

__all__ = ["to_dot", "provenance_colors", "cluster_colors", "PALETTE"]

PALETTE = (
    "gold",
    "skyblue",
    "palegreen",
    "lightpink",
    "orchid",
    "sandybrown",
    "paleturquoise",
    "khaki",
)

SPINE_FILL = "skyblue"
PRIME_FILL = "lightpink"


def _q(s: str) -> str:
    return '"%s"' % s.replace("\\", "\\\\").replace('"', '\\"')


def _label(mult: float) -> str:
    return "∞" if mult == OMEGA else str(int(mult))


def to_dot(
    g: Graph | FiniteView,
    colors: Mapping[str, str] | None = None,
    depth: int | None = None,
) -> str:
    """Render a graph, or an already materialized window, as DOT text.

    `colors` maps vertex keys or plain names to fill colors; a key entry
    wins over a name entry, and name entries paint every copy of a tail
    column at once.  `depth` overrides the window depth for graphs with
    tails and is ignored for tail-free graphs and prebuilt views.
    """
    if isinstance(g, FiniteView):
        view = g
    elif g.is_tail_free():
        view = materialize(g, 1)
    else:
        view = materialize(g, depth if depth is not None else base_depth(g))
    colors = colors or {}
    dashed = view.cut_out | view.cut_in

    lines = ["digraph %s {" % _q(view.g.name), "  rankdir=LR;"]
    for v in view.verts:
        attrs = []
        fill = colors.get(v.key(), colors.get(v.name))
        style = ["dashed"] if v in dashed else []
        if fill is not None:
            attrs.append("fillcolor=%s" % _q(fill))
            style.append("filled")
        if style:
            attrs.append("style=%s" % _q(",".join(style)))
        lines.append(
            "  %s%s;" % (_q(v.key()), " [%s]" % ", ".join(attrs) if attrs else "")
        )
    for v in view.verts:
        for b, dst in sorted(view.out_edges(v), key=lambda e: (e[0].eid, e[1])):
            lines.append(
                "  %s -> %s [label=%s];" % (_q(v.key()), _q(dst.key()), _q(_label(b.mult)))
            )
    lines.append("}")
    return "\n".join(lines) + "\n"


def provenance_colors(g: Graph, report: PqReport) -> dict[str, str]:
    """Fills for the non-body vertices of a porcupine quotient output."""
    colors = {n: SPINE_FILL for n in report.spines}
    for t in g.tails:
        if t.tid in report.rays:
            colors.update({p: SPINE_FILL for p in t.pattern})
    colors.update({n: PRIME_FILL for n in report.primes})
    return colors


def cluster_colors(rep: ClusterReport) -> dict[str, str]:
    """One palette color per cluster, keyed per vertex where the cluster
    is finite and per column name where it swallows a whole tail column."""
    colors: dict[str, str] = {}
    for i, c in enumerate(rep.clusters):
        fill = PALETTE[i % len(PALETTE)]
        for name in c.members.core:
            colors[name] = fill
        for p, eps in c.members.tails.items():
            if eps.is_finite():
                for n in eps.iter_members():
                    colors["%s@%d" % (p, n)] = fill
            else:
                colors[p] = fill
    return colors
