"""Structure summaries and tidy-tree layout/rendering.

``summarize`` reports how a document was split into tables, in the
fixed layout the golden tests pin down.  ``layout_tree`` computes a
Reingold-Tilford style drawing: siblings at least one unit apart at
every shared depth, every parent centered over the span of its children,
one depth level per y unit.
"""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

from .errors import UnsupportedFormat
from .ingest import TreeNode
from .tables import TableSet

__all__ = [
    "StructureReport",
    "TreeLayout",
    "LayoutNode",
    "summarize",
    "layout_tree",
    "render_tree",
]

_WRAP_WIDTH = 70
JITTER = 0.15


@dataclass
class StructureReport:
    """Per-table name, variable count, and ordered variable names."""

    tables: list[tuple[str, int, list[str]]]

    @property
    def table_count(self) -> int:
        return len(self.tables)

    def render(self) -> str:
        lines = [
            "API data summary:",
            "=================",
            "",
            f"The API data has been split into the following {self.table_count} data frames:",
            "",
        ]
        width = max((len(name) for name, _, _ in self.tables), default=0)
        lines.append(" " * (width + 1) + "Length")
        for name, count, _ in self.tables:
            lines.append(f"{name:<{width}} {count}")
        lines += ["", "The respective data frame(s) contain the following variables:"]
        for i, (name, _, variables) in enumerate(self.tables, start=1):
            lines += ["", f"{i}. {name}:"]
            lines += _wrap_names(variables)
        return "\n".join(lines) + "\n"


def _wrap_names(names: list[str]) -> list[str]:
    if not names:
        return [""]
    lines: list[str] = []
    current = ""
    for name in names:
        token = name + ","
        candidate = token if not current else f"{current}  {token}"
        if current and len(candidate) > _WRAP_WIDTH:
            lines.append(current)
            current = token
        else:
            current = candidate
    lines.append(current)
    return lines


def summarize(tset: TableSet) -> StructureReport:
    """Build the structure report for a table set, in set order."""
    return StructureReport(
        tables=[(t.name, len(t.columns), list(t.columns)) for t in tset]
    )


@dataclass
class LayoutNode:
    id: int
    label: str
    depth: int
    x: float
    y: float


@dataclass
class TreeLayout:
    nodes: list[LayoutNode]
    edges: list[tuple[int, int]]  # (parent id, child id)


def layout_tree(root: TreeNode, jitter: bool = False) -> TreeLayout:
    """Compute tidy-tree coordinates for every node.

    Subtrees are packed left to right with full contour resolution, so no
    two nodes at the same depth come closer than one x unit anywhere in
    the tree, and each parent sits at the midpoint of its children's
    extremes.  y equals depth; jitter alternates +/-0.15 by sibling index
    to keep long labels readable without breaking depth ordering.
    """
    nodes: list[LayoutNode] = []
    edges: list[tuple[int, int]] = []

    def place(node: TreeNode) -> tuple[dict[int, float], dict[int, tuple[float, float]], float]:
        """Lay out a subtree; returns (x by node id, contour min/max by
        relative depth, subtree root x)."""
        nid = len(nodes)
        nodes.append(LayoutNode(nid, node.label, 0, 0.0, 0.0))
        if not node.children:
            return {nid: 0.0}, {0: (0.0, 0.0)}, 0.0

        xs: dict[int, float] = {}
        contour: dict[int, tuple[float, float]] = {}
        child_roots: list[float] = []
        for child in node.children:
            child_id = len(nodes)
            edges.append((nid, child_id))
            cxs, ccontour, croot = place(child)
            shift = 0.0
            for depth, (cmin, _) in ccontour.items():
                if depth + 1 in contour:
                    shift = max(shift, contour[depth + 1][1] + 1.0 - cmin)
            for key in cxs:
                cxs[key] += shift
            child_roots.append(croot + shift)
            xs.update(cxs)
            for depth, (cmin, cmax) in ccontour.items():
                cmin, cmax = cmin + shift, cmax + shift
                if depth + 1 in contour:
                    omin, omax = contour[depth + 1]
                    contour[depth + 1] = (min(omin, cmin), max(omax, cmax))
                else:
                    contour[depth + 1] = (cmin, cmax)

        my_x = (child_roots[0] + child_roots[-1]) / 2.0
        xs[nid] = my_x
        contour[0] = (my_x, my_x)
        return xs, contour, my_x

    xs, _, _ = place(root)

    # depths, sibling indices, and final coordinates in one pass
    def finalize(node: TreeNode, nid: int, depth: int, sibling_index: int) -> int:
        layout_node = nodes[nid]
        layout_node.depth = depth
        layout_node.x = xs[nid]
        layout_node.y = float(depth)
        if jitter:
            layout_node.y += JITTER * ((-1) ** sibling_index)
        next_id = nid + 1
        for i, child in enumerate(node.children):
            next_id = finalize(child, next_id, depth + 1, i)
        return next_id

    finalize(root, 0, 0, 0)

    min_x = min(n.x for n in nodes)
    for n in nodes:
        n.x -= min_x
    return TreeLayout(nodes=nodes, edges=edges)


def render_tree(layout: TreeLayout, format: str = "svg",
                unit_x: float = 90.0, unit_y: float = 60.0) -> str:
    """Render a layout as SVG 1.1 text or as DOT with pinned positions."""
    if format == "svg":
        return _render_svg(layout, unit_x, unit_y)
    if format == "dot":
        return _render_dot(layout)
    raise UnsupportedFormat(f"unsupported tree rendering format: {format!r}")


def _render_svg(layout: TreeLayout, unit_x: float, unit_y: float) -> str:
    margin = 40.0
    positions = {n.id: (margin + n.x * unit_x, margin + n.y * unit_y) for n in layout.nodes}
    width = max(x for x, _ in positions.values()) + margin
    height = max(y for _, y in positions.values()) + margin
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}">'
    ]
    for parent, child in layout.edges:
        x1, y1 = positions[parent]
        x2, y2 = positions[child]
        parts.append(f'<line x1="{x1:.1f}" y1="{y1:.1f}" x2="{x2:.1f}" y2="{y2:.1f}" '
                     f'stroke="#888" stroke-width="1"/>')
    for node in layout.nodes:
        x, y = positions[node.id]
        parts.append(f'<text x="{x:.1f}" y="{y:.1f}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="12">{escape(node.label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _render_dot(layout: TreeLayout) -> str:
    lines = ["digraph tree {", "  node [shape=plaintext];"]
    for node in layout.nodes:
        lines.append(f"  n{node.id} [label={_dot_quote(node.label)}, "
                     f'pos="{node.x:.3f},{-node.y:.3f}!"];')
    for parent, child in layout.edges:
        lines.append(f"  n{parent} -> n{child};")
    lines.append("}")
    return "\n".join(lines) + "\n"
