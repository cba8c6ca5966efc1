"""Tree serialization (JSON, DOT) and posterior-cut scatter plots (SVG)."""
from __future__ import annotations

import json
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .emissions import CellMatrix
from .partition import AxisBox, Cut, LeafGaussian, MondrianTree, Node, leaves
from .priors import PriorTable, UNKNOWN

# ---------------------------------------------------------------- JSON


def _node_to_dict(node: Node) -> dict:
    out = {"box": [[a, b] for a, b in zip(node.box.lower, node.box.upper)]}
    if node.is_leaf:
        out["leaf_table"] = list(node.table.types)
        out["leaf_gaussian"] = None if node.gaussian is None else {
            "mean": [float(x) for x in node.gaussian.mean],
            "var": [float(x) for x in node.gaussian.var],
        }
    else:
        cut = node.cut
        out.update(dim=cut.dim, rel_pos=cut.rel_pos, abs_pos=cut.abs_pos, wait_time=cut.wait_time,
                   children=[_node_to_dict(node.left), _node_to_dict(node.right)])
    return out


def tree_to_dict(tree: MondrianTree) -> dict:
    table = tree.table
    return {
        "budget": tree.budget,
        "table": {"types": list(table.types), "markers": list(table.markers),
                  "entries": table.entries.astype(int).tolist()},
        "root": _node_to_dict(tree.root),
    }


def _node_from_dict(d: dict, table: PriorTable) -> Node:
    box = AxisBox(tuple(b[0] for b in d["box"]), tuple(b[1] for b in d["box"]))
    if "children" not in d:
        if list(table.types) != list(d["leaf_table"]):
            raise ValueError(f"leaf table {d['leaf_table']} disagrees with cut path ({list(table.types)})")
        g = d.get("leaf_gaussian")
        gaussian = None if g is None else LeafGaussian(np.array(g["mean"], dtype=float),
                                                       np.array(g["var"], dtype=float))
        return Node(box, table, gaussian=gaussian)
    cut = Cut(int(d["dim"]), float(d["rel_pos"]), float(d["abs_pos"]), float(d["wait_time"]))
    left, right = d["children"]
    return Node(box, table, cut,
                _node_from_dict(left, table.filter_rows(cut.dim, "left")),
                _node_from_dict(right, table.filter_rows(cut.dim, "right")))


def tree_from_dict(doc: dict) -> MondrianTree:
    t = doc["table"]
    table = PriorTable(tuple(t["types"]), tuple(t["markers"]), np.array(t["entries"], dtype=np.int8))
    return MondrianTree(_node_from_dict(doc["root"], table), float(doc["budget"]))


def with_gaussians(tree: MondrianTree, params: dict[str, LeafGaussian]) -> MondrianTree:
    """Copy of ``tree`` with each leaf's Gaussian attached from ``params``."""

    def attach(node, path):
        if node.is_leaf:
            return Node(node.box, node.table, gaussian=params.get(path))
        return Node(node.box, node.table, node.cut, attach(node.left, path + "L"),
                    attach(node.right, path + "R"))

    return MondrianTree(attach(tree.root, ""), tree.budget)


def _fmt(x: float) -> str:
    return f"{x:.4g}"


def tree_to_dot(tree: MondrianTree) -> str:
    markers = tree.table.markers
    lines = ["digraph mondrian {", '  node [fontname="Helvetica"];']

    def visit(node, path):
        name = "n_" + (path or "root")
        if node.is_leaf:
            label = "\\n".join(node.table.types) or UNKNOWN
            lines.append(f'  {name} [shape=box, style=filled, fillcolor=black, fontcolor=white, label="{label}"];')
            return name
        label = f"{markers[node.cut.dim]} @ {_fmt(node.cut.abs_pos)}"
        lines.append(f'  {name} [shape=ellipse, color=red, label="{label}"];')
        left, right = visit(node.left, path + "L"), visit(node.right, path + "R")
        lines.append(f'  {name} -> {left} [label="<="];')
        lines.append(f'  {name} -> {right} [label=">"];')
        return name

    visit(tree.root, "")
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_tree(tree: MondrianTree, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(tree_to_dict(tree), indent=1) + "\n"
    if fmt == "dot":
        return tree_to_dot(tree)
    raise ValueError(f"unknown tree format {fmt!r}")


def parse_tree(text: str) -> MondrianTree:
    return tree_from_dict(json.loads(text))


# ---------------------------------------------------------------- SVG

SIZE = 800
MARGIN = 0.05 * SIZE


def cuts_in_plane(tree: MondrianTree, dims: tuple[int, int]) -> list[tuple[int, float, AxisBox]]:
    """(dim, position, owning box) for every cut along one of ``dims``."""
    found = []

    def visit(node):
        if node.is_leaf:
            return
        if node.cut.dim in dims:
            found.append((node.cut.dim, node.cut.abs_pos, node.box))
        visit(node.left)
        visit(node.right)

    visit(tree.root)
    return found


def render_posterior_cuts(samples: Sequence[MondrianTree], data: CellMatrix,
                          dims: tuple[int | str, int | str]) -> str:
    """Cells as black dots in the (d1, d2) plane, sampled cuts as blue segments.

    Each cut spans its owning box projected onto the plot plane.
    """
    if not samples:
        raise ValueError("need at least one posterior sample")
    markers = data.markers
    try:
        d1, d2 = (markers.index(d) if isinstance(d, str) else int(d) for d in dims)
    except ValueError as exc:
        raise ValueError(f"unknown marker in {dims}") from exc
    if d1 == d2 or not (0 <= d1 < len(markers) and 0 <= d2 < len(markers)):
        raise ValueError(f"invalid dimension pair {dims}")

    root = samples[0].box
    x0, x1 = root.lower[d1], root.upper[d1]
    y0, y1 = root.lower[d2], root.upper[d2]
    span = SIZE - 2 * MARGIN

    def px(x):
        return MARGIN + (x - x0) / (x1 - x0) * span

    def py(y):
        return SIZE - MARGIN - (y - y0) / (y1 - y0) * span

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
        f'viewBox="0 0 {SIZE} {SIZE}">',
        f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>',
        f'<rect x="{MARGIN:.2f}" y="{MARGIN:.2f}" width="{span:.2f}" height="{span:.2f}" '
        'fill="none" stroke="black" stroke-width="1"/>',
        '<g id="cells" fill="black">',
    ]
    for x, y in data.values[:, [d1, d2]]:
        out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="1.5"/>')
    out.append("</g>")
    out.append('<g id="cuts" stroke="blue" stroke-width="1" stroke-opacity="0.6">')
    for tree in samples:
        for dim, pos, box in cuts_in_plane(tree, (d1, d2)):
            if dim == d1:
                xa = xb = px(pos)
                ya, yb = py(box.lower[d2]), py(box.upper[d2])
            else:
                ya = yb = py(pos)
                xa, xb = px(box.lower[d1]), px(box.upper[d1])
            out.append(f'<line x1="{xa:.2f}" y1="{ya:.2f}" x2="{xb:.2f}" y2="{yb:.2f}"/>')
    out.append("</g>")
    font = 'font-family="Helvetica" font-size="14"'
    out.append(f'<text x="{SIZE / 2:.1f}" y="{SIZE - MARGIN / 4:.1f}" text-anchor="middle" {font}>'
               f'{escape(markers[d1])}</text>')
    out.append(f'<text x="{MARGIN / 2:.1f}" y="{SIZE / 2:.1f}" text-anchor="middle" {font} '
               f'transform="rotate(-90 {MARGIN / 2:.1f} {SIZE / 2:.1f})">{escape(markers[d2])}</text>')
    for value, x in ((x0, MARGIN), (x1, SIZE - MARGIN)):
        out.append(f'<text x="{x:.1f}" y="{SIZE - MARGIN + 14:.1f}" text-anchor="middle" '
                   f'font-family="Helvetica" font-size="10">{_fmt(value)}</text>')
    for value, y in ((y0, SIZE - MARGIN), (y1, MARGIN)):
        out.append(f'<text x="{MARGIN - 4:.1f}" y="{y:.1f}" text-anchor="end" '
                   f'font-family="Helvetica" font-size="10">{_fmt(value)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
