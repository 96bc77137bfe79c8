"""Observation-type extraction and tree flattening.

A tree maps to one table per observation type plus a single-row
"metadata" table of stray leaves.  An observation type is a group of
same-labeled inner siblings (or the elements of a sequence container,
single elements included); requiring the members to be inner nodes keeps
repeated scalar leaves — tag lists and the like — out of the tables and
widens them into suffixed metadata columns instead.

Provenance: every row ends in a "path" column holding the slash-joined,
position-indexed path of its record.  Sequence containers contribute no
path segment of their own (XML repeats siblings instead of wrapping
them), so the same logical record gets the same path whether it arrived
as JSON, YAML or XML.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ingest import TreeNode
from .tables import Table, TableSet

__all__ = [
    "ObservationType",
    "MetadataLeaf",
    "is_observation_type",
    "extract_types",
    "flatten_observation",
    "map_tree",
]


@dataclass(frozen=True)
class ObservationType:
    """A group of sibling record subtrees sharing one label."""

    name: str
    records: tuple[TreeNode, ...]
    origin_path: str


@dataclass(frozen=True)
class MetadataLeaf:
    """A leaf that belongs to no observation type."""

    name: str           # label, positionally suffixed among repeated leaf siblings
    full_name: str      # dotted path relative to the document root
    value: str | None
    origin_path: str


def _group(parent: TreeNode, label: str) -> list[TreeNode]:
    return [c for c in parent.children if c.label == label]


def _qualifies(parent: TreeNode, members: list[TreeNode]) -> bool:
    if not members or any(m.is_leaf for m in members):
        return False
    if len(members) >= 2:
        return True
    # a one-element sequence still yields a (one-row) table, so that the
    # result shape does not depend on how many records came back
    return parent.sequence and len(members) == len(parent.children)


def is_observation_type(node: TreeNode) -> bool:
    """True iff any of node's child label groups forms an observation type."""
    if node.is_leaf:
        return False
    seen: set[str] = set()
    for child in node.children:
        if child.label in seen:
            continue
        seen.add(child.label)
        if _qualifies(node, _group(node, child.label)):
            return True
    return False


def _step(node: TreeNode, parent: TreeNode | None) -> str | None:
    if node.sequence:
        return None
    if parent is not None and len(_group(parent, node.label)) >= 2:
        return f"{node.label}[{node.position}]"
    return node.label


def _render(parts: list[str]) -> str:
    return "/" + "/".join(parts)


def _leaf_name(leaf: TreeNode, parent: TreeNode | None) -> str:
    if parent is not None:
        leaf_siblings = [c for c in parent.children if c.label == leaf.label and c.is_leaf]
        if len(leaf_siblings) >= 2:
            return f"{leaf.label}.{leaf.position}"
    return leaf.label


def root_path(root: TreeNode) -> str:
    step = _step(root, None)
    return _render([step] if step else [])


def extract_types(root: TreeNode) -> tuple[list[ObservationType], list[MetadataLeaf]]:
    """Split a tree into observation types and stray metadata leaves.

    The traversal is top-down in document order: a qualifying sibling
    group is lifted out where it stands, its records are then scanned the
    same way so that types nested inside records come out as their own
    (sibling-wise) groups, and leaves not enclosed in any record are
    deposited as metadata.
    """
    types: list[ObservationType] = []
    deposit: list[MetadataLeaf] = []

    def visit(node: TreeNode, parts: list[str], dots: list[str], in_record: bool) -> None:
        consumed: set[int] = set()
        for child in node.children:
            if id(child) in consumed:
                continue
            members = _group(node, child.label)
            if child is members[0] and _qualifies(node, members):
                types.append(ObservationType(
                    name=child.label,
                    records=tuple(members),
                    origin_path=_render(parts),
                ))
                for member in members:
                    consumed.add(id(member))
                for member in members:
                    step = _step(member, node)
                    visit(member, parts + ([step] if step else []), [], True)
            elif child.is_leaf:
                if not in_record:
                    name = _leaf_name(child, node)
                    deposit.append(MetadataLeaf(
                        name=name,
                        full_name=".".join(dots + [name]),
                        value=child.value,
                        origin_path=_render(parts + [f"{child.label}[{child.position}]"
                                                     if len(members) >= 2 else child.label]),
                    ))
            else:
                step = _step(child, node)
                visit(child,
                      parts + ([step] if step else []),
                      dots + ([child.label] if step else []),
                      in_record)

    if root.is_leaf:
        deposit.append(MetadataLeaf(root.label, root.label, root.value, _render([root.label])))
    else:
        step = _step(root, None)
        visit(root, [step] if step else [], [], False)
    return types, deposit


def flatten_observation(record: TreeNode, mode: str = "short",
                        origin: str | None = None) -> list[tuple[str, str | None]]:
    """Flatten one record into an ordered (column, cell) row.

    Nested observation types inside the record are skipped (they become
    their own tables); remaining leaves are collected depth-first.  In
    short mode columns carry the leaf label, in full mode the dotted path
    relative to the record root.  A trailing "path" column holds the
    record's position-indexed origin path.
    """
    if origin is None:
        origin = root_path(record)
    cells: list[tuple[str, str | None]] = []

    def dfs(node: TreeNode, dots: list[str]) -> None:
        consumed: set[int] = set()
        for child in node.children:
            if id(child) in consumed:
                continue
            members = _group(node, child.label)
            if child is members[0] and _qualifies(node, members):
                for member in members:
                    consumed.add(id(member))
            elif child.is_leaf:
                name = _leaf_name(child, node)
                column = name if mode == "short" else ".".join(dots + [name])
                cells.append((column, child.value))
            else:
                step = _step(child, node)
                dfs(child, dots + ([child.label] if step else []))

    if record.is_leaf:
        cells.append((record.label, record.value))
    else:
        dfs(record, [])
    cells.append(("path", origin))
    return cells


def _record_path(otype: ObservationType, record: TreeNode) -> str:
    step = _step(record, None)
    if step is None:
        return otype.origin_path
    if len(otype.records) >= 2:
        step = f"{record.label}[{record.position}]"
    base = otype.origin_path
    return ("" if base == "/" else base) + "/" + step


def map_tree(root: TreeNode, mode: str = "short") -> TableSet:
    """Map a parsed tree to its full table set.

    One table per observation type (name collisions suffixed "_2", "_3",
    ...), each table's columns the ordered union of its rows' columns
    with absent cells null, plus the single-row metadata table first.
    """
    types, deposit = extract_types(root)
    meta_row: list[tuple[str, str | None]] = [
        (leaf.name if mode == "short" else leaf.full_name, leaf.value) for leaf in deposit
    ]
    meta_row.append(("path", root_path(root)))
    tset = TableSet({"metadata": Table.from_keyed_rows("metadata", [meta_row])})

    for otype in types:
        rows = [flatten_observation(record, mode, origin=_record_path(otype, record))
                for record in otype.records]
        name, n = otype.name, 1
        while name in tset:
            n += 1
            name = f"{otype.name}_{n}"
        tset.add(Table.from_keyed_rows(name, rows))
    return tset
