"""Independent brute-force flattener and random document generator.

The flattener here is the reference the mapper is checked against.  It
works leaf-first: enumerate every leaf with its full ancestor chain,
decide which (if any) enclosing record owns it, and assemble tables by
exhaustive grouping.  No tree surgery, no shared code with the mapper
beyond the TreeNode type itself.

The generator produces random record-shaped documents together with JSON
and XML serializations of the same structure.  Sequences always get at
least two elements because XML (without a schema) cannot distinguish a
one-element sequence from a nested object; single-element sequences are
covered by dedicated JSON-only tests instead.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

from webtabulate.ingest import TreeNode

# ---------------------------------------------------------------------------
# brute-force flattener


def _group(parent: TreeNode, label: str) -> list[TreeNode]:
    return [c for c in parent.children if c.label == label]


def _qualifies(parent: TreeNode, label: str) -> bool:
    members = _group(parent, label)
    if not members or any(m.is_leaf for m in members):
        return False
    if len(members) >= 2:
        return True
    # single-element sequence containers still count
    return parent.sequence and len(members) == len(parent.children)


def brute_force_tableset(root: TreeNode, mode: str = "short") -> dict[str, dict]:
    """Map a tree to tables by exhaustive leaf-path grouping.

    Returns ``{table_name: {"columns": [...], "rows": [[...]]}}`` with the
    metadata table first.
    """
    parents: dict[int, TreeNode | None] = {id(root): None}
    chains: dict[int, tuple[TreeNode, ...]] = {id(root): ()}
    preorder: list[TreeNode] = []

    def walk(node: TreeNode, chain: tuple[TreeNode, ...]) -> None:
        preorder.append(node)
        for child in node.children:
            parents[id(child)] = node
            chains[id(child)] = chain + (node,)
            walk(child, chain + (node,))

    walk(root, ())

    def indexed_step(node: TreeNode, parent: TreeNode | None) -> str | None:
        if node.sequence:
            return None
        if parent is not None and len(_group(parent, node.label)) >= 2:
            return f"{node.label}[{node.position}]"
        return node.label

    def abs_path(node: TreeNode) -> str:
        chain = chains[id(node)] + (node,)
        parts = []
        for i, n in enumerate(chain):
            step = indexed_step(n, chain[i - 1] if i else None)
            if step is not None:
                parts.append(step)
        return "/" + "/".join(parts)

    def is_record(node: TreeNode) -> bool:
        parent = parents[id(node)]
        return parent is not None and not node.is_leaf and _qualifies(parent, node.label)

    def owning_record(leaf: TreeNode) -> TreeNode | None:
        for anc in reversed(chains[id(leaf)]):
            if is_record(anc):
                return anc
        return None

    def leaf_name(leaf: TreeNode) -> str:
        parent = parents[id(leaf)]
        leaf_siblings = [c for c in parent.children if c.label == leaf.label and c.is_leaf] if parent else []
        if len(leaf_siblings) >= 2:
            return f"{leaf.label}.{leaf.position}"
        return leaf.label

    def column_name(leaf: TreeNode, record: TreeNode | None) -> str:
        if mode == "short":
            return leaf_name(leaf)
        chain = chains[id(leaf)]
        start = chain.index(record) + 1 if record is not None else 1  # skip root / record itself
        segments = [n.label for n in chain[start:] if not n.sequence]
        segments.append(leaf_name(leaf))
        return ".".join(segments)

    # group instances in order of first member appearance
    instances: list[tuple[TreeNode, str]] = []
    seen: set[tuple[int, str]] = set()
    for node in preorder:
        parent = parents[id(node)]
        if parent is None or node.is_leaf:
            continue
        key = (id(parent), node.label)
        if key not in seen and _qualifies(parent, node.label):
            seen.add(key)
            instances.append((parent, node.label))

    leaves = [n for n in preorder if n.is_leaf]
    record_of_leaf = {id(leaf): owning_record(leaf) for leaf in leaves}

    def materialize(rows: list[list[tuple[str, str | None]]]) -> tuple[list[str], list[list[str | None]]]:
        keyed: list[tuple[str, int]] = []
        for row in rows:
            counts: dict[str, int] = {}
            for name, _ in row:
                occ = counts.get(name, 0) + 1
                counts[name] = occ
                if (name, occ) not in keyed:
                    keyed.append((name, occ))
        out_rows = []
        for row in rows:
            counts, cells = {}, {key: None for key in keyed}
            for name, value in row:
                occ = counts.get(name, 0) + 1
                counts[name] = occ
                cells[(name, occ)] = value
            out_rows.append([cells[key] for key in keyed])
        return [name for name, _ in keyed], out_rows

    tables: dict[str, dict] = {}

    meta_row = [(leaf_name(l) if mode == "short" else column_name(l, None), l.value)
                for l in leaves if record_of_leaf[id(l)] is None]
    meta_row.append(("path", abs_path(root)))
    columns, rows = materialize([meta_row])
    tables["metadata"] = {"columns": columns, "rows": rows}

    for parent, label in instances:
        records = _group(parent, label)
        rows_kv = []
        for record in records:
            row = [(column_name(l, record), l.value)
                   for l in leaves if record_of_leaf[id(l)] is record]
            row.append(("path", abs_path(record)))
            rows_kv.append(row)
        name = label
        n = 1
        while name in tables:
            n += 1
            name = f"{label}_{n}"
        columns, rows = materialize(rows_kv)
        tables[name] = {"columns": columns, "rows": rows}

    return tables


# ---------------------------------------------------------------------------
# random record documents with twin JSON/XML serializations


@dataclass
class Scalar:
    value: str


@dataclass
class Rec:
    fields: list[tuple[str, "Scalar | Rec | Seq"]] = field(default_factory=list)


@dataclass
class Seq:
    elements: list[Rec] = field(default_factory=list)


@dataclass
class Doc:
    root_label: str
    root: Rec


_VALUE_CHARS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
_VALUE_SPICE = [",", '"', "'", ";", "&", "=", "+", "é", "µ", " ", ":", "/"]


def _value(rng: random.Random) -> str:
    n = rng.randint(1, 10)
    chars = [rng.choice(_VALUE_CHARS) for _ in range(n)]
    if rng.random() < 0.3:
        chars[rng.randrange(1, n) if n > 1 else 0] = rng.choice(_VALUE_SPICE)
    text = "".join(chars).strip()
    return text or "x"


def gen_document(rng: random.Random, ragged: bool = False,
                 max_depth: int = 4, max_nodes: int = 50) -> Doc:
    pool = [f"{c}{rng.choice('aeiou')}{rng.choice('lmnrst')}" for c in "bcdfghjk"]
    budget = [max_nodes]

    def gen_rec(depth: int) -> Rec:
        names = rng.sample(pool, k=min(rng.randint(1, 4), len(pool)))
        rec = Rec()
        for name in names:
            if budget[0] <= 0:
                break
            budget[0] -= 1
            roll = rng.random()
            if roll < 0.55 or depth + 1 >= max_depth or budget[0] < 4:
                rec.fields.append((name, Scalar(_value(rng))))
            elif roll < 0.75:
                rec.fields.append((name, gen_rec(depth + 1)))
            else:
                count = rng.randint(2, 3)
                template = gen_rec(depth + 1)
                elements = [template]
                for _ in range(count - 1):
                    clone = _clone_with_fresh_values(template, rng)
                    elements.append(clone)
                if ragged:
                    elements = [_drop_fields(e, rng) for e in elements]
                budget[0] -= sum(_rec_size(e) for e in elements[1:]) + 1
                rec.fields.append((name, Seq(elements)))
        if not rec.fields:
            rec.fields.append((rng.choice(pool), Scalar(_value(rng))))
        return rec

    root = gen_rec(1)
    return Doc(root_label=rng.choice(pool) + "_doc", root=root)


def _rec_size(rec: Rec) -> int:
    total = 1
    for _, child in rec.fields:
        if isinstance(child, Scalar):
            total += 1
        elif isinstance(child, Rec):
            total += _rec_size(child)
        else:
            total += 1 + sum(_rec_size(e) for e in child.elements)
    return total


def _clone_with_fresh_values(rec: Rec, rng: random.Random) -> Rec:
    clone = Rec()
    for name, child in rec.fields:
        if isinstance(child, Scalar):
            clone.fields.append((name, Scalar(_value(rng))))
        elif isinstance(child, Rec):
            clone.fields.append((name, _clone_with_fresh_values(child, rng)))
        else:
            clone.fields.append((name, Seq([_clone_with_fresh_values(e, rng) for e in child.elements])))
    return clone


def _drop_fields(rec: Rec, rng: random.Random) -> Rec:
    kept = [fv for fv in rec.fields if rng.random() > 0.35]
    if not kept:
        kept = [rec.fields[0]]
    return Rec(fields=kept)


def _rec_to_obj(rec: Rec):
    obj: dict = {}
    for name, child in rec.fields:
        if isinstance(child, Scalar):
            obj[name] = child.value
        elif isinstance(child, Rec):
            obj[name] = _rec_to_obj(child)
        else:
            obj[name] = [_rec_to_obj(e) for e in child.elements]
    return obj


def doc_to_json(doc: Doc) -> str:
    return json.dumps({doc.root_label: _rec_to_obj(doc.root)}, ensure_ascii=False)


def doc_to_xml(doc: Doc) -> str:
    out: list[str] = ['<?xml version="1.0" encoding="UTF-8"?>']

    def emit(tag: str, rec: Rec) -> None:
        out.append(f"<{tag}>")
        for name, child in rec.fields:
            if isinstance(child, Scalar):
                out.append(f"<{name}>{escape(child.value)}</{name}>")
            elif isinstance(child, Rec):
                emit(name, child)
            else:
                # sequences become repeated same-named sibling elements
                for element in child.elements:
                    emit(name, element)
        out.append(f"</{tag}>")

    emit(doc.root_label, doc.root)
    return "".join(out)
