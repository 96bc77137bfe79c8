"""Unified tree model and parsers for JSON, XML, RSS and YAML bodies.

Every supported format is coerced to the same ``TreeNode`` shape so that
the downstream mapping algorithm never needs to know what the wire format
was.  Array/sequence elements inherit their container's key as label,
mirroring repeated same-named XML siblings; this is what lets one
observation-type detection rule serve all formats.
"""

from __future__ import annotations

import enum
import io
import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

import yaml

from .errors import (
    MalformedDocument,
    MultiDocumentUnsupported,
    NonTextBody,
    UnparseableBody,
)

__all__ = [
    "TreeNode",
    "NodeKind",
    "MimeKind",
    "parse_json",
    "parse_xml",
    "parse_yaml",
    "sniff_and_parse",
    "mime_from_content_type",
]


class NodeKind(enum.Enum):
    INNER = "inner"
    LEAF = "leaf"


class MimeKind(enum.Enum):
    JSON = "json"
    XML = "xml"
    RSS = "rss"
    YAML = "yaml"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class TreeNode:
    """One node of a parsed web document.

    A leaf carries a text value (``None`` is the distinguished null
    marker); an inner node carries at least one child and no value.
    ``position`` is the node's 1-based rank among siblings that share its
    label, assigned when the parent is constructed.  ``sequence`` marks
    nodes built from an array/sequence container, whose elements all
    inherit the container's label.  Nodes are immutable and safe to share
    between threads.
    """

    label: str
    kind: NodeKind
    value: str | None = None
    children: tuple[TreeNode, ...] = ()
    position: int = 1
    sequence: bool = False

    @staticmethod
    def leaf(label: str, value: str | None) -> "TreeNode":
        return TreeNode(label=label, kind=NodeKind.LEAF, value=value)

    @staticmethod
    def inner(label: str, children: list["TreeNode"], sequence: bool = False) -> "TreeNode":
        if not children:
            raise ValueError("inner node requires at least one child")
        ranked: list[TreeNode] = []
        seen: dict[str, int] = {}
        for child in children:
            rank = seen.get(child.label, 0) + 1
            seen[child.label] = rank
            if child.position != rank:
                child = TreeNode(child.label, child.kind, child.value,
                                 child.children, rank, child.sequence)
            ranked.append(child)
        return TreeNode(label=label, kind=NodeKind.INNER, children=tuple(ranked),
                        sequence=sequence)

    @property
    def is_leaf(self) -> bool:
        return self.kind is NodeKind.LEAF

    def iter_nodes(self):
        """Yield this node and all descendants in document (pre)order."""
        yield self
        for child in self.children:
            yield from child.iter_nodes()


def _scalar_text(obj) -> str | None:
    if obj is None:
        return None
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    return obj if isinstance(obj, str) else str(obj)


def _node_from_data(label: str, obj) -> TreeNode:
    if isinstance(obj, dict):
        if not obj:
            return TreeNode.leaf(label, None)
        return TreeNode.inner(label, [_node_from_data(str(k), v) for k, v in obj.items()])
    if isinstance(obj, (list, tuple)):
        if not obj:
            return TreeNode.leaf(label, None)
        # elements inherit the container's key as their label
        return TreeNode.inner(label, [_node_from_data(label, v) for v in obj], sequence=True)
    return TreeNode.leaf(label, _scalar_text(obj))


def _root_from_data(data) -> TreeNode:
    # A document whose top level is an object with a single structured
    # member is rooted at that member, like an XML document element; this
    # keeps record paths identical across formats.
    if isinstance(data, dict) and len(data) == 1:
        (key, value), = data.items()
        if isinstance(value, (dict, list, tuple)):
            return _node_from_data(str(key), value)
    return _node_from_data("root", data)


def parse_json(body: str) -> TreeNode:
    """Parse a JSON document into a tree.

    Numbers keep their source spelling (no float round-trip), booleans
    become ``"true"``/``"false"``, ``null`` becomes the null marker, and
    empty objects/arrays collapse to null leaves.
    """
    try:
        data = json.loads(body, parse_float=str, parse_int=str)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(exc.msg, f"line {exc.lineno} column {exc.colno}") from exc
    return _root_from_data(data)


def parse_yaml(body: str) -> TreeNode:
    """Parse a single-document YAML mapping or sequence into a tree.

    Scalars are taken verbatim as text (``yes`` stays ``"yes"``); the
    document-level value must be a mapping or sequence.
    """
    try:
        documents = list(yaml.load_all(body, Loader=yaml.BaseLoader))
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        position = f"line {mark.line + 1} column {mark.column + 1}" if mark else None
        raise MalformedDocument(str(getattr(exc, "problem", exc)), position) from exc
    if len(documents) > 1:
        raise MultiDocumentUnsupported(f"stream contains {len(documents)} documents")
    if not documents or documents[0] is None:
        raise MalformedDocument("empty YAML document")
    data = documents[0]
    if not isinstance(data, (dict, list)):
        raise MalformedDocument("top-level YAML value is a scalar, not a mapping or sequence")
    return _root_from_data(data)


def _strip_ns(tag: str) -> str:
    if tag.startswith("{"):
        return tag.rpartition("}")[2]
    return tag.rpartition(":")[2]


def _element_node(elem: ET.Element, ns_decls: dict[int, list[str]]) -> TreeNode:
    children: list[TreeNode] = []
    for uri in ns_decls.get(id(elem), ()):
        children.append(TreeNode.leaf("xmlns", uri))
    for name, value in elem.attrib.items():
        children.append(TreeNode.leaf(_strip_ns(name), value))
    element_children = [c for c in elem if isinstance(c.tag, str)]
    label = _strip_ns(elem.tag)

    if not children and not element_children:
        text = (elem.text or "").strip()
        return TreeNode.leaf(label, text if text else None)

    for child in element_children:
        children.append(_element_node(child, ns_decls))
    segments = [elem.text] + [c.tail for c in element_children]
    stripped = [s.strip() for s in segments if s and s.strip()]
    if stripped:
        children.append(TreeNode.leaf("#text", " ".join(stripped)))
    return TreeNode.inner(label, children)


def parse_xml(body: str) -> TreeNode:
    """Parse an XML (or RSS) document into a tree.

    Attributes are promoted to leaf children of their element, namespace
    prefixes are stripped from labels, and each namespace declaration
    becomes a leaf labeled ``xmlns``.  Text interleaved with child
    elements is concatenated into one synthetic ``#text`` leaf.
    """
    ns_decls: dict[int, list[str]] = {}
    pending: list[str] = []
    root: ET.Element | None = None
    try:
        for event, obj in ET.iterparse(io.BytesIO(body.encode("utf-8")), events=("start-ns", "start")):
            if event == "start-ns":
                pending.append(obj[1])
            else:
                if pending:
                    ns_decls[id(obj)] = pending
                    pending = []
                if root is None:
                    root = obj
    except ET.ParseError as exc:
        line, column = exc.position
        raise MalformedDocument(str(exc), f"line {line} column {column}") from exc
    if root is None:
        raise MalformedDocument("no document element")
    return _element_node(root, ns_decls)


_MIME_MAP = {
    "application/json": MimeKind.JSON,
    "text/json": MimeKind.JSON,
    "application/xml": MimeKind.XML,
    "text/xml": MimeKind.XML,
    "application/rss+xml": MimeKind.RSS,
    "application/x-yaml": MimeKind.YAML,
    "text/yaml": MimeKind.YAML,
}


def mime_from_content_type(content_type: str | None) -> MimeKind:
    """Map a Content-Type header value to a MimeKind (UNKNOWN if unmapped)."""
    if not content_type:
        return MimeKind.UNKNOWN
    essence = content_type.split(";", 1)[0].strip().lower()
    return _MIME_MAP.get(essence, MimeKind.UNKNOWN)


def _parse_as(kind: MimeKind, text: str) -> TreeNode:
    if kind is MimeKind.JSON:
        return parse_json(text)
    if kind in (MimeKind.XML, MimeKind.RSS):
        return parse_xml(text)
    return parse_yaml(text)


def sniff_and_parse(body: bytes, declared_mime: str | None = None) -> tuple[TreeNode, MimeKind]:
    """Resolve a body's format and parse it.

    The declared Content-Type wins when it maps to a known format and its
    parser succeeds; otherwise the format is sniffed from the first
    non-whitespace byte ('{'/'[' means JSON, '<' means XML, anything else
    is attempted as YAML).
    """
    try:
        text = body.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise NonTextBody(f"body is not valid UTF-8 text: {exc}") from exc

    declared = mime_from_content_type(declared_mime)
    if declared is not MimeKind.UNKNOWN:
        try:
            return _parse_as(declared, text), declared
        except (MalformedDocument, MultiDocumentUnsupported):
            pass  # header lied; fall back to sniffing

    head = text.lstrip()
    if head.startswith(("{", "[")):
        sniffed = MimeKind.JSON
    elif head.startswith("<"):
        sniffed = MimeKind.XML
    else:
        sniffed = MimeKind.YAML
    try:
        tree = _parse_as(sniffed, text)
    except (MalformedDocument, MultiDocumentUnsupported) as exc:
        raise UnparseableBody(f"no parser accepted the body: {exc}") from exc
    if sniffed is MimeKind.XML and tree.label == "rss":
        sniffed = MimeKind.RSS
    return tree, sniffed
