"""Declarative endpoint specs and generated query clients.

An ``EndpointSpec`` names one API method: base URL plus an ordered
parameter list where a parameter is required exactly when it has no
default.  ``generate_endpoint`` turns the spec into a callable that
validates arguments, builds the URL, fetches, maps, and stamps the
effective parameters onto every table as ``INPUT_:_<name>`` columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import (
    InvalidBaseUrl,
    MissingParameter,
    SpecFileInvalid,
    SpecInvalid,
    UnknownParameter,
)
from .gateway import ApiRequest, _check_base_url, default_timeout, fetch_tree
from .mapper import map_tree
from .tables import Table, TableSet

__all__ = [
    "ParamSpec",
    "EndpointSpec",
    "Endpoint",
    "generate_endpoint",
    "call",
    "save_spec",
    "load_spec",
]

INPUT_COLUMN_PREFIX = "INPUT_:_"


@dataclass
class ParamSpec:
    name: str
    default: str | None = None
    required: bool = True


@dataclass
class EndpointSpec:
    name: str
    base_url: str
    params: list[ParamSpec] = field(default_factory=list)
    description: str | None = None

    def validate(self) -> None:
        if not self.name:
            raise SpecInvalid("endpoint name must be non-empty")
        try:
            _check_base_url(self.base_url)
        except InvalidBaseUrl as exc:
            raise SpecInvalid(str(exc)) from exc
        seen: set[str] = set()
        for param in self.params:
            if not param.name:
                raise SpecInvalid("parameter names must be non-empty")
            if param.name in seen:
                raise SpecInvalid(f"duplicate parameter: {param.name}")
            seen.add(param.name)
            if param.required and param.default is not None:
                raise SpecInvalid(f"parameter {param.name} is required but has a default")
            if not param.required and param.default is None:
                raise SpecInvalid(f"optional parameter {param.name} needs a default")


@dataclass
class Endpoint:
    """A ready-to-call client for one endpoint spec."""

    spec: EndpointSpec
    timeout: float = field(default_factory=default_timeout)
    max_retries: int = 3

    def __call__(self, mode: str = "short", **args: str) -> TableSet:
        return call(self, args, mode=mode)


def generate_endpoint(spec: EndpointSpec, timeout: float | None = None,
                      max_retries: int = 3) -> Endpoint:
    """Validate a spec and wrap it as a callable endpoint."""
    spec.validate()
    if timeout is None:
        timeout = default_timeout()
    return Endpoint(spec=spec, timeout=timeout, max_retries=max_retries)


def resolve_arguments(spec: EndpointSpec, args: dict[str, str]) -> list[tuple[str, str]]:
    """Check args against the spec and return effective (name, value) pairs.

    Raised errors happen before any network activity.
    """
    declared = {p.name for p in spec.params}
    for name in args:
        if name not in declared:
            raise UnknownParameter(name)
    effective: list[tuple[str, str]] = []
    for param in spec.params:
        if param.name in args:
            effective.append((param.name, str(args[param.name])))
        elif param.default is not None:
            effective.append((param.name, param.default))
        else:
            raise MissingParameter(param.name)
    return effective


def append_input_columns(tset: TableSet, effective: list[tuple[str, str]]) -> TableSet:
    """Stamp the effective request parameters onto every table."""
    stamped = {}
    for table in tset:
        columns = list(table.columns) + [INPUT_COLUMN_PREFIX + name for name, _ in effective]
        values = [value for _, value in effective]
        rows = [list(row) + values for row in table.rows]
        stamped[table.name] = Table(table.name, columns, rows)
    return TableSet(stamped)


def call(endpoint: Endpoint, args: dict[str, str], mode: str = "short") -> TableSet:
    """Query the endpoint and return its mapped tables plus INPUT_ columns."""
    effective = resolve_arguments(endpoint.spec, args)
    request = ApiRequest(
        base_url=endpoint.spec.base_url,
        params=effective,
        timeout=endpoint.timeout,
        max_retries=endpoint.max_retries,
    )
    _, tree = fetch_tree(request)
    return append_input_columns(map_tree(tree, mode=mode), effective)


def save_spec(spec: EndpointSpec, path) -> None:
    """Write a spec as a flat, diff-friendly YAML document."""
    spec.validate()
    doc: dict = {"name": spec.name, "base_url": spec.base_url}
    if spec.description is not None:
        doc["description"] = spec.description
    doc["params"] = []
    for param in spec.params:
        entry: dict = {"name": param.name, "required": param.required}
        if param.default is not None:
            entry["default"] = param.default
        doc["params"].append(entry)
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False, allow_unicode=True),
                          encoding="utf-8")


def load_spec(path) -> EndpointSpec:
    """Read a spec file back; raises SpecFileInvalid on any defect."""
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise SpecFileInvalid(f"cannot read endpoint spec {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise SpecFileInvalid(f"endpoint spec {path} is not a mapping")
    if "base_url" not in raw:
        raise SpecFileInvalid(f"endpoint spec {path} is missing base_url")
    if "name" not in raw:
        raise SpecFileInvalid(f"endpoint spec {path} is missing name")
    params_raw = raw.get("params", [])
    if not isinstance(params_raw, list):
        raise SpecFileInvalid(f"endpoint spec {path}: params must be a list")
    params = []
    for entry in params_raw:
        if not isinstance(entry, dict) or "name" not in entry:
            raise SpecFileInvalid(f"endpoint spec {path}: malformed params entry {entry!r}")
        default = entry.get("default")
        params.append(ParamSpec(
            name=str(entry["name"]),
            default=None if default is None else str(default),
            required=bool(entry.get("required", default is None)),
        ))
    spec = EndpointSpec(
        name=str(raw["name"]),
        base_url=str(raw["base_url"]),
        params=params,
        description=None if raw.get("description") is None else str(raw["description"]),
    )
    try:
        spec.validate()
    except SpecInvalid as exc:
        raise SpecFileInvalid(f"endpoint spec {path}: {exc}") from exc
    return spec
