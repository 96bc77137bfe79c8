"""Checkpointed batch execution of many API requests.

A job fetches and maps every request, buffering per-response table sets
and flushing them to chunk files every ``checkpoint_interval`` responses
so memory stays bounded and an interrupted job can resume.  The final
table set is always assembled from the chunk files, so a resumed job is
cell-for-cell identical to an uninterrupted one.

Checkpoint directory layout:
    manifest.json              fingerprint, completed/failed indices, chunks
    chunk_<n>__<table>.jsonl   header line {"columns": [...]}, then one
                               {"i": <request index>, "cells": [...]} per row
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    CheckpointCorrupt,
    CheckpointIoError,
    FirstFailure,
    ManifestMismatch,
    WebTabulateError,
)
from .gateway import ApiRequest, fetch_tree
from .mapper import map_tree
from .tables import Table, TableSet

__all__ = ["BatchJob", "BatchFailure", "CheckpointManifest", "run", "resume"]

MANIFEST_NAME = "manifest.json"


@dataclass
class BatchJob:
    requests: list[str | ApiRequest]
    checkpoint_dir: str | Path
    checkpoint_interval: int = 50
    parallelism: int = 1
    continue_on_error: bool = True
    column_mode: str = "short"

    def __post_init__(self):
        if self.checkpoint_interval < 1:
            raise ValueError("checkpoint_interval must be >= 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")

    def normalized(self) -> list[ApiRequest]:
        return [ApiRequest(base_url=r) if isinstance(r, str) else r for r in self.requests]

    def fingerprint(self) -> str:
        urls = "\n".join(r.url() for r in self.normalized())
        return hashlib.sha256(urls.encode("utf-8")).hexdigest()


@dataclass
class BatchFailure:
    index: int  # 1-based request index
    url: str
    error: str


@dataclass
class CheckpointManifest:
    fingerprint: str
    total: int
    completed: list[int] = field(default_factory=list)
    failed: dict[int, str] = field(default_factory=dict)
    chunks: list[dict] = field(default_factory=list)

    def save(self, directory: Path) -> None:
        doc = {
            "fingerprint": self.fingerprint,
            "total": self.total,
            "completed": self.completed,
            "failed": {str(k): v for k, v in self.failed.items()},
            "chunks": self.chunks,
        }
        tmp = directory / (MANIFEST_NAME + ".tmp")
        try:
            tmp.write_text(json.dumps(doc, indent=2), encoding="utf-8")
            os.replace(tmp, directory / MANIFEST_NAME)
        except OSError as exc:
            raise CheckpointIoError(f"cannot write manifest in {directory}: {exc}") from exc

    @classmethod
    def load(cls, directory: Path) -> "CheckpointManifest":
        path = directory / MANIFEST_NAME
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise CheckpointIoError(f"cannot read manifest {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise CheckpointCorrupt(f"manifest {path} is not valid JSON: {exc}") from exc
        try:
            return cls(
                fingerprint=doc["fingerprint"],
                total=int(doc["total"]),
                completed=[int(i) for i in doc["completed"]],
                failed={int(k): str(v) for k, v in doc.get("failed", {}).items()},
                chunks=list(doc.get("chunks", [])),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CheckpointCorrupt(f"manifest {path} is malformed: {exc}") from exc


def _chunk_filename(chunk_id: int, table: str) -> str:
    safe = "".join(c if c.isalnum() or c in "-._" else "%%%02X" % ord(c) for c in table)
    return f"chunk_{chunk_id}__{safe}.jsonl"


def _write_chunk(directory: Path, chunk_id: int, buffered: list[tuple[int, TableSet]],
                 manifest: CheckpointManifest) -> None:
    """Flush buffered responses as one chunk and commit the manifest."""
    table_order: list[tuple[str, int]] = []  # (name, first request index)
    seen: set[str] = set()
    for index, tset in buffered:
        for table in tset:
            if table.name not in seen:
                seen.add(table.name)
                table_order.append((table.name, index))

    for name, _ in table_order:
        path = directory / _chunk_filename(chunk_id, name)
        keyed_rows: list[tuple[int, list[tuple[str, str | None]]]] = []
        for index, tset in buffered:
            if name in tset:
                for row in tset[name].keyed_rows():
                    keyed_rows.append((index, row))
        chunk_table = Table.from_keyed_rows(name, [row for _, row in keyed_rows])
        try:
            with open(path, "wb") as fh:
                fh.write((json.dumps({"columns": chunk_table.columns}) + "\n").encode("utf-8"))
                for (index, _), cells in zip(keyed_rows, chunk_table.rows):
                    fh.write((json.dumps({"i": index, "cells": cells},
                                         ensure_ascii=False) + "\n").encode("utf-8"))
        except OSError as exc:
            raise CheckpointIoError(f"cannot write chunk {path}: {exc}") from exc

    manifest.chunks.append({
        "id": chunk_id,
        "indices": [index for index, _ in buffered],
        "tables": [{"name": name, "first_index": first} for name, first in table_order],
    })
    manifest.completed.extend(index for index, _ in buffered)
    manifest.save(directory)


def _assemble(directory: Path, manifest: CheckpointManifest) -> TableSet:
    """Rebuild the merged table set from chunk files, in request order."""
    table_first: dict[str, int] = {}
    table_tie: dict[str, int] = {}
    for chunk in manifest.chunks:
        for pos, entry in enumerate(chunk["tables"]):
            name, first = entry["name"], int(entry["first_index"])
            if name not in table_first or (first, table_tie[name]) > (first, pos):
                pass
            if name not in table_first or first < table_first[name]:
                table_first[name] = first
                table_tie[name] = pos
    ordered = sorted(table_first, key=lambda n: (table_first[n], table_tie[n]))

    rows_by_table: dict[str, list[tuple[int, list[tuple[str, str | None]]]]] = {n: [] for n in ordered}
    for chunk in manifest.chunks:
        for entry in chunk["tables"]:
            name = entry["name"]
            path = directory / _chunk_filename(chunk["id"], name)
            try:
                lines = path.read_text(encoding="utf-8").splitlines()
                header = json.loads(lines[0])
                columns = header["columns"]
                for line in lines[1:]:
                    record = json.loads(line)
                    cells = record["cells"]
                    if len(cells) != len(columns):
                        raise CheckpointCorrupt(f"row width mismatch in {path}")
                    rows_by_table[name].append((int(record["i"]), list(zip(columns, cells))))
            except OSError as exc:
                raise CheckpointCorrupt(f"chunk file {path} unreadable: {exc}") from exc
            except (json.JSONDecodeError, KeyError, IndexError) as exc:
                raise CheckpointCorrupt(f"chunk file {path} is malformed: {exc}") from exc

    result = TableSet()
    for name in ordered:
        rows = rows_by_table[name]
        rows.sort(key=lambda item: item[0])  # stable: preserves within-response order
        table = Table.from_keyed_rows(name, [row for _, row in rows])
        if name in result:
            result.tables[name] = table
        else:
            result.tables[name] = table
    return result


def _fetch_and_map(request: ApiRequest, mode: str) -> TableSet:
    _, tree = fetch_tree(request)
    return map_tree(tree, mode=mode)


def _execute_job(job: BatchJob, manifest: CheckpointManifest, directory: Path,
                 progress, buffer_probe) -> tuple[TableSet, list[BatchFailure]]:
    requests = job.normalized()
    total = len(requests)
    done_set = set(manifest.completed)
    pending = [i for i in range(1, total + 1) if i not in done_set]
    done = len(done_set)
    failures: list[BatchFailure] = [
        BatchFailure(i, requests[i - 1].url(), msg) for i, msg in sorted(manifest.failed.items())
        if i in done_set
    ]
    manifest.failed = {i: m for i, m in manifest.failed.items() if i in done_set}

    if progress:
        progress(done, total)

    next_chunk_id = max((c["id"] for c in manifest.chunks), default=-1) + 1
    buffer: list[tuple[int, TableSet]] = []

    def flush() -> None:
        nonlocal next_chunk_id
        if buffer:
            _write_chunk(directory, next_chunk_id, buffer, manifest)
            next_chunk_id += 1
            buffer.clear()

    def handle(index: int, outcome) -> None:
        nonlocal done
        tset, error = outcome
        if error is not None:
            if not job.continue_on_error:
                raise FirstFailure(index, error)
            message = f"{type(error).__name__}: {error}"
            failures.append(BatchFailure(index, requests[index - 1].url(), message))
            manifest.failed[index] = message
        else:
            buffer.append((index, tset))
        done += 1
        if progress:
            progress(done, total)
        if buffer_probe:
            buffer_probe(len(buffer))
        if len(buffer) >= job.checkpoint_interval:
            flush()

    def attempt(index: int):
        try:
            return _fetch_and_map(requests[index - 1], job.column_mode), None
        except WebTabulateError as exc:
            return None, exc

    if job.parallelism == 1:
        for index in pending:
            handle(index, attempt(index))
    else:
        with ThreadPoolExecutor(max_workers=job.parallelism) as pool:
            window = max(job.parallelism * 2, job.parallelism)
            inflight: list[tuple[int, object]] = []
            for index in pending:
                inflight.append((index, pool.submit(attempt, index)))
                if len(inflight) >= window:
                    i, fut = inflight.pop(0)
                    handle(i, fut.result())
            for i, fut in inflight:
                handle(i, fut.result())

    flush()
    manifest.save(directory)
    return _assemble(directory, manifest), failures


def run(job: BatchJob, progress=None, *, buffer_probe=None) -> tuple[TableSet, list[BatchFailure]]:
    """Run a batch job from scratch.

    ``progress(done, total)`` fires once up front and after every
    response.  ``buffer_probe(n)`` reports how many responses are
    currently buffered un-flushed (test instrumentation).
    """
    directory = Path(job.checkpoint_dir)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        for stale in directory.glob("chunk_*.jsonl"):
            stale.unlink()
    except OSError as exc:
        raise CheckpointIoError(f"cannot prepare checkpoint dir {directory}: {exc}") from exc
    manifest = CheckpointManifest(fingerprint=job.fingerprint(), total=len(job.requests))
    manifest.save(directory)
    return _execute_job(job, manifest, directory, progress, buffer_probe)


def resume(checkpoint_dir: str | Path, job: BatchJob, progress=None,
           *, buffer_probe=None) -> tuple[TableSet, list[BatchFailure]]:
    """Resume a previously interrupted job from its checkpoint directory.

    Completed requests are skipped (their rows come from chunk files);
    everything else — including previously failed requests — is fetched
    again, and the merged output is identical to an uninterrupted run.
    """
    directory = Path(checkpoint_dir)
    manifest = CheckpointManifest.load(directory)
    if manifest.fingerprint != job.fingerprint():
        raise ManifestMismatch(
            "checkpoint manifest fingerprint does not match the job's request list")
    manifest.failed = {}
    return _execute_job(job, manifest, directory, progress, buffer_probe)
