"""URL construction and robust HTTP retrieval.

``execute`` wraps a GET with redirect capping, retry-with-backoff for
transport errors and 5xx responses, transparent decompression (including
gzip/zip bodies served without a Content-Encoding header), and a
binary-content check, so callers only ever see decoded text bodies.
"""

from __future__ import annotations

import gzip
import io
import os
import string
import threading
import time
import zipfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from urllib.parse import urlsplit

import requests

from .errors import (
    ArchiveError,
    BinaryBodyError,
    HttpStatusError,
    InvalidBaseUrl,
    TransportError,
)
from .ingest import MimeKind, TreeNode, mime_from_content_type, sniff_and_parse

__all__ = ["ApiRequest", "ApiResponse", "build_url", "execute", "fetch_tree"]

try:
    _VERSION = metadata.version("webtabulate")
except metadata.PackageNotFoundError:  # running from a source tree
    _VERSION = "0.1.0"


def default_timeout() -> float:
    return float(os.environ.get("WEBTABULATE_TIMEOUT_SECS", "30"))


def default_user_agent() -> str:
    return os.environ.get("WEBTABULATE_USER_AGENT", f"webtabulate/{_VERSION}")


@dataclass
class ApiRequest:
    """Description of one GET request; treat as immutable once built."""

    base_url: str
    params: list[tuple[str, str]] = field(default_factory=list)
    headers: list[tuple[str, str]] = field(default_factory=list)
    timeout: float = field(default_factory=default_timeout)
    max_retries: int = 3
    politeness_delay: int = 0  # milliseconds between request starts per host

    def url(self) -> str:
        return build_url(self.base_url, self.params)


@dataclass
class ApiResponse:
    """Complete record of one retrieval; immutable once returned."""

    request: ApiRequest
    final_url: str
    status: int
    headers: list[tuple[str, str]]
    body: bytes  # decompressed payload
    mime: MimeKind
    retrieved_at: datetime
    attempts: int

    def header(self, name: str) -> str | None:
        wanted = name.lower()
        for key, value in self.headers:
            if key.lower() == wanted:
                return value
        return None


# RFC 3986 unreserved characters plus query-legal ':', '@' and '/';
# everything else (notably '&', '=', '+', '#', space) is percent-encoded.
_SAFE = set(string.ascii_letters + string.digits + "-._~" + ":@/")


def _encode_component(text: str) -> str:
    out = []
    for byte in text.encode("utf-8"):
        ch = chr(byte)
        out.append(ch if ch in _SAFE else f"%{byte:02X}")
    return "".join(out)


def _check_base_url(base_url: str) -> None:
    parts = urlsplit(base_url)
    if parts.scheme not in ("http", "https") or not parts.netloc:
        raise InvalidBaseUrl(f"not an absolute http(s) URL: {base_url!r}")


def build_url(base_url: str, params) -> str:
    """Append percent-encoded name=value pairs to a base URL.

    Parameter order is preserved; a base that already ends in '?' or '&'
    (or already carries a query) is extended in place.  The result is
    never re-encoded by later stages.
    """
    _check_base_url(base_url)
    pairs = list(params)
    if not pairs:
        return base_url
    for name, _ in pairs:
        if not name:
            raise InvalidBaseUrl("parameter names must be non-empty")
    query = "&".join(f"{_encode_component(n)}={_encode_component(v)}" for n, v in pairs)
    if base_url.endswith(("?", "&")):
        return base_url + query
    if "?" in base_url:
        return base_url + "&" + query
    return base_url + "?" + query


_host_lock = threading.Lock()
_host_last_start: dict[str, float] = {}


def _politeness_wait(url: str, delay_ms: int, sleeper) -> None:
    if delay_ms <= 0:
        return
    host = urlsplit(url).netloc
    delay = delay_ms / 1000.0
    with _host_lock:
        now = time.monotonic()
        start_at = max(now, _host_last_start.get(host, 0.0) + delay)
        _host_last_start[host] = start_at
    if start_at > now:
        sleeper(start_at - now)


def _unwrap_archives(body: bytes) -> bytes:
    for _ in range(3):  # tolerate e.g. a gzip member inside a zip
        if body[:2] == b"\x1f\x8b":
            try:
                body = gzip.decompress(body)
            except OSError as exc:
                raise ArchiveError(f"gzip body could not be decompressed: {exc}") from exc
        elif body[:4] == b"PK\x03\x04":
            try:
                with zipfile.ZipFile(io.BytesIO(body)) as zf:
                    entries = [n for n in zf.namelist() if not n.endswith("/")]
                    if len(entries) != 1:
                        raise ArchiveError(
                            f"zip body must contain exactly one entry, found {len(entries)}")
                    body = zf.read(entries[0])
            except zipfile.BadZipFile as exc:
                raise ArchiveError(f"zip body could not be read: {exc}") from exc
        else:
            return body
    return body


def execute(request: ApiRequest, *, sleeper=time.sleep) -> ApiResponse:
    """Perform the GET described by ``request`` and return the full record.

    Transport errors and 5xx responses are retried with exponential
    backoff (1s, 2s, 4s, ...) up to ``max_retries`` extra attempts; 4xx
    responses fail immediately.  At most 5 redirects are followed.
    """
    url = request.url()
    headers = {"User-Agent": default_user_agent()}
    headers.update(request.headers)

    attempts = 0
    backoff = 1.0
    response = None
    while True:
        attempts += 1
        _politeness_wait(url, request.politeness_delay, sleeper)
        try:
            with requests.Session() as session:
                session.max_redirects = 5
                response = session.get(url, headers=headers, timeout=request.timeout,
                                       allow_redirects=True)
        except requests.TooManyRedirects as exc:
            raise TransportError(f"redirect limit exceeded for {url}") from exc
        except (requests.ConnectionError, requests.Timeout) as exc:
            if attempts > request.max_retries:
                raise TransportError(f"request to {url} failed after "
                                     f"{attempts} attempts: {exc}") from exc
            sleeper(backoff)
            backoff *= 2
            continue
        if response.status_code >= 500 and attempts <= request.max_retries:
            sleeper(backoff)
            backoff *= 2
            continue
        break

    if response.status_code >= 400:
        snippet = response.content[:200].decode("utf-8", errors="replace")
        raise HttpStatusError(response.status_code, url, snippet)

    body = _unwrap_archives(response.content)
    try:
        body.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise BinaryBodyError(f"response body from {url} is not UTF-8 text") from exc

    return ApiResponse(
        request=request,
        final_url=response.url,
        status=response.status_code,
        headers=list(response.headers.items()),
        body=body,
        mime=mime_from_content_type(response.headers.get("Content-Type")),
        retrieved_at=datetime.now(timezone.utc),
        attempts=attempts,
    )


def fetch_tree(url_or_request: str | ApiRequest, *, sleeper=time.sleep) -> tuple[ApiResponse, TreeNode]:
    """Execute a request and parse its body into a tree in one step."""
    if isinstance(url_or_request, str):
        _check_base_url(url_or_request)
        request = ApiRequest(base_url=url_or_request)
    else:
        request = url_or_request
    response = execute(request, sleeper=sleeper)
    tree, kind = sniff_and_parse(response.body, response.header("Content-Type"))
    response.mime = kind
    return response, tree
