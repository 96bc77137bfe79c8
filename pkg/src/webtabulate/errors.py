"""Exception hierarchy shared by all webtabulate modules."""


class WebTabulateError(Exception):
    """Base class for every error raised by this package."""


# --- document parsing ---

class MalformedDocument(WebTabulateError):
    """A body that claimed to be JSON/XML/YAML failed to parse."""

    def __init__(self, message: str, position: str | None = None):
        self.position = position
        super().__init__(f"{message} (at {position})" if position else message)


class MultiDocumentUnsupported(WebTabulateError):
    """YAML streams with more than one document are rejected."""


class UnparseableBody(WebTabulateError):
    """No applicable parser could make sense of the response body."""


class NonTextBody(WebTabulateError):
    """The body bytes are not valid UTF-8 text."""


# --- HTTP gateway ---

class InvalidBaseUrl(WebTabulateError):
    """The base URL is not an absolute http(s) URL."""


class TransportError(WebTabulateError):
    """DNS/connect/timeout failure that persisted through all retries."""


class HttpStatusError(WebTabulateError):
    """Final response carried a 4xx/5xx status."""

    def __init__(self, status: int, url: str, snippet: str = ""):
        self.status = status
        self.url = url
        self.snippet = snippet
        super().__init__(f"HTTP {status} for {url}" + (f": {snippet}" if snippet else ""))


class BinaryBodyError(WebTabulateError):
    """The decompressed response body is binary, not UTF-8 text."""


class ArchiveError(WebTabulateError):
    """A compressed body was an archive with zero or multiple entries."""


# --- tables ---

class NameMismatch(WebTabulateError):
    """Attempted to bind two tables with different names."""


class SinkError(WebTabulateError):
    """Writing serialized table data failed."""


# --- batch jobs ---

class CheckpointIoError(WebTabulateError):
    """Reading or writing checkpoint files failed."""


class ManifestMismatch(WebTabulateError):
    """Checkpoint manifest does not belong to the job being resumed."""


class CheckpointCorrupt(WebTabulateError):
    """A chunk file referenced by the manifest is missing or invalid."""


class FirstFailure(WebTabulateError):
    """A request failed and the job was configured to abort on failure."""

    def __init__(self, index: int, cause: Exception):
        self.index = index
        self.cause = cause
        super().__init__(f"request {index} failed: {cause}")


# --- endpoint clients ---

class SpecInvalid(WebTabulateError):
    """An endpoint spec violates its own invariants."""


class SpecFileInvalid(WebTabulateError):
    """An endpoint spec file is missing fields or unreadable."""


class MissingParameter(WebTabulateError):
    """A required endpoint parameter was not supplied."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"missing required parameter: {name}")


class UnknownParameter(WebTabulateError):
    """An argument was passed that the endpoint does not declare."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown parameter: {name}")


# --- rendering ---

class UnsupportedFormat(WebTabulateError):
    """Requested output format is not one of the supported choices."""
