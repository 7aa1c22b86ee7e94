"""Virtual data provider: the full provider interface over a remote repository file.

An archive that can publish one XML file on any web server gets a live,
protocol-speaking data provider without running code of its own: clients
append the file's web address to this gateway's URL (as the ``oryx`` query
parameter) and use the combined address as the provider base URL.

Fetched documents are cached per URL with a TTL; conditional requests
(ETag / Last-Modified) avoid re-downloading unchanged files, and a re-fetch
failure inside the grace of an existing binding serves the cached copy with
a staleness warning in the logs.
"""

from __future__ import annotations

import datetime
import logging
import threading
import time
import urllib.parse
from dataclasses import dataclass

from .httpbase import FetchResult, HttpResult, TransportError, fetch
from .metadata import MetadataError
from .oryx import OryxDocument, parse_oryx
from .protocol import ProtocolFault, BAD_ARGUMENT, render_fault
from .provider import DEFAULT_PAGE_SIZE, Provider, ProviderStore
from .xmlwriter import XML_DECLARATION, element

log = logging.getLogger(__name__)

DEFAULT_CACHE_TTL = 3600.0

GATEWAY_NAMESPACE = "http://www.language-archives.org/OLAC/0.4/gateway/"


class GatewayError(Exception):
    """The remote repository file could not be fetched or understood."""


@dataclass
class VidaBinding:
    oryx_url: str
    document: OryxDocument
    fetched_at: float  # monotonic seconds
    etag: str | None = None
    last_modified: str | None = None


class VidaGateway:
    """Per-URL bindings of remote repository files, with single-flight fetches."""

    def __init__(self, *, cache_ttl: float = DEFAULT_CACHE_TTL,
                 page_size: int = DEFAULT_PAGE_SIZE, base_url: str = "",
                 fetcher=fetch, clock=None, monotonic=time.monotonic):
        self.cache_ttl = cache_ttl
        self.page_size = page_size
        self.base_url = base_url
        self._fetcher = fetcher
        self._clock = clock  # protocol clock, passed through to providers
        self._monotonic = monotonic
        self._bindings: dict[str, VidaBinding] = {}
        self._url_locks: dict[str, threading.Lock] = {}
        self._master = threading.Lock()

    def _lock_for(self, url: str) -> threading.Lock:
        with self._master:
            lock = self._url_locks.get(url)
            if lock is None:
                lock = self._url_locks[url] = threading.Lock()
            return lock

    def _serve_stale(self, binding: VidaBinding, cause: Exception,
                     now: float) -> VidaBinding:
        log.warning(
            "re-fetch of %s failed (%s); serving stale copy",
            binding.oryx_url, cause,
        )
        binding.fetched_at = now
        return binding

    def _parse_fetched(self, url: str, result: FetchResult) -> OryxDocument:
        if result.status != 200:
            raise GatewayError(f"fetch of {url} answered HTTP {result.status}")
        try:
            return parse_oryx(result.body.decode("utf-8"))
        except (MetadataError, UnicodeDecodeError) as exc:
            raise GatewayError(f"document at {url} is not readable: {exc}") from None

    def resolve(self, oryx_url: str) -> VidaBinding:
        """Return a fresh-enough binding for the URL, fetching as needed.

        Concurrent callers for the same unfetched URL trigger exactly one
        fetch (per-URL lock); distinct URLs fetch independently.
        """
        lock = self._lock_for(oryx_url)
        with lock:
            binding = self._bindings.get(oryx_url)
            now = self._monotonic()
            if binding is not None and now - binding.fetched_at < self.cache_ttl:
                return binding
            headers: dict[str, str] = {}
            if binding is not None:
                if binding.etag:
                    headers["If-None-Match"] = binding.etag
                if binding.last_modified:
                    headers["If-Modified-Since"] = binding.last_modified
            try:
                result = self._fetcher(oryx_url, request_headers=headers)
            except TransportError as exc:
                if binding is not None:
                    return self._serve_stale(binding, exc, now)
                raise GatewayError(f"cannot fetch {oryx_url}: {exc}") from None
            if result.status == 304 and binding is not None:
                binding.fetched_at = now
                return binding
            try:
                document = self._parse_fetched(oryx_url, result)
            except GatewayError as exc:
                if binding is not None:
                    return self._serve_stale(binding, exc, now)
                raise
            binding = VidaBinding(
                oryx_url=oryx_url,
                document=document,
                fetched_at=now,
                etag=result.headers.get("ETag"),
                last_modified=result.headers.get("Last-Modified"),
            )
            self._bindings[oryx_url] = binding
            return binding

    def composed_base_url(self, oryx_url: str) -> str:
        return f"{self.base_url}?oryx={urllib.parse.quote(oryx_url, safe='')}"

    def handle_query(self, query: str) -> tuple[int, str]:
        """Answer one gateway query; returns (HTTP status, XML body).

        Protocol outcomes (including in-band faults) are HTTP 200; a broken
        or unreachable repository file is a gateway problem and surfaces as
        HTTP 502 with a diagnostic document, since none of the six protocol
        fault codes describes it.
        """
        pairs = urllib.parse.parse_qsl(query, keep_blank_values=True)
        oryx_urls = [value for key, value in pairs if key == "oryx"]
        now = (self._clock or _default_clock)()
        response_date = now.strftime("%Y-%m-%dT%H:%M:%SZ")
        if len(oryx_urls) != 1 or not oryx_urls[0]:
            fault = ProtocolFault(
                BAD_ARGUMENT,
                "gateway requests need exactly one non-empty 'oryx' argument",
            )
            return 200, render_fault(self.base_url, (), fault, response_date)
        oryx_url = oryx_urls[0]
        try:
            binding = self.resolve(oryx_url)
        except GatewayError as exc:
            body = "\n".join(
                [
                    XML_DECLARATION,
                    f'<gatewayError xmlns="{GATEWAY_NAMESPACE}">',
                    "  " + element("message", str(exc)),
                    "</gatewayError>",
                ]
            ) + "\n"
            return 502, body
        provider = Provider(
            ProviderStore.from_document(binding.document),
            page_size=self.page_size,
            base_url=self.composed_base_url(oryx_url),
            clock=self._clock,
        )
        return 200, provider.handle_query(query, extra_legal=frozenset({"oryx"}))


def _default_clock() -> datetime.datetime:
    return datetime.datetime.now(datetime.timezone.utc)


class VidaApp:
    """HTTP face of the gateway."""

    def __init__(self, gateway: VidaGateway):
        self.gateway = gateway

    def handle(self, method: str, path: str, query: str, body: bytes,
               headers) -> HttpResult:
        if method == "POST" and body:
            query = body.decode("utf-8", "replace")
        status, text = self.gateway.handle_query(query)
        return HttpResult(body=text.encode("utf-8"), status=status)
