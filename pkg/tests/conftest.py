"""Shared fixtures: the dictionary-record fixture, document builders, servers."""

from __future__ import annotations

import datetime
import secrets
import threading
import urllib.error
import urllib.request

import functools

import pytest

from olac.catalog import Query, tokenize as _tokenize
from olac.httpbase import FetchResult, HttpResult, make_server, server_url, start_in_thread
from olac.metadata import MetadataElement, OlacRecord, parse_record
from olac.oryx import (
    ArchiveDescription,
    ArchiveIdentity,
    OryxDocument,
    RecordEnvelope,
)
from olac.vocab import bundled_registry

# An electronic-dictionary description exercising every attribute form:
# plain content, code-only elements, and a refined date.
LIMBU_XML = """\
<olac xmlns="http://www.language-archives.org/OLAC/0.4/">
  <title>Limbu-English Dictionary</title>
  <creator>Michailovsky, Boyd</creator>
  <date code="2002-05-22" refine="modified"/>
  <description>The XML source for a dictionary of the Limbu language of Nepal, consisting of approximately 2,000 entries. (Size: 1.2M)</description>
  <format code="text/xml"/>
  <publisher>LACITO Project, Centre National de la Recherche Scientifique (CNRS)</publisher>
  <language code="en"/>
  <subject.language code="x-sil-LIF"/>
  <type code="Text"/>
  <type.linguistic code="lexicon/dictionary"/>
  <identifier>http://lacito.archivage.vjf.cnrs.fr/archives/Nepal/Limbu/dicoLimbu.xml</identifier>
</olac>
"""


@pytest.fixture(scope="session")
def vocabs():
    return bundled_registry()


@pytest.fixture(scope="session")
def limbu_xml():
    return LIMBU_XML


@pytest.fixture()
def limbu_record():
    return parse_record(LIMBU_XML)


def make_identity(archive_id: str, base_url: str = "", **overrides) -> ArchiveIdentity:
    description = overrides.pop("description", None) or ArchiveDescription(
        curator="Pat Curator",
        curator_email="curator@example.org",
        institution="Example Institute",
        institution_url="http://inst.example.org/",
        short_location="Nowhere, NW",
        synopsis=f"Test archive {archive_id}.",
    )
    return ArchiveIdentity(
        archive_id=archive_id,
        repository_name=overrides.pop("repository_name", f"{archive_id} repository"),
        base_url=base_url or f"http://{archive_id}.example.org/provider",
        admin_email=overrides.pop("admin_email", "admin@example.org"),
        description=description,
    )


def simple_record(i: int, extra_title: str = "") -> OlacRecord:
    return OlacRecord(elements=(
        MetadataElement("title", f"Resource {i:04d}{extra_title}"),
        MetadataElement("language", code="en"),
        MetadataElement("type", code="Text"),
    ))


def make_document(archive_id: str, count: int,
                  start_day: datetime.date = datetime.date(2002, 5, 1),
                  day_spread: int = 5) -> OryxDocument:
    """A valid repository with `count` records across `day_spread` datestamps."""
    envelopes = []
    for i in range(count):
        envelopes.append(RecordEnvelope(
            identifier=f"oai:{archive_id}:rec{i:05d}",
            datestamp=start_day + datetime.timedelta(days=i % day_spread),
            record=simple_record(i),
        ))
    return OryxDocument(make_identity(archive_id), tuple(envelopes))


class StaticFileApp:
    """Serves one mutable byte blob at every path; counts fetches."""

    def __init__(self, body: bytes, content_type: str = "text/xml; charset=utf-8"):
        self.body = body
        self.content_type = content_type
        self.fetches = 0
        self.etag: str | None = None
        self.fail = False
        self._lock = threading.Lock()

    def handle(self, method, path, query, body, headers):
        with self._lock:
            self.fetches += 1
            if self.fail:
                raise ConnectionError("configured to fail")
            extra = []
            if self.etag:
                if headers.get("If-None-Match") == self.etag:
                    return HttpResult(b"", status=304, headers=(("ETag", self.etag),))
                extra.append(("ETag", self.etag))
            return HttpResult(self.body, content_type=self.content_type,
                              headers=tuple(extra))


def multipart_body(parts: dict[str, bytes]) -> tuple[str, bytes]:
    """Compose named byte parts into (content type, multipart/form-data body)."""
    boundary = "----part-" + secrets.token_hex(12)
    chunks = []
    for name, payload in parts.items():
        chunks.append(f"--{boundary}\r\n".encode("ascii"))
        chunks.append(
            (
                f'Content-Disposition: form-data; name="{name}"\r\n'
                "Content-Type: application/octet-stream\r\n\r\n"
            ).encode("ascii")
        )
        chunks.append(payload + b"\r\n")
    chunks.append(f"--{boundary}--\r\n".encode("ascii"))
    return f"multipart/form-data; boundary={boundary}", b"".join(chunks)


def post_multipart(url: str, parts: dict[str, bytes],
                   timeout: float = 30.0) -> FetchResult:
    """POST named byte parts as multipart/form-data; error statuses are results."""
    content_type, body = multipart_body(parts)
    req = urllib.request.Request(
        url, data=body, headers={"Content-Type": content_type}
    )
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return FetchResult(
                status=resp.status, body=resp.read(), headers=dict(resp.headers)
            )
    except urllib.error.HTTPError as exc:
        return FetchResult(status=exc.code, body=exc.read(), headers=dict(exc.headers))


@pytest.fixture()
def run_app():
    """Start apps on loopback; every server shuts down at test exit."""
    servers = []

    def _run(app) -> str:
        server = make_server(app)
        start_in_thread(server)
        servers.append(server)
        return server_url(server).rstrip("/")

    yield _run
    for server in servers:
        server.shutdown()
        server.server_close()


# Memoized so reference scans stay affordable on ten-thousand-row corpora;
# callers treat the returned list as read-only.
tokenize = functools.lru_cache(maxsize=None)(_tokenize)


def linear_scan(rows: list[tuple[str, RecordEnvelope]], query: Query):
    """Independent reference search: no indexes, straight set semantics."""

    def element_has_token(entry_elements, element_name, token):
        for element in entry_elements:
            if element_name is not None and element.name != element_name:
                continue
            if token in tokenize(element.content):
                return True
        return False

    matches = []
    for archive, envelope in rows:
        elements = envelope.record.elements
        if query.archive is not None and archive != query.archive:
            continue
        if not all(
            any(e.name == name and e.code == code for e in elements)
            for name, code in query.code_filters
        ):
            continue
        if not all(
            element_has_token(elements, name, token)
            for name, term in query.text_terms
            for token in tokenize(term)
        ):
            continue
        matches.append((archive, envelope))
    matches.sort(key=lambda pair: (pair[0], pair[1].identifier))

    facet_counts = []
    for facet_element in query.facets:
        counts: dict[str, int] = {}
        for _, envelope in matches:
            for code in {
                e.code for e in envelope.record.elements
                if e.name == facet_element and e.code is not None
            }:
                counts[code] = counts.get(code, 0) + 1
        facet_counts.append((facet_element, tuple(sorted(counts.items()))))

    window = matches[query.offset:]
    if query.limit is not None:
        window = window[: query.limit]
    return (
        len(matches),
        [envelope.identifier for _, envelope in window],
        tuple(facet_counts),
    )
