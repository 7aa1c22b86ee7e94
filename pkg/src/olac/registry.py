"""Registry of participating archives: the machine-readable archive list.

The registry answers three jobs: hand any service provider the current list
of archives and their provider base URLs; accept registrations, gated by a
liveness probe (the base URL must answer an identity request and claim the
archive id being registered); and accept whole repository files from the
editor UI, storing each at a public URL and registering it as an entry
served through the virtual-provider gateway.

State is an append-only journal of events (one JSON object per line),
replayed at startup. Repository files live as plain files next to it.
"""

from __future__ import annotations

import datetime
import email.parser
import email.policy
import hashlib
import json
import secrets
import threading
import urllib.parse
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

from . import protocol
from .httpbase import (
    HttpResult,
    TEXT_CONTENT_TYPE,
    TransportError,
    fetch,
)
from .metadata import ERROR, MetadataError
from .oryx import parse_oryx, validate_oryx
from .vocab import bundled_registry
from .xmlwriter import XML_DECLARATION, attrs, element

REGISTRY_NAMESPACE = "http://www.language-archives.org/OLAC/0.4/registry/"

KIND_NATIVE = "native"
KIND_VIDA = "vida-backed"
KINDS = (KIND_NATIVE, KIND_VIDA)


class RegistryError(Exception):
    pass


class RegistryConflict(RegistryError):
    """The archive id or base URL is already registered."""


class ProbeFailure(RegistryError):
    """The base URL did not answer the identity probe acceptably."""


@dataclass(frozen=True)
class RegistryEntry:
    archive_id: str
    base_url: str
    registered_on: datetime.date
    kind: str = KIND_NATIVE

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown registry kind {self.kind!r}")


def probe_identify(base_url: str, archive_id: str, timeout: float = 30.0) -> None:
    """Check that ``base_url`` answers the identity verb for ``archive_id``.

    Raises ProbeFailure with a diagnostic on any shortfall; returns None
    when the probe passes.
    """
    sep = "&" if "?" in base_url else "?"
    url = f"{base_url}{sep}verb=Identify"
    try:
        result = fetch(url, timeout=timeout)
    except TransportError as exc:
        raise ProbeFailure(f"probe could not reach {url}: {exc}") from None
    if result.status != 200:
        raise ProbeFailure(f"probe of {url} answered HTTP {result.status}")
    try:
        view = protocol.parse_response(result.body)
    except protocol.ResponseFormatError as exc:
        raise ProbeFailure(f"probe answer is not a protocol response: {exc}") from None
    if not view.ok:
        raise ProbeFailure(
            f"probe answered protocol error {view.error_code}: {view.error_message}"
        )
    payload = view.payload
    if payload is None or payload.tag != f"{{{protocol.PROTOCOL_NAMESPACE}}}Identify":
        raise ProbeFailure("probe answer carries no identity payload")
    claimed = payload.findtext(f"{{{protocol.PROTOCOL_NAMESPACE}}}archiveId", "")
    if claimed.strip() != archive_id:
        raise ProbeFailure(
            f"provider claims archive id {claimed.strip()!r}, not {archive_id!r}"
        )


class Registry:
    """Journal-backed archive list."""

    def __init__(self, journal_path: str | Path | None = None, *,
                 prober=probe_identify, clock=None):
        self._journal_path = Path(journal_path) if journal_path else None
        self._prober = prober
        self._clock = clock or (lambda: datetime.datetime.now(datetime.timezone.utc))
        self._lock = threading.Lock()
        self._entries: dict[str, RegistryEntry] = {}
        self._edit_tokens: dict[str, str] = {}
        if self._journal_path and self._journal_path.exists():
            self._replay()

    def _replay(self) -> None:
        assert self._journal_path is not None
        with self._journal_path.open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    event = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise RegistryError(
                        f"journal line {lineno} is not JSON: {exc}"
                    ) from None
                self._apply(event, lineno)

    def _apply(self, event: dict, lineno: int | None = None) -> None:
        where = f" (journal line {lineno})" if lineno else ""
        kind = event.get("event")
        if kind == "register":
            entry = RegistryEntry(
                archive_id=event["archiveId"],
                base_url=event["baseUrl"],
                registered_on=datetime.date.fromisoformat(event["registeredOn"]),
                kind=event.get("kind", KIND_NATIVE),
            )
            self._entries[entry.archive_id] = entry
        elif kind == "deregister":
            self._entries.pop(event["archiveId"], None)
        elif kind == "editToken":
            self._edit_tokens[event["archiveId"]] = event["token"]
        else:
            raise RegistryError(f"unknown journal event {kind!r}{where}")

    def _append(self, event: dict) -> None:
        if self._journal_path is None:
            return
        with self._journal_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    def entries(self) -> list[RegistryEntry]:
        with self._lock:
            return sorted(self._entries.values(), key=lambda e: e.archive_id)

    def get(self, archive_id: str) -> RegistryEntry | None:
        with self._lock:
            return self._entries.get(archive_id)

    def register(self, archive_id: str, base_url: str, kind: str = KIND_NATIVE,
                 *, probe: bool = True, replace: bool = False) -> RegistryEntry:
        if kind not in KINDS:
            raise RegistryError(f"unknown registry kind {kind!r}")
        if not archive_id or not base_url:
            raise RegistryError("registration needs archiveId and baseUrl")
        with self._lock:
            existing = self._entries.get(archive_id)
            if existing is not None and not replace:
                raise RegistryConflict(f"archive id {archive_id!r} already registered")
            for other in self._entries.values():
                if other.base_url == base_url and other.archive_id != archive_id:
                    raise RegistryConflict(f"base URL already registered: {base_url}")
        if probe:
            self._prober(base_url, archive_id)
        entry = RegistryEntry(
            archive_id=archive_id, base_url=base_url,
            registered_on=self._clock().date(), kind=kind,
        )
        with self._lock:
            current = self._entries.get(archive_id)
            if current is not None and not replace:
                raise RegistryConflict(f"archive id {archive_id!r} already registered")
            self._entries[archive_id] = entry
            self._append(
                {
                    "event": "register",
                    "archiveId": entry.archive_id,
                    "baseUrl": entry.base_url,
                    "registeredOn": entry.registered_on.isoformat(),
                    "kind": entry.kind,
                }
            )
        return entry

    def deregister(self, archive_id: str) -> None:
        with self._lock:
            if archive_id not in self._entries:
                raise RegistryError(f"archive id {archive_id!r} is not registered")
            del self._entries[archive_id]
            self._append({"event": "deregister", "archiveId": archive_id})

    # -- edit tokens (issued at first publish, required thereafter) ---------

    def edit_token(self, archive_id: str) -> str | None:
        with self._lock:
            return self._edit_tokens.get(archive_id)

    def issue_edit_token(self, archive_id: str) -> str:
        token = secrets.token_urlsafe(16)
        with self._lock:
            self._edit_tokens[archive_id] = token
            self._append({"event": "editToken", "archiveId": archive_id, "token": token})
        return token


def archive_list_xml(entries: list[RegistryEntry]) -> str:
    lines = [XML_DECLARATION, f'<archiveList xmlns="{REGISTRY_NAMESPACE}">']
    for entry in entries:
        lines.append(
            "  <archive"
            + attrs(
                (
                    ("id", entry.archive_id),
                    ("baseUrl", entry.base_url),
                    ("registered", entry.registered_on.isoformat()),
                    ("kind", entry.kind),
                )
            )
            + "/>"
        )
    lines.append("</archiveList>")
    return "\n".join(lines) + "\n"


def parse_archive_list(xml_text: str | bytes) -> list[RegistryEntry]:
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise RegistryError(f"archive list is not well-formed XML: {exc}") from None
    if root.tag != f"{{{REGISTRY_NAMESPACE}}}archiveList":
        raise RegistryError(f"unexpected archive-list root {root.tag}")
    entries = []
    for child in root:
        if child.tag != f"{{{REGISTRY_NAMESPACE}}}archive":
            raise RegistryError(f"unexpected archive-list element {child.tag}")
        entries.append(
            RegistryEntry(
                archive_id=child.get("id", ""),
                base_url=child.get("baseUrl", ""),
                registered_on=datetime.date.fromisoformat(
                    child.get("registered", "")
                ),
                kind=child.get("kind", KIND_NATIVE),
            )
        )
    return entries


def fetch_archive_list(registry_url: str, timeout: float = 30.0) -> list[RegistryEntry]:
    """Fetch and parse a registry's archive list over HTTP."""
    url = registry_url.rstrip("/") + "/register/archive_list"
    result = fetch(url, timeout=timeout)
    if result.status != 200:
        raise RegistryError(f"archive list at {url} answered HTTP {result.status}")
    return parse_archive_list(result.body)


def _xml_message(root_name: str, pairs: tuple[tuple[str, str], ...],
                 text_children: tuple[tuple[str, str], ...] = ()) -> bytes:
    ns = (("xmlns", REGISTRY_NAMESPACE),)
    lines = [XML_DECLARATION]
    if text_children:
        lines.append(f"<{root_name}{attrs(ns + pairs)}>")
        for name, value in text_children:
            lines.append("  " + element(name, value))
        lines.append(f"</{root_name}>")
    else:
        lines.append(f"<{root_name}{attrs(ns + pairs)}/>")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _parse_multipart(content_type: str, body: bytes) -> dict[str, bytes]:
    """Extract named parts from a multipart/form-data body."""
    head = (
        f"Content-Type: {content_type}\r\nMIME-Version: 1.0\r\n\r\n"
    ).encode("ascii")
    message = email.parser.BytesParser(policy=email.policy.default).parsebytes(
        head + body
    )
    if not message.is_multipart():
        raise ValueError("body is not multipart/form-data")
    parts: dict[str, bytes] = {}
    for part in message.iter_parts():
        name = part.get_param("name", header="content-disposition")
        if name:
            payload = part.get_payload(decode=True)
            parts[str(name)] = payload if payload is not None else b""
    return parts


class RegistryApp:
    """HTTP face of the registry: list, register, publish, serve repository files.

    ``public_url`` is the externally reachable base of this very service
    (used to compose the URLs of stored repository files); ``vida_url`` is
    the gateway that serves published files as data providers.
    """

    def __init__(self, registry: Registry, *, oryx_dir: str | Path | None = None,
                 public_url: str = "", vida_url: str = ""):
        self.registry = registry
        self.oryx_dir = Path(oryx_dir) if oryx_dir else None
        self.public_url = public_url.rstrip("/")
        self.vida_url = vida_url
        self._vocabs = bundled_registry()

    # -- helpers -------------------------------------------------------------

    def _error(self, status: int, message: str, **extra: str) -> HttpResult:
        pairs = tuple(sorted(extra.items()))
        return HttpResult(
            status=status,
            body=_xml_message("registryError", pairs, (("message", message),)),
        )

    def oryx_url_for(self, archive_id: str) -> str:
        return f"{self.public_url}/oryx/{urllib.parse.quote(archive_id)}.xml"

    def vida_base_for(self, oryx_url: str) -> str:
        return f"{self.vida_url}?oryx={urllib.parse.quote(oryx_url, safe='')}"

    # -- endpoints -----------------------------------------------------------

    def _archive_list(self) -> HttpResult:
        return HttpResult(body=archive_list_xml(self.registry.entries()).encode("utf-8"))

    def _register(self, body: bytes) -> HttpResult:
        fields = dict(urllib.parse.parse_qsl(body.decode("utf-8", "replace"),
                                             keep_blank_values=True))
        archive_id = fields.get("archiveId", "")
        base_url = fields.get("baseUrl", "")
        kind = fields.get("kind", KIND_NATIVE)
        try:
            entry = self.registry.register(archive_id, base_url, kind)
        except RegistryConflict as exc:
            return self._error(409, str(exc))
        except ProbeFailure as exc:
            return self._error(502, str(exc))
        except RegistryError as exc:
            return self._error(400, str(exc))
        return HttpResult(
            body=_xml_message(
                "registered",
                (
                    ("id", entry.archive_id),
                    ("baseUrl", entry.base_url),
                    ("kind", entry.kind),
                ),
            )
        )

    def _publish(self, content_type: str, body: bytes) -> HttpResult:
        if self.oryx_dir is None:
            return self._error(400, "this registry does not accept published files")
        try:
            parts = _parse_multipart(content_type, body)
        except (ValueError, KeyError) as exc:
            return self._error(400, f"unreadable multipart body: {exc}")
        oryx_bytes = parts.get("oryx")
        if oryx_bytes is None:
            return self._error(400, "multipart body lacks the 'oryx' part")
        try:
            document = parse_oryx(oryx_bytes.decode("utf-8"))
        except (MetadataError, UnicodeDecodeError) as exc:
            return self._error(400, f"repository file is not readable: {exc}")
        report = validate_oryx(document, self._vocabs)
        if not report.ok:
            lines = [XML_DECLARATION, f'<publishError xmlns="{REGISTRY_NAMESPACE}">']
            for finding in report.document_findings:
                if finding.severity == ERROR:
                    lines.append(
                        "  " + element("finding", finding.message, ())
                    )
            for rec in report.record_reports:
                for finding in rec.findings:
                    if finding.severity != ERROR:
                        continue
                    pairs = [("identifier", rec.record_id or "")]
                    if finding.element_index is not None:
                        pairs.append(("element", str(finding.element_index)))
                    lines.append(
                        "  " + element("finding", finding.message, tuple(pairs))
                    )
            lines.append("</publishError>")
            return HttpResult(
                status=422, body=("\n".join(lines) + "\n").encode("utf-8")
            )
        archive_id = document.identity.archive_id
        known_token = self.registry.edit_token(archive_id)
        offered = parts.get("editToken", b"").decode("utf-8", "replace")
        if known_token is not None and offered != known_token:
            return self._error(403, f"wrong edit token for archive {archive_id!r}")
        self.oryx_dir.mkdir(parents=True, exist_ok=True)
        path = self.oryx_dir / f"{archive_id}.xml"
        path.write_bytes(oryx_bytes)
        oryx_url = self.oryx_url_for(archive_id)
        base_url = self.vida_base_for(oryx_url)
        try:
            self.registry.register(archive_id, base_url, KIND_VIDA, replace=True)
        except ProbeFailure as exc:
            return self._error(502, str(exc))
        except RegistryError as exc:
            return self._error(409, str(exc))
        token = known_token or self.registry.issue_edit_token(archive_id)
        return HttpResult(
            body=_xml_message(
                "published",
                (
                    ("archiveId", archive_id),
                    ("oryxUrl", oryx_url),
                    ("baseUrl", base_url),
                    ("editToken", token),
                    ("records", str(len(document.envelopes))),
                ),
            )
        )

    def _serve_oryx(self, path: str, headers) -> HttpResult:
        if self.oryx_dir is None:
            return self._error(404, "no published files here")
        name = urllib.parse.unquote(path[len("/oryx/"):])
        if "/" in name or not name.endswith(".xml"):
            return self._error(404, f"no such file {name!r}")
        file_path = self.oryx_dir / name
        if not file_path.is_file():
            return self._error(404, f"no such file {name!r}")
        data = file_path.read_bytes()
        etag = '"' + hashlib.sha256(data).hexdigest()[:16] + '"'
        mtime = file_path.stat().st_mtime
        last_modified = datetime.datetime.fromtimestamp(
            mtime, datetime.timezone.utc
        ).strftime("%a, %d %b %Y %H:%M:%S GMT")
        caching = (("ETag", etag), ("Last-Modified", last_modified))
        if headers is not None and headers.get("If-None-Match") == etag:
            return HttpResult(status=304, body=b"", headers=caching)
        return HttpResult(body=data, headers=caching)

    def handle(self, method: str, path: str, query: str, body: bytes,
               headers) -> HttpResult:
        if method in ("GET", "HEAD"):
            if path == "/register/archive_list":
                return self._archive_list()
            if path.startswith("/oryx/"):
                return self._serve_oryx(path, headers)
            return self._error(404, f"no such endpoint {path!r}")
        if method == "POST":
            if path == "/register":
                return self._register(body)
            if path == "/publish":
                content_type = ""
                if headers is not None:
                    content_type = headers.get("Content-Type", "")
                return self._publish(content_type, body)
            return self._error(404, f"no such endpoint {path!r}")
        return HttpResult(
            status=405, body=b"method not allowed\n", content_type=TEXT_CONTENT_TYPE
        )
