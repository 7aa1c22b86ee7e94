"""Data-provider side of the harvesting protocol.

A ProviderStore is the mutable counterpart of a repository document: archive
identity plus a map of local id to record envelope, safe for many readers
and serialized writers. A Provider answers the six protocol verbs against
a store; ProviderApp exposes it over HTTP on a single base URL.
"""

from __future__ import annotations

import datetime
import threading
from pathlib import Path
from typing import Callable, Iterable

from . import protocol
from .httpbase import HttpResult
from .metadata import DC_NAMESPACE, OLAC_NAMESPACE, OlacRecord
from .oryx import (
    ArchiveIdentity,
    OryxDocument,
    RecordEnvelope,
    description_lines,
    format_day,
    parse_oryx,
    serialize_oryx,
    split_identifier,
)
from .protocol import (
    BAD_ARGUMENT,
    CANNOT_DISSEMINATE_FORMAT,
    ID_DOES_NOT_EXIST,
    NO_RECORDS_MATCH,
    PREFIX_DC,
    PREFIX_OLAC,
    PageCursor,
    ProtocolFault,
    ProtocolRequest,
)
from .xmlwriter import element

DEFAULT_PAGE_SIZE = 500

# Published schema locations for the two metadata formats.
FORMAT_SCHEMAS = {
    PREFIX_OLAC: ("http://www.language-archives.org/OLAC/0.4/olac.xsd", OLAC_NAMESPACE),
    PREFIX_DC: ("http://www.language-archives.org/OLAC/0.4/dc.xsd", DC_NAMESPACE),
}

Clock = Callable[[], datetime.datetime]


def _utc_now() -> datetime.datetime:
    return datetime.datetime.now(datetime.timezone.utc)


class ProviderStore:
    """Archive identity plus local-id -> envelope map; thread-safe."""

    def __init__(self, identity: ArchiveIdentity,
                 envelopes: Iterable[RecordEnvelope] = ()):
        self._identity = identity
        self._lock = threading.Lock()
        self._by_local: dict[str, RecordEnvelope] = {}
        for env in envelopes:
            if env.archive_segment != identity.archive_id:
                raise ValueError(
                    f"envelope {env.identifier} does not belong to "
                    f"archive {identity.archive_id!r}"
                )
            if env.local_id in self._by_local:
                raise ValueError(f"duplicate identifier: {env.identifier}")
            self._by_local[env.local_id] = env

    @classmethod
    def from_document(cls, doc: OryxDocument) -> "ProviderStore":
        return cls(doc.identity, doc.envelopes)

    @classmethod
    def load(cls, path: str | Path) -> "ProviderStore":
        return cls.from_document(parse_oryx(Path(path).read_text("utf-8")))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(serialize_oryx(self.to_document()), "utf-8")

    @property
    def identity(self) -> ArchiveIdentity:
        return self._identity

    def to_document(self) -> OryxDocument:
        with self._lock:
            envelopes = sorted(self._by_local.values(), key=lambda e: e.local_id)
        return OryxDocument(self._identity, tuple(envelopes))

    def snapshot(self) -> list[RecordEnvelope]:
        """All envelopes in ascending (datestamp, identifier) order."""
        with self._lock:
            envelopes = list(self._by_local.values())
        envelopes.sort(key=lambda e: (e.datestamp, e.identifier))
        return envelopes

    def get(self, identifier: str) -> RecordEnvelope | None:
        try:
            archive, local = split_identifier(identifier)
        except ValueError:
            return None
        if archive != self._identity.archive_id:
            return None
        with self._lock:
            return self._by_local.get(local)

    def __len__(self) -> int:
        with self._lock:
            return len(self._by_local)

    def _identifier(self, local_id: str) -> str:
        return f"oai:{self._identity.archive_id}:{local_id}"

    def put_record(self, local_id: str, record: OlacRecord,
                   datestamp: datetime.date | None = None) -> RecordEnvelope:
        """Insert or replace a record; the datestamp moves on every mutation."""
        env = RecordEnvelope(
            identifier=self._identifier(local_id),
            datestamp=datestamp or _utc_now().date(),
            record=record,
        )
        with self._lock:
            self._by_local[local_id] = env
        return env

    def delete_record(self, local_id: str,
                      datestamp: datetime.date | None = None) -> RecordEnvelope:
        """Replace a record with a tombstone so harvesters learn of removal."""
        with self._lock:
            if local_id not in self._by_local:
                raise KeyError(local_id)
            env = RecordEnvelope(
                identifier=self._identifier(local_id),
                datestamp=datestamp or _utc_now().date(),
                deleted=True,
            )
            self._by_local[local_id] = env
        return env


def identify_lines(identity: ArchiveIdentity, indent: str = "  ") -> list[str]:
    pad = indent + "  "
    lines = [f"{indent}<Identify>"]
    lines.append(pad + element("repositoryName", identity.repository_name))
    lines.append(pad + element("baseUrl", identity.base_url))
    lines.append(pad + element("protocolVersion", protocol.PROTOCOL_VERSION))
    lines.append(pad + element("adminEmail", identity.admin_email))
    lines.append(pad + element("archiveId", identity.archive_id))
    lines.extend(description_lines(identity.description, pad))
    lines.append(f"{indent}</Identify>")
    return lines


class Provider:
    """Executes protocol requests against one store."""

    def __init__(self, store: ProviderStore, *, page_size: int = DEFAULT_PAGE_SIZE,
                 base_url: str | None = None, clock: Clock | None = None):
        if page_size < 1:
            raise ValueError("page size must be at least 1")
        self.store = store
        self.page_size = page_size
        self.base_url = base_url if base_url is not None else store.identity.base_url
        self.clock = clock or _utc_now

    # -- verb payloads ------------------------------------------------------

    def _get_record(self, request: ProtocolRequest) -> list[str]:
        prefix = request.get("metadataPrefix") or ""
        if prefix not in protocol.METADATA_PREFIXES:
            raise ProtocolFault(
                CANNOT_DISSEMINATE_FORMAT, f"unsupported metadataPrefix {prefix!r}"
            )
        identifier = request.get("identifier") or ""
        env = self.store.get(identifier)
        if env is None:
            raise ProtocolFault(ID_DOES_NOT_EXIST, f"no record {identifier!r}")
        lines = ["  <GetRecord>"]
        lines.extend(protocol.record_lines(env, prefix, "    "))
        lines.append("  </GetRecord>")
        return lines

    def _select(self, request: ProtocolRequest, verb: str, prefix: str,
                today: datetime.date) -> tuple[list[RecordEnvelope], str | None, str]:
        """Shared listing logic: window filter, cursor resume, next token.

        Returns (page, next token or None, effective prefix).
        """
        token = request.get("resumptionToken")
        start_after: tuple[str, str] | None = None
        if token is not None:
            cursor = protocol.decode_token(
                token, archive_id=self.store.identity.archive_id,
                page_size=self.page_size, verb=verb, today=today,
            )
            prefix = cursor.prefix
            lower = protocol.parse_day(cursor.lower) if cursor.lower else None
            upper = protocol.parse_day(cursor.upper) if cursor.upper else None
            start_after = (cursor.last_datestamp, cursor.last_identifier)
        else:
            lower, upper = protocol.parse_window(request)
        selection = [
            env for env in self.store.snapshot()
            if (lower is None or env.datestamp >= lower)
            and (upper is None or env.datestamp <= upper)
        ]
        if token is None and not selection:
            raise ProtocolFault(NO_RECORDS_MATCH, "no records in the requested window")
        if start_after is not None:
            key = start_after
            selection = [
                env for env in selection
                if (format_day(env.datestamp), env.identifier) > key
            ]
        page = selection[: self.page_size]
        next_token = None
        if len(selection) > self.page_size:
            last = page[-1]
            next_token = protocol.encode_token(
                PageCursor(
                    verb=verb,
                    prefix=prefix,
                    lower=format_day(lower) if lower else "",
                    upper=format_day(upper) if upper else "",
                    last_datestamp=format_day(last.datestamp),
                    last_identifier=last.identifier,
                    issued_on=format_day(today),
                ),
                archive_id=self.store.identity.archive_id,
                page_size=self.page_size,
            )
        return page, next_token, prefix

    def _list_records(self, request: ProtocolRequest, today: datetime.date) -> list[str]:
        prefix = request.get("metadataPrefix")
        if request.get("resumptionToken") is None:
            if prefix not in protocol.METADATA_PREFIXES:
                raise ProtocolFault(
                    CANNOT_DISSEMINATE_FORMAT,
                    f"unsupported metadataPrefix {prefix!r}",
                )
        page, next_token, prefix = self._select(
            request, protocol.VERB_LIST_RECORDS, prefix or "", today
        )
        lines = ["  <ListRecords>"]
        for env in page:
            lines.extend(protocol.record_lines(env, prefix, "    "))
        if next_token:
            lines.append("    " + element("resumptionToken", next_token))
        lines.append("  </ListRecords>")
        return lines

    def _list_identifiers(self, request: ProtocolRequest,
                          today: datetime.date) -> list[str]:
        page, next_token, _ = self._select(
            request, protocol.VERB_LIST_IDENTIFIERS, "", today
        )
        lines = ["  <ListIdentifiers>"]
        for env in page:
            lines.extend(protocol.header_lines(env, "    "))
        if next_token:
            lines.append("    " + element("resumptionToken", next_token))
        lines.append("  </ListIdentifiers>")
        return lines

    def _list_metadata_formats(self, request: ProtocolRequest) -> list[str]:
        identifier = request.get("identifier")
        if identifier is not None and self.store.get(identifier) is None:
            raise ProtocolFault(ID_DOES_NOT_EXIST, f"no record {identifier!r}")
        lines = ["  <ListMetadataFormats>"]
        for prefix in protocol.METADATA_PREFIXES:
            schema, namespace = FORMAT_SCHEMAS[prefix]
            lines.append("    <metadataFormat>")
            lines.append("      " + element("metadataPrefix", prefix))
            lines.append("      " + element("schema", schema))
            lines.append("      " + element("metadataNamespace", namespace))
            lines.append("    </metadataFormat>")
        lines.append("  </ListMetadataFormats>")
        return lines

    def _dispatch(self, request: ProtocolRequest, today: datetime.date) -> list[str]:
        verb = request.verb
        if verb == protocol.VERB_IDENTIFY:
            return identify_lines(self.store.identity)
        if verb == protocol.VERB_GET_RECORD:
            return self._get_record(request)
        if verb == protocol.VERB_LIST_RECORDS:
            return self._list_records(request, today)
        if verb == protocol.VERB_LIST_IDENTIFIERS:
            return self._list_identifiers(request, today)
        if verb == protocol.VERB_LIST_METADATA_FORMATS:
            return self._list_metadata_formats(request)
        if verb == protocol.VERB_LIST_SETS:
            return ["  <ListSets/>"]
        raise AssertionError(f"unreachable verb {verb}")

    # -- entry point --------------------------------------------------------

    def handle_query(self, query: str,
                     extra_legal: frozenset[str] = frozenset()) -> str:
        """Answer one query string with a complete response document."""
        now = self.clock()
        response_date = now.strftime("%Y-%m-%dT%H:%M:%SZ")
        try:
            request = protocol.parse_request(query, extra_legal)
        except ProtocolFault as fault:
            # The request could not be trusted enough to echo its arguments.
            return protocol.render_fault(self.base_url, (), fault, response_date)
        try:
            payload = self._dispatch(request, now.date())
        except ProtocolFault as fault:
            return protocol.render_fault(
                self.base_url, request.echo(), fault, response_date
            )
        return protocol.render_response(
            self.base_url, request.echo(), payload, response_date
        )


class ProviderApp:
    """HTTP face of a Provider: every path answers the query protocol."""

    def __init__(self, provider: Provider):
        self.provider = provider

    def handle(self, method: str, path: str, query: str, body: bytes,
               headers) -> HttpResult:
        if method == "POST" and body:
            query = body.decode("utf-8", "replace")
        return HttpResult(body=self.provider.handle_query(query).encode("utf-8"))
