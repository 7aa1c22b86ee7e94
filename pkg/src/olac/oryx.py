"""Single-file XML repository format: archive identity plus record envelopes.

A repository document carries everything a harvester needs in one file: who
the archive is (identity and a human-oriented description block) and the
complete set of metadata records, each wrapped in an envelope that adds the
record's global identifier, its last-modified datestamp, and an optional
deleted marker.

Documents are immutable values; parsing and serialization are pure functions
and inverses of each other on valid input.
"""

from __future__ import annotations

import datetime
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass

from .metadata import (
    ERROR,
    Finding,
    MetadataError,
    OlacRecord,
    RecordParseError,
    ValidationReport,
    record_from_etree,
    record_xml_lines,
    validate_record,
)
from .xmlwriter import XML_DECLARATION, attrs, element, esc_attr, esc_text

ORYX_NAMESPACE = "http://www.language-archives.org/OLAC/0.4/oryx/"

ARCHIVE_ID_PATTERN = re.compile(r"[A-Za-z][A-Za-z0-9_-]*\Z")
DAY_PATTERN = re.compile(r"\d{4}-\d{2}-\d{2}\Z")

IDENTIFIER_SCHEME = "oai"


class OryxError(MetadataError):
    """Invariant violation while constructing repository values."""


class OryxParseError(OryxError):
    """Structural problem that prevents reading a repository document."""


def parse_day(text: str) -> datetime.date:
    """Parse a calendar day in YYYY-MM-DD form; raise ValueError otherwise."""
    if not DAY_PATTERN.match(text):
        raise ValueError(f"not a calendar date (YYYY-MM-DD): {text!r}")
    return datetime.date.fromisoformat(text)


def format_day(day: datetime.date) -> str:
    return day.isoformat()


def split_identifier(identifier: str) -> tuple[str, str]:
    """Split a record identifier into (archive segment, local segment).

    Identifiers have exactly three colon-separated segments and start with
    the literal scheme segment ``oai``, e.g. ``oai:ethnologue:AAA``.
    """
    parts = identifier.split(":")
    if len(parts) != 3:
        raise ValueError(
            f"identifier must have three colon-separated segments: {identifier!r}"
        )
    scheme, archive, local = parts
    if scheme != IDENTIFIER_SCHEME:
        raise ValueError(f"identifier must start with 'oai:': {identifier!r}")
    if not archive or not local:
        raise ValueError(f"identifier has an empty segment: {identifier!r}")
    return archive, local


@dataclass(frozen=True)
class ArchiveDescription:
    """Curator- and institution-level description block of an archive.

    ``extras`` holds optional key-value pairs that survive round trips
    untouched, so archives can carry fields this schema does not name.
    """

    curator: str
    curator_email: str = ""
    institution: str = ""
    institution_url: str | None = None
    short_location: str = ""
    synopsis: str = ""
    extras: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if not self.curator.strip():
            raise OryxError("archive description requires a curator")
        if not self.institution.strip():
            raise OryxError("archive description requires an institution")
        for key, _value in self.extras:
            if not key.strip():
                raise OryxError("extra fields require a non-empty key")


@dataclass(frozen=True)
class ArchiveIdentity:
    archive_id: str
    repository_name: str
    base_url: str
    admin_email: str
    description: ArchiveDescription

    def __post_init__(self) -> None:
        if not ARCHIVE_ID_PATTERN.match(self.archive_id):
            raise OryxError(
                "archive id must start with a letter and contain only "
                f"letters, digits, '_', or '-': {self.archive_id!r}"
            )


@dataclass(frozen=True)
class RecordEnvelope:
    """One record slot: identifier, day-granular datestamp, payload or tombstone."""

    identifier: str
    datestamp: datetime.date
    deleted: bool = False
    record: OlacRecord | None = None

    def __post_init__(self) -> None:
        try:
            split_identifier(self.identifier)
        except ValueError as exc:
            raise OryxError(str(exc)) from None
        if self.deleted and self.record is not None:
            raise OryxError(
                f"deleted envelope must not carry a record: {self.identifier}"
            )
        if not self.deleted and self.record is None:
            raise OryxError(
                f"live envelope requires a record payload: {self.identifier}"
            )

    @property
    def archive_segment(self) -> str:
        return split_identifier(self.identifier)[0]

    @property
    def local_id(self) -> str:
        return split_identifier(self.identifier)[1]


@dataclass(frozen=True)
class RecordIssue:
    """A per-record problem found while reading a document.

    The offending envelope is dropped from the parsed document; the issue
    keeps its position (zero-based among record elements) and, when the
    identifier attribute was readable, the identifier.
    """

    index: int
    identifier: str | None
    message: str


@dataclass(frozen=True)
class OryxDocument:
    identity: ArchiveIdentity
    envelopes: tuple[RecordEnvelope, ...] = ()
    record_issues: tuple[RecordIssue, ...] = ()

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for env in self.envelopes:
            if env.identifier in seen:
                raise OryxError(f"duplicate identifier: {env.identifier}")
            seen.add(env.identifier)
            if env.archive_segment != self.identity.archive_id:
                raise OryxError(
                    f"identifier {env.identifier} does not belong to "
                    f"archive {self.identity.archive_id!r}"
                )

    def get(self, identifier: str) -> RecordEnvelope | None:
        for env in self.envelopes:
            if env.identifier == identifier:
                return env
        return None


def _local(tag: str) -> tuple[str, str]:
    """Split an ElementTree tag into (namespace, local name)."""
    if tag.startswith("{"):
        ns, _, name = tag[1:].partition("}")
        return ns, name
    return "", tag


_DESCRIPTION_FIELDS = (
    "curator",
    "curatorEmail",
    "institution",
    "institutionUrl",
    "shortLocation",
    "synopsis",
)


def _parse_description(elem: ET.Element) -> ArchiveDescription:
    fields: dict[str, str] = {}
    extras: list[tuple[str, str]] = []
    for child in elem:
        ns, name = _local(child.tag)
        if ns != ORYX_NAMESPACE:
            raise OryxParseError(f"description child in foreign namespace: {child.tag}")
        text = (child.text or "").strip()
        if name == "extra":
            key = child.get("key")
            if key is None:
                raise OryxParseError("extra field lacks its key attribute")
            extras.append((key, text))
        elif name in _DESCRIPTION_FIELDS:
            if name in fields:
                raise OryxParseError(f"description repeats field {name!r}")
            fields[name] = text
        else:
            raise OryxParseError(f"unknown description field {name!r}")
    return ArchiveDescription(
        curator=fields.get("curator", ""),
        curator_email=fields.get("curatorEmail", ""),
        institution=fields.get("institution", ""),
        institution_url=fields.get("institutionUrl") or None,
        short_location=fields.get("shortLocation", ""),
        synopsis=fields.get("synopsis", ""),
        extras=tuple(extras),
    )


def _parse_archive(elem: ET.Element) -> ArchiveIdentity:
    archive_id = elem.get("id")
    if archive_id is None:
        raise OryxParseError("archive element lacks its id attribute")
    fields: dict[str, str] = {}
    description: ArchiveDescription | None = None
    for child in elem:
        ns, name = _local(child.tag)
        if ns != ORYX_NAMESPACE:
            raise OryxParseError(f"archive child in foreign namespace: {child.tag}")
        if name == "description":
            if description is not None:
                raise OryxParseError("archive repeats its description block")
            description = _parse_description(child)
        elif name in ("repositoryName", "baseUrl", "adminEmail"):
            if name in fields:
                raise OryxParseError(f"archive repeats field {name!r}")
            fields[name] = (child.text or "").strip()
        else:
            raise OryxParseError(f"unknown archive field {name!r}")
    if description is None:
        raise OryxParseError("archive element lacks its description block")
    try:
        return ArchiveIdentity(
            archive_id=archive_id,
            repository_name=fields.get("repositoryName", ""),
            base_url=fields.get("baseUrl", ""),
            admin_email=fields.get("adminEmail", ""),
            description=description,
        )
    except OryxError as exc:
        raise OryxParseError(str(exc)) from None


def _parse_envelope(elem: ET.Element) -> RecordEnvelope:
    identifier = elem.get("identifier")
    if identifier is None:
        raise OryxParseError("record element lacks its identifier attribute")
    try:
        split_identifier(identifier)
    except ValueError as exc:
        raise OryxParseError(f"record identifier {identifier!r}: {exc}") from None
    datestamp_text = elem.get("datestamp")
    if datestamp_text is None:
        raise OryxParseError(f"record {identifier} lacks its datestamp attribute")
    try:
        datestamp = parse_day(datestamp_text)
    except ValueError as exc:
        raise OryxParseError(f"record {identifier}: {exc}") from None
    status = elem.get("status")
    if status not in (None, "deleted"):
        raise OryxParseError(f"record {identifier}: unknown status {status!r}")
    unknown = set(elem.keys()) - {"identifier", "datestamp", "status"}
    if unknown:
        raise OryxParseError(
            f"record {identifier}: unknown attribute(s) {sorted(unknown)}"
        )
    deleted = status == "deleted"
    children = list(elem)
    record: OlacRecord | None = None
    if deleted:
        if children:
            raise OryxParseError(f"record {identifier} is deleted yet has a payload")
    else:
        if len(children) != 1:
            raise OryxParseError(
                f"record {identifier} must wrap exactly one metadata payload"
            )
        record = record_from_etree(children[0])
    try:
        return RecordEnvelope(
            identifier=identifier, datestamp=datestamp, deleted=deleted, record=record
        )
    except OryxError as exc:
        raise OryxParseError(str(exc)) from None


def parse_oryx(xml_text: str) -> OryxDocument:
    """Read a repository document.

    Document-level structure must be sound: a recognizable root, one archive
    block, unique identifiers, and every identifier belonging to the declared
    archive. Problems confined to a single record element (bad identifier
    shape, bad datestamp, malformed payload) do not abort the parse: the
    envelope is dropped and reported in ``record_issues`` with its position.
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        line, column = exc.position
        raise OryxParseError(
            f"not well-formed XML (line {line}, column {column}): {exc.msg}"
        ) from None
    ns, name = _local(root.tag)
    if name != "oryx" or ns != ORYX_NAMESPACE:
        raise OryxParseError(
            f"root element must be 'oryx' in namespace {ORYX_NAMESPACE}"
        )
    identity: ArchiveIdentity | None = None
    envelopes: list[RecordEnvelope] = []
    issues: list[RecordIssue] = []
    seen: set[str] = set()
    record_index = 0
    for child in root:
        child_ns, child_name = _local(child.tag)
        if child_ns != ORYX_NAMESPACE:
            raise OryxParseError(f"unknown element in foreign namespace: {child.tag}")
        if child_name == "archive":
            if identity is not None:
                raise OryxParseError("document has more than one archive block")
            identity = _parse_archive(child)
        elif child_name == "record":
            index = record_index
            record_index += 1
            try:
                env = _parse_envelope(child)
            except (OryxParseError, RecordParseError, MetadataError) as exc:
                issues.append(
                    RecordIssue(
                        index=index, identifier=child.get("identifier"),
                        message=str(exc),
                    )
                )
                continue
            if env.identifier in seen:
                raise OryxParseError(f"duplicate identifier: {env.identifier}")
            seen.add(env.identifier)
            envelopes.append(env)
        else:
            raise OryxParseError(f"unknown element {child_name!r} in document")
    if identity is None:
        raise OryxParseError("document lacks its archive block")
    for env in envelopes:
        if env.archive_segment != identity.archive_id:
            raise OryxParseError(
                f"identifier {env.identifier} does not belong to "
                f"archive {identity.archive_id!r}"
            )
    return OryxDocument(
        identity=identity, envelopes=tuple(envelopes), record_issues=tuple(issues)
    )


def description_lines(desc: ArchiveDescription, indent: str) -> list[str]:
    pad = indent + "  "
    lines = [f"{indent}<description>"]
    named = (
        ("curator", desc.curator),
        ("curatorEmail", desc.curator_email),
        ("institution", desc.institution),
        ("institutionUrl", desc.institution_url or ""),
        ("shortLocation", desc.short_location),
        ("synopsis", desc.synopsis),
    )
    for name, value in named:
        if value:
            lines.append(pad + element(name, value))
    for key, value in desc.extras:
        lines.append(pad + element("extra", value, (("key", key),)))
    lines.append(f"{indent}</description>")
    return lines


def _identity_lines(identity: ArchiveIdentity, indent: str) -> list[str]:
    pad = indent + "  "
    lines = [f'{indent}<archive id="{esc_attr(identity.archive_id)}">']
    for name, value in (
        ("repositoryName", identity.repository_name),
        ("baseUrl", identity.base_url),
        ("adminEmail", identity.admin_email),
    ):
        if value:
            lines.append(pad + element(name, value))
    lines.extend(description_lines(identity.description, pad))
    lines.append(f"{indent}</archive>")
    return lines


def envelope_lines(env: RecordEnvelope, indent: str) -> list[str]:
    """Render one record envelope as indented XML lines."""
    pairs = [("identifier", env.identifier), ("datestamp", format_day(env.datestamp))]
    if env.deleted:
        pairs.append(("status", "deleted"))
    head = attrs(pairs)
    if env.deleted:
        return [f"{indent}<record{head}/>"]
    assert env.record is not None
    lines = [f"{indent}<record{head}>"]
    lines.extend(record_xml_lines(env.record, indent + "  "))
    lines.append(f"{indent}</record>")
    return lines


def serialize_oryx(doc: OryxDocument) -> str:
    lines = [XML_DECLARATION, f'<oryx xmlns="{ORYX_NAMESPACE}">']
    lines.extend(_identity_lines(doc.identity, "  "))
    for env in doc.envelopes:
        lines.extend(envelope_lines(env, "  "))
    lines.append("</oryx>")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class OryxValidationReport:
    """Validation outcome for a whole repository document."""

    document_findings: tuple[Finding, ...]
    record_reports: tuple[ValidationReport, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors

    @property
    def errors(self) -> tuple[Finding, ...]:
        found = [f for f in self.document_findings if f.severity == ERROR]
        for report in self.record_reports:
            found.extend(report.errors)
        return tuple(found)


def validate_oryx(doc, vocabs, today: datetime.date | None = None) -> OryxValidationReport:
    """Validate every live record plus document-level concerns.

    Datestamps are checked against ``today`` (defaulting to the current UTC
    day) because a parsed file carries no reliable creation time of its own.
    Issues recorded at parse time surface here as document-level errors so a
    single report covers everything wrong with the file.
    """
    if today is None:
        today = datetime.datetime.now(datetime.timezone.utc).date()
    document_findings: list[Finding] = []
    for issue in doc.record_issues:
        label = issue.identifier or f"record #{issue.index}"
        document_findings.append(
            Finding(ERROR, None, f"unreadable record {label}: {issue.message}")
        )
    reports: list[ValidationReport] = []
    for env in doc.envelopes:
        findings: list[Finding] = []
        if env.datestamp > today:
            findings.append(
                Finding(
                    ERROR,
                    None,
                    f"datestamp {format_day(env.datestamp)} is in the future",
                )
            )
        if env.record is not None:
            findings.extend(
                validate_record(env.record, vocabs, record_id=env.identifier).findings
            )
        reports.append(
            ValidationReport(record_id=env.identifier, findings=tuple(findings))
        )
    return OryxValidationReport(
        document_findings=tuple(document_findings), record_reports=tuple(reports)
    )
