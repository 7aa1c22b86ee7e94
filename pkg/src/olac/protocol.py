"""Harvesting protocol: requests, faults, resumption tokens, response XML.

The protocol is CGI-style: a client issues a GET (or form-encoded POST)
against a provider's base URL with a ``verb`` parameter naming one of six
requests, and the provider answers with an XML document. Protocol misuse is
reported in-band as an ``<error>`` element over HTTP 200 — transport-level
failures are reserved for transport problems.

This module holds everything both sides share: request parsing with the
argument-legality table, the six fault codes, the resumption-token codec for
paged lists, and rendering/reading of the response envelope.
"""

from __future__ import annotations

import base64
import binascii
import datetime
import hashlib
import json
import re
import urllib.parse
import xml.etree.ElementTree as ET
from dataclasses import dataclass

from .metadata import OLAC_NAMESPACE, crosswalk_to_dc, dc_xml_lines, record_from_etree, record_xml_lines
from .oryx import RecordEnvelope, format_day, parse_day
from .xmlwriter import XML_DECLARATION, attrs, element

PROTOCOL_NAMESPACE = "http://www.language-archives.org/OLAC/0.4/protocol/"
PROTOCOL_VERSION = "0.4"

VERB_GET_RECORD = "GetRecord"
VERB_IDENTIFY = "Identify"
VERB_LIST_IDENTIFIERS = "ListIdentifiers"
VERB_LIST_METADATA_FORMATS = "ListMetadataFormats"
VERB_LIST_RECORDS = "ListRecords"
VERB_LIST_SETS = "ListSets"

VERBS = (
    VERB_GET_RECORD,
    VERB_IDENTIFY,
    VERB_LIST_IDENTIFIERS,
    VERB_LIST_METADATA_FORMATS,
    VERB_LIST_RECORDS,
    VERB_LIST_SETS,
)

BAD_VERB = "badVerb"
BAD_ARGUMENT = "badArgument"
ID_DOES_NOT_EXIST = "idDoesNotExist"
NO_RECORDS_MATCH = "noRecordsMatch"
CANNOT_DISSEMINATE_FORMAT = "cannotDisseminateFormat"
BAD_RESUMPTION_TOKEN = "badResumptionToken"

FAULT_CODES = (
    BAD_VERB,
    BAD_ARGUMENT,
    ID_DOES_NOT_EXIST,
    NO_RECORDS_MATCH,
    CANNOT_DISSEMINATE_FORMAT,
    BAD_RESUMPTION_TOKEN,
)

PREFIX_OLAC = "olac"
PREFIX_DC = "oai_dc"
METADATA_PREFIXES = (PREFIX_OLAC, PREFIX_DC)

# Argument-legality table: verb -> (required, optional). A resumptionToken,
# where legal, is exclusive: it must be the only argument besides the verb.
_ARG_TABLE: dict[str, tuple[frozenset[str], frozenset[str]]] = {
    VERB_GET_RECORD: (frozenset({"identifier", "metadataPrefix"}), frozenset()),
    VERB_IDENTIFY: (frozenset(), frozenset()),
    VERB_LIST_IDENTIFIERS: (frozenset(), frozenset({"from", "until", "resumptionToken"})),
    VERB_LIST_METADATA_FORMATS: (frozenset(), frozenset({"identifier"})),
    VERB_LIST_RECORDS: (
        frozenset({"metadataPrefix"}),
        frozenset({"from", "until", "resumptionToken"}),
    ),
    VERB_LIST_SETS: (frozenset(), frozenset()),
}

_KNOWN_ARGS = ("identifier", "metadataPrefix", "from", "until", "set", "resumptionToken")

# Echo order for request attributes in responses; fixed so output is stable.
_ECHO_ORDER = ("verb",) + _KNOWN_ARGS + ("oryx",)


class ProtocolFault(Exception):
    """An in-band protocol error: one of the six codes plus a message."""

    def __init__(self, code: str, message: str):
        if code not in FAULT_CODES:
            raise ValueError(f"unknown fault code {code!r}")
        super().__init__(message)
        self.code = code
        self.message = message


@dataclass(frozen=True)
class ProtocolRequest:
    verb: str
    arguments: tuple[tuple[str, str], ...]

    def get(self, name: str) -> str | None:
        for key, value in self.arguments:
            if key == name:
                return value
        return None

    def echo(self) -> tuple[tuple[str, str], ...]:
        pairs = [("verb", self.verb)]
        pairs.extend(self.arguments)
        order = {name: i for i, name in enumerate(_ECHO_ORDER)}
        pairs.sort(key=lambda kv: order.get(kv[0], len(order)))
        return tuple(pairs)


def parse_query_pairs(query: str) -> list[tuple[str, str]]:
    return urllib.parse.parse_qsl(query, keep_blank_values=True)


def parse_request(query: str, extra_legal: frozenset[str] = frozenset()) -> ProtocolRequest:
    """Decode and legality-check a query string.

    Raises ProtocolFault: a missing, repeated, or unknown verb is badVerb;
    every argument-level problem (unknown name, repetition, names illegal
    for the verb, missing required names, empty values, a resumptionToken
    combined with anything else) is badArgument.

    ``extra_legal`` admits service-specific arguments (the virtual-provider
    gateway adds one) that are legal for every verb.
    """
    pairs = parse_query_pairs(query)
    verbs = [value for key, value in pairs if key == "verb"]
    if not verbs:
        raise ProtocolFault(BAD_VERB, "request lacks a verb argument")
    if len(verbs) > 1:
        raise ProtocolFault(BAD_VERB, "verb argument repeated")
    verb = verbs[0]
    if verb not in VERBS:
        raise ProtocolFault(BAD_VERB, f"unknown verb {verb!r}")
    seen: dict[str, str] = {}
    ordered: list[tuple[str, str]] = []
    for key, value in pairs:
        if key == "verb":
            continue
        if key not in _KNOWN_ARGS and key not in extra_legal:
            raise ProtocolFault(BAD_ARGUMENT, f"unknown argument {key!r}")
        if key in seen:
            raise ProtocolFault(BAD_ARGUMENT, f"argument {key!r} repeated")
        seen[key] = value
        ordered.append((key, value))
    required, optional = _ARG_TABLE[verb]
    legal = required | optional | extra_legal
    for key in seen:
        if key not in legal:
            raise ProtocolFault(
                BAD_ARGUMENT, f"argument {key!r} is illegal for {verb}"
            )
    core = {k for k in seen if k not in extra_legal}
    if "resumptionToken" in core and len(core) > 1:
        raise ProtocolFault(
            BAD_ARGUMENT, "resumptionToken must be the only argument"
        )
    if "resumptionToken" not in core:
        for key in sorted(required):
            if key not in seen:
                raise ProtocolFault(BAD_ARGUMENT, f"{verb} requires argument {key!r}")
    for key, value in ordered:
        if value == "":
            raise ProtocolFault(BAD_ARGUMENT, f"argument {key!r} has an empty value")
    return ProtocolRequest(verb=verb, arguments=tuple(ordered))


def parse_window(request: ProtocolRequest) -> tuple[datetime.date | None, datetime.date | None]:
    """Read the optional from/until day bounds, checking syntax and order."""
    bounds: list[datetime.date | None] = []
    for name in ("from", "until"):
        raw = request.get(name)
        if raw is None:
            bounds.append(None)
            continue
        try:
            bounds.append(parse_day(raw))
        except ValueError:
            raise ProtocolFault(
                BAD_ARGUMENT, f"argument {name!r} is not a YYYY-MM-DD date: {raw!r}"
            ) from None
    lower, upper = bounds
    if lower is not None and upper is not None and lower > upper:
        raise ProtocolFault(BAD_ARGUMENT, "'from' is later than 'until'")
    return lower, upper


# ---------------------------------------------------------------------------
# Resumption tokens
#
# A token encodes where a paged listing stopped: the verb, the filter that
# produced the listing, the (datestamp, identifier) key of the last delivered
# envelope, the issue day, and a scope digest tying it to one provider
# configuration. Tokens are honored on the issue day and the following day.

_TOKEN_VERSION = "1"


def _scope_digest(archive_id: str, page_size: int, verb: str, prefix: str,
                  lower: str, upper: str) -> str:
    material = "|".join([archive_id, str(page_size), verb, prefix, lower, upper])
    return hashlib.sha256(material.encode("utf-8")).hexdigest()[:12]


@dataclass(frozen=True)
class PageCursor:
    verb: str
    prefix: str  # empty for header-only listings
    lower: str  # from bound as YYYY-MM-DD, or empty
    upper: str  # until bound as YYYY-MM-DD, or empty
    last_datestamp: str
    last_identifier: str
    issued_on: str


def encode_token(cursor: PageCursor, *, archive_id: str, page_size: int) -> str:
    digest = _scope_digest(
        archive_id, page_size, cursor.verb, cursor.prefix, cursor.lower, cursor.upper
    )
    payload = json.dumps(
        [
            _TOKEN_VERSION,
            cursor.verb,
            cursor.prefix,
            cursor.lower,
            cursor.upper,
            cursor.last_datestamp,
            cursor.last_identifier,
            cursor.issued_on,
            digest,
        ],
        separators=(",", ":"),
    )
    return base64.urlsafe_b64encode(payload.encode("utf-8")).decode("ascii").rstrip("=")


def decode_token(token: str, *, archive_id: str, page_size: int, verb: str,
                 today: datetime.date) -> PageCursor:
    """Decode and verify a token; every defect is badResumptionToken."""

    def bad(reason: str) -> ProtocolFault:
        return ProtocolFault(BAD_RESUMPTION_TOKEN, f"resumptionToken {reason}")

    padded = token + "=" * (-len(token) % 4)
    try:
        payload = base64.urlsafe_b64decode(padded.encode("ascii"))
        fields = json.loads(payload.decode("utf-8"))
    except (binascii.Error, UnicodeError, ValueError):
        raise bad("is not decodable") from None
    if not (isinstance(fields, list) and len(fields) == 9
            and all(isinstance(f, str) for f in fields)):
        raise bad("has the wrong shape")
    version, tverb, prefix, lower, upper, last_date, last_id, issued_on, digest = fields
    if version != _TOKEN_VERSION:
        raise bad("has an unknown version")
    if tverb != verb:
        raise bad(f"was issued for {tverb}, not {verb}")
    expected = _scope_digest(archive_id, page_size, tverb, prefix, lower, upper)
    if digest != expected:
        raise bad("does not belong to this provider")
    try:
        issued = parse_day(issued_on)
        parse_day(last_date)
        if lower:
            parse_day(lower)
        if upper:
            parse_day(upper)
    except ValueError:
        raise bad("carries an unreadable date") from None
    if not (issued <= today <= issued + datetime.timedelta(days=1)):
        raise bad("has expired")
    return PageCursor(
        verb=tverb, prefix=prefix, lower=lower, upper=upper,
        last_datestamp=last_date, last_identifier=last_id, issued_on=issued_on,
    )


# ---------------------------------------------------------------------------
# Response rendering

def header_lines(env: RecordEnvelope, indent: str) -> list[str]:
    head = ' status="deleted"' if env.deleted else ""
    return [
        f"{indent}<header{head}>",
        f"{indent}  " + element("identifier", env.identifier),
        f"{indent}  " + element("datestamp", format_day(env.datestamp)),
        f"{indent}</header>",
    ]


def record_lines(env: RecordEnvelope, prefix: str, indent: str) -> list[str]:
    """Render one <record>: header plus payload in the requested format."""
    lines = [f"{indent}<record>"]
    lines.extend(header_lines(env, indent + "  "))
    if not env.deleted:
        assert env.record is not None
        lines.append(f"{indent}  <metadata>")
        if prefix == PREFIX_DC:
            lines.extend(dc_xml_lines(crosswalk_to_dc(env.record), indent + "    "))
        else:
            lines.extend(record_xml_lines(env.record, indent + "    "))
        lines.append(f"{indent}  </metadata>")
    lines.append(f"{indent}</record>")
    return lines


def render_response(base_url: str, echo: tuple[tuple[str, str], ...],
                    payload_lines: list[str], response_date: str) -> str:
    lines = [XML_DECLARATION, f'<response xmlns="{PROTOCOL_NAMESPACE}">']
    lines.append("  " + element("responseDate", response_date))
    lines.append("  " + element("request", base_url, echo))
    lines.extend(payload_lines)
    lines.append("</response>")
    return "\n".join(lines) + "\n"


def render_fault(base_url: str, echo: tuple[tuple[str, str], ...],
                 fault: ProtocolFault, response_date: str) -> str:
    payload = ["  " + element("error", fault.message, (("code", fault.code),))]
    return render_response(base_url, echo, payload, response_date)


# ---------------------------------------------------------------------------
# Response reading (the consuming side: harvesters and tests)

class ResponseFormatError(ValueError):
    """The body is not a readable protocol response."""


@dataclass(frozen=True)
class ResponseView:
    response_date: str
    base_url: str
    request_attributes: tuple[tuple[str, str], ...]
    error_code: str | None
    error_message: str | None
    payload: ET.Element | None  # the verb element, when not an error

    @property
    def ok(self) -> bool:
        return self.error_code is None

    def payload_text(self) -> str:
        """The verb element as text with namespace prefixes stripped.

        For inspection and assertions only — the prefix stripping makes the
        text readable but conflates namespaces; use ``payload`` for real work.
        """
        if self.payload is None:
            return ""
        raw = ET.tostring(self.payload, encoding="unicode")
        raw = re.sub(r"(</?)ns\d+:", r"\1", raw)
        return re.sub(r"\s+xmlns:ns\d+=\"[^\"]*\"", "", raw)

    def resumption_token(self) -> str | None:
        """Continuation token of a listing page, if one was issued."""
        if self.payload is None:
            return None
        token_el = self.payload.find(_q("resumptionToken"))
        if token_el is None or not (token_el.text or "").strip():
            return None
        return token_el.text.strip()

    def records(self) -> list[ET.Element]:
        """The <record> children of a GetRecord/ListRecords payload."""
        if self.payload is None:
            return []
        if self.payload.tag == _q("record"):
            return [self.payload]
        return self.payload.findall(_q("record"))

    def headers(self) -> list[ET.Element]:
        """Every <header> in the payload, whether bare or inside records."""
        if self.payload is None:
            return []
        return self.payload.findall(f".//{_q('header')}")

    def identifiers(self) -> list[str]:
        """Record identifiers of a listing, in page order."""
        out = []
        for header in self.headers():
            id_el = header.find(_q("identifier"))
            if id_el is not None and id_el.text:
                out.append(id_el.text.strip())
        return out


def _q(name: str) -> str:
    return f"{{{PROTOCOL_NAMESPACE}}}{name}"


def parse_response(xml_text: str | bytes) -> ResponseView:
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise ResponseFormatError(f"not well-formed XML: {exc}") from None
    if root.tag != _q("response"):
        raise ResponseFormatError(f"unexpected root element {root.tag}")
    date_el = root.find(_q("responseDate"))
    request_el = root.find(_q("request"))
    if date_el is None or request_el is None:
        raise ResponseFormatError("response lacks responseDate or request")
    error_el = root.find(_q("error"))
    payload = None
    if error_el is None:
        for child in root:
            if child.tag in (_q("responseDate"), _q("request")):
                continue
            payload = child
            break
        if payload is None:
            raise ResponseFormatError("response carries neither payload nor error")
    return ResponseView(
        response_date=(date_el.text or "").strip(),
        base_url=(request_el.text or "").strip(),
        request_attributes=tuple(request_el.items()),
        error_code=error_el.get("code") if error_el is not None else None,
        error_message=(error_el.text or "").strip() if error_el is not None else None,
        payload=payload,
    )


def envelope_from_record_element(elem: ET.Element) -> RecordEnvelope:
    """Rebuild an envelope from a <record> element of a listing response.

    Only the native metadata format can round-trip; crosswalked payloads
    lose code/refine structure by design and are rejected here.
    """
    header = elem.find(_q("header"))
    if header is None:
        raise ResponseFormatError("record element lacks its header")
    ident_el = header.find(_q("identifier"))
    date_el = header.find(_q("datestamp"))
    if ident_el is None or date_el is None or not (ident_el.text or "").strip():
        raise ResponseFormatError("record header lacks identifier or datestamp")
    identifier = (ident_el.text or "").strip()
    datestamp = parse_day((date_el.text or "").strip())
    deleted = header.get("status") == "deleted"
    record = None
    if not deleted:
        metadata = elem.find(_q("metadata"))
        if metadata is None or len(metadata) != 1:
            raise ResponseFormatError(
                f"record {identifier} lacks its metadata payload"
            )
        inner = metadata[0]
        if inner.tag != f"{{{OLAC_NAMESPACE}}}olac":
            raise ResponseFormatError(
                f"record {identifier} payload is not in the native format"
            )
        record = record_from_etree(inner)
    return RecordEnvelope(
        identifier=identifier, datestamp=datestamp, deleted=deleted, record=record
    )


def envelope_from_header_element(header: ET.Element) -> tuple[str, datetime.date, bool]:
    """Read (identifier, datestamp, deleted) from a bare <header> element."""
    ident_el = header.find(_q("identifier"))
    date_el = header.find(_q("datestamp"))
    if ident_el is None or date_el is None:
        raise ResponseFormatError("header lacks identifier or datestamp")
    return (
        (ident_el.text or "").strip(),
        parse_day((date_el.text or "").strip()),
        header.get("status") == "deleted",
    )
