"""OLAC metadata records: element set, XML wire form, validation, DC crosswalk.

A record is an ordered list of elements drawn from the fifteen Dublin Core
names plus the two language-resource extensions (subject.language,
type.linguistic). Every element is optional and repeatable and may carry a
``code`` (controlled-vocabulary token) and/or a ``refine`` attribute.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .xmlwriter import attrs, esc_text

if TYPE_CHECKING:
    from .vocab import VocabularyRegistry

OLAC_NAMESPACE = "http://www.language-archives.org/OLAC/0.4/"
DC_NAMESPACE = "http://purl.org/dc/elements/1.1/"

BASE_ELEMENTS = (
    "contributor",
    "coverage",
    "creator",
    "date",
    "description",
    "format",
    "identifier",
    "language",
    "publisher",
    "relation",
    "rights",
    "source",
    "subject",
    "title",
    "type",
)

#: Extension element name -> the base element it refines.
EXTENSION_BASE = {
    "subject.language": "subject",
    "type.linguistic": "type",
}

ELEMENT_NAMES = frozenset(BASE_ELEMENTS) | frozenset(EXTENSION_BASE)

#: Elements whose ``code`` attribute is bound to a controlled vocabulary.
CODE_BINDINGS = {
    "language": "language-codes",
    "subject.language": "language-codes",
    "type": "dc-type",
    "type.linguistic": "linguistic-type",
}

#: Elements whose ``refine`` attribute is bound to a controlled vocabulary.
REFINE_BINDINGS = {
    "date": "date-refine",
}

ERROR = "error"
WARNING = "warning"


class MetadataError(Exception):
    """Base class for record-level failures."""


class RecordParseError(MetadataError):
    """Structurally unusable record XML; carries position when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class UnknownElementError(MetadataError):
    """An element name outside the seventeen known names."""


class NamespaceError(MetadataError):
    """Record content in the wrong XML namespace."""


def _clean(value: str | None) -> str | None:
    if value is None:
        return None
    value = value.strip()
    return value or None


@dataclass(frozen=True)
class MetadataElement:
    """One descriptive statement: element name, free text, optional code/refine.

    Content is whitespace-normalized (stripped) at construction so that the
    XML round trip is an identity; internal whitespace is preserved.
    """

    name: str
    content: str = ""
    code: str | None = None
    refine: str | None = None

    def __post_init__(self):
        if self.name not in ELEMENT_NAMES:
            raise UnknownElementError(f"unknown element {self.name!r}")
        object.__setattr__(self, "content", (self.content or "").strip())
        object.__setattr__(self, "code", _clean(self.code))
        object.__setattr__(self, "refine", _clean(self.refine))

    @property
    def is_extension(self) -> bool:
        return self.name in EXTENSION_BASE

    @property
    def base_name(self) -> str:
        return EXTENSION_BASE.get(self.name, self.name)

    @property
    def is_empty(self) -> bool:
        """True when the element carries neither content, code, nor refine."""
        return not self.content and self.code is None and self.refine is None


@dataclass(frozen=True)
class OlacRecord:
    """An ordered, repeatable-element resource description."""

    elements: tuple[MetadataElement, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))

    def named(self, name: str) -> tuple[MetadataElement, ...]:
        return tuple(e for e in self.elements if e.name == name)

    def first_content(self, name: str) -> str:
        """Content of the first element with this name (falls back to its code)."""
        for e in self.elements:
            if e.name == name:
                return e.content or e.code or ""
        return ""

    def __len__(self) -> int:
        return len(self.elements)


@dataclass(frozen=True)
class Finding:
    severity: str  # ERROR or WARNING
    element_index: int | None
    message: str


@dataclass(frozen=True)
class ValidationReport:
    record_id: str | None = None
    findings: tuple[Finding, ...] = ()

    @property
    def ok(self) -> bool:
        return not any(f.severity == ERROR for f in self.findings)

    @property
    def errors(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.severity == ERROR)


# ---------------------------------------------------------------------------
# Parsing

def _local_name(tag: str) -> tuple[str | None, str]:
    if tag.startswith("{"):
        ns, _, local = tag[1:].partition("}")
        return ns, local
    return None, tag


def element_from_etree(elem: ET.Element) -> MetadataElement:
    """Build a MetadataElement from a parsed XML node (shared with ORyX)."""
    ns, local = _local_name(elem.tag)
    if ns != OLAC_NAMESPACE:
        raise NamespaceError(
            f"element {local!r} is in namespace {ns!r}, expected {OLAC_NAMESPACE!r}"
        )
    if local not in ELEMENT_NAMES:
        raise UnknownElementError(f"unknown element {local}")
    unknown = set(elem.attrib) - {"code", "refine"}
    if unknown:
        raise RecordParseError(
            f"element {local!r} carries unknown attribute {sorted(unknown)[0]!r}"
        )
    if len(elem) > 0:
        raise RecordParseError(f"element {local!r} must not contain child elements")
    return MetadataElement(
        name=local,
        content=elem.text or "",
        code=elem.attrib.get("code"),
        refine=elem.attrib.get("refine"),
    )


def record_from_etree(root: ET.Element) -> OlacRecord:
    ns, local = _local_name(root.tag)
    if local != "olac":
        raise RecordParseError(f"expected root element 'olac', found {local!r}")
    if ns != OLAC_NAMESPACE:
        raise NamespaceError(f"record namespace is {ns!r}, expected {OLAC_NAMESPACE!r}")
    if root.attrib:
        raise RecordParseError(
            f"olac element carries unknown attribute {sorted(root.attrib)[0]!r}"
        )
    if root.text and root.text.strip():
        raise RecordParseError("olac element must not carry bare text")
    elements = []
    for child in root:
        elements.append(element_from_etree(child))
        if child.tail and child.tail.strip():
            raise RecordParseError("unexpected bare text between elements")
    return OlacRecord(tuple(elements))


def parse_record(xml_text: str) -> OlacRecord:
    """Parse one OLAC record document; element order mirrors document order."""
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        line, column = exc.position if exc.position else (None, None)
        raise RecordParseError(f"malformed XML: {exc.msg}", line, column) from exc
    return record_from_etree(root)


# ---------------------------------------------------------------------------
# Serialization

def record_xml_lines(record: OlacRecord, indent: str = "") -> list[str]:
    """Serialize to lines so the record nests cleanly inside larger documents."""
    open_tag = f'{indent}<olac xmlns="{OLAC_NAMESPACE}"'
    if not record.elements:
        return [open_tag + "/>"]
    lines = [open_tag + ">"]
    inner = indent + "  "
    for e in record.elements:
        a = attrs({"code": e.code, "refine": e.refine})
        if e.content:
            lines.append(f"{inner}<{e.name}{a}>{esc_text(e.content)}</{e.name}>")
        else:
            lines.append(f"{inner}<{e.name}{a}/>")
    lines.append(f"{indent}</olac>")
    return lines


def serialize_record(record: OlacRecord) -> str:
    return "\n".join(record_xml_lines(record)) + "\n"


# ---------------------------------------------------------------------------
# Validation

def validate_record(record: OlacRecord, vocabs: "VocabularyRegistry",
                    record_id: str | None = None) -> ValidationReport:
    """Check every element against the vocabulary bindings; findings are data.

    All findings are reported, not just the first. A record is valid iff no
    finding has error severity.
    """
    findings: list[Finding] = []
    for index, e in enumerate(record.elements):
        if e.is_empty:
            findings.append(Finding(
                ERROR, index, f"element {e.name!r} carries no content, code, or refine"))
        if e.code is not None and e.name in CODE_BINDINGS:
            if e.name in ("language", "subject.language"):
                check = vocabs.check_language_code(e.code)
                if not check.valid:
                    findings.append(Finding(ERROR, index, f"{e.name}: {check.message}"))
            else:
                table = vocabs.get(CODE_BINDINGS[e.name])
                if e.code not in table:
                    findings.append(Finding(
                        ERROR, index,
                        f"{e.name}: code {e.code!r} not in vocabulary "
                        f"{table.vocabulary_id!r}"))
        if e.refine is not None and e.name in REFINE_BINDINGS:
            table = vocabs.get(REFINE_BINDINGS[e.name])
            if e.refine not in table:
                findings.append(Finding(
                    ERROR, index,
                    f"{e.name}: refine {e.refine!r} not in vocabulary "
                    f"{table.vocabulary_id!r}"))
    return ValidationReport(record_id=record_id, findings=tuple(findings))


# ---------------------------------------------------------------------------
# Dublin Core crosswalk

@dataclass(frozen=True)
class DcRecord:
    """Plain Dublin Core projection: (element, content) pairs, no attributes."""

    elements: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))


def crosswalk_to_dc(record: OlacRecord) -> DcRecord:
    """Fold extensions into their base element and drop refinements.

    An element whose content is empty contributes its code as the content, so
    nothing said with a controlled vocabulary is lost. Element count is
    preserved.
    """
    out = []
    for e in record.elements:
        content = e.content or e.code or ""
        out.append((e.base_name, content))
    return DcRecord(tuple(out))


def serialize_dc(dc: DcRecord) -> str:
    open_tag = f'<dc xmlns="{DC_NAMESPACE}"'
    if not dc.elements:
        return open_tag + "/>\n"
    lines = [open_tag + ">"]
    for name, content in dc.elements:
        if content:
            lines.append(f"  <{name}>{esc_text(content)}</{name}>")
        else:
            lines.append(f"  <{name}/>")
    lines.append("</dc>")
    return "\n".join(lines) + "\n"


def dc_xml_lines(dc: DcRecord, indent: str = "") -> list[str]:
    return [indent + line if line else line for line in serialize_dc(dc).rstrip("\n").split("\n")]
