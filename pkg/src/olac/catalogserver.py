"""HTTP face of the union catalog: search API, record lookup, vocabulary pages.

Two response shapes are offered everywhere it matters: canonical XML, and a
versioned structured-text format (``view=text``) that is trivial for thin
clients to parse — tab-separated fields with backslash escapes, one record
per line, first line naming the format and version.
"""

from __future__ import annotations

import urllib.parse

from .catalog import Query, QueryError, SearchResult, UnionCatalog
from .httpbase import HttpResult
from .metadata import ELEMENT_NAMES
from .oryx import format_day
from .protocol import record_lines
from .vocab import VocabularyRegistry, VocabularyTable
from .xmlwriter import XML_DECLARATION, attrs, element

CATALOG_NAMESPACE = "http://www.language-archives.org/OLAC/0.4/catalog/"

TEXT_FORMAT_NAME = "olac-search"
TEXT_FORMAT_VERSION = 1

HTML_CONTENT_TYPE = "text/html; charset=utf-8"
PLAIN_CONTENT_TYPE = "text/plain; charset=utf-8"


def escape_field(value: str) -> str:
    return (
        value.replace("\\", "\\\\")
        .replace("\t", "\\t")
        .replace("\n", "\\n")
        .replace("\r", "\\r")
    )


def text_line(*fields: str) -> str:
    return "\t".join(escape_field(f) for f in fields)


def build_query(pairs: list[tuple[str, str]]) -> tuple[Query, str]:
    """Map CGI parameters onto a Query; returns (query, response format).

    Any parameter whose name is a metadata element is an exact code filter
    (that covers ``format``, which is why the response shape selector is
    called ``view``); ``q`` adds an unrestricted text term and
    ``q.<element>`` a restricted one. ``archive``, ``offset``, ``limit``,
    ``facet`` (repeatable), and ``all`` fill the remaining query fields;
    ``view`` picks xml or text.
    """
    code_filters: list[tuple[str, str]] = []
    text_terms: list[tuple[str | None, str]] = []
    facets: list[str] = []
    archive: str | None = None
    offset = 0
    limit: int | None = None
    enumerate_all = False
    response_format = "xml"
    for key, value in pairs:
        if key in ELEMENT_NAMES:
            code_filters.append((key, value))
        elif key == "q":
            text_terms.append((None, value))
        elif key.startswith("q."):
            text_terms.append((key[2:], value))
        elif key == "archive":
            archive = value
        elif key == "offset":
            try:
                offset = int(value)
            except ValueError:
                raise QueryError(f"offset is not a number: {value!r}") from None
        elif key == "limit":
            try:
                limit = int(value)
            except ValueError:
                raise QueryError(f"limit is not a number: {value!r}") from None
        elif key == "facet":
            facets.append(value)
        elif key == "all":
            enumerate_all = value in ("1", "true", "yes")
        elif key == "view":
            if value not in ("xml", "text"):
                raise QueryError(f"unknown response view {value!r}")
            response_format = value
        else:
            raise QueryError(f"unknown element {key!r}")
    query = Query(
        code_filters=tuple(code_filters),
        text_terms=tuple(text_terms),
        archive=archive,
        offset=offset,
        limit=limit,
        facets=tuple(facets),
        enumerate_all=enumerate_all,
    )
    return query, response_format


def render_search_xml(result: SearchResult, query: Query) -> str:
    head = attrs(
        (
            ("xmlns", CATALOG_NAMESPACE),
            ("total", str(result.total)),
            ("offset", str(query.offset)),
            ("limit", "" if query.limit is None else str(query.limit)),
        )
    )
    lines = [XML_DECLARATION, f"<searchResult{head}>"]
    for hit in result.hits:
        hit_head = attrs(
            (("archiveId", hit.archive_id), ("identifier", hit.identifier))
        )
        lines.append(f"  <hit{hit_head}>")
        lines.append("    " + element("title", hit.title))
        lines.append(
            "    " + element("matched", " ".join(hit.matched_elements))
        )
        lines.append("  </hit>")
    for facet_element, counts in result.facet_counts:
        lines.append(f'  <facet element="{facet_element}">')
        for code, count in counts:
            lines.append(
                "    " + element("code", "", (("value", code), ("count", str(count))))
            )
        lines.append("  </facet>")
    lines.append("</searchResult>")
    return "\n".join(lines) + "\n"


def render_search_text(result: SearchResult, query: Query) -> str:
    lines = [
        text_line(TEXT_FORMAT_NAME, str(TEXT_FORMAT_VERSION)),
        text_line("total", str(result.total)),
        text_line("offset", str(query.offset)),
    ]
    for hit in result.hits:
        lines.append(
            text_line(
                "hit",
                hit.archive_id,
                hit.identifier,
                hit.title,
                ",".join(hit.matched_elements),
            )
        )
    for facet_element, counts in result.facet_counts:
        for code, count in counts:
            lines.append(text_line("facet", facet_element, code, str(count)))
    return "\n".join(lines) + "\n"


class CatalogApp:
    def __init__(self, catalog: UnionCatalog, vocabs: VocabularyRegistry):
        self.catalog = catalog
        self.vocabs = vocabs

    # -- error bodies --------------------------------------------------------

    def _query_error(self, exc: QueryError) -> HttpResult:
        message = str(exc)
        body = "\n".join(
            [
                XML_DECLARATION,
                f'<queryError xmlns="{CATALOG_NAMESPACE}">',
                "  " + element("message", message),
                "</queryError>",
            ]
        ) + "\n"
        return HttpResult(status=400, body=body.encode("utf-8"))

    def _not_found(self, message: str) -> HttpResult:
        body = "\n".join(
            [
                XML_DECLARATION,
                f'<notFound xmlns="{CATALOG_NAMESPACE}">',
                "  " + element("message", message),
                "</notFound>",
            ]
        ) + "\n"
        return HttpResult(status=404, body=body.encode("utf-8"))

    # -- endpoints -------------------------------------------------------------

    def _search(self, query_string: str) -> HttpResult:
        pairs = urllib.parse.parse_qsl(query_string, keep_blank_values=True)
        try:
            query, response_format = build_query(pairs)
            result = self.catalog.search(query)
        except QueryError as exc:
            return self._query_error(exc)
        if response_format == "text":
            return HttpResult(
                body=render_search_text(result, query).encode("utf-8"),
                content_type=PLAIN_CONTENT_TYPE,
            )
        return HttpResult(body=render_search_xml(result, query).encode("utf-8"))

    def _record(self, path: str) -> HttpResult:
        identifier = urllib.parse.unquote(path[len("/record/"):])
        entry = self.catalog.find(identifier)
        if entry is None:
            return self._not_found(f"no catalog entry {identifier!r}")
        head = attrs(
            (
                ("xmlns", CATALOG_NAMESPACE),
                ("archiveId", entry.archive_id),
                ("identifier", entry.identifier),
                ("datestamp", format_day(entry.envelope.datestamp)),
                (
                    "harvested",
                    format_day(entry.harvested_at) if entry.harvested_at else None,
                ),
            )
        )
        lines = [XML_DECLARATION, f"<catalogRecord{head}>"]
        for flag in entry.validation_flags:
            lines.append("  " + element("flag", flag))
        lines.extend(record_lines(entry.envelope, "olac", "  "))
        lines.append("</catalogRecord>")
        return HttpResult(body=("\n".join(lines) + "\n").encode("utf-8"))

    def _vocab_index(self, response_format: str) -> HttpResult:
        ids = self.vocabs.table_ids()
        if response_format == "html":
            items = "".join(
                f'<li><a href="/vocab/{i}">{i}</a></li>' for i in ids
            )
            body = (
                "<!DOCTYPE html><html><head><title>Vocabularies</title></head>"
                f"<body><h1>Controlled vocabularies</h1><ul>{items}</ul></body></html>"
            )
            return HttpResult(body=body.encode("utf-8"), content_type=HTML_CONTENT_TYPE)
        lines = [XML_DECLARATION, f'<vocabularies xmlns="{CATALOG_NAMESPACE}">']
        for vocab_id in ids:
            table = self.vocabs.get(vocab_id)
            lines.append(
                "  "
                + element(
                    "vocabulary", "",
                    (("id", vocab_id), ("size", str(len(table)))),
                )
            )
        lines.append("</vocabularies>")
        return HttpResult(body=("\n".join(lines) + "\n").encode("utf-8"))

    def _vocab_table(self, table: VocabularyTable, response_format: str) -> HttpResult:
        if response_format == "html":
            rows = "".join(
                f"<li><code>{entry.code}</code> — {entry.label}</li>"
                for entry in table
            )
            body = (
                f"<!DOCTYPE html><html><head><title>{table.vocabulary_id}</title>"
                f"</head><body><h1>{table.vocabulary_id}</h1><ul>{rows}</ul>"
                "</body></html>"
            )
            return HttpResult(body=body.encode("utf-8"), content_type=HTML_CONTENT_TYPE)
        lines = [
            XML_DECLARATION,
            f'<vocabulary xmlns="{CATALOG_NAMESPACE}" id="{table.vocabulary_id}">',
        ]
        for entry in table:
            lines.append(f"  <descriptor{attrs((('code', entry.code),))}>")
            lines.append("    " + element("label", entry.label))
            if entry.note:
                lines.append("    " + element("note", entry.note))
            lines.append("  </descriptor>")
        lines.append("</vocabulary>")
        return HttpResult(body=("\n".join(lines) + "\n").encode("utf-8"))

    def _vocab_code(self, table: VocabularyTable, code: str,
                    response_format: str) -> HttpResult:
        entry = table.get(code)
        if entry is None:
            return self._not_found(
                f"vocabulary {table.vocabulary_id!r} has no code {code!r}"
            )
        if response_format == "html":
            note = f"<p>{entry.note}</p>" if entry.note else ""
            body = (
                f"<!DOCTYPE html><html><head><title>{entry.code}</title></head>"
                f"<body><h1>{entry.code}</h1><p>{entry.label}</p>{note}</body></html>"
            )
            return HttpResult(body=body.encode("utf-8"), content_type=HTML_CONTENT_TYPE)
        head = attrs(
            (
                ("xmlns", CATALOG_NAMESPACE),
                ("vocabulary", table.vocabulary_id),
                ("code", entry.code),
            )
        )
        lines = [XML_DECLARATION, f"<descriptor{head}>"]
        lines.append("  " + element("label", entry.label))
        if entry.note:
            lines.append("  " + element("note", entry.note))
        lines.append("</descriptor>")
        return HttpResult(body=("\n".join(lines) + "\n").encode("utf-8"))

    def _vocab(self, path: str, query_string: str) -> HttpResult:
        params = dict(urllib.parse.parse_qsl(query_string, keep_blank_values=True))
        response_format = params.get("view", "xml")
        if response_format not in ("xml", "html"):
            return self._query_error(
                QueryError(f"unknown response view {response_format!r}")
            )
        rest = urllib.parse.unquote(path[len("/vocab"):]).strip("/")
        if not rest:
            return self._vocab_index(response_format)
        vocab_id, _, code = rest.partition("/")
        if vocab_id not in self.vocabs:
            return self._not_found(f"no vocabulary {vocab_id!r}")
        table = self.vocabs.get(vocab_id)
        if not code:
            return self._vocab_table(table, response_format)
        return self._vocab_code(table, code, response_format)

    def handle(self, method: str, path: str, query: str, body: bytes,
               headers) -> HttpResult:
        if method not in ("GET", "HEAD"):
            return HttpResult(
                status=405, body=b"method not allowed\n",
                content_type=PLAIN_CONTENT_TYPE,
            )
        if path == "/search":
            return self._search(query)
        if path.startswith("/record/"):
            return self._record(path)
        if path == "/vocab" or path.startswith("/vocab/"):
            return self._vocab(path, query)
        return self._not_found(f"no such endpoint {path!r}")
