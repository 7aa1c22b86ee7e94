"""Union catalog: pooled record envelopes, indexed and searchable.

Entries are keyed (archive id, identifier) so the same local identifier in
two archives never collides. Two index families serve queries: a per-element
inverted text index over tokenized element content, and a per-element exact
index over ``code`` attribute values. Both are derived data — rebuildable
from the entries at any time, and a consistency check does exactly that and
diffs the result against the live indexes.

Search semantics are conjunctive throughout: every code filter and every
text term must hold. Text matching is case-folded whole-token matching with
no stemming. Results are ordered by (archive id, identifier) so identical
queries give identical answers.
"""

from __future__ import annotations

import datetime
import json
import re
import threading
from dataclasses import dataclass
from pathlib import Path

from .metadata import ELEMENT_NAMES, MetadataElement, OlacRecord
from .oryx import RecordEnvelope, format_day, parse_day

SNAPSHOT_FORMAT = "olac-catalog"
SNAPSHOT_VERSION = 1

Key = tuple[str, str]  # (archive id, identifier)


class QueryError(ValueError):
    """The query is malformed (unknown element, empty term, bad paging)."""


def tokenize(text: str) -> list[str]:
    """Case-folded word tokens: runs of letters/digits, underscores excluded."""
    return re.findall(r"[^\W_]+", text.casefold())


@dataclass(frozen=True)
class CatalogEntry:
    archive_id: str
    envelope: RecordEnvelope
    validation_flags: tuple[str, ...] = ()
    harvested_at: datetime.date | None = None

    @property
    def identifier(self) -> str:
        return self.envelope.identifier

    @property
    def record(self) -> OlacRecord:
        assert self.envelope.record is not None
        return self.envelope.record


@dataclass(frozen=True)
class Query:
    code_filters: tuple[tuple[str, str], ...] = ()
    text_terms: tuple[tuple[str | None, str], ...] = ()  # (element or None, term)
    archive: str | None = None
    offset: int = 0
    limit: int | None = None
    facets: tuple[str, ...] = ()
    enumerate_all: bool = False

    def validate(self) -> None:
        for element_name, _code in self.code_filters:
            if element_name not in ELEMENT_NAMES:
                raise QueryError(f"unknown element {element_name!r}")
        for element_name, term in self.text_terms:
            if element_name is not None and element_name not in ELEMENT_NAMES:
                raise QueryError(f"unknown element {element_name!r}")
            if not tokenize(term):
                raise QueryError(f"text term {term!r} has no searchable tokens")
        for element_name in self.facets:
            if element_name not in ELEMENT_NAMES:
                raise QueryError(f"unknown element {element_name!r}")
        if self.offset < 0:
            raise QueryError("offset must be non-negative")
        if self.limit is not None and self.limit < 0:
            raise QueryError("limit must be non-negative")
        if not (self.code_filters or self.text_terms or self.archive
                or self.enumerate_all):
            raise QueryError(
                "query needs at least one filter or term "
                "(or must ask to enumerate everything)"
            )


@dataclass(frozen=True)
class Hit:
    archive_id: str
    identifier: str
    title: str
    matched_elements: tuple[str, ...]


@dataclass(frozen=True)
class SearchResult:
    total: int
    hits: tuple[Hit, ...]
    facet_counts: tuple[tuple[str, tuple[tuple[str, int], ...]], ...] = ()


@dataclass(frozen=True)
class IngestReport:
    upserts: int = 0
    deletes: int = 0
    flagged: int = 0


class UnionCatalog:
    def __init__(self) -> None:
        self._lock = threading.RLock()
        self._entries: dict[Key, CatalogEntry] = {}
        self._text_index: dict[str, dict[str, set[Key]]] = {}
        self._code_index: dict[str, dict[str, set[Key]]] = {}

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def get(self, archive_id: str, identifier: str) -> CatalogEntry | None:
        with self._lock:
            return self._entries.get((archive_id, identifier))

    def find(self, identifier: str) -> CatalogEntry | None:
        """Look up by identifier alone (the archive id is its middle segment)."""
        parts = identifier.split(":")
        if len(parts) != 3:
            return None
        return self.get(parts[1], identifier)

    def keys(self) -> list[Key]:
        with self._lock:
            return sorted(self._entries)

    def archive_ids(self) -> list[str]:
        with self._lock:
            return sorted({archive for archive, _ in self._entries})

    # -- index maintenance ---------------------------------------------------

    @staticmethod
    def _postings(record: OlacRecord) -> tuple[list[tuple[str, str]], list[tuple[str, str]]]:
        """(element, token) text postings and (element, code) postings."""
        text: list[tuple[str, str]] = []
        codes: list[tuple[str, str]] = []
        for el in record.elements:
            for token in set(tokenize(el.content)):
                text.append((el.name, token))
            if el.code is not None:
                codes.append((el.name, el.code))
        return text, codes

    def _index_add(self, key: Key, entry: CatalogEntry) -> None:
        text, codes = self._postings(entry.record)
        for name, token in text:
            self._text_index.setdefault(name, {}).setdefault(token, set()).add(key)
        for name, code in codes:
            self._code_index.setdefault(name, {}).setdefault(code, set()).add(key)

    def _index_remove(self, key: Key, entry: CatalogEntry) -> None:
        text, codes = self._postings(entry.record)
        for name, token in text:
            bucket = self._text_index.get(name, {}).get(token)
            if bucket is not None:
                bucket.discard(key)
                if not bucket:
                    del self._text_index[name][token]
        for name, code in codes:
            bucket = self._code_index.get(name, {}).get(code)
            if bucket is not None:
                bucket.discard(key)
                if not bucket:
                    del self._code_index[name][code]

    # -- ingest ---------------------------------------------------------------

    def ingest_one(self, archive_id: str, envelope: RecordEnvelope,
                   flags: tuple[str, ...] = (),
                   harvested_at: datetime.date | None = None) -> str:
        """Apply one envelope atomically; returns 'upsert', 'delete', or 'noop'."""
        key = (archive_id, envelope.identifier)
        with self._lock:
            old = self._entries.get(key)
            if envelope.deleted:
                if old is None:
                    return "noop"
                self._index_remove(key, old)
                del self._entries[key]
                return "delete"
            entry = CatalogEntry(
                archive_id=archive_id, envelope=envelope,
                validation_flags=flags, harvested_at=harvested_at,
            )
            if old is not None:
                self._index_remove(key, old)
            self._entries[key] = entry
            self._index_add(key, entry)
            return "upsert"

    def ingest(self, archive_id: str, envelopes, *,
               flags_by_identifier: dict[str, tuple[str, ...]] | None = None,
               harvested_at: datetime.date | None = None) -> IngestReport:
        upserts = deletes = flagged = 0
        flags_by_identifier = flags_by_identifier or {}
        for envelope in envelopes:
            flags = flags_by_identifier.get(envelope.identifier, ())
            applied = self.ingest_one(
                archive_id, envelope, flags=flags, harvested_at=harvested_at
            )
            if applied == "upsert":
                upserts += 1
                if flags:
                    flagged += 1
            elif applied == "delete":
                deletes += 1
        return IngestReport(upserts=upserts, deletes=deletes, flagged=flagged)

    def clear_archive(self, archive_id: str) -> int:
        """Remove every entry of one archive; returns how many went away."""
        with self._lock:
            doomed = [key for key in self._entries if key[0] == archive_id]
            for key in doomed:
                self._index_remove(key, self._entries[key])
                del self._entries[key]
        return len(doomed)

    def replace_archive(self, archive_id: str, envelopes, *,
                        flags_by_identifier=None,
                        harvested_at: datetime.date | None = None) -> IngestReport:
        with self._lock:
            self.clear_archive(archive_id)
            return self.ingest(
                archive_id, envelopes,
                flags_by_identifier=flags_by_identifier, harvested_at=harvested_at,
            )

    # -- search ----------------------------------------------------------------

    def _candidates_for_code(self, element_name: str, code: str) -> set[Key]:
        return set(self._code_index.get(element_name, {}).get(code, ()))

    def _candidates_for_token(self, element_name: str | None, token: str) -> set[Key]:
        if element_name is not None:
            return set(self._text_index.get(element_name, {}).get(token, ()))
        keys: set[Key] = set()
        for buckets in self._text_index.values():
            keys |= buckets.get(token, set())
        return keys

    def search(self, query: Query) -> SearchResult:
        query.validate()
        with self._lock:
            selected: set[Key] | None = None

            def narrow(keys: set[Key]) -> None:
                nonlocal selected
                selected = keys if selected is None else (selected & keys)

            for element_name, code in query.code_filters:
                narrow(self._candidates_for_code(element_name, code))
            for element_name, term in query.text_terms:
                for token in tokenize(term):
                    narrow(self._candidates_for_token(element_name, token))
            if selected is None:
                selected = set(self._entries)
            if query.archive is not None:
                selected = {key for key in selected if key[0] == query.archive}
            ordered = sorted(selected)
            facet_counts = []
            for facet_element in query.facets:
                counts: dict[str, int] = {}
                for key in ordered:
                    entry = self._entries[key]
                    codes = {
                        el.code
                        for el in entry.record.elements
                        if el.name == facet_element and el.code is not None
                    }
                    for code in codes:
                        counts[code] = counts.get(code, 0) + 1
                facet_counts.append(
                    (facet_element, tuple(sorted(counts.items())))
                )
            window = ordered[query.offset:]
            if query.limit is not None:
                window = window[: query.limit]
            hits = tuple(
                self._hit(self._entries[key], query) for key in window
            )
            return SearchResult(
                total=len(ordered), hits=hits, facet_counts=tuple(facet_counts)
            )

    def _hit(self, entry: CatalogEntry, query: Query) -> Hit:
        matched: set[str] = set()
        for element_name, code in query.code_filters:
            matched.add(element_name)
        for element_name, term in query.text_terms:
            tokens = set(tokenize(term))
            for el in entry.record.elements:
                if element_name is not None and el.name != element_name:
                    continue
                if tokens & set(tokenize(el.content)):
                    matched.add(el.name)
        title = entry.record.first_content("title") or ""
        return Hit(
            archive_id=entry.archive_id,
            identifier=entry.identifier,
            title=title,
            matched_elements=tuple(sorted(matched)),
        )

    # -- consistency ------------------------------------------------------------

    def verify_index_consistency(self) -> tuple[str, ...]:
        """Rebuild indexes from entries and report every divergence."""
        problems: list[str] = []
        with self._lock:
            fresh_text: dict[str, dict[str, set[Key]]] = {}
            fresh_code: dict[str, dict[str, set[Key]]] = {}
            for key, entry in self._entries.items():
                text, codes = self._postings(entry.record)
                for name, token in text:
                    fresh_text.setdefault(name, {}).setdefault(token, set()).add(key)
                for name, code in codes:
                    fresh_code.setdefault(name, {}).setdefault(code, set()).add(key)

            def diff(kind: str, live: dict, fresh: dict) -> None:
                for name in sorted(set(live) | set(fresh)):
                    live_buckets = {
                        token: keys for token, keys in live.get(name, {}).items() if keys
                    }
                    fresh_buckets = fresh.get(name, {})
                    for token in sorted(set(live_buckets) | set(fresh_buckets)):
                        have = live_buckets.get(token, set())
                        want = fresh_buckets.get(token, set())
                        for key in sorted(want - have):
                            problems.append(
                                f"{kind} index of {name!r} misses {token!r} -> {key}"
                            )
                        for key in sorted(have - want):
                            problems.append(
                                f"{kind} index of {name!r} has phantom {token!r} -> {key}"
                            )

            diff("text", self._text_index, fresh_text)
            diff("code", self._code_index, fresh_code)
        return tuple(problems)

    # -- persistence --------------------------------------------------------------

    def save(self, path: str | Path) -> None:
        with self._lock:
            rows = []
            for key in sorted(self._entries):
                entry = self._entries[key]
                rows.append(
                    json.dumps(
                        {
                            "archiveId": entry.archive_id,
                            "identifier": entry.identifier,
                            "datestamp": format_day(entry.envelope.datestamp),
                            "harvestedAt": (
                                format_day(entry.harvested_at)
                                if entry.harvested_at else None
                            ),
                            "flags": list(entry.validation_flags),
                            "elements": [
                                [el.name, el.content, el.code, el.refine]
                                for el in entry.record.elements
                            ],
                        },
                        sort_keys=True, ensure_ascii=False,
                    )
                )
        header = json.dumps(
            {"format": SNAPSHOT_FORMAT, "version": SNAPSHOT_VERSION}, sort_keys=True
        )
        Path(path).write_text("\n".join([header] + rows) + "\n", "utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "UnionCatalog":
        text = Path(path).read_text("utf-8")
        lines = [line for line in text.splitlines() if line.strip()]
        if not lines:
            raise ValueError(f"{path}: empty catalog snapshot")
        header = json.loads(lines[0])
        if header.get("format") != SNAPSHOT_FORMAT:
            raise ValueError(f"{path}: not a catalog snapshot")
        if header.get("version") != SNAPSHOT_VERSION:
            raise ValueError(f"{path}: unsupported snapshot version")
        catalog = cls()
        for line in lines[1:]:
            row = json.loads(line)
            record = OlacRecord(
                elements=tuple(
                    MetadataElement(name=n, content=c, code=co, refine=r)
                    for n, c, co, r in row["elements"]
                )
            )
            envelope = RecordEnvelope(
                identifier=row["identifier"],
                datestamp=parse_day(row["datestamp"]),
                record=record,
            )
            catalog.ingest_one(
                row["archiveId"], envelope,
                flags=tuple(row.get("flags", ())),
                harvested_at=(
                    parse_day(row["harvestedAt"]) if row.get("harvestedAt") else None
                ),
            )
        return catalog
