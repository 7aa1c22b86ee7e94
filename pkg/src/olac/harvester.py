"""Service-provider side: crawl the registry and pool records into the catalog.

A harvest job pages through one provider's listing (following resumption
tokens), collects every envelope, and only then applies the batch to the
union catalog — a job that dies mid-listing changes nothing. The ledger
remembers, per archive, the last day a harvest succeeded; incremental jobs
ask only for records on or after that day and re-apply them idempotently.

The listing window's upper bound is pinned to the job's start day so a
provider mutating mid-harvest cannot tear the window; the next incremental
run picks up from that pin.
"""

from __future__ import annotations

import datetime
import json
import threading
import urllib.parse
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import protocol
from .catalog import UnionCatalog
from .httpbase import TransportError, fetch
from .oryx import RecordEnvelope, format_day
from .registry import RegistryEntry
from .vocab import VocabularyRegistry, bundled_registry
from .metadata import validate_record

MODE_FULL = "full"
MODE_INCREMENTAL = "incremental"

DEFAULT_PARALLELISM = 4


class HarvestError(Exception):
    pass


@dataclass(frozen=True)
class HarvestOutcome:
    archive_id: str
    mode: str
    ok: bool
    records: int = 0
    deletes: int = 0
    flagged: int = 0
    pages: int = 0
    error: str | None = None


class HarvestLedger:
    """Per-archive last-success days plus job history, journaled to one file."""

    def __init__(self, path: str | Path | None = None):
        self._path = Path(path) if path else None
        self._lock = threading.Lock()
        self._last_success: dict[str, datetime.date] = {}
        self._history: list[dict] = []
        if self._path and self._path.exists():
            self._replay()

    def _replay(self) -> None:
        assert self._path is not None
        with self._path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                event = json.loads(line)
                if event.get("event") == "success":
                    day = datetime.date.fromisoformat(event["day"])
                    current = self._last_success.get(event["archiveId"])
                    if current is None or day > current:
                        self._last_success[event["archiveId"]] = day
                elif event.get("event") == "job":
                    self._history.append(event)

    def _append(self, event: dict) -> None:
        if self._path is None:
            return
        with self._path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    def last_success(self, archive_id: str) -> datetime.date | None:
        with self._lock:
            return self._last_success.get(archive_id)

    def record_success(self, archive_id: str, day: datetime.date) -> None:
        """Advance the last-success day; it never moves backwards."""
        with self._lock:
            current = self._last_success.get(archive_id)
            if current is None or day > current:
                self._last_success[archive_id] = day
                self._append(
                    {"event": "success", "archiveId": archive_id,
                     "day": day.isoformat()}
                )

    def record_job(self, outcome: HarvestOutcome,
                   finished: datetime.datetime) -> None:
        event = {
            "event": "job",
            "archiveId": outcome.archive_id,
            "mode": outcome.mode,
            "ok": outcome.ok,
            "records": outcome.records,
            "deletes": outcome.deletes,
            "flagged": outcome.flagged,
            "pages": outcome.pages,
            "error": outcome.error,
            "finishedAt": finished.strftime("%Y-%m-%dT%H:%M:%SZ"),
        }
        with self._lock:
            self._history.append(event)
            self._append(event)

    def history(self) -> list[dict]:
        with self._lock:
            return list(self._history)


def _provider_url(base_url: str, arguments: dict[str, str]) -> str:
    sep = "&" if "?" in base_url else "?"
    return base_url + sep + urllib.parse.urlencode(arguments)


class Harvester:
    def __init__(self, catalog: UnionCatalog, ledger: HarvestLedger, *,
                 vocabs: VocabularyRegistry | None = None, fetcher=fetch,
                 clock=None, timeout: float = 60.0):
        self.catalog = catalog
        self.ledger = ledger
        self.vocabs = vocabs or bundled_registry()
        self._fetch = fetcher
        self._clock = clock or (
            lambda: datetime.datetime.now(datetime.timezone.utc)
        )
        self.timeout = timeout

    def _query(self, base_url: str, arguments: dict[str, str]) -> protocol.ResponseView:
        result = self._fetch(_provider_url(base_url, arguments), timeout=self.timeout)
        if result.status != 200:
            raise HarvestError(f"provider answered HTTP {result.status}")
        try:
            return protocol.parse_response(result.body)
        except protocol.ResponseFormatError as exc:
            raise HarvestError(f"unreadable provider response: {exc}") from None

    def _collect(self, entry: RegistryEntry, lower: datetime.date | None,
                 upper: datetime.date) -> tuple[list[RecordEnvelope], int]:
        """Page through the provider's listing; returns (envelopes, pages)."""
        identify = self._query(entry.base_url, {"verb": "Identify"})
        if not identify.ok:
            raise HarvestError(
                f"identity probe failed: {identify.error_code}: "
                f"{identify.error_message}"
            )
        arguments = {
            "verb": protocol.VERB_LIST_RECORDS,
            "metadataPrefix": protocol.PREFIX_OLAC,
            "until": format_day(upper),
        }
        if lower is not None:
            arguments["from"] = format_day(lower)
        envelopes: list[RecordEnvelope] = []
        pages = 0
        while True:
            view = self._query(entry.base_url, arguments)
            pages += 1
            if not view.ok:
                if view.error_code == protocol.NO_RECORDS_MATCH and pages == 1:
                    return [], pages
                raise HarvestError(
                    f"provider error {view.error_code}: {view.error_message}"
                )
            for record_el in view.records():
                envelopes.append(protocol.envelope_from_record_element(record_el))
            token_text = view.resumption_token()
            if token_text is None:
                return envelopes, pages
            arguments = {
                "verb": protocol.VERB_LIST_RECORDS,
                "resumptionToken": token_text,
            }

    def _flags_for(self, envelopes: list[RecordEnvelope]) -> dict[str, tuple[str, ...]]:
        flags: dict[str, tuple[str, ...]] = {}
        for env in envelopes:
            if env.record is None:
                continue
            report = validate_record(env.record, self.vocabs, record_id=env.identifier)
            if report.errors:
                flags[env.identifier] = tuple(f.message for f in report.errors)
        return flags

    def harvest_entry(self, entry: RegistryEntry, mode: str) -> HarvestOutcome:
        """Run one job; the catalog and ledger move only on success."""
        started = self._clock()
        upper = started.date()
        lower: datetime.date | None = None
        if mode == MODE_INCREMENTAL:
            lower = self.ledger.last_success(entry.archive_id)
            if lower is None:
                outcome = HarvestOutcome(
                    archive_id=entry.archive_id, mode=mode, ok=False,
                    error="incremental harvest needs a previous success",
                )
                self.ledger.record_job(outcome, self._clock())
                return outcome
        elif mode != MODE_FULL:
            raise ValueError(f"unknown harvest mode {mode!r}")
        try:
            envelopes, pages = self._collect(entry, lower, upper)
        except (HarvestError, TransportError, protocol.ResponseFormatError,
                ValueError) as exc:
            outcome = HarvestOutcome(
                archive_id=entry.archive_id, mode=mode, ok=False, error=str(exc)
            )
            self.ledger.record_job(outcome, self._clock())
            return outcome
        flags = self._flags_for(envelopes)
        if mode == MODE_FULL:
            report = self.catalog.replace_archive(
                entry.archive_id, envelopes,
                flags_by_identifier=flags, harvested_at=upper,
            )
        else:
            report = self.catalog.ingest(
                entry.archive_id, envelopes,
                flags_by_identifier=flags, harvested_at=upper,
            )
        self.ledger.record_success(entry.archive_id, upper)
        outcome = HarvestOutcome(
            archive_id=entry.archive_id, mode=mode, ok=True,
            records=report.upserts, deletes=report.deletes,
            flagged=report.flagged, pages=pages,
        )
        self.ledger.record_job(outcome, self._clock())
        return outcome

    def harvest_all(self, entries: list[RegistryEntry], *, full: bool = False,
                    parallelism: int = DEFAULT_PARALLELISM) -> list[HarvestOutcome]:
        """Harvest every entry, incrementally where a ledger day exists.

        Jobs run concurrently up to ``parallelism``; one archive's failure
        never blocks the others. Outcomes come back in registry order.
        """

        def job(entry: RegistryEntry) -> HarvestOutcome:
            if full or self.ledger.last_success(entry.archive_id) is None:
                mode = MODE_FULL
            else:
                mode = MODE_INCREMENTAL
            return self.harvest_entry(entry, mode)

        if not entries:
            return []
        workers = max(1, min(parallelism, len(entries)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(job, entries))
