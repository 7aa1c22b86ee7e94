"""End-to-end acceptance: one test per contracted capability of the system.

Each test here stands alone and states a whole-system guarantee:

1. a twenty-archive federation totalling 30,000 records pools completely;
2. a real dictionary record survives parsing with full fidelity;
3. the provider honors the full verb/argument conformance matrix;
4. incremental harvesting is indistinguishable from re-harvesting from
   scratch, under randomized catalog churn;
5. a gateway-served archive is indistinguishable from a native provider;
6. indexed search agrees exactly with a linear scan at catalog scale;
7. validation catches every seeded defect with zero false positives.
"""

from __future__ import annotations

import datetime
import random
import re
import time
import urllib.parse
import xml.etree.ElementTree as ET

import pytest

from olac.catalog import Query, UnionCatalog
from olac.cli import main
from olac.harvester import Harvester, HarvestLedger
from olac.httpbase import FetchResult, fetch
from olac.metadata import (
    ELEMENT_NAMES,
    MetadataElement,
    OlacRecord,
    parse_record,
    serialize_record,
    validate_record,
)
from olac.oryx import (
    OryxDocument,
    RecordEnvelope,
    parse_oryx,
    serialize_oryx,
    validate_oryx,
)
from olac.protocol import parse_response
from olac.provider import Provider, ProviderApp, ProviderStore
from olac.registry import Registry, RegistryApp, RegistryEntry
from olac.vida import VidaApp, VidaGateway
from conftest import (
    StaticFileApp,
    linear_scan,
    make_document,
    make_identity,
    simple_record,
)

NOON = datetime.datetime(2002, 6, 1, 12, 0, tzinfo=datetime.timezone.utc)


# ---------------------------------------------------------------------------
# 1. Federation scale: twenty archives, thirty thousand records, one pool.

def test_federation_of_twenty_archives_pools_thirty_thousand_records(
        run_app, tmp_path):
    """Register 20 archives (half native, half gateway-served), harvest all.

    The pooled catalog must hold exactly one entry per published record —
    no losses, no duplicates — and enumerating everything must report the
    same number. The whole run has to finish within a desk-scale budget.
    """
    started = time.monotonic()
    sizes = [1025 + 50 * i for i in range(20)]
    assert sum(sizes) == 30_000

    registry = Registry(tmp_path / "journal.jsonl")
    registry_app = RegistryApp(registry)
    registry_base = run_app(registry_app)
    registry_app.public_url = registry_base

    gateway = VidaGateway()
    vida_base = run_app(VidaApp(gateway))
    gateway.base_url = vida_base

    for i, size in enumerate(sizes):
        archive_id = f"arch{i:02d}"
        document = make_document(archive_id, size)
        if i % 2 == 0:
            base = run_app(ProviderApp(Provider(ProviderStore.from_document(
                document))))
            registry.register(archive_id, base)
        else:
            file_base = run_app(StaticFileApp(
                serialize_oryx(document).encode("utf-8")))
            registry.register(
                archive_id,
                gateway.composed_base_url(f"{file_base}/{archive_id}.xml"),
                kind="vida-backed",
            )

    store = tmp_path / "catalog.jsonl"
    assert main([
        "harvest", "--registry", registry_base, "--full",
        "--store", str(store), "--ledger", str(tmp_path / "ledger.jsonl"),
    ]) == 0

    catalog = UnionCatalog.load(store)
    assert len(catalog) == 30_000
    keys = catalog.keys()
    assert len(set(keys)) == 30_000
    per_archive = {}
    for archive_id, _ in keys:
        per_archive[archive_id] = per_archive.get(archive_id, 0) + 1
    assert per_archive == {f"arch{i:02d}": size for i, size in enumerate(sizes)}
    assert catalog.search(Query(enumerate_all=True, limit=0)).total == 30_000
    assert time.monotonic() - started < 300


# ---------------------------------------------------------------------------
# 2. Fidelity of a real electronic-dictionary record.

def test_limbu_dictionary_record_parses_with_full_fidelity(limbu_xml):
    record = parse_record(limbu_xml)
    assert [
        (e.name, e.content, e.code, e.refine) for e in record.elements
    ] == [
        ("title", "Limbu-English Dictionary", None, None),
        ("creator", "Michailovsky, Boyd", None, None),
        ("date", "", "2002-05-22", "modified"),
        ("description",
         "The XML source for a dictionary of the Limbu language of Nepal, "
         "consisting of approximately 2,000 entries. (Size: 1.2M)",
         None, None),
        ("format", "", "text/xml", None),
        ("publisher",
         "LACITO Project, Centre National de la Recherche Scientifique (CNRS)",
         None, None),
        ("language", "", "en", None),
        ("subject.language", "", "x-sil-LIF", None),
        ("type", "", "Text", None),
        ("type.linguistic", "", "lexicon/dictionary", None),
        ("identifier",
         "http://lacito.archivage.vjf.cnrs.fr/archives/Nepal/Limbu/"
         "dicoLimbu.xml",
         None, None),
    ]
    assert len(record) == 11

    serialized = serialize_record(record)
    assert parse_record(serialized) == record
    assert serialize_record(parse_record(serialized)) == serialized


# ---------------------------------------------------------------------------
# 3. Protocol conformance matrix.

def _payload(tag):
    """Expectation: a successful response whose payload element is <tag>."""
    def check(view):
        assert view.ok, (view.error_code, view.error_message)
        assert view.payload.tag.endswith("}" + tag)
    return check


def _fault(code):
    def check(view):
        assert view.error_code == code, (view.error_code, view.error_message)
    return check


# (cell, query, expectation): four argument treatments for all six verbs.
CONFORMANCE_MATRIX = [
    # -- GetRecord
    ("GetRecord valid",
     "verb=GetRecord&metadataPrefix=olac&identifier=oai:ethnologue:AAA",
     _payload("GetRecord")),
    ("GetRecord missing metadataPrefix",
     "verb=GetRecord&identifier=oai:ethnologue:AAA", _fault("badArgument")),
    ("GetRecord missing identifier",
     "verb=GetRecord&metadataPrefix=olac", _fault("badArgument")),
    ("GetRecord illegal extra argument",
     "verb=GetRecord&metadataPrefix=olac&identifier=oai:ethnologue:AAA"
     "&from=2002-01-01",
     _fault("badArgument")),
    ("GetRecord unknown format value",
     "verb=GetRecord&metadataPrefix=marc&identifier=oai:ethnologue:AAA",
     _fault("cannotDisseminateFormat")),
    ("GetRecord unknown identifier value",
     "verb=GetRecord&metadataPrefix=olac&identifier=oai:ethnologue:ZZZ",
     _fault("idDoesNotExist")),
    # -- Identify
    ("Identify valid", "verb=Identify", _payload("Identify")),
    ("Identify requires nothing else", "verb=Identify", _payload("Identify")),
    ("Identify illegal extra argument",
     "verb=Identify&identifier=oai:ethnologue:AAA", _fault("badArgument")),
    ("Identify unknown verb casing", "verb=identify", _fault("badVerb")),
    # -- ListIdentifiers
    ("ListIdentifiers valid", "verb=ListIdentifiers",
     _payload("ListIdentifiers")),
    ("ListIdentifiers valid with window",
     "verb=ListIdentifiers&from=2002-05-01&until=2002-05-31",
     _payload("ListIdentifiers")),
    ("ListIdentifiers requires no format", "verb=ListIdentifiers",
     _payload("ListIdentifiers")),
    ("ListIdentifiers illegal metadataPrefix",
     "verb=ListIdentifiers&metadataPrefix=olac", _fault("badArgument")),
    ("ListIdentifiers unknown date value",
     "verb=ListIdentifiers&from=05%2F01%2F2002", _fault("badArgument")),
    ("ListIdentifiers unknown token value",
     "verb=ListIdentifiers&resumptionToken=gibberish",
     _fault("badResumptionToken")),
    # -- ListMetadataFormats
    ("ListMetadataFormats valid", "verb=ListMetadataFormats",
     _payload("ListMetadataFormats")),
    ("ListMetadataFormats valid for one item",
     "verb=ListMetadataFormats&identifier=oai:ethnologue:AAA",
     _payload("ListMetadataFormats")),
    ("ListMetadataFormats requires nothing else", "verb=ListMetadataFormats",
     _payload("ListMetadataFormats")),
    ("ListMetadataFormats illegal extra argument",
     "verb=ListMetadataFormats&metadataPrefix=olac", _fault("badArgument")),
    ("ListMetadataFormats unknown identifier value",
     "verb=ListMetadataFormats&identifier=oai:ethnologue:ZZZ",
     _fault("idDoesNotExist")),
    # -- ListRecords
    ("ListRecords valid", "verb=ListRecords&metadataPrefix=olac",
     _payload("ListRecords")),
    ("ListRecords valid windowed",
     "verb=ListRecords&metadataPrefix=olac&from=2002-05-01&until=2002-05-31",
     _payload("ListRecords")),
    ("ListRecords missing metadataPrefix", "verb=ListRecords",
     _fault("badArgument")),
    ("ListRecords illegal identifier argument",
     "verb=ListRecords&metadataPrefix=olac&identifier=oai:ethnologue:AAA",
     _fault("badArgument")),
    ("ListRecords unknown format value", "verb=ListRecords&metadataPrefix=marc",
     _fault("cannotDisseminateFormat")),
    ("ListRecords unknown date value",
     "verb=ListRecords&metadataPrefix=olac&until=yesterday",
     _fault("badArgument")),
    ("ListRecords inverted window",
     "verb=ListRecords&metadataPrefix=olac&from=2002-06-01&until=2002-05-01",
     _fault("badArgument")),
    ("ListRecords empty window",
     "verb=ListRecords&metadataPrefix=olac&from=1990-01-01&until=1990-12-31",
     _fault("noRecordsMatch")),
    ("ListRecords unknown token value",
     "verb=ListRecords&resumptionToken=gibberish",
     _fault("badResumptionToken")),
    # -- ListSets
    ("ListSets valid", "verb=ListSets", _payload("ListSets")),
    ("ListSets requires nothing else", "verb=ListSets", _payload("ListSets")),
    ("ListSets illegal extra argument", "verb=ListSets&resumptionToken=x",
     _fault("badArgument")),
    ("ListSets unknown set value", "verb=ListSets&set=video",
     _fault("badArgument")),
    # -- verb handling itself
    ("missing verb", "", _fault("badVerb")),
    ("unknown verb", "verb=Frobnicate", _fault("badVerb")),
    ("repeated verb", "verb=Identify&verb=Identify", _fault("badVerb")),
]


def test_provider_honors_the_conformance_matrix(run_app):
    store = ProviderStore.from_document(make_document("ethnologue", 4))
    store.put_record("AAA", simple_record(7),
                     datestamp=datetime.date(2002, 5, 10))
    base = run_app(ProviderApp(Provider(store)))

    failures = []
    for cell, query, expectation in CONFORMANCE_MATRIX:
        view = parse_response(fetch(f"{base}/?{query}").body)
        try:
            expectation(view)
        except AssertionError as exc:
            failures.append(f"{cell}: {exc}")
    assert not failures, "\n".join(failures)

    # The identity answer must carry the archive's description block.
    identify = parse_response(fetch(f"{base}/?verb=Identify").body)
    text = identify.payload_text()
    assert "<archiveId>ethnologue</archiveId>" in text
    assert "<curator>Pat Curator</curator>" in text
    assert "<institution>Example Institute</institution>" in text

    # The documented parameter string, verbatim, fetches its record.
    raw = fetch(
        f"{base}/?verb=GetRecord&metadataPrefix=olac"
        "&identifier=oai:ethnologue:AAA"
    ).body
    view = parse_response(raw)
    assert view.ok
    assert "oai:ethnologue:AAA" in view.payload_text()
    assert "Resource 0007" in view.payload_text()


# ---------------------------------------------------------------------------
# 4. Incremental harvesting equals harvesting from scratch, under churn.

class _LoopbackFetch:
    """Routes provider URLs to in-process handlers, no sockets involved."""

    def __init__(self):
        self.providers: dict[str, Provider] = {}

    def __call__(self, url: str, timeout: float = 30.0,
                 request_headers=None) -> FetchResult:
        parts = urllib.parse.urlsplit(url)
        body = self.providers[parts.netloc].handle_query(parts.query)
        return FetchResult(status=200, body=body.encode("utf-8"), headers={})


def _catalog_state(catalog: UnionCatalog):
    """Comparable dump of everything a harvest establishes.

    The per-entry harvest day is bookkeeping, not content — an incremental
    pass rightly leaves untouched entries alone — so it stays out.
    """
    state = []
    for key in sorted(catalog.keys()):
        entry = catalog.get(*key)
        state.append((
            entry.archive_id,
            entry.identifier,
            entry.envelope.datestamp.isoformat(),
            entry.envelope.record.elements,
            entry.validation_flags,
        ))
    return state


def test_incremental_harvest_equals_full_harvest_after_churn():
    """1,000 randomized churn scripts; after each, the ledger-driven
    incremental state must equal a from-scratch full harvest."""
    rng = random.Random(6391)
    day = datetime.date(2002, 1, 7)

    def clock():
        return datetime.datetime(day.year, day.month, day.day, 12, 0,
                                 tzinfo=datetime.timezone.utc)

    store = ProviderStore.from_document(make_document("churn", 0))
    loopback = _LoopbackFetch()
    loopback.providers["churn.internal"] = Provider(
        store, page_size=17, clock=clock)
    entry = RegistryEntry("churn", "http://churn.internal/", day)

    incremental = Harvester(UnionCatalog(), HarvestLedger(),
                            fetcher=loopback, clock=clock)
    next_local = 0
    live: list[str] = []
    graveyard: list[str] = []

    def random_record() -> OlacRecord:
        return OlacRecord(elements=(
            MetadataElement("title", f"Survey part {rng.randrange(1000)}"),
            MetadataElement("language", code=rng.choice(("en", "fr", "de"))),
        ))

    for script in range(1000):
        last_harvest_day = day
        day += datetime.timedelta(days=rng.randrange(4))
        window = (day - last_harvest_day).days
        for _ in range(rng.randrange(1, 7)):
            stamp = last_harvest_day + datetime.timedelta(
                days=rng.randrange(window + 1))
            dice = rng.random()
            if live and (dice < 0.25 or len(live) > 60):
                victim = live.pop(rng.randrange(len(live)))
                store.delete_record(victim, datestamp=stamp)
                graveyard.append(victim)
            elif live and dice < 0.55:
                store.put_record(rng.choice(live), random_record(),
                                 datestamp=stamp)
            elif graveyard and dice < 0.65:
                revived = graveyard.pop(rng.randrange(len(graveyard)))
                store.put_record(revived, random_record(), datestamp=stamp)
                live.append(revived)
            else:
                local = f"item{next_local:05d}"
                next_local += 1
                store.put_record(local, random_record(), datestamp=stamp)
                live.append(local)

        outcome, = incremental.harvest_all([entry])
        assert outcome.ok, f"script {script}: {outcome.error}"
        assert outcome.mode == ("full" if script == 0 else "incremental")

        fresh = Harvester(UnionCatalog(), HarvestLedger(),
                          fetcher=loopback, clock=clock)
        assert fresh.harvest_entry(entry, "full").ok
        assert _catalog_state(incremental.catalog) == _catalog_state(
            fresh.catalog), f"diverged after script {script}"


# ---------------------------------------------------------------------------
# 5. A gateway-served archive behaves exactly like a native provider.

_CONTENT_POOL = (
    "Field recordings", "Notes & queries", "A <bracketed> title",
    "Grammar of the northern dialect", "  padded  ", "Répertoire 中文",
    "line\nbreak", "", "2,000 entries (1.2M)",
)
_CODE_POOL = ("en", "fr", "x-sil-LIF", "x-sil-AAA", "Text", "Sound",
              "lexicon/dictionary", "not-a-real-code", "2002-05-22")
_REFINE_POOL = ("created", "modified", "available", "unsanctioned")


def _random_document(rng: random.Random, serial: int) -> OryxDocument:
    archive_id = f"equiv{serial:03d}"
    envelopes = []
    names = sorted(ELEMENT_NAMES)
    for i in range(rng.randrange(26)):
        deleted = rng.random() < 0.15
        record = None
        if not deleted:
            record = OlacRecord(elements=tuple(
                MetadataElement(
                    rng.choice(names),
                    content=rng.choice(_CONTENT_POOL),
                    code=rng.choice(_CODE_POOL) if rng.random() < 0.5 else None,
                    refine=(rng.choice(_REFINE_POOL)
                            if rng.random() < 0.2 else None),
                )
                for _ in range(rng.randrange(9))
            ))
        envelopes.append(RecordEnvelope(
            identifier=f"oai:{archive_id}:it{i:03d}",
            datestamp=datetime.date(2002, 1, 1) + datetime.timedelta(
                days=rng.randrange(152)),
            deleted=deleted,
            record=record,
        ))
    return OryxDocument(make_identity(archive_id), tuple(envelopes))


def _random_requests(rng: random.Random, doc: OryxDocument, tokens: list[str]):
    """One protocol request, occasionally continuing an earlier listing."""
    identifiers = [env.identifier for env in doc.envelopes]
    aid = doc.identity.archive_id

    def an_id() -> str:
        pool = identifiers + [f"oai:{aid}:ghost", "oai:elsewhere:thing"]
        return rng.choice(pool)

    def a_day() -> str:
        return (datetime.date(2002, 1, 1)
                + datetime.timedelta(days=rng.randrange(160))).isoformat()

    choices = [
        lambda: "verb=Identify",
        lambda: "verb=ListSets",
        lambda: "verb=ListMetadataFormats",
        lambda: "verb=ListMetadataFormats&identifier=" + an_id(),
        lambda: ("verb=GetRecord&metadataPrefix="
                 + rng.choice(("olac", "oai_dc", "marc"))
                 + "&identifier=" + an_id()),
        lambda: "verb=GetRecord&identifier=" + an_id(),
        lambda: ("verb=ListRecords&metadataPrefix="
                 + rng.choice(("olac", "oai_dc"))),
        lambda: (f"verb=ListRecords&metadataPrefix=olac&from={a_day()}"
                 f"&until={a_day()}"),
        lambda: "verb=ListRecords&metadataPrefix=olac&until=not-a-date",
        lambda: "verb=ListIdentifiers",
        lambda: f"verb=ListIdentifiers&from={a_day()}",
        lambda: "verb=ListIdentifiers&metadataPrefix=olac",
        lambda: "verb=ListRecords&resumptionToken=nonsense",
        lambda: "verb=Frobnicate",
        lambda: "verb=Identify&colour=blue",
    ]
    if tokens:
        verb, token = tokens.pop().split(" ", 1)
        return f"verb={verb}&resumptionToken={urllib.parse.quote(token)}"
    return rng.choice(choices)()


def _strip_request_line(body: str) -> str:
    return "\n".join(
        line for line in body.splitlines() if "<request" not in line
    )


def test_gateway_provider_is_indistinguishable_from_native(monkeypatch):
    """200 randomized archives × randomized request sequences: byte-equal
    answers (apart from the echoed request line) from both provider forms."""
    rng = random.Random(1918)
    clock = lambda: NOON  # noqa: E731 - one fixed instant for both sides

    for serial in range(200):
        doc = _random_document(rng, serial)
        xml_text = serialize_oryx(doc)
        url = f"http://files.example/{serial}.xml"

        def fetch_stub(u, timeout=30.0, request_headers=None,
                       _body=xml_text.encode("utf-8"), _url=url):
            assert u == _url
            return FetchResult(status=200, body=_body, headers={})

        native = Provider(
            ProviderStore.from_document(parse_oryx(xml_text)),
            page_size=7, clock=clock,
        )
        gateway = VidaGateway(page_size=7, fetcher=fetch_stub, clock=clock,
                              base_url="http://gw.example/vida")
        oryx_arg = "oryx=" + urllib.parse.quote(url, safe="")

        tokens: list[str] = []
        for _ in range(rng.randrange(4, 11)):
            query = _random_requests(rng, doc, tokens)
            native_body = native.handle_query(query)
            status, vida_body = gateway.handle_query(f"{query}&{oryx_arg}")

            assert status == 200
            assert _strip_request_line(vida_body) == _strip_request_line(
                native_body), f"diverged on {query!r}"

            view = parse_response(native_body)
            vida_view = parse_response(vida_body)
            assert [ET.tostring(r) for r in view.records()] == [
                ET.tostring(r) for r in vida_view.records()
            ]
            token = view.resumption_token()
            if token is not None:
                assert vida_view.resumption_token() == token
                verb = query.split("verb=")[1].split("&")[0]
                tokens.append(f"{verb} {token}")


# ---------------------------------------------------------------------------
# 6. Search agrees with a linear scan at catalog scale.

_WORDS = (
    "river", "delta", "kiwi", "stone", "amber", "lingua", "norte", "sur",
    "vowel", "tone", "corpus", "sketch", "ritual", "tale", "flood", "basin",
    "canoe", "millet", "rice", "clan", "kin", "moon", "tide", "drum",
)
_LANGS = ("en", "fr", "de", "es", "pt", "nl")
_TYPES = ("Text", "Sound", "Image")
_SUBJECTS = ("x-sil-LIF", "x-sil-AAA", "x-sil-BOA", "en", "fr")


def _phrase(rng: random.Random) -> str:
    return " ".join(rng.choice(_WORDS) for _ in range(rng.randrange(1, 4)))


@pytest.fixture(scope="module")
def scale_corpus():
    rng = random.Random(424242)
    archives = [f"site{i:02d}" for i in range(12)]
    rows = []
    for i in range(10_000):
        archive_id = rng.choice(archives)
        elements = [MetadataElement("title", _phrase(rng))]
        if rng.random() < 0.6:
            elements.append(MetadataElement("description", _phrase(rng)))
        if rng.random() < 0.2:
            elements.append(MetadataElement("contributor", _phrase(rng)))
        if rng.random() < 0.8:
            elements.append(
                MetadataElement("language", code=rng.choice(_LANGS)))
        if rng.random() < 0.1:  # a second language on some records
            elements.append(
                MetadataElement("language", code=rng.choice(_LANGS)))
        if rng.random() < 0.7:
            elements.append(MetadataElement("type", code=rng.choice(_TYPES)))
        if rng.random() < 0.4:
            elements.append(
                MetadataElement("subject.language",
                                code=rng.choice(_SUBJECTS)))
        rows.append((archive_id, RecordEnvelope(
            identifier=f"oai:{archive_id}:n{i:05d}",
            datestamp=datetime.date(2002, 5, 1),
            record=OlacRecord(elements=tuple(elements)),
        )))
    catalog = UnionCatalog()
    for archive_id, envelope in rows:
        catalog.ingest_one(archive_id, envelope)
    return rows, catalog


def _random_query(rng: random.Random) -> Query:
    code_filters = []
    if rng.random() < 0.4:
        code_filters.append(("language", rng.choice(_LANGS + ("zz",))))
    if rng.random() < 0.25:
        code_filters.append(("type", rng.choice(_TYPES)))
    if rng.random() < 0.2:
        code_filters.append(
            ("subject.language", rng.choice(_SUBJECTS + ("x-sil-QQQ",))))
    text_terms = [
        (rng.choice((None, None, "title", "description")), _phrase(rng))
        for _ in range(rng.randrange(3))
        if rng.random() < 0.8
    ]
    archive = f"site{rng.randrange(14):02d}" if rng.random() < 0.25 else None
    facets = tuple(
        name for name in ("language", "type", "subject.language")
        if rng.random() < 0.3
    )
    empty = not (code_filters or text_terms or archive)
    return Query(
        code_filters=tuple(code_filters),
        text_terms=tuple(text_terms),
        archive=archive,
        offset=rng.choice((0, 0, 0, 3, 50, 2000)),
        limit=rng.choice((None, 0, 1, 10, 100)),
        facets=facets,
        enumerate_all=empty or rng.random() < 0.2,
    )


def test_search_matches_linear_scan_at_scale(scale_corpus):
    """500 randomized queries over 10,000 records: totals, pages, and facet
    counts must equal the reference scan; paged walks must concatenate to
    the unpaged answer."""
    rows, catalog = scale_corpus
    rng = random.Random(5150)

    for i in range(500):
        query = _random_query(rng)
        expected_total, expected_ids, expected_facets = linear_scan(rows, query)
        result = catalog.search(query)
        assert result.total == expected_total, f"query {i}: total"
        assert [h.identifier for h in result.hits] == expected_ids, (
            f"query {i}: page window")
        assert result.facet_counts == expected_facets, f"query {i}: facets"

        if i % 10 == 0:
            unpaged = catalog.search(Query(
                code_filters=query.code_filters, text_terms=query.text_terms,
                archive=query.archive, enumerate_all=query.enumerate_all,
            ))
            walked = []
            page_size = 509
            for offset in range(0, unpaged.total, page_size):
                page = catalog.search(Query(
                    code_filters=query.code_filters,
                    text_terms=query.text_terms, archive=query.archive,
                    enumerate_all=query.enumerate_all,
                    offset=offset, limit=page_size,
                ))
                walked.extend(h.identifier for h in page.hits)
            assert walked == [h.identifier for h in unpaged.hits], (
                f"query {i}: paging concatenation")


# ---------------------------------------------------------------------------
# 7. Validation: every seeded defect caught, no false positives.

def _record_xml(marker: str, *defect_elements: str) -> str:
    """One record element: a sound core plus optionally defective extras."""
    body = "".join(
        [f"      <title>Specimen {marker}</title>\n",
         '      <language code="en"/>\n',
         *defect_elements]
    )
    return body


def test_validation_catches_every_seeded_defect(vocabs):
    today = datetime.date(2002, 6, 1)
    ns = "http://www.language-archives.org/OLAC/0.4/"
    oryx_ns = "http://www.language-archives.org/OLAC/0.4/oryx/"

    # Ten sound records: every attribute form, plus one tombstone.
    valid = {
        "r01": _record_xml("r01"),
        "r02": _record_xml("r02", '      <date code="2002-05-22" refine="modified"/>\n'),
        "r03": _record_xml("r03", '      <subject.language code="x-sil-LIF"/>\n'),
        "r04": _record_xml("r04", '      <type code="Text"/>\n'),
        "r05": _record_xml("r05", '      <type.linguistic code="lexicon/dictionary"/>\n'),
        "r06": _record_xml("r06", '      <format code="text/xml"/>\n'),
        "r07": _record_xml("r07", "      <description>Notes on usage</description>\n"),
        "r08": _record_xml("r08", '      <language code="fr"/>\n'),
        "r09": _record_xml("r09", '      <subject.language code="x-linguist-AKK"/>\n'),
    }
    defective = {
        # unknown element
        "r11": _record_xml("r11", "      <colour>blue</colour>\n"),
        "r12": _record_xml("r12", "      <Title>case matters</Title>\n"),
        "r13": _record_xml("r13", "      <subject.dialect>north</subject.dialect>\n"),
        "r14": _record_xml("r14", "      <notes>misc</notes>\n"),
        # bad two-letter language code
        "r15": _record_xml("r15", '      <language code="qq"/>\n'),
        "r16": _record_xml("r16", '      <subject.language code="zz"/>\n'),
        "r17": _record_xml("r17", '      <language code="uu"/>\n'),
        # malformed extended-code pattern
        "r18": _record_xml("r18", '      <subject.language code="x-sil-LI"/>\n'),
        "r19": _record_xml("r19", '      <subject.language code="x-sil-L1F"/>\n'),
        "r20": _record_xml("r20", '      <language code="x-sil-LIMBU"/>\n'),
        # empty element: no content, no code, no refine
        "r21": _record_xml("r21", "      <description/>\n"),
        "r22": _record_xml("r22", "      <creator></creator>\n"),
        "r23": _record_xml("r23", "      <publisher/>\n"),
        "r24": _record_xml("r24", "      <identifier/>\n"),
        # future datestamp (relative to the validation day)
        "r28": _record_xml("r28"),
        "r29": _record_xml("r29"),
        "r30": _record_xml("r30"),
    }
    bad_identifiers = {  # bad identifier shape; markers stay greppable
        "r25": "urn:suite:r25",
        "r26": "oai:suite:r26:extra",
        "r27": "oai:r27",
    }
    future_days = {"r28": "2002-06-02", "r29": "2003-01-01",
                   "r30": "2999-12-31"}

    lines = ['<oryx xmlns="%s">' % oryx_ns, "  <archive id=\"suite\">",
             "    <repositoryName>Validation suite</repositoryName>",
             "    <baseUrl>http://suite.example/</baseUrl>",
             "    <adminEmail>admin@suite.example</adminEmail>",
             "    <description>",
             "      <curator>Pat Curator</curator>",
             "      <institution>Example Institute</institution>",
             "    </description>",
             "  </archive>"]
    for marker, body in {**valid, **defective}.items():
        day = future_days.get(marker, "2002-05-20")
        lines.append(
            f'  <record identifier="oai:suite:{marker}" datestamp="{day}">'
        )
        lines.append(f'    <olac xmlns="{ns}">\n{body}    </olac>')
        lines.append("  </record>")
    for marker, identifier in bad_identifiers.items():
        lines.append(
            f'  <record identifier="{identifier}" datestamp="2002-05-20">'
        )
        lines.append(f'    <olac xmlns="{ns}">\n{_record_xml(marker)}    </olac>')
        lines.append("  </record>")
    lines.append(
        '  <record identifier="oai:suite:r10" datestamp="2002-05-20"'
        ' status="deleted"/>'
    )
    lines.append("</oryx>")

    document = parse_oryx("\n".join(lines))
    assert len(document.envelopes) + len(document.record_issues) == 30

    report = validate_oryx(document, vocabs, today=today)
    flagged = {
        r.record_id.rsplit(":", 1)[-1]
        for r in report.record_reports if r.errors
    }
    # Records too broken to parse surface as document-level findings whose
    # message names the offending identifier; recover the marker from it.
    for finding in report.document_findings:
        flagged.update(re.findall(r"\br\d{2}\b", finding.message))

    seeded = set(defective) | set(bad_identifiers)
    assert flagged == seeded
    assert len(seeded) == 20

    # Each seeded record carries exactly its one defect. Records whose defect
    # already blocked parsing (unknown element, bad identifier) show up as
    # exactly one document-level finding instead of a per-record report.
    by_id = {r.record_id: r for r in report.record_reports}
    parse_dropped = {"r11", "r12", "r13", "r14"} | set(bad_identifiers)
    for marker in defective:
        if marker in parse_dropped:
            continue
        assert len(by_id[f"oai:suite:{marker}"].errors) == 1, marker
    for marker in sorted(parse_dropped):
        naming = [f for f in report.document_findings
                  if re.search(rf"\b{marker}\b", f.message)]
        assert len(naming) == 1, marker

    # Zero false positives, by direct per-record check as well.
    for marker in valid:
        record = by_id[f"oai:suite:{marker}"]
        assert record.ok, (marker, record.findings)
        assert validate_record(
            document.envelopes[
                [e.identifier for e in document.envelopes].index(
                    f"oai:suite:{marker}")
            ].record,
            vocabs,
        ).ok
