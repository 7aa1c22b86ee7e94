"""Command-line entry point for every service and tool in the package.

Exit codes: 0 success; 1 validation or protocol findings; 2 usage errors;
3 transport failures. Every flag with an OLAC_* environment fallback notes
it in its help text (the mapping is flag --foo-bar <-> OLAC_FOO_BAR).
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

from .catalog import Query, QueryError, UnionCatalog
from .catalogserver import CatalogApp, render_search_text, render_search_xml
from .harvester import Harvester, HarvestLedger
from .httpbase import TransportError, make_server, post_form, server_url
from .metadata import (
    ERROR,
    MetadataElement,
    MetadataError,
    OLAC_NAMESPACE,
    OlacRecord,
    parse_record,
    validate_record,
)
from .oryx import (
    ArchiveDescription,
    ArchiveIdentity,
    ORYX_NAMESPACE,
    OryxDocument,
    OryxError,
    RecordEnvelope,
    parse_day,
    parse_oryx,
    serialize_oryx,
    validate_oryx,
)
from .provider import Provider, ProviderApp, ProviderStore
from .registry import Registry, RegistryApp, RegistryError, fetch_archive_list
from .vida import VidaApp, VidaGateway
from .vocab import bundled_registry
from .xmlwriter import XML_DECLARATION, attrs, element

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_USAGE = 2
EXIT_TRANSPORT = 3


def _env(name: str, fallback: str | None = None) -> str | None:
    return os.environ.get(name, fallback)


def _split_bind(bind: str) -> tuple[str, int]:
    host, _, port = bind.rpartition(":")
    if not host or not port.isdigit():
        raise SystemExit(f"--bind wants HOST:PORT, got {bind!r}")
    return host, int(port)


def _serve_forever(app, bind: str) -> int:
    host, port = _split_bind(bind)
    server = make_server(app, host, port)
    print(f"serving on {server_url(server)}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate

def _findings_xml(reports) -> str:
    ok = all(report.ok for report in reports)
    lines = [XML_DECLARATION, f'<validationReport ok="{"true" if ok else "false"}">']
    for report in reports:
        for finding in report.findings:
            pairs = [("severity", finding.severity)]
            if report.record_id:
                pairs.append(("recordId", report.record_id))
            if finding.element_index is not None:
                pairs.append(("element", str(finding.element_index)))
            lines.append("  " + element("finding", finding.message, tuple(pairs)))
    lines.append("</validationReport>")
    return "\n".join(lines) + "\n"


def cmd_validate(args) -> int:
    vocabs = bundled_registry()
    text = Path(args.path).read_text("utf-8")
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        print(f"error: not well-formed XML: {exc}", file=sys.stderr)
        return EXIT_FINDINGS
    if root.tag == f"{{{ORYX_NAMESPACE}}}oryx":
        try:
            document = parse_oryx(text)
        except MetadataError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FINDINGS
        report = validate_oryx(document, vocabs)
        reports = [
            r for r in report.record_reports
        ]
        if report.document_findings:
            from .metadata import ValidationReport

            reports.insert(0, ValidationReport(None, report.document_findings))
        if args.xml:
            print(_findings_xml(reports), end="")
        else:
            for rec in reports:
                for finding in rec.findings:
                    where = f" [{rec.record_id}]" if rec.record_id else ""
                    print(f"{finding.severity}:{where} {finding.message}")
        return EXIT_OK if report.ok else EXIT_FINDINGS
    if root.tag == f"{{{OLAC_NAMESPACE}}}olac":
        try:
            record = parse_record(text)
        except MetadataError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FINDINGS
        report = validate_record(record, vocabs)
        if args.xml:
            print(_findings_xml([report]), end="")
        else:
            for finding in report.findings:
                index = (
                    f" (element {finding.element_index})"
                    if finding.element_index is not None else ""
                )
                print(f"{finding.severity}:{index} {finding.message}")
        return EXIT_OK if report.ok else EXIT_FINDINGS
    print(f"error: unrecognized document root {root.tag}", file=sys.stderr)
    return EXIT_FINDINGS


# ---------------------------------------------------------------------------
# services

def cmd_serve_provider(args) -> int:
    store = ProviderStore.load(args.oryx)
    provider = Provider(
        store, page_size=args.page_size,
        base_url=args.base_url if args.base_url else None,
    )
    return _serve_forever(ProviderApp(provider), args.bind)


def cmd_serve_vida(args) -> int:
    host, port = _split_bind(args.bind)
    gateway = VidaGateway(cache_ttl=args.ttl, page_size=args.page_size)
    server = make_server(VidaApp(gateway), host, port)
    gateway.base_url = server_url(server)
    print(f"serving on {server_url(server)}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def cmd_serve_registry(args) -> int:
    host, port = _split_bind(args.bind)
    registry = Registry(args.journal)
    app = RegistryApp(
        registry,
        oryx_dir=args.oryx_dir,
        public_url=args.public_url or "",
        vida_url=args.vida_url or "",
    )
    server = make_server(app, host, port)
    if not app.public_url:
        app.public_url = server_url(server).rstrip("/")
    print(f"serving on {server_url(server)}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def cmd_serve_catalog(args) -> int:
    catalog = UnionCatalog.load(args.store) if Path(args.store).exists() else UnionCatalog()
    return _serve_forever(CatalogApp(catalog, bundled_registry()), args.bind)


# ---------------------------------------------------------------------------
# harvest / search / registry-add

def cmd_harvest(args) -> int:
    entries = fetch_archive_list(args.registry)
    if args.archive:
        entries = [e for e in entries if e.archive_id == args.archive]
        if not entries:
            print(f"error: registry has no archive {args.archive!r}", file=sys.stderr)
            return EXIT_FINDINGS
    store_path = Path(args.store)
    catalog = UnionCatalog.load(store_path) if store_path.exists() else UnionCatalog()
    ledger = HarvestLedger(args.ledger)
    harvester = Harvester(catalog, ledger)
    outcomes = harvester.harvest_all(
        entries, full=args.full, parallelism=args.parallelism
    )
    catalog.save(store_path)
    if args.xml:
        lines = [XML_DECLARATION, "<harvestSummary>"]
        for o in outcomes:
            pairs = (
                ("archiveId", o.archive_id),
                ("mode", o.mode),
                ("ok", "true" if o.ok else "false"),
                ("records", str(o.records)),
                ("deletes", str(o.deletes)),
                ("flagged", str(o.flagged)),
                ("pages", str(o.pages)),
            )
            lines.append("  " + element("outcome", o.error or "", pairs))
        lines.append("</harvestSummary>")
        print("\n".join(lines))
    else:
        for o in outcomes:
            if o.ok:
                print(
                    f"ok {o.archive_id} mode={o.mode} records={o.records} "
                    f"deletes={o.deletes} flagged={o.flagged} pages={o.pages}"
                )
            else:
                print(f"failed {o.archive_id} mode={o.mode}: {o.error}")
    print(f"catalog now holds {len(catalog)} entries")
    return EXIT_OK if all(o.ok for o in outcomes) else EXIT_FINDINGS


def _query_from_args(args) -> Query:
    code_filters: list[tuple[str, str]] = []
    text_terms: list[tuple[str | None, str]] = []
    for term in args.terms:
        if "=" in term:
            name, _, code = term.partition("=")
            code_filters.append((name, code))
        elif ":" in term:
            name, _, rest = term.partition(":")
            text_terms.append((name, rest))
        else:
            text_terms.append((None, term))
    return Query(
        code_filters=tuple(code_filters),
        text_terms=tuple(text_terms),
        archive=args.archive,
        offset=args.offset,
        limit=args.limit,
        facets=tuple(args.facet or ()),
        enumerate_all=args.all,
    )


def cmd_search(args) -> int:
    catalog = UnionCatalog.load(args.store)
    try:
        query = _query_from_args(args)
        result = catalog.search(query)
    except QueryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FINDINGS
    if args.xml:
        print(render_search_xml(result, query), end="")
    elif args.text:
        print(render_search_text(result, query), end="")
    else:
        print(f"total {result.total}")
        for hit in result.hits:
            print(f"{hit.identifier}\t{hit.title}")
        for facet_element, counts in result.facet_counts:
            for code, count in counts:
                print(f"facet {facet_element} {code} {count}")
    return EXIT_OK


def cmd_registry_add(args) -> int:
    url = args.registry.rstrip("/") + "/register"
    result = post_form(
        url, {"archiveId": args.id, "baseUrl": args.url, "kind": args.kind}
    )
    sys.stdout.write(result.body.decode("utf-8", "replace"))
    if result.status == 200:
        return EXIT_OK
    if result.status == 502:
        return EXIT_TRANSPORT
    return EXIT_FINDINGS


# ---------------------------------------------------------------------------
# oryx-from-editor

def document_from_editor_export(draft: dict) -> OryxDocument:
    """Build a repository document from the editor's JSON export."""
    archive = draft["archive"]
    desc_raw = archive.get("description", {})
    description = ArchiveDescription(
        curator=desc_raw.get("curator", ""),
        curator_email=desc_raw.get("curatorEmail", ""),
        institution=desc_raw.get("institution", ""),
        institution_url=desc_raw.get("institutionUrl") or None,
        short_location=desc_raw.get("shortLocation", ""),
        synopsis=desc_raw.get("synopsis", ""),
        extras=tuple(
            (str(k), str(v)) for k, v in desc_raw.get("extras", ())
        ),
    )
    identity = ArchiveIdentity(
        archive_id=archive["archiveId"],
        repository_name=archive.get("repositoryName", ""),
        base_url=archive.get("baseUrl", ""),
        admin_email=archive.get("adminEmail", ""),
        description=description,
    )
    envelopes = []
    today = datetime.datetime.now(datetime.timezone.utc).date()
    for row in draft.get("records", ()):
        local_id = row["localId"]
        datestamp = parse_day(row["datestamp"]) if row.get("datestamp") else today
        deleted = bool(row.get("deleted"))
        record = None
        if not deleted:
            record = OlacRecord(
                elements=tuple(
                    MetadataElement(
                        name=el["name"],
                        content=el.get("content", ""),
                        code=el.get("code"),
                        refine=el.get("refine"),
                    )
                    for el in row.get("elements", ())
                )
            )
        envelopes.append(
            RecordEnvelope(
                identifier=f"oai:{identity.archive_id}:{local_id}",
                datestamp=datestamp,
                deleted=deleted,
                record=record,
            )
        )
    return OryxDocument(identity, tuple(envelopes))


def cmd_oryx_from_editor(args) -> int:
    try:
        draft = json.loads(Path(args.export).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: unreadable export: {exc}", file=sys.stderr)
        return EXIT_FINDINGS
    try:
        document = document_from_editor_export(draft)
    except (KeyError, ValueError, MetadataError) as exc:
        print(f"error: export does not describe a valid repository: {exc}",
              file=sys.stderr)
        return EXIT_FINDINGS
    text = serialize_oryx(document)
    if args.output:
        Path(args.output).write_text(text, "utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="olac",
        description="Distributed archiving: providers, gateway, registry, "
                    "harvester, union catalog.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a record or repository file")
    p.add_argument("path")
    p.add_argument("--xml", action="store_true", help="machine-readable report")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("serve-provider", help="serve one repository file")
    p.add_argument("--oryx", default=_env("OLAC_ORYX"), required=_env("OLAC_ORYX") is None,
                   help="repository file (env OLAC_ORYX)")
    p.add_argument("--bind", default=_env("OLAC_BIND", "127.0.0.1:8421"),
                   help="HOST:PORT (env OLAC_BIND)")
    p.add_argument("--page-size", type=int,
                   default=int(_env("OLAC_PAGE_SIZE", "500")),
                   help="listing page size (env OLAC_PAGE_SIZE)")
    p.add_argument("--base-url", default=_env("OLAC_BASE_URL"),
                   help="base URL echoed in responses (env OLAC_BASE_URL)")
    p.set_defaults(func=cmd_serve_provider)

    p = sub.add_parser("serve-vida", help="serve the virtual-provider gateway")
    p.add_argument("--bind", default=_env("OLAC_BIND", "127.0.0.1:8422"),
                   help="HOST:PORT (env OLAC_BIND)")
    p.add_argument("--ttl", type=float, default=float(_env("OLAC_TTL", "3600")),
                   help="cache TTL in seconds (env OLAC_TTL)")
    p.add_argument("--page-size", type=int,
                   default=int(_env("OLAC_PAGE_SIZE", "500")),
                   help="listing page size (env OLAC_PAGE_SIZE)")
    p.set_defaults(func=cmd_serve_vida)

    p = sub.add_parser("serve-registry", help="serve the archive registry")
    p.add_argument("--journal", default=_env("OLAC_JOURNAL"),
                   required=_env("OLAC_JOURNAL") is None,
                   help="journal file (env OLAC_JOURNAL)")
    p.add_argument("--bind", default=_env("OLAC_BIND", "127.0.0.1:8423"),
                   help="HOST:PORT (env OLAC_BIND)")
    p.add_argument("--oryx-dir", default=_env("OLAC_ORYX_DIR"),
                   help="directory for published repository files (env OLAC_ORYX_DIR)")
    p.add_argument("--vida-url", default=_env("OLAC_VIDA_URL"),
                   help="gateway base URL for published files (env OLAC_VIDA_URL)")
    p.add_argument("--public-url", default=_env("OLAC_PUBLIC_URL"),
                   help="externally reachable base URL of this registry "
                        "(env OLAC_PUBLIC_URL)")
    p.set_defaults(func=cmd_serve_registry)

    p = sub.add_parser("serve-catalog", help="serve the union catalog API")
    p.add_argument("--store", default=_env("OLAC_STORE"),
                   required=_env("OLAC_STORE") is None,
                   help="catalog snapshot file (env OLAC_STORE)")
    p.add_argument("--bind", default=_env("OLAC_BIND", "127.0.0.1:8424"),
                   help="HOST:PORT (env OLAC_BIND)")
    p.set_defaults(func=cmd_serve_catalog)

    p = sub.add_parser("harvest", help="harvest every registered archive")
    p.add_argument("--registry", default=_env("OLAC_REGISTRY"),
                   required=_env("OLAC_REGISTRY") is None,
                   help="registry base URL (env OLAC_REGISTRY)")
    p.add_argument("--store", default=_env("OLAC_STORE"),
                   required=_env("OLAC_STORE") is None,
                   help="catalog snapshot file (env OLAC_STORE)")
    p.add_argument("--ledger", default=_env("OLAC_LEDGER"),
                   required=_env("OLAC_LEDGER") is None,
                   help="harvest ledger file (env OLAC_LEDGER)")
    p.add_argument("--archive", help="harvest only this archive id")
    p.add_argument("--full", action="store_true",
                   help="ignore the ledger and re-harvest everything")
    p.add_argument("--parallelism", type=int,
                   default=int(_env("OLAC_PARALLELISM", "4")),
                   help="concurrent providers (env OLAC_PARALLELISM)")
    p.add_argument("--xml", action="store_true", help="machine-readable summary")
    p.set_defaults(func=cmd_harvest)

    p = sub.add_parser("search", help="query a catalog snapshot")
    p.add_argument("--store", default=_env("OLAC_STORE"),
                   required=_env("OLAC_STORE") is None,
                   help="catalog snapshot file (env OLAC_STORE)")
    p.add_argument("--archive", help="restrict to one archive id")
    p.add_argument("--offset", type=int, default=0)
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--facet", action="append",
                   help="element to facet-count (repeatable)")
    p.add_argument("--all", action="store_true", help="enumerate every entry")
    p.add_argument("--xml", action="store_true", help="canonical XML result")
    p.add_argument("--text", action="store_true", help="structured-text result")
    p.add_argument("terms", nargs="*",
                   help="element=code exact filters, element:term restricted "
                        "text terms, or bare text terms")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("registry-add", help="register an archive with a registry")
    p.add_argument("--registry", default=_env("OLAC_REGISTRY"),
                   required=_env("OLAC_REGISTRY") is None,
                   help="registry base URL (env OLAC_REGISTRY)")
    p.add_argument("--id", required=True, help="archive id")
    p.add_argument("--url", required=True, help="provider base URL")
    p.add_argument("--kind", default="native",
                   choices=["native", "vida-backed"])
    p.set_defaults(func=cmd_registry_add)

    p = sub.add_parser("oryx-from-editor",
                       help="turn an editor JSON export into a repository file")
    p.add_argument("export")
    p.add_argument("-o", "--output", help="write here instead of stdout")
    p.set_defaults(func=cmd_oryx_from_editor)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TransportError as exc:
        print(f"transport failure: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except RegistryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FINDINGS
    except OryxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FINDINGS
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FINDINGS


if __name__ == "__main__":
    sys.exit(main())
