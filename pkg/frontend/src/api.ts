/**
 * HTTP clients for the two backends the UI talks to: the catalog's search
 * and vocabulary API, and the registry's publish endpoint. Nothing here
 * reaches past the documented wire formats; the fetch implementation is
 * injectable so tests can stub the network.
 */

import { buildSearchQuery, SearchInput } from "./query.js";
import { parseSearchText, SearchPage } from "./textformat.js";
import { childNamed, childrenNamed, childText, parseXml, XmlNode } from "./xml.js";
import { ElementRow, normalizeRow } from "./oryx.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** A non-2xx answer, carrying whatever message the service supplied. */
export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
    this.name = "ApiError";
  }
}

function defaultFetch(): FetchLike {
  return (url, init) => fetch(url, init);
}

/** Pull the `<message>` out of an error body, falling back to the raw text. */
function errorMessage(body: string, status: number): string {
  try {
    const root = parseXml(body);
    const message = childText(root, "message");
    if (message) {
      return message;
    }
  } catch {
    // Not XML; fall through to the raw body.
  }
  return body.trim() || `HTTP ${status}`;
}

async function readBody(response: Response): Promise<string> {
  return await response.text();
}

// ---------------------------------------------------------------------------
// Catalog

export interface VocabularySummary {
  id: string;
  size: number;
}

export interface Descriptor {
  code: string;
  label: string;
  note?: string;
}

export interface RecordDetail {
  archiveId: string;
  identifier: string;
  datestamp: string;
  harvested: string | null;
  flags: string[];
  deleted: boolean;
  elements: ElementRow[];
}

export interface XmlSearchResult {
  total: number;
  offset: number;
  hits: Array<{ archiveId: string; identifier: string; title: string; matched: string[] }>;
  facets: Array<{ element: string; counts: Array<{ code: string; count: number }> }>;
}

export class CatalogClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl: FetchLike = defaultFetch()) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl;
  }

  private async get(path: string): Promise<string> {
    const response = await this.fetchImpl(this.base + path);
    const body = await readBody(response);
    if (!response.ok) {
      throw new ApiError(errorMessage(body, response.status), response.status);
    }
    return body;
  }

  /** Run a search and return the structured-text page. */
  async search(input: SearchInput): Promise<SearchPage> {
    const body = await this.get(`/search?${buildSearchQuery(input, "text")}`);
    return parseSearchText(body);
  }

  /** The same search in the canonical XML shape (used for cross-checks). */
  async searchXml(input: SearchInput): Promise<XmlSearchResult> {
    const body = await this.get(`/search?${buildSearchQuery(input, "xml")}`);
    const root = parseXml(body);
    return {
      total: Number.parseInt(root.attributes["total"] ?? "0", 10),
      offset: Number.parseInt(root.attributes["offset"] ?? "0", 10),
      hits: childrenNamed(root, "hit").map((hit) => ({
        archiveId: hit.attributes["archiveId"] ?? "",
        identifier: hit.attributes["identifier"] ?? "",
        title: childText(hit, "title"),
        matched: childText(hit, "matched").split(" ").filter((name) => name !== ""),
      })),
      facets: childrenNamed(root, "facet").map((facet) => ({
        element: facet.attributes["element"] ?? "",
        counts: childrenNamed(facet, "code").map((code) => ({
          code: code.attributes["value"] ?? "",
          count: Number.parseInt(code.attributes["count"] ?? "0", 10),
        })),
      })),
    };
  }

  /** List the controlled-vocabulary tables the catalog publishes. */
  async vocabularies(): Promise<VocabularySummary[]> {
    const body = await this.get("/vocab");
    const root = parseXml(body);
    return childrenNamed(root, "vocabulary").map((table) => ({
      id: table.attributes["id"] ?? "",
      size: Number.parseInt(table.attributes["size"] ?? "0", 10),
    }));
  }

  /** Every descriptor in one table, for populating a picker. */
  async vocabulary(tableId: string): Promise<Descriptor[]> {
    const body = await this.get(`/vocab/${encodeURIComponent(tableId)}`);
    const root = parseXml(body);
    return childrenNamed(root, "descriptor").map((node) => this.descriptorOf(node));
  }

  /** One descriptor, or null when the table has no such code. */
  async descriptor(tableId: string, code: string): Promise<Descriptor | null> {
    const path = `/vocab/${encodeURIComponent(tableId)}/${encodeURIComponent(code)}`;
    const response = await this.fetchImpl(this.base + path);
    const body = await readBody(response);
    if (response.status === 404) {
      return null;
    }
    if (!response.ok) {
      throw new ApiError(errorMessage(body, response.status), response.status);
    }
    return this.descriptorOf(parseXml(body));
  }

  private descriptorOf(node: XmlNode): Descriptor {
    const note = childText(node, "note");
    return {
      code: node.attributes["code"] ?? "",
      label: childText(node, "label"),
      ...(note ? { note } : {}),
    };
  }

  /** Full catalog entry for one record identifier. */
  async record(identifier: string): Promise<RecordDetail> {
    const body = await this.get(`/record/${encodeURIComponent(identifier)}`);
    const root = parseXml(body);
    const record = childNamed(root, "record");
    const header = record === null ? null : childNamed(record, "header");
    const payload =
      record === null ? null : childNamed(childNamed(record, "metadata") ?? record, "olac");
    const elements: ElementRow[] = [];
    if (payload !== null) {
      for (const element of payload.children) {
        elements.push(
          normalizeRow({
            name: element.name,
            content: element.text,
            code: element.attributes["code"],
            refine: element.attributes["refine"],
          }),
        );
      }
    }
    return {
      archiveId: root.attributes["archiveId"] ?? "",
      identifier: root.attributes["identifier"] ?? "",
      datestamp: root.attributes["datestamp"] ?? "",
      harvested: root.attributes["harvested"] ?? null,
      flags: childrenNamed(root, "flag").map((flag) => flag.text.trim()),
      deleted: header?.attributes["status"] === "deleted",
      elements,
    };
  }
}

// ---------------------------------------------------------------------------
// Registry

export interface ArchiveListEntry {
  id: string;
  baseUrl: string;
  registered: string;
  kind: string;
}

export interface PublishFinding {
  identifier: string;
  element: number | null;
  message: string;
}

export type PublishOutcome =
  | {
      ok: true;
      archiveId: string;
      oryxUrl: string;
      baseUrl: string;
      editToken: string;
      records: number;
    }
  | { ok: false; status: number; message: string; findings: PublishFinding[] };

export class RegistryClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl: FetchLike = defaultFetch()) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl;
  }

  /** The federation's current membership. */
  async archiveList(): Promise<ArchiveListEntry[]> {
    const response = await this.fetchImpl(this.base + "/register/archive_list");
    const body = await readBody(response);
    if (!response.ok) {
      throw new ApiError(errorMessage(body, response.status), response.status);
    }
    const root = parseXml(body);
    return childrenNamed(root, "archive").map((node) => ({
      id: node.attributes["id"] ?? "",
      baseUrl: node.attributes["baseUrl"] ?? "",
      registered: node.attributes["registered"] ?? "",
      kind: node.attributes["kind"] ?? "",
    }));
  }

  /**
   * Fetch a stored repository file. Passing the last-seen entity tag turns
   * this into a cheap staleness probe: status 304 means unchanged.
   */
  async fetchPublished(
    url: string,
    etag?: string,
  ): Promise<{ status: number; etag: string | null; body: string }> {
    const init: RequestInit =
      etag === undefined ? {} : { headers: { "If-None-Match": etag } };
    const response = await this.fetchImpl(url, init);
    const body = await readBody(response);
    return { status: response.status, etag: response.headers.get("ETag"), body };
  }

  /**
   * Upload a repository file. The registry validates it, stores it, and
   * registers a gateway-backed provider for it; after the first publish
   * the returned edit token must accompany every later one.
   */
  async publish(oryxXml: string, options: { archiveId: string; editToken?: string }): Promise<PublishOutcome> {
    const form = new FormData();
    form.append(
      "oryx",
      new Blob([oryxXml], { type: "application/xml" }),
      `${options.archiveId}.xml`,
    );
    if (options.editToken !== undefined) {
      form.append("editToken", options.editToken);
    }
    const response = await this.fetchImpl(this.base + "/publish", {
      method: "POST",
      body: form,
    });
    const body = await readBody(response);
    if (response.ok) {
      const root = parseXml(body);
      return {
        ok: true,
        archiveId: root.attributes["archiveId"] ?? "",
        oryxUrl: root.attributes["oryxUrl"] ?? "",
        baseUrl: root.attributes["baseUrl"] ?? "",
        editToken: root.attributes["editToken"] ?? "",
        records: Number.parseInt(root.attributes["records"] ?? "0", 10),
      };
    }
    const findings: PublishFinding[] = [];
    let message = "";
    try {
      const root = parseXml(body);
      message = childText(root, "message");
      for (const finding of childrenNamed(root, "finding")) {
        const element = finding.attributes["element"];
        findings.push({
          identifier: finding.attributes["identifier"] ?? "",
          element: element === undefined ? null : Number.parseInt(element, 10),
          message: finding.text.trim(),
        });
      }
    } catch {
      message = body.trim();
    }
    return {
      ok: false,
      status: response.status,
      message: message || `HTTP ${response.status}`,
      findings,
    };
  }
}
