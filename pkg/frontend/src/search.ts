/**
 * The interactive search front end's view model: form state, vocabulary
 * pickers, and rendered results. Rendering produces plain HTML strings so
 * the behavior is testable without a browser; the thin app shell injects
 * them into the page.
 *
 * Failures never clear the form — the error is shown alongside whatever the
 * user had typed, ready to resubmit.
 */

import { CatalogClient, Descriptor } from "./api.js";
import { SearchPage } from "./textformat.js";
import {
  CODE_VOCABULARIES,
  ElementName,
  SearchInput,
  emptySearchInput,
  isUnconstrained,
} from "./query.js";

export type ViewStatus = "idle" | "loading" | "ready" | "failed";

export interface ResultRow {
  archiveId: string;
  identifier: string;
  title: string;
  matched: string[];
  /** The record's own Identifier URL — the click that reaches the resource. */
  resourceUrl: string | null;
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export class SearchView {
  input: SearchInput;
  status: ViewStatus;
  error: string | null;
  page: SearchPage | null;
  rows: ResultRow[];
  private readonly catalog: CatalogClient;
  private readonly pickers: Map<string, Descriptor[]>;

  constructor(catalog: CatalogClient) {
    this.catalog = catalog;
    this.input = emptySearchInput();
    this.status = "idle";
    this.error = null;
    this.page = null;
    this.rows = [];
    this.pickers = new Map();
  }

  // -- form state --------------------------------------------------------------

  setCodeFilter(element: ElementName, code: string): void {
    this.input.codeFilters = this.input.codeFilters.filter((f) => f.element !== element);
    if (code !== "") {
      this.input.codeFilters.push({ element, code });
    }
  }

  setTextTerm(text: string, element: ElementName | null = null): void {
    this.input.terms = text === "" ? [] : [{ text, element }];
  }

  setArchive(archiveId: string): void {
    this.input.archive = archiveId === "" ? null : archiveId;
  }

  setFacets(elements: ElementName[]): void {
    this.input.facets = [...elements];
  }

  reset(): void {
    this.input = emptySearchInput();
    this.status = "idle";
    this.error = null;
    this.page = null;
    this.rows = [];
  }

  // -- vocabulary pickers --------------------------------------------------------

  /** Descriptor list for one picker, fetched once from the catalog. */
  async vocabularyOptions(tableId: string): Promise<Descriptor[]> {
    const cached = this.pickers.get(tableId);
    if (cached !== undefined) {
      return cached;
    }
    const options = await this.catalog.vocabulary(tableId);
    this.pickers.set(tableId, options);
    return options;
  }

  /** The vocabulary table backing an element's code picker, if it has one. */
  pickerTableFor(element: ElementName): string | null {
    return CODE_VOCABULARIES[element] ?? null;
  }

  /** `<option>` markup for a picker, code plus human label. */
  async renderPickerOptions(tableId: string): Promise<string> {
    const options = await this.vocabularyOptions(tableId);
    const lines = ['<option value=""></option>'];
    for (const option of options) {
      lines.push(
        `<option value="${escapeHtml(option.code)}">` +
          `${escapeHtml(option.code)} — ${escapeHtml(option.label)}</option>`,
      );
    }
    return lines.join("\n");
  }

  // -- running a search ------------------------------------------------------------

  async run(): Promise<void> {
    if (isUnconstrained(this.input)) {
      this.status = "failed";
      this.error = "give the search at least one term or filter (or ask for everything)";
      return;
    }
    this.status = "loading";
    this.error = null;
    try {
      const page = await this.catalog.search(this.input);
      const rows: ResultRow[] = [];
      for (const hit of page.hits) {
        rows.push({ ...hit, resourceUrl: await this.resourceUrl(hit.identifier) });
      }
      this.page = page;
      this.rows = rows;
      this.status = "ready";
    } catch (err) {
      this.status = "failed";
      this.error = err instanceof Error ? err.message : String(err);
      // this.input is untouched: the form survives the failure.
    }
  }

  private async resourceUrl(identifier: string): Promise<string | null> {
    try {
      const detail = await this.catalog.record(identifier);
      const link = detail.elements.find(
        (element) => element.name === "identifier" && element.content !== "",
      );
      return link?.content ?? null;
    } catch {
      return null;
    }
  }

  // -- rendering ---------------------------------------------------------------

  renderResults(): string {
    if (this.status === "failed") {
      return `<p class="error">search failed: ${escapeHtml(this.error ?? "unknown error")}</p>`;
    }
    if (this.status === "loading") {
      return '<p class="loading">searching…</p>';
    }
    if (this.status !== "ready" || this.page === null) {
      return "";
    }
    if (this.page.total === 0) {
      return '<p class="empty">0 results</p>';
    }
    const lines = [`<p class="total">${this.page.total} results</p>`, '<ol class="hits">'];
    for (const row of this.rows) {
      const title = escapeHtml(row.title === "" ? row.identifier : row.title);
      const label =
        row.resourceUrl === null
          ? title
          : `<a href="${escapeHtml(row.resourceUrl)}">${title}</a>`;
      const matched =
        row.matched.length === 0
          ? ""
          : ` <span class="matched">${escapeHtml(row.matched.join(", "))}</span>`;
      lines.push(
        `  <li>${label} <span class="archive">${escapeHtml(row.archiveId)}</span>` +
          `${matched}</li>`,
      );
    }
    lines.push("</ol>");
    const facets = this.renderFacets();
    return facets === "" ? lines.join("\n") : lines.join("\n") + "\n" + facets;
  }

  /** Facet counts beside their codes, exactly as the API reported them. */
  renderFacets(): string {
    if (this.page === null || this.page.facets.length === 0) {
      return "";
    }
    const byElement = new Map<string, Array<{ code: string; count: number }>>();
    for (const facet of this.page.facets) {
      let bucket = byElement.get(facet.element);
      if (bucket === undefined) {
        bucket = [];
        byElement.set(facet.element, bucket);
      }
      bucket.push({ code: facet.code, count: facet.count });
    }
    const lines: string[] = [];
    for (const [element, counts] of byElement) {
      lines.push(`<ul class="facet" data-element="${escapeHtml(element)}">`);
      for (const { code, count } of counts) {
        lines.push(
          `  <li><code>${escapeHtml(code)}</code> ` +
            `<span class="count">${count}</span></li>`,
        );
      }
      lines.push("</ul>");
    }
    return lines.join("\n");
  }
}
