/**
 * Browser shell: wires the search view and the repository editor to the DOM.
 * All behavior lives in the view models; this file only moves strings and
 * events between them and the page.
 *
 * Endpoints come from the page URL: ?catalog=<base>&registry=<base>,
 * defaulting to same-origin /catalog and /registry reverse-proxy paths.
 */

import { CatalogClient, RegistryClient } from "./api.js";
import { EditorSession } from "./editor.js";
import { SearchView, escapeHtml } from "./search.js";
import { ELEMENT_NAMES, ElementName, isElementName } from "./query.js";

const params = new URLSearchParams(window.location.search);
const catalog = new CatalogClient(params.get("catalog") ?? "/catalog");
const registry = new RegistryClient(params.get("registry") ?? "/registry");

const search = new SearchView(catalog);
let session = EditorSession.empty();

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing page element #${id}`);
  }
  return node as T;
}

// ---------------------------------------------------------------------------
// Search pane

async function populatePickers(): Promise<void> {
  const pairs: Array<[string, ElementName]> = [
    ["pick-language", "language"],
    ["pick-subject-language", "subject.language"],
    ["pick-type", "type"],
    ["pick-type-linguistic", "type.linguistic"],
  ];
  for (const [id, element] of pairs) {
    const table = search.pickerTableFor(element);
    if (table === null) {
      continue;
    }
    try {
      byId<HTMLSelectElement>(id).innerHTML = await search.renderPickerOptions(table);
    } catch (err) {
      byId(id).innerHTML = `<option value="">(vocabulary unavailable: ${escapeHtml(
        err instanceof Error ? err.message : String(err),
      )})</option>`;
    }
  }
}

function readSearchForm(): void {
  search.setTextTerm(byId<HTMLInputElement>("search-text").value.trim());
  search.setCodeFilter("language", byId<HTMLSelectElement>("pick-language").value);
  search.setCodeFilter(
    "subject.language",
    byId<HTMLSelectElement>("pick-subject-language").value,
  );
  search.setCodeFilter("type", byId<HTMLSelectElement>("pick-type").value);
  search.setCodeFilter(
    "type.linguistic",
    byId<HTMLSelectElement>("pick-type-linguistic").value,
  );
  search.setArchive(byId<HTMLInputElement>("search-archive").value.trim());
  const facets = byId<HTMLInputElement>("search-facets").value.trim();
  search.setFacets(
    facets === ""
      ? []
      : facets
          .split(/[,\s]+/)
          .filter(isElementName),
  );
  search.input.enumerateAll = byId<HTMLInputElement>("search-all").checked;
}

async function runSearch(): Promise<void> {
  readSearchForm();
  byId("search-results").innerHTML = '<p class="loading">searching…</p>';
  await search.run();
  byId("search-results").innerHTML = search.renderResults();
}

// ---------------------------------------------------------------------------
// Editor pane

function renderFindings(recordIndex: number | null, rowIndex: number | null): string {
  const items = session
    .findingsFor(recordIndex, rowIndex)
    .map((f) => `<li class="finding ${f.origin}">${escapeHtml(f.message)}</li>`);
  return items.length === 0 ? "" : `<ul class="findings">${items.join("")}</ul>`;
}

function archiveField(label: string, field: keyof Omit<EditorSession["archive"], "extras">): string {
  return (
    `<label>${escapeHtml(label)} ` +
    `<input data-archive-field="${field}" value="${escapeHtml(session.archive[field])}">` +
    `</label>`
  );
}

function renderEditor(): void {
  const lines: string[] = ['<fieldset><legend>Archive</legend>'];
  lines.push(archiveField("Archive id", "archiveId"));
  lines.push(archiveField("Repository name", "repositoryName"));
  lines.push(archiveField("Curator", "curator"));
  lines.push(archiveField("Curator email", "curatorEmail"));
  lines.push(archiveField("Institution", "institution"));
  lines.push(archiveField("Institution URL", "institutionUrl"));
  lines.push(archiveField("Location", "shortLocation"));
  lines.push(archiveField("Synopsis", "synopsis"));
  lines.push(renderFindings(null, null));
  lines.push("</fieldset>");

  session.records.forEach((record, i) => {
    lines.push(`<fieldset data-record="${i}"><legend>Record ${i + 1}</legend>`);
    lines.push(
      `<label>Local id <input data-record-field="localId" data-record="${i}" ` +
        `value="${escapeHtml(record.localId)}"></label>`,
    );
    lines.push(
      `<label>Datestamp <input data-record-field="datestamp" data-record="${i}" ` +
        `value="${escapeHtml(record.datestamp)}"></label>`,
    );
    lines.push(
      `<label>Deleted <input type="checkbox" data-record-field="deleted" ` +
        `data-record="${i}"${record.deleted ? " checked" : ""}></label>`,
    );
    lines.push(renderFindings(i, null));
    record.elements.forEach((row, j) => {
      lines.push(`<div class="row" data-record="${i}" data-row="${j}">`);
      const options = ELEMENT_NAMES.map(
        (name) =>
          `<option value="${name}"${name === row.name ? " selected" : ""}>${name}</option>`,
      ).join("");
      lines.push(
        `<select data-row-field="name" data-record="${i}" data-row="${j}">${options}</select>`,
      );
      lines.push(
        `<input placeholder="content" data-row-field="content" data-record="${i}" ` +
          `data-row="${j}" value="${escapeHtml(row.content)}">`,
      );
      lines.push(
        `<input placeholder="code" data-row-field="code" data-record="${i}" ` +
          `data-row="${j}" value="${escapeHtml(row.code ?? "")}">`,
      );
      lines.push(
        `<input placeholder="refine" data-row-field="refine" data-record="${i}" ` +
          `data-row="${j}" value="${escapeHtml(row.refine ?? "")}">`,
      );
      lines.push(
        `<button data-action="remove-row" data-record="${i}" data-row="${j}">×</button>`,
      );
      lines.push(renderFindings(i, j));
      lines.push("</div>");
    });
    lines.push(`<button data-action="add-row" data-record="${i}">Add element</button>`);
    lines.push(`<button data-action="remove-record" data-record="${i}">Remove record</button>`);
    lines.push("</fieldset>");
  });
  lines.push('<button data-action="add-record">Add record</button>');
  byId("editor-form").innerHTML = lines.join("\n");
  renderEditorStatus();
}

function renderEditorStatus(): void {
  const parts = [
    `<p class="state">state: ${session.publishState}${session.dirty ? " (unsaved changes)" : ""}</p>`,
  ];
  for (const warning of session.warnings) {
    parts.push(`<p class="warning">${escapeHtml(warning)}</p>`);
  }
  if (session.publishedBaseUrl !== null) {
    parts.push(
      `<p class="published">serving at <a href="${escapeHtml(session.publishedBaseUrl)}">` +
        `${escapeHtml(session.publishedBaseUrl)}</a></p>`,
    );
  }
  byId<HTMLButtonElement>("editor-publish").disabled = !session.canPublish;
  byId("editor-status").innerHTML = parts.join("\n");
}

function recordIndexOf(target: HTMLElement): number {
  return Number.parseInt(target.dataset["record"] ?? "-1", 10);
}

function rowIndexOf(target: HTMLElement): number {
  return Number.parseInt(target.dataset["row"] ?? "-1", 10);
}

function onEditorClick(event: Event): void {
  const target = event.target as HTMLElement;
  const action = target.dataset["action"];
  if (action === undefined) {
    return;
  }
  if (action === "add-record") {
    session.addRecord();
  } else if (action === "remove-record") {
    session.removeRecord(recordIndexOf(target));
  } else if (action === "add-row") {
    session.addRow(recordIndexOf(target), "title");
  } else if (action === "remove-row") {
    session.removeRow(recordIndexOf(target), rowIndexOf(target));
  } else {
    return;
  }
  renderEditor();
}

function onEditorInput(event: Event): void {
  const target = event.target as HTMLInputElement | HTMLSelectElement;
  const archiveField = target.dataset["archiveField"];
  if (archiveField !== undefined) {
    session.setArchiveField(
      archiveField as keyof Omit<EditorSession["archive"], "extras">,
      target.value,
    );
    renderEditorStatus();
    return;
  }
  const recordField = target.dataset["recordField"];
  if (recordField !== undefined) {
    const i = recordIndexOf(target as HTMLElement);
    if (recordField === "localId") {
      session.setLocalId(i, target.value);
    } else if (recordField === "datestamp") {
      session.setDatestamp(i, target.value);
    } else if (recordField === "deleted") {
      session.setDeleted(i, (target as HTMLInputElement).checked);
    }
    renderEditorStatus();
    return;
  }
  const rowField = target.dataset["rowField"];
  if (rowField !== undefined) {
    session.updateRow(recordIndexOf(target as HTMLElement), rowIndexOf(target as HTMLElement), {
      [rowField]: target.value,
    });
    renderEditorStatus();
  }
}

async function validateSession(): Promise<void> {
  await session.validate(catalog);
  renderEditor();
}

async function publishSession(): Promise<void> {
  const outcome = await session.publish(registry, catalog);
  renderEditor();
  if (!outcome.ok) {
    byId("editor-status").innerHTML +=
      `\n<p class="error">${escapeHtml(outcome.message)}</p>`;
  }
}

// ---------------------------------------------------------------------------
// Wiring

export function main(): void {
  byId<HTMLFormElement>("search-form").addEventListener("submit", (event) => {
    event.preventDefault();
    void runSearch();
  });
  byId("editor-form").addEventListener("click", onEditorClick);
  byId("editor-form").addEventListener("input", onEditorInput);
  byId("editor-validate").addEventListener("click", () => void validateSession());
  byId("editor-publish").addEventListener("click", () => void publishSession());
  byId("editor-new").addEventListener("click", () => {
    session = EditorSession.empty();
    renderEditor();
  });
  renderEditor();
  void populatePickers();
}

main();
