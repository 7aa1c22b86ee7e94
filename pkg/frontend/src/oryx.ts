/**
 * Client-side repository documents: the editor's load and publish format.
 *
 * `serializeOryx` reproduces the canonical server-side form byte for byte
 * (same indentation, attribute order, field order, and escaping), which is
 * what makes the editor round trip exact: load a published file, publish
 * it unchanged, and the stored bytes do not move.
 */

import { childNamed, childrenNamed, parseXml, XmlNode } from "./xml.js";
import { isElementName } from "./query.js";

export const ORYX_NAMESPACE = "http://www.language-archives.org/OLAC/0.4/oryx/";
export const OLAC_NAMESPACE = "http://www.language-archives.org/OLAC/0.4/";

const XML_DECLARATION = '<?xml version="1.0" encoding="UTF-8"?>';
const ARCHIVE_ID_PATTERN = /^[A-Za-z][A-Za-z0-9_-]*$/;
const DAY_PATTERN = /^\d{4}-\d{2}-\d{2}$/;

export class OryxFormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "OryxFormatError";
  }
}

/** One metadata statement row as edited: name plus text/code/refine. */
export interface ElementRow {
  name: string;
  content: string;
  code?: string;
  refine?: string;
}

export interface RecordDraft {
  localId: string;
  datestamp: string; // YYYY-MM-DD
  deleted: boolean;
  elements: ElementRow[];
}

export interface ArchiveDraft {
  archiveId: string;
  repositoryName: string;
  baseUrl: string;
  adminEmail: string;
  curator: string;
  curatorEmail: string;
  institution: string;
  institutionUrl: string;
  shortLocation: string;
  synopsis: string;
  extras: Array<[string, string]>;
}

export interface OryxDraft {
  archive: ArchiveDraft;
  records: RecordDraft[];
}

export function emptyArchiveDraft(): ArchiveDraft {
  return {
    archiveId: "",
    repositoryName: "",
    baseUrl: "",
    adminEmail: "",
    curator: "",
    curatorEmail: "",
    institution: "",
    institutionUrl: "",
    shortLocation: "",
    synopsis: "",
    extras: [],
  };
}

/** Mirror of the server's element normalization: trim, drop empty attrs. */
export function normalizeRow(row: ElementRow): ElementRow {
  const code = row.code?.trim();
  const refine = row.refine?.trim();
  return {
    name: row.name,
    content: row.content.trim(),
    ...(code ? { code } : {}),
    ...(refine ? { refine } : {}),
  };
}

export function composeIdentifier(archiveId: string, localId: string): string {
  return `oai:${archiveId}:${localId}`;
}

export function isValidArchiveId(archiveId: string): boolean {
  return ARCHIVE_ID_PATTERN.test(archiveId);
}

export function isValidDay(day: string): boolean {
  return DAY_PATTERN.test(day);
}

// ---------------------------------------------------------------------------
// Serialization (canonical form)

function escText(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function escAttr(value: string): string {
  return escText(value)
    .replace(/"/g, "&quot;")
    .replace(/\t/g, "&#9;")
    .replace(/\n/g, "&#10;")
    .replace(/\r/g, "&#13;");
}

function attrString(pairs: Array<[string, string | undefined]>): string {
  let out = "";
  for (const [name, value] of pairs) {
    if (value !== undefined) {
      out += ` ${name}="${escAttr(value)}"`;
    }
  }
  return out;
}

function line(name: string, text: string, pairs: Array<[string, string | undefined]> = []): string {
  const attrs = attrString(pairs);
  return text ? `<${name}${attrs}>${escText(text)}</${name}>` : `<${name}${attrs}/>`;
}

function archiveLines(archive: ArchiveDraft, indent: string): string[] {
  const pad = indent + "  ";
  const inner = pad + "  ";
  const lines = [`${indent}<archive id="${escAttr(archive.archiveId)}">`];
  const identityFields: Array<[string, string]> = [
    ["repositoryName", archive.repositoryName],
    ["baseUrl", archive.baseUrl],
    ["adminEmail", archive.adminEmail],
  ];
  for (const [name, value] of identityFields) {
    if (value) {
      lines.push(pad + line(name, value));
    }
  }
  lines.push(`${pad}<description>`);
  const descriptionFields: Array<[string, string]> = [
    ["curator", archive.curator],
    ["curatorEmail", archive.curatorEmail],
    ["institution", archive.institution],
    ["institutionUrl", archive.institutionUrl],
    ["shortLocation", archive.shortLocation],
    ["synopsis", archive.synopsis],
  ];
  for (const [name, value] of descriptionFields) {
    if (value) {
      lines.push(inner + line(name, value));
    }
  }
  for (const [key, value] of archive.extras) {
    lines.push(inner + line("extra", value, [["key", key]]));
  }
  lines.push(`${pad}</description>`);
  lines.push(`${indent}</archive>`);
  return lines;
}

function recordLines(archiveId: string, record: RecordDraft, indent: string): string[] {
  const pairs: Array<[string, string | undefined]> = [
    ["identifier", composeIdentifier(archiveId, record.localId)],
    ["datestamp", record.datestamp],
  ];
  if (record.deleted) {
    pairs.push(["status", "deleted"]);
    return [`${indent}<record${attrString(pairs)}/>`];
  }
  const lines = [`${indent}<record${attrString(pairs)}>`];
  const open = `${indent}  <olac xmlns="${OLAC_NAMESPACE}"`;
  if (record.elements.length === 0) {
    lines.push(open + "/>");
  } else {
    lines.push(open + ">");
    for (const raw of record.elements) {
      const row = normalizeRow(raw);
      lines.push(
        `${indent}    ` +
          line(row.name, row.content, [
            ["code", row.code],
            ["refine", row.refine],
          ]),
      );
    }
    lines.push(`${indent}  </olac>`);
  }
  lines.push(`${indent}</record>`);
  return lines;
}

/** Write the draft in the canonical repository-file form. */
export function serializeOryx(draft: OryxDraft): string {
  const lines = [XML_DECLARATION, `<oryx xmlns="${ORYX_NAMESPACE}">`];
  lines.push(...archiveLines(draft.archive, "  "));
  for (const record of draft.records) {
    lines.push(...recordLines(draft.archive.archiveId, record, "  "));
  }
  lines.push("</oryx>");
  return lines.join("\n") + "\n";
}

// ---------------------------------------------------------------------------
// Parsing

function requireNamespace(node: XmlNode, namespace: string): void {
  const declared = node.attributes["xmlns"];
  if (declared !== undefined && declared !== namespace) {
    throw new OryxFormatError(`'${node.name}' is in namespace '${declared}', expected '${namespace}'`);
  }
}

function parseArchive(node: XmlNode): ArchiveDraft {
  const archiveId = node.attributes["id"] ?? "";
  const description = childNamed(node, "description");
  const draft = emptyArchiveDraft();
  draft.archiveId = archiveId;
  draft.repositoryName = childNamed(node, "repositoryName")?.text.trim() ?? "";
  draft.baseUrl = childNamed(node, "baseUrl")?.text.trim() ?? "";
  draft.adminEmail = childNamed(node, "adminEmail")?.text.trim() ?? "";
  if (description !== null) {
    draft.curator = childNamed(description, "curator")?.text.trim() ?? "";
    draft.curatorEmail = childNamed(description, "curatorEmail")?.text.trim() ?? "";
    draft.institution = childNamed(description, "institution")?.text.trim() ?? "";
    draft.institutionUrl = childNamed(description, "institutionUrl")?.text.trim() ?? "";
    draft.shortLocation = childNamed(description, "shortLocation")?.text.trim() ?? "";
    draft.synopsis = childNamed(description, "synopsis")?.text.trim() ?? "";
    for (const extra of childrenNamed(description, "extra")) {
      const key = extra.attributes["key"];
      if (key === undefined) {
        throw new OryxFormatError("extra field lacks its key attribute");
      }
      draft.extras.push([key, extra.text.trim()]);
    }
  }
  return draft;
}

function parseRecord(node: XmlNode, archiveId: string): RecordDraft {
  const identifier = node.attributes["identifier"] ?? "";
  const parts = identifier.split(":");
  if (parts.length !== 3 || parts[0] !== "oai" || !parts[1] || !parts[2]) {
    throw new OryxFormatError(`record identifier must be oai:<archive>:<local>: '${identifier}'`);
  }
  if (parts[1] !== archiveId) {
    throw new OryxFormatError(`identifier '${identifier}' does not belong to archive '${archiveId}'`);
  }
  const datestamp = node.attributes["datestamp"] ?? "";
  if (!isValidDay(datestamp)) {
    throw new OryxFormatError(`record '${identifier}' has a bad datestamp '${datestamp}'`);
  }
  const deleted = node.attributes["status"] === "deleted";
  const record: RecordDraft = { localId: parts[2], datestamp, deleted, elements: [] };
  const payload = childNamed(node, "olac");
  if (deleted) {
    if (payload !== null) {
      throw new OryxFormatError(`deleted record '${identifier}' must not carry a payload`);
    }
    return record;
  }
  if (payload === null) {
    throw new OryxFormatError(`live record '${identifier}' carries no payload`);
  }
  requireNamespace(payload, OLAC_NAMESPACE);
  for (const element of payload.children) {
    if (!isElementName(element.name)) {
      throw new OryxFormatError(`record '${identifier}' uses unknown element '${element.name}'`);
    }
    record.elements.push(
      normalizeRow({
        name: element.name,
        content: element.text,
        code: element.attributes["code"],
        refine: element.attributes["refine"],
      }),
    );
  }
  return record;
}

/** Read a repository file into an editable draft. */
export function parseOryx(text: string): OryxDraft {
  const root = parseXml(text);
  if (root.name !== "oryx") {
    throw new OryxFormatError(`root element must be 'oryx', found '${root.name}'`);
  }
  requireNamespace(root, ORYX_NAMESPACE);
  const archiveNode = childNamed(root, "archive");
  if (archiveNode === null) {
    throw new OryxFormatError("repository file lacks its archive block");
  }
  const archive = parseArchive(archiveNode);
  const records = childrenNamed(root, "record").map((node) => parseRecord(node, archive.archiveId));
  const seen = new Set<string>();
  for (const record of records) {
    if (seen.has(record.localId)) {
      throw new OryxFormatError(`duplicate identifier: ${composeIdentifier(archive.archiveId, record.localId)}`);
    }
    seen.add(record.localId);
  }
  return { archive, records };
}
