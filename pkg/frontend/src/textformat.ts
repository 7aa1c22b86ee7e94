/**
 * Reader for the catalog's structured-text search responses (`view=text`).
 *
 * Lines of tab-separated fields; the first line names the format and
 * version (`olac-search<TAB>1`). Literal tabs, newlines, carriage returns,
 * and backslashes inside a field travel escaped, so splitting on raw tabs
 * before unescaping is always correct.
 */

export const TEXT_FORMAT_NAME = "olac-search";
export const TEXT_FORMAT_VERSION = 1;

export interface SearchHit {
  archiveId: string;
  identifier: string;
  title: string;
  /** Element names that satisfied the query for this hit. */
  matched: string[];
}

export interface FacetCount {
  element: string;
  code: string;
  count: number;
}

export interface SearchPage {
  total: number;
  offset: number;
  hits: SearchHit[];
  facets: FacetCount[];
}

export class TextFormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "TextFormatError";
  }
}

/** Undo field escaping: `\t`, `\n`, `\r`, `\\`. */
export function unescapeField(field: string): string {
  let out = "";
  for (let i = 0; i < field.length; i += 1) {
    const ch = field[i];
    if (ch !== "\\") {
      out += ch;
      continue;
    }
    const next = field[i + 1];
    i += 1;
    switch (next) {
      case "t":
        out += "\t";
        break;
      case "n":
        out += "\n";
        break;
      case "r":
        out += "\r";
        break;
      case "\\":
        out += "\\";
        break;
      default:
        throw new TextFormatError(`unknown escape '\\${next ?? ""}'`);
    }
  }
  return out;
}

function splitLine(line: string): string[] {
  return line.split("\t").map(unescapeField);
}

function numeric(value: string, what: string): number {
  const parsed = Number.parseInt(value, 10);
  if (Number.isNaN(parsed)) {
    throw new TextFormatError(`${what} is not a number: '${value}'`);
  }
  return parsed;
}

/** Parse one complete `view=text` response body. */
export function parseSearchText(body: string): SearchPage {
  const lines = body.split("\n");
  if (lines[lines.length - 1] === "") {
    lines.pop();
  }
  if (lines.length === 0) {
    throw new TextFormatError("empty response");
  }
  const header = splitLine(lines[0]);
  if (header[0] !== TEXT_FORMAT_NAME || numeric(header[1] ?? "", "version") !== TEXT_FORMAT_VERSION) {
    throw new TextFormatError(`not an ${TEXT_FORMAT_NAME} v${TEXT_FORMAT_VERSION} response: '${lines[0]}'`);
  }
  const page: SearchPage = { total: 0, offset: 0, hits: [], facets: [] };
  for (const line of lines.slice(1)) {
    const fields = splitLine(line);
    switch (fields[0]) {
      case "total":
        page.total = numeric(fields[1] ?? "", "total");
        break;
      case "offset":
        page.offset = numeric(fields[1] ?? "", "offset");
        break;
      case "hit": {
        if (fields.length !== 5) {
          throw new TextFormatError(
            `hit row has ${fields.length - 1} fields, expected 4: '${line}'`,
          );
        }
        const [, archiveId, identifier, title, matched] = fields;
        page.hits.push({
          archiveId,
          identifier,
          title,
          matched: matched === "" ? [] : matched.split(","),
        });
        break;
      }
      case "facet": {
        if (fields.length !== 4) {
          throw new TextFormatError(
            `facet row has ${fields.length - 1} fields, expected 3: '${line}'`,
          );
        }
        const [, element, code, count] = fields;
        page.facets.push({ element, code, count: numeric(count, "facet count") });
        break;
      }
      default:
        throw new TextFormatError(`unknown row kind '${fields[0]}'`);
    }
  }
  return page;
}
