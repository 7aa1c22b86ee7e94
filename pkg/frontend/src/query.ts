/**
 * Search-form state and its mapping onto `/search` query parameters.
 *
 * The parameter convention: a metadata element name used directly as a
 * parameter is an exact code filter; `q` and `q.<element>` carry text
 * terms; `archive`, `offset`, `limit`, `facet`, `all`, and `view` fill
 * the rest. `view` (not `format` — that is an element name) selects the
 * response shape.
 */

/** The seventeen element names records may carry. */
export const ELEMENT_NAMES = [
  "contributor",
  "coverage",
  "creator",
  "date",
  "description",
  "format",
  "identifier",
  "language",
  "publisher",
  "relation",
  "rights",
  "source",
  "subject",
  "subject.language",
  "title",
  "type",
  "type.linguistic",
] as const;

export type ElementName = (typeof ELEMENT_NAMES)[number];

export function isElementName(name: string): name is ElementName {
  return (ELEMENT_NAMES as readonly string[]).includes(name);
}

/** Vocabulary table consulted for each code-bearing element. */
export const CODE_VOCABULARIES: Readonly<Partial<Record<ElementName, string>>> = {
  language: "language-codes",
  "subject.language": "language-codes",
  type: "dc-type",
  "type.linguistic": "linguistic-type",
};

/** Vocabulary table consulted for each refine-bearing element. */
export const REFINE_VOCABULARIES: Readonly<Partial<Record<ElementName, string>>> = {
  date: "date-refine",
};

export interface CodeFilter {
  element: ElementName;
  code: string;
}

export interface TextTerm {
  /** Restrict to one element, or null to search every element. */
  element: ElementName | null;
  text: string;
}

export interface SearchInput {
  codeFilters: CodeFilter[];
  terms: TextTerm[];
  archive: string | null;
  offset: number;
  limit: number | null;
  facets: ElementName[];
  enumerateAll: boolean;
}

export function emptySearchInput(): SearchInput {
  return {
    codeFilters: [],
    terms: [],
    archive: null,
    offset: 0,
    limit: null,
    facets: [],
    enumerateAll: false,
  };
}

/** True when the input would be rejected as an unconstrained query. */
export function isUnconstrained(input: SearchInput): boolean {
  return (
    input.codeFilters.length === 0 &&
    input.terms.length === 0 &&
    input.archive === null &&
    !input.enumerateAll
  );
}

/** Render the input as a `/search` query string (no leading `?`). */
export function buildSearchQuery(input: SearchInput, view: "xml" | "text"): string {
  const params = new URLSearchParams();
  for (const filter of input.codeFilters) {
    params.append(filter.element, filter.code);
  }
  for (const term of input.terms) {
    params.append(term.element === null ? "q" : `q.${term.element}`, term.text);
  }
  if (input.archive !== null) {
    params.append("archive", input.archive);
  }
  if (input.offset !== 0) {
    params.append("offset", String(input.offset));
  }
  if (input.limit !== null) {
    params.append("limit", String(input.limit));
  }
  for (const facet of input.facets) {
    params.append("facet", facet);
  }
  if (input.enumerateAll) {
    params.append("all", "1");
  }
  params.append("view", view);
  return params.toString();
}
