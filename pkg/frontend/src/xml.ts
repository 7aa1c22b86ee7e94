/**
 * Minimal XML reader for the catalog and registry wire formats.
 *
 * The services emit a small, predictable dialect — no CDATA, no DTDs, no
 * namespace prefixes (every document uses a default namespace) — so a
 * compact recursive-descent parser covers everything the UI consumes
 * without pulling in a DOM implementation, which Node test runs lack.
 */

/** One parsed element: attributes, child elements, and its direct text. */
export interface XmlNode {
  name: string;
  attributes: Record<string, string>;
  children: XmlNode[];
  /** Concatenated character data directly inside this element. */
  text: string;
}

export class XmlParseError extends Error {
  constructor(message: string, readonly offset: number) {
    super(`${message} (at offset ${offset})`);
    this.name = "XmlParseError";
  }
}

const NAME_PATTERN = /[A-Za-z_][A-Za-z0-9._:-]*/y;
const NAMED_ENTITIES: Record<string, string> = {
  amp: "&",
  lt: "<",
  gt: ">",
  quot: '"',
  apos: "'",
};

/** Decode character references; unknown entity names are an error. */
export function decodeEntities(raw: string, baseOffset = 0): string {
  return raw.replace(/&([^;&]*);?/g, (match, body: string, index: number) => {
    if (!match.endsWith(";")) {
      throw new XmlParseError("unterminated entity", baseOffset + index);
    }
    if (body.startsWith("#x") || body.startsWith("#X")) {
      const point = Number.parseInt(body.slice(2), 16);
      if (Number.isNaN(point)) {
        throw new XmlParseError(`bad character reference '&${body};'`, baseOffset + index);
      }
      return String.fromCodePoint(point);
    }
    if (body.startsWith("#")) {
      const point = Number.parseInt(body.slice(1), 10);
      if (Number.isNaN(point)) {
        throw new XmlParseError(`bad character reference '&${body};'`, baseOffset + index);
      }
      return String.fromCodePoint(point);
    }
    const known = NAMED_ENTITIES[body];
    if (known === undefined) {
      throw new XmlParseError(`unknown entity '&${body};'`, baseOffset + index);
    }
    return known;
  });
}

class Reader {
  pos = 0;

  constructor(private readonly input: string) {}

  atEnd(): boolean {
    return this.pos >= this.input.length;
  }

  peek(): string {
    return this.input[this.pos] ?? "";
  }

  startsWith(prefix: string): boolean {
    return this.input.startsWith(prefix, this.pos);
  }

  expect(prefix: string): void {
    if (!this.startsWith(prefix)) {
      throw new XmlParseError(`expected '${prefix}'`, this.pos);
    }
    this.pos += prefix.length;
  }

  skipWhitespace(): void {
    while (!this.atEnd() && /\s/.test(this.peek())) {
      this.pos += 1;
    }
  }

  readName(): string {
    NAME_PATTERN.lastIndex = this.pos;
    const match = NAME_PATTERN.exec(this.input);
    if (match === null || match.index !== this.pos) {
      throw new XmlParseError("expected a name", this.pos);
    }
    this.pos += match[0].length;
    return match[0];
  }

  /** Consume text until `stop`, returning it raw; error if never found. */
  readUntil(stop: string): string {
    const at = this.input.indexOf(stop, this.pos);
    if (at < 0) {
      throw new XmlParseError(`expected '${stop}'`, this.pos);
    }
    const chunk = this.input.slice(this.pos, at);
    this.pos = at + stop.length;
    return chunk;
  }

  /** Skip the XML declaration, comments, and processing instructions. */
  skipMisc(): void {
    for (;;) {
      this.skipWhitespace();
      if (this.startsWith("<!--")) {
        this.pos += 4;
        this.readUntil("-->");
      } else if (this.startsWith("<?")) {
        this.pos += 2;
        this.readUntil("?>");
      } else {
        return;
      }
    }
  }

  readAttributes(): Record<string, string> {
    const attributes: Record<string, string> = {};
    for (;;) {
      this.skipWhitespace();
      const next = this.peek();
      if (next === ">" || next === "/" || next === "") {
        return attributes;
      }
      const start = this.pos;
      const name = this.readName();
      if (name in attributes) {
        throw new XmlParseError(`attribute '${name}' repeated`, start);
      }
      this.skipWhitespace();
      this.expect("=");
      this.skipWhitespace();
      const quote = this.peek();
      if (quote !== '"' && quote !== "'") {
        throw new XmlParseError("attribute value must be quoted", this.pos);
      }
      this.pos += 1;
      const valueStart = this.pos;
      const raw = this.readUntil(quote);
      attributes[name] = decodeEntities(raw, valueStart);
    }
  }

  readElement(): XmlNode {
    this.expect("<");
    const name = this.readName();
    const attributes = this.readAttributes();
    const node: XmlNode = { name, attributes, children: [], text: "" };
    this.skipWhitespace();
    if (this.startsWith("/>")) {
      this.pos += 2;
      return node;
    }
    this.expect(">");
    for (;;) {
      if (this.startsWith("</")) {
        this.pos += 2;
        const closing = this.readName();
        if (closing !== name) {
          throw new XmlParseError(
            `mismatched closing tag '${closing}' for '${name}'`,
            this.pos,
          );
        }
        this.skipWhitespace();
        this.expect(">");
        return node;
      }
      if (this.startsWith("<!--")) {
        this.pos += 4;
        this.readUntil("-->");
      } else if (this.startsWith("<")) {
        node.children.push(this.readElement());
      } else if (this.atEnd()) {
        throw new XmlParseError(`element '${name}' never closed`, this.pos);
      } else {
        const start = this.pos;
        let end = this.input.indexOf("<", this.pos);
        if (end < 0) {
          end = this.input.length;
        }
        this.pos = end;
        node.text += decodeEntities(this.input.slice(start, end), start);
      }
    }
  }
}

/** Parse one document and return its root element. */
export function parseXml(input: string): XmlNode {
  const reader = new Reader(input);
  reader.skipMisc();
  const root = reader.readElement();
  reader.skipMisc();
  if (!reader.atEnd()) {
    throw new XmlParseError("content after the document element", reader.pos);
  }
  return root;
}

/** All direct children with the given local name. */
export function childrenNamed(node: XmlNode, name: string): XmlNode[] {
  return node.children.filter((child) => child.name === name);
}

/** The first direct child with the given local name, or null. */
export function childNamed(node: XmlNode, name: string): XmlNode | null {
  return childrenNamed(node, name)[0] ?? null;
}

/** Text of the first child with the given name, whitespace-trimmed. */
export function childText(node: XmlNode, name: string): string {
  const child = childNamed(node, name);
  return child === null ? "" : child.text.trim();
}
