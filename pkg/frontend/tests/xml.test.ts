import { describe, expect, it } from "vitest";

import {
  childNamed,
  childText,
  childrenNamed,
  decodeEntities,
  parseXml,
  XmlParseError,
} from "../src/xml.js";

describe("decodeEntities", () => {
  it("decodes the five named entities", () => {
    expect(decodeEntities("&amp;&lt;&gt;&quot;&apos;")).toBe("&<>\"'");
  });

  it("decodes decimal and hex character references", () => {
    expect(decodeEntities("&#65;&#x41;&#x2013;")).toBe("AA–");
  });

  it("passes plain text through unchanged", () => {
    expect(decodeEntities("nothing to do")).toBe("nothing to do");
  });

  it("rejects unknown entity names", () => {
    expect(() => decodeEntities("&nbsp;")).toThrow(XmlParseError);
  });

  it("rejects an unterminated reference", () => {
    expect(() => decodeEntities("&amp")).toThrow(XmlParseError);
  });
});

describe("parseXml", () => {
  it("builds the element tree with attributes and text", () => {
    const root = parseXml(
      '<?xml version="1.0" encoding="UTF-8"?>\n' +
        '<a id="top">\n  <b key="v1">hello</b>\n  <b key="v2"/>\n  <c>x &amp; y</c>\n</a>\n',
    );
    expect(root.name).toBe("a");
    expect(root.attributes["id"]).toBe("top");
    expect(root.children.map((c) => c.name)).toEqual(["b", "b", "c"]);
    expect(root.children[0].text).toBe("hello");
    expect(root.children[1].text).toBe("");
    expect(root.children[1].attributes["key"]).toBe("v2");
    expect(root.children[2].text).toBe("x & y");
  });

  it("decodes entities inside attribute values", () => {
    const root = parseXml('<a code="a&quot;b&#9;c&#10;d"/>');
    expect(root.attributes["code"]).toBe('a"b\tc\nd');
  });

  it("skips comments and processing instructions", () => {
    const root = parseXml(
      "<!-- leading --><?pi data?><a><!-- inner --><b>t</b></a><!-- trailing -->",
    );
    expect(root.children).toHaveLength(1);
    expect(root.children[0].text).toBe("t");
  });

  it("accepts single-quoted attributes", () => {
    const root = parseXml("<a name='it&apos;s'/>");
    expect(root.attributes["name"]).toBe("it's");
  });

  it("handles nested elements of the same name", () => {
    const root = parseXml("<r><r>inner</r></r>");
    expect(root.children[0].text).toBe("inner");
  });

  it("rejects a duplicate attribute", () => {
    expect(() => parseXml('<a x="1" x="2"/>')).toThrow(XmlParseError);
  });

  it("rejects a mismatched close tag", () => {
    expect(() => parseXml("<a><b></a></b>")).toThrow(XmlParseError);
  });

  it("rejects trailing junk after the document element", () => {
    expect(() => parseXml("<a/><b/>")).toThrow(XmlParseError);
  });

  it("rejects an unterminated element", () => {
    expect(() => parseXml("<a><b>text")).toThrow(XmlParseError);
  });

  it("rejects an empty input", () => {
    expect(() => parseXml("   ")).toThrow(XmlParseError);
  });
});

describe("tree helpers", () => {
  const root = parseXml("<a><b>one</b><c/><b>two</b></a>");

  it("childrenNamed returns all matches in order", () => {
    expect(childrenNamed(root, "b").map((n) => n.text)).toEqual(["one", "two"]);
  });

  it("childNamed returns the first match or null", () => {
    expect(childNamed(root, "c")?.name).toBe("c");
    expect(childNamed(root, "missing")).toBeNull();
  });

  it("childText returns the text or empty string", () => {
    expect(childText(root, "b")).toBe("one");
    expect(childText(root, "missing")).toBe("");
  });
});
