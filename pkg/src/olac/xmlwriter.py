"""Hand-rolled XML writing helpers.

All wire formats in this package are serialized by hand so output is
deterministic byte-for-byte; parsing goes through xml.etree.ElementTree.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

XML_DECLARATION = '<?xml version="1.0" encoding="UTF-8"?>'

# Attribute values are double-quoted everywhere; tabs and newlines are
# char-ref escaped so parsers do not normalize them away.
_ATTR_ENTITIES = {'"': "&quot;", "\t": "&#9;", "\n": "&#10;", "\r": "&#13;"}


def esc_text(text: str) -> str:
    return escape(text)


def esc_attr(value: str) -> str:
    return escape(value, _ATTR_ENTITIES)


def attrs(pairs) -> str:
    """Render an attribute string (leading space included); None values are skipped.

    Accepts a mapping or an iterable of (name, value) pairs; order is preserved.
    """
    items = pairs.items() if hasattr(pairs, "items") else pairs
    out = []
    for name, value in items:
        if value is not None:
            out.append(f' {name}="{esc_attr(value)}"')
    return "".join(out)


def element(name: str, text: str = "", attributes=None) -> str:
    """One-line element; self-closing when text is empty."""
    a = attrs(attributes or {})
    if text:
        return f"<{name}{a}>{esc_text(text)}</{name}>"
    return f"<{name}{a}/>"
