"""Controlled vocabularies and language-code validation.

Language identification uses three schemes: the unambiguous two-letter
ISO 639-1 subset, SIL three-letter codes (``x-sil-XXX``) covering living and
recently extinct languages, and Linguist List codes for ancient and
constructed languages (``x-linguist-XXX``). The bundled tables are a
representative subset; full tables load through :func:`load_vocabulary`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import IO, Iterable

SCHEME_ISO = "iso639-1"
SCHEME_SIL = "sil"
SCHEME_LINGUIST = "linguist"

_ISO_PATTERN = re.compile(r"[A-Za-z]{2}")
_SUFFIX_PATTERN = re.compile(r"[A-Za-z]{3}")

SIL_PREFIX = "x-sil-"
LINGUIST_PREFIX = "x-linguist-"


class VocabularyError(Exception):
    pass


@dataclass(frozen=True)
class VocabularyEntry:
    code: str
    label: str
    note: str | None = None


class VocabularyTable:
    """A closed code table; codes are unique and matched case-sensitively."""

    def __init__(self, vocabulary_id: str, entries: Iterable[VocabularyEntry]):
        self.vocabulary_id = vocabulary_id
        self.entries = tuple(entries)
        by_code: dict[str, VocabularyEntry] = {}
        for entry in self.entries:
            if entry.code in by_code:
                raise VocabularyError(
                    f"{vocabulary_id}: duplicate code {entry.code!r}")
            by_code[entry.code] = entry
        self._by_code = by_code

    def __contains__(self, code: str) -> bool:
        return code in self._by_code

    def get(self, code: str) -> VocabularyEntry | None:
        return self._by_code.get(code)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __repr__(self):
        return f"VocabularyTable({self.vocabulary_id!r}, {len(self)} entries)"


def load_vocabulary(source: str | Path | IO[str], vocabulary_id: str | None = None) -> VocabularyTable:
    """Load a tab-delimited table: ``code<TAB>label[<TAB>note]`` per line.

    Blank lines and ``#``-prefixed comment lines are ignored. A duplicate
    code or malformed line raises, citing the offending line number.
    """
    if hasattr(source, "read"):
        text = source.read()
        name = vocabulary_id or "vocabulary"
    else:
        path = Path(source)
        text = path.read_text(encoding="utf-8")
        name = vocabulary_id or path.stem
    entries: list[VocabularyEntry] = []
    seen: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) < 2 or not parts[0].strip():
            raise VocabularyError(f"{name}: malformed line {lineno}: {line!r}")
        code, label = parts[0].strip(), parts[1].strip()
        note = parts[2].strip() if len(parts) > 2 and parts[2].strip() else None
        if code in seen:
            raise VocabularyError(
                f"{name}: duplicate code {code!r} on line {lineno} "
                f"(first on line {seen[code]})")
        seen[code] = lineno
        entries.append(VocabularyEntry(code, label, note))
    return VocabularyTable(name, entries)


@dataclass(frozen=True)
class LanguageCodeCheck:
    """Total classification of a language-code token.

    ``stage`` names what was decided: ``ok`` (valid), or the first failing
    stage among ``scheme``, ``pattern``, ``membership``.
    """

    code: str
    scheme: str | None
    valid: bool
    stage: str
    message: str


def validate_language_code(code: str, tables: "VocabularyRegistry") -> LanguageCodeCheck:
    """Classify into a scheme, check the pattern, then check table membership."""
    if code.startswith(SIL_PREFIX):
        suffix = code[len(SIL_PREFIX):]
        if not _SUFFIX_PATTERN.fullmatch(suffix):
            return LanguageCodeCheck(
                code, SCHEME_SIL, False, "pattern",
                f"SIL code {code!r} invalid: pattern requires exactly three "
                f"letters after {SIL_PREFIX!r}")
        if suffix not in tables.get("sil-codes"):
            return LanguageCodeCheck(
                code, SCHEME_SIL, False, "membership",
                f"SIL code {suffix!r} not in the code table")
        return LanguageCodeCheck(code, SCHEME_SIL, True, "ok", "valid SIL code")
    if code.startswith(LINGUIST_PREFIX):
        suffix = code[len(LINGUIST_PREFIX):]
        if not _SUFFIX_PATTERN.fullmatch(suffix):
            return LanguageCodeCheck(
                code, SCHEME_LINGUIST, False, "pattern",
                f"Linguist List code {code!r} invalid: pattern requires exactly "
                f"three letters after {LINGUIST_PREFIX!r}")
        if suffix not in tables.get("linguist-codes"):
            return LanguageCodeCheck(
                code, SCHEME_LINGUIST, False, "membership",
                f"Linguist List code {suffix!r} not in the code table")
        return LanguageCodeCheck(
            code, SCHEME_LINGUIST, True, "ok", "valid Linguist List code")
    if _ISO_PATTERN.fullmatch(code):
        if code not in tables.get("iso639-1"):
            return LanguageCodeCheck(
                code, SCHEME_ISO, False, "membership",
                f"two-letter code {code!r} not in the unambiguous ISO 639-1 subset")
        return LanguageCodeCheck(code, SCHEME_ISO, True, "ok", "valid ISO 639-1 code")
    return LanguageCodeCheck(
        code, None, False, "scheme",
        f"{code!r} matches no language-code scheme (two letters, "
        f"{SIL_PREFIX}XXX, or {LINGUIST_PREFIX}XXX)")


_BUNDLED_FILES = {
    "iso639-1": "iso639_1.tab",
    "sil-codes": "sil_codes.tab",
    "linguist-codes": "linguist_codes.tab",
    "dc-type": "dc_type.tab",
    "linguistic-type": "linguistic_type.tab",
    "date-refine": "date_refine.tab",
}


class VocabularyRegistry:
    """Holds the vocabulary tables that record validation and the catalog use."""

    def __init__(self, tables: Iterable[VocabularyTable] = ()):
        self._tables: dict[str, VocabularyTable] = {}
        for table in tables:
            self.add(table)

    def add(self, table: VocabularyTable) -> None:
        self._tables[table.vocabulary_id] = table

    def get(self, vocabulary_id: str) -> VocabularyTable:
        try:
            return self._tables[vocabulary_id]
        except KeyError:
            raise VocabularyError(f"no vocabulary {vocabulary_id!r}") from None

    def __contains__(self, vocabulary_id: str) -> bool:
        return vocabulary_id in self._tables

    def table_ids(self) -> list[str]:
        return sorted(self._tables)

    def check_language_code(self, code: str) -> LanguageCodeCheck:
        return validate_language_code(code, self)

    @classmethod
    def bundled(cls) -> "VocabularyRegistry":
        """Registry backed by the tables shipped with the package.

        Also builds the merged ``language-codes`` view whose entries are the
        full tokens as they appear in records (``en``, ``x-sil-LIF``, ...).
        """
        registry = cls()
        data = resources.files("olac.data")
        for vocabulary_id, filename in _BUNDLED_FILES.items():
            with (data / filename).open("r", encoding="utf-8") as handle:
                registry.add(load_vocabulary(handle, vocabulary_id))
        merged = []
        for entry in registry.get("iso639-1"):
            merged.append(entry)
        for entry in registry.get("sil-codes"):
            merged.append(VocabularyEntry(SIL_PREFIX + entry.code, entry.label, entry.note))
        for entry in registry.get("linguist-codes"):
            merged.append(VocabularyEntry(LINGUIST_PREFIX + entry.code, entry.label, entry.note))
        registry.add(VocabularyTable("language-codes", merged))
        return registry


_bundled_cache: VocabularyRegistry | None = None


def bundled_registry() -> VocabularyRegistry:
    """Shared read-only instance of the bundled tables."""
    global _bundled_cache
    if _bundled_cache is None:
        _bundled_cache = VocabularyRegistry.bundled()
    return _bundled_cache
