"""Textbook corpus: data model, JSON ingestion, phrase windowing, mentions.

The corpus file is a single JSON document with ``books[]``, each holding
``chapters[] -> sections[] -> subsections[]``. A subsection carries ``id``,
``text`` (raw string), ``paragraph_offsets`` (token indices starting each
paragraph), ``concepts[]`` (``{id, surface}``) and ``gold_images[]``.

Tokenization is deliberately dumb and deterministic: lowercase, split on
whitespace, strip punctuation from token boundaries. Subsection text is
decomposed into fixed-width overlapping token windows (phrases); a phrase
mentions a concept when the concept's normalized surface occurs as a
contiguous token run inside the phrase.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterator

from .errors import EmptyInputError, IntegrityError, SchemaError

_PUNCT = string.punctuation


def tokenize(text: str) -> tuple[str, ...]:
    """Lowercase, split on whitespace, strip boundary punctuation.

    Tokens that are pure punctuation vanish; interior punctuation (e.g. the
    apostrophe in ``don't``) survives.
    """
    out = []
    for raw in text.lower().split():
        tok = raw.strip(_PUNCT)
        if tok:
            out.append(tok)
    return tuple(out)


class Subject(Enum):
    SCIENCE = "science"
    MATH = "math"
    SOCIAL_SCIENCE = "social_science"
    BUSINESS = "business"


class Split(Enum):
    TRAIN = "train"
    DEV = "dev"
    TEST = "test"
    ALL = "all"


@dataclass(frozen=True)
class Concept:
    """A key term of a subsection, matched by its normalized surface."""

    id: str
    surface: str
    tokens: tuple[str, ...] = field(default=())

    @staticmethod
    def make(concept_id: str, surface: str) -> "Concept":
        toks = tokenize(surface)
        return Concept(id=concept_id, surface=surface, tokens=toks)


@dataclass(frozen=True)
class Phrase:
    """A token window of one subsection; the unit of similarity lookup."""

    subsection_id: str
    start: int
    end: int
    tokens: tuple[str, ...]

    @property
    def key(self) -> str:
        """Stable phrase id: subsection id plus token span."""
        return f"{self.subsection_id}:{self.start}:{self.end}"


@dataclass(frozen=True)
class WindowConfig:
    """Sliding-window parameters. Defaults: 75 tokens, overlap one third."""

    window: int = 75
    overlap_ratio: Fraction = Fraction(1, 3)

    def __post_init__(self) -> None:
        if self.window < 1:
            raise SchemaError(f"window must be >= 1, got {self.window}")
        ratio = self.overlap_ratio
        if not isinstance(ratio, Fraction):
            # Floats go through their decimal string so 0.25 stays 1/4.
            object.__setattr__(self, "overlap_ratio", Fraction(str(ratio)))
            ratio = self.overlap_ratio
        if not (0 <= ratio < 1):
            raise SchemaError(f"overlap_ratio must be in [0, 1), got {ratio}")
        if self.stride < 1:
            raise SchemaError(
                f"window {self.window} with overlap {ratio} gives stride < 1"
            )

    @property
    def stride(self) -> int:
        """Round-half-up of window * (1 - overlap_ratio), computed exactly."""
        exact = self.window * (1 - self.overlap_ratio) + Fraction(1, 2)
        return int(exact.__floor__())


def parse_ratio(text: str) -> Fraction:
    """Parse ``1/3`` or ``0.25`` into an exact Fraction."""
    text = text.strip()
    try:
        if "/" in text:
            num, den = text.split("/")
            return Fraction(int(num), int(den))
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"cannot parse ratio {text!r}") from exc


@dataclass(frozen=True)
class Subsection:
    id: str
    source_text: str
    tokens: tuple[str, ...]
    paragraph_offsets: tuple[int, ...]
    concepts: tuple[Concept, ...]
    gold_images: tuple[str, ...]

    @property
    def paragraphs(self) -> tuple[tuple[int, int], ...]:
        """Token ranges partitioning the text, one per paragraph."""
        offs = self.paragraph_offsets
        n = len(self.tokens)
        return tuple(
            (offs[i], offs[i + 1] if i + 1 < len(offs) else n)
            for i in range(len(offs))
        )


@dataclass(frozen=True)
class Section:
    id: str
    subject: Subject
    subsections: tuple[Subsection, ...]


@dataclass(frozen=True)
class Chapter:
    id: str
    title: str
    sections: tuple[Section, ...]


@dataclass(frozen=True)
class Book:
    id: str
    title: str
    subject: Subject
    split: Split
    chapters: tuple[Chapter, ...]


@dataclass(frozen=True)
class Corpus:
    books: tuple[Book, ...]
    split: Split = Split.ALL

    def sections(self) -> Iterator[Section]:
        for book in self.books:
            for chapter in book.chapters:
                yield from chapter.sections

    def subsections(self) -> Iterator[tuple[Section, Subsection]]:
        for section in self.sections():
            for sub in section.subsections:
                yield section, sub

    def counts(self) -> tuple[int, int, int]:
        """(sections, subsections, gold image placements)."""
        n_sec = n_sub = n_img = 0
        for section in self.sections():
            n_sec += 1
            for sub in section.subsections:
                n_sub += 1
                n_img += len(sub.gold_images)
        return n_sec, n_sub, n_img


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _expect(value, kind, path: str):
    if not isinstance(value, kind):
        raise SchemaError(
            f"{path}: expected {kind.__name__}, got {type(value).__name__}"
        )
    return value


def _expect_list(value, path: str) -> list:
    if not isinstance(value, list):
        raise SchemaError(f"{path}: expected array")
    return value


class _IdRegistry:
    """Per-category uniqueness tracking with error paths."""

    def __init__(self) -> None:
        self._seen: dict[str, dict[str, str]] = {}

    def claim(self, category: str, value: str, path: str) -> None:
        bucket = self._seen.setdefault(category, {})
        if value in bucket:
            raise IntegrityError(
                f"duplicate {category} id {value!r} at {path} "
                f"(first seen at {bucket[value]})"
            )
        bucket[value] = path


def _parse_subsection(obj: dict, path: str, ids: _IdRegistry) -> Subsection:
    _expect(obj, dict, path)
    sub_id = _expect(obj.get("id"), str, f"{path}.id")
    ids.claim("subsection", sub_id, f"{path}.id")
    text = _expect(obj.get("text"), str, f"{path}.text")
    tokens = tokenize(text)

    raw_offsets = obj.get("paragraph_offsets")
    if raw_offsets is None:
        offsets = (0,) if tokens else ()
    else:
        raw_offsets = _expect_list(raw_offsets, f"{path}.paragraph_offsets")
        offsets = tuple(
            _expect(o, int, f"{path}.paragraph_offsets[{i}]")
            for i, o in enumerate(raw_offsets)
        )
    if tokens:
        if not offsets or offsets[0] != 0:
            raise SchemaError(f"{path}.paragraph_offsets: must start at 0")
        for a, b in zip(offsets, offsets[1:]):
            if b <= a:
                raise SchemaError(
                    f"{path}.paragraph_offsets: must be strictly increasing"
                )
        if offsets[-1] >= len(tokens):
            raise SchemaError(
                f"{path}.paragraph_offsets: offset {offsets[-1]} out of range "
                f"for {len(tokens)} tokens"
            )
    elif offsets:
        raise SchemaError(f"{path}.paragraph_offsets: text has no tokens")

    concepts = []
    surfaces_seen: dict[tuple[str, ...], str] = {}
    for i, cobj in enumerate(_expect_list(obj.get("concepts", []), f"{path}.concepts")):
        cpath = f"{path}.concepts[{i}]"
        _expect(cobj, dict, cpath)
        cid = _expect(cobj.get("id"), str, f"{cpath}.id")
        surface = _expect(cobj.get("surface"), str, f"{cpath}.surface")
        concept = Concept.make(cid, surface)
        if not concept.tokens:
            raise SchemaError(
                f"{cpath}.surface: empty after normalization ({surface!r})"
            )
        if concept.tokens in surfaces_seen:
            raise IntegrityError(
                f"{cpath}: concept surface {surface!r} duplicates "
                f"{surfaces_seen[concept.tokens]} after normalization"
            )
        surfaces_seen[concept.tokens] = cpath
        concepts.append(concept)

    gold = []
    for i, img in enumerate(_expect_list(obj.get("gold_images", []), f"{path}.gold_images")):
        ipath = f"{path}.gold_images[{i}]"
        img_id = _expect(img, str, ipath)
        ids.claim("image", img_id, ipath)
        gold.append(img_id)

    return Subsection(
        id=sub_id,
        source_text=text,
        tokens=tokens,
        paragraph_offsets=offsets,
        concepts=tuple(concepts),
        gold_images=tuple(gold),
    )


def _parse_enum(enum_cls, value, path: str):
    _expect(value, str, path)
    try:
        return enum_cls(value)
    except ValueError as exc:
        allowed = ", ".join(e.value for e in enum_cls)
        raise SchemaError(f"{path}: {value!r} not one of [{allowed}]") from exc


def parse_corpus(source: str | Path | dict, split: Split = Split.ALL) -> Corpus:
    """Parse and validate a corpus document.

    ``source`` is a path to a JSON file or an already-decoded dict. When
    ``split`` is not ALL, only books labeled with that split are kept.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        try:
            raw = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise SchemaError(f"cannot read corpus file {path}: {exc}") from exc
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    else:
        doc = source

    _expect(doc, dict, "$")
    ids = _IdRegistry()
    books = []
    for bi, bobj in enumerate(_expect_list(doc.get("books"), "$.books")):
        bpath = f"$.books[{bi}]"
        _expect(bobj, dict, bpath)
        book_id = _expect(bobj.get("id"), str, f"{bpath}.id")
        ids.claim("book", book_id, f"{bpath}.id")
        title = _expect(bobj.get("title", book_id), str, f"{bpath}.title")
        subject = _parse_enum(Subject, bobj.get("subject"), f"{bpath}.subject")
        book_split = (
            _parse_enum(Split, bobj["split"], f"{bpath}.split")
            if "split" in bobj
            else Split.ALL
        )
        if split is not Split.ALL and book_split not in (split, Split.ALL):
            continue

        chapters = []
        for ci, cobj in enumerate(_expect_list(bobj.get("chapters"), f"{bpath}.chapters")):
            cpath = f"{bpath}.chapters[{ci}]"
            _expect(cobj, dict, cpath)
            chap_id = _expect(cobj.get("id"), str, f"{cpath}.id")
            ids.claim("chapter", chap_id, f"{cpath}.id")
            chap_title = _expect(cobj.get("title", chap_id), str, f"{cpath}.title")

            sections = []
            for si, sobj in enumerate(_expect_list(cobj.get("sections"), f"{cpath}.sections")):
                spath = f"{cpath}.sections[{si}]"
                _expect(sobj, dict, spath)
                sec_id = _expect(sobj.get("id"), str, f"{spath}.id")
                ids.claim("section", sec_id, f"{spath}.id")
                sec_subject = (
                    _parse_enum(Subject, sobj["subject"], f"{spath}.subject")
                    if "subject" in sobj
                    else subject
                )
                subs = [
                    _parse_subsection(uobj, f"{spath}.subsections[{ui}]", ids)
                    for ui, uobj in enumerate(
                        _expect_list(sobj.get("subsections"), f"{spath}.subsections")
                    )
                ]
                if not subs:
                    raise SchemaError(f"{spath}.subsections: must be non-empty")
                sections.append(
                    Section(id=sec_id, subject=sec_subject, subsections=tuple(subs))
                )
            chapters.append(
                Chapter(id=chap_id, title=chap_title, sections=tuple(sections))
            )
        books.append(
            Book(
                id=book_id,
                title=title,
                subject=subject,
                split=book_split,
                chapters=tuple(chapters),
            )
        )
    return Corpus(books=tuple(books), split=split)


def serialize_corpus(corpus: Corpus) -> dict:
    """Inverse of :func:`parse_corpus` on the data model."""
    return {
        "books": [
            {
                "id": book.id,
                "title": book.title,
                "subject": book.subject.value,
                "split": book.split.value,
                "chapters": [
                    {
                        "id": chap.id,
                        "title": chap.title,
                        "sections": [
                            {
                                "id": sec.id,
                                "subject": sec.subject.value,
                                "subsections": [
                                    {
                                        "id": sub.id,
                                        "text": sub.source_text,
                                        "paragraph_offsets": list(sub.paragraph_offsets),
                                        "concepts": [
                                            {"id": c.id, "surface": c.surface}
                                            for c in sub.concepts
                                        ],
                                        "gold_images": list(sub.gold_images),
                                    }
                                    for sub in sec.subsections
                                ],
                            }
                            for sec in chap.sections
                        ],
                    }
                    for chap in book.chapters
                ],
            }
            for book in corpus.books
        ]
    }


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(serialize_corpus(corpus), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


# ---------------------------------------------------------------------------
# Windowing and mentions
# ---------------------------------------------------------------------------


def window_phrases(sub: Subsection, cfg: WindowConfig = WindowConfig()) -> list[Phrase]:
    """Decompose a subsection into overlapping token windows.

    Starts advance by the configured stride; the final window is clamped to
    the text end and emitted only when it contributes at least one new token.
    """
    n = len(sub.tokens)
    if n == 0:
        raise EmptyInputError(f"subsection {sub.id!r} has no tokens")
    phrases: list[Phrase] = []
    prev_end = 0
    start = 0
    while start < n:
        end = min(start + cfg.window, n)
        if end > prev_end:
            phrases.append(
                Phrase(
                    subsection_id=sub.id,
                    start=start,
                    end=end,
                    tokens=sub.tokens[start:end],
                )
            )
            prev_end = end
        if end == n:
            break
        start += cfg.stride
    return phrases


def contains_run(haystack: tuple[str, ...], needle: tuple[str, ...]) -> bool:
    """True when ``needle`` occurs as a contiguous token run in ``haystack``."""
    if not needle or len(needle) > len(haystack):
        return False
    first = needle[0]
    limit = len(haystack) - len(needle) + 1
    for i in range(limit):
        if haystack[i] == first and haystack[i : i + len(needle)] == needle:
            return True
    return False


def count_runs(haystack: tuple[str, ...], needle: tuple[str, ...]) -> int:
    """Number of (possibly overlapping) occurrences of ``needle``."""
    if not needle or len(needle) > len(haystack):
        return 0
    count = 0
    for i in range(len(haystack) - len(needle) + 1):
        if haystack[i : i + len(needle)] == needle:
            count += 1
    return count


def mention(phrase: Phrase, concept: Concept) -> int:
    """1 when the concept's normalized surface occurs in the phrase."""
    return 1 if contains_run(phrase.tokens, concept.tokens) else 0
