"""Corpus reading and the phrase-window contract.

The selection engine looks up similarity rows by phrase id
``<subsection_id>:<start>:<end>``, where ``start``/``end`` are token
offsets produced by a fixed tokenization and sliding-window scheme. The
two packages deliberately share no code, only this id grammar, so the
rules are restated here and pinned by parity tests:

* tokens: lowercase, split on whitespace, strip boundary punctuation,
  drop tokens that were pure punctuation;
* windows: fixed width (default 75 tokens), starts advancing by
  ``round_half_up(window * (1 - overlap))``, final window clamped to the
  text end and emitted only when it adds at least one new token.

Any drift in these rules produces phrase ids the selection engine cannot
resolve, so treat every constant below as part of the file format.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .errors import JobError

_PUNCT = string.punctuation


def tokenize(text: str) -> tuple[str, ...]:
    out = []
    for raw in text.lower().split():
        tok = raw.strip(_PUNCT)
        if tok:
            out.append(tok)
    return tuple(out)


def parse_ratio(text: str) -> Fraction:
    """Parse ``1/3`` or ``0.25`` into an exact Fraction."""
    text = text.strip()
    try:
        if "/" in text:
            num, den = text.split("/")
            return Fraction(int(num), int(den))
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise JobError(f"cannot parse ratio {text!r}") from exc


@dataclass(frozen=True)
class Window:
    """Sliding-window parameters; must match the selection run they feed."""

    width: int = 75
    overlap: Fraction = Fraction(1, 3)

    def __post_init__(self) -> None:
        if self.width < 1:
            raise JobError(f"window must be >= 1, got {self.width}")
        ratio = self.overlap
        if not isinstance(ratio, Fraction):
            object.__setattr__(self, "overlap", Fraction(str(ratio)))
            ratio = self.overlap
        if not (0 <= ratio < 1):
            raise JobError(f"overlap must be in [0, 1), got {ratio}")
        if self.stride < 1:
            raise JobError(f"window {self.width} with overlap {ratio} gives stride < 1")

    @property
    def stride(self) -> int:
        """Round-half-up of width * (1 - overlap), computed exactly."""
        exact = self.width * (1 - self.overlap) + Fraction(1, 2)
        return int(exact.__floor__())


def window_spans(n_tokens: int, window: Window) -> list[tuple[int, int]]:
    """Token spans ``[start, end)`` covering ``n_tokens`` tokens."""
    spans: list[tuple[int, int]] = []
    prev_end = 0
    start = 0
    while start < n_tokens:
        end = min(start + window.width, n_tokens)
        if end > prev_end:
            spans.append((start, end))
            prev_end = end
        if end == n_tokens:
            break
        start += window.stride
    return spans


@dataclass(frozen=True)
class PhraseText:
    """One text query: the phrase id plus the token run it denotes."""

    key: str
    text: str


def _require(obj: dict, key: str, kind: type, where: str):
    value = obj.get(key)
    if not isinstance(value, kind):
        raise JobError(f"{where}: expected {kind.__name__} field {key!r}")
    return value


def corpus_phrases(path: str | Path, window: Window = Window()) -> list[PhraseText]:
    """Extract every phrase of a corpus file, in document order.

    Subsections whose text tokenizes to nothing contribute no phrases.
    Duplicate subsection ids are rejected because they would collide in
    the output's phrase id table.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise JobError(f"cannot read corpus {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise JobError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise JobError(f"{path}: expected a JSON object at top level")
    books = _require(doc, "books", list, str(path))
    phrases: list[PhraseText] = []
    seen_subs: set[str] = set()
    for bi, book in enumerate(books):
        where = f"$.books[{bi}]"
        if not isinstance(book, dict):
            raise JobError(f"{where}: expected object")
        for ci, chapter in enumerate(_require(book, "chapters", list, where)):
            cw = f"{where}.chapters[{ci}]"
            if not isinstance(chapter, dict):
                raise JobError(f"{cw}: expected object")
            for si, section in enumerate(_require(chapter, "sections", list, cw)):
                sw = f"{cw}.sections[{si}]"
                if not isinstance(section, dict):
                    raise JobError(f"{sw}: expected object")
                subs = _require(section, "subsections", list, sw)
                for ui, sub in enumerate(subs):
                    uw = f"{sw}.subsections[{ui}]"
                    if not isinstance(sub, dict):
                        raise JobError(f"{uw}: expected object")
                    sub_id = _require(sub, "id", str, uw)
                    text = _require(sub, "text", str, uw)
                    if sub_id in seen_subs:
                        raise JobError(f"{uw}: duplicate subsection id {sub_id!r}")
                    seen_subs.add(sub_id)
                    tokens = tokenize(text)
                    for start, end in window_spans(len(tokens), window):
                        phrases.append(
                            PhraseText(
                                key=f"{sub_id}:{start}:{end}",
                                text=" ".join(tokens[start:end]),
                            )
                        )
    return phrases
