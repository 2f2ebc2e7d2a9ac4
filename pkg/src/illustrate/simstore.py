"""Phrase-by-image similarity storage and normalization.

This module is the only bridge between the optimization engine and whatever
model produced the scores. A similarity file carries raw float32 logits for
every (phrase, image) pair plus the two id tables; probabilities are derived
here by a per-phrase softmax.

The softmax runs across the WHOLE image bank, not per section: a probability
therefore depends on the bank size, and scores from banks of different sizes
are not comparable. Probabilities are held in float64; the file keeps the
original float32 logits so a load/write cycle is byte-exact.

Two on-disk formats are supported and carry identical information:

* binary: magic ``SIMM``, u32 version (1), u32 phrase count, u32 image
  count, all logits as little-endian float32 row-major (phrases x images),
  then the phrase id table and the image id table, each id encoded as a u32
  byte length followed by UTF-8 bytes;
* text: a JSON document with the same fields.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable

import numpy as np

from .corpus import Subsection, WindowConfig, window_phrases
from .errors import (
    EmptyInputError,
    IntegrityError,
    NumericError,
    SchemaError,
    UnknownIdError,
)

MAGIC = b"SIMM"
VERSION = 1


class ImageSource(Enum):
    OPENSTAX = "openstax"
    WIKIPEDIA = "wikipedia"


@dataclass(frozen=True)
class ImageRecord:
    id: str
    source: ImageSource
    uri: str
    caption: str | None = None


@dataclass(frozen=True)
class ImageBank:
    """Ordered image manifest; list position defines the matrix column."""

    images: tuple[ImageRecord, ...]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for rec in self.images:
            if rec.id in seen:
                raise IntegrityError(f"duplicate image id {rec.id!r} in bank")
            seen.add(rec.id)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(rec.id for rec in self.images)

    def __len__(self) -> int:
        return len(self.images)


def load_image_bank(path: str | Path) -> ImageBank:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise SchemaError(f"cannot read image bank {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("images"), list):
        raise SchemaError(f"{path}: expected object with images[]")
    records = []
    for i, obj in enumerate(doc["images"]):
        p = f"$.images[{i}]"
        if not isinstance(obj, dict):
            raise SchemaError(f"{p}: expected object")
        for key in ("id", "source", "uri"):
            if not isinstance(obj.get(key), str):
                raise SchemaError(f"{p}.{key}: expected string")
        try:
            source = ImageSource(obj["source"])
        except ValueError as exc:
            raise SchemaError(f"{p}.source: unknown source {obj['source']!r}") from exc
        caption = obj.get("caption")
        if caption is not None and not isinstance(caption, str):
            raise SchemaError(f"{p}.caption: expected string or null")
        records.append(
            ImageRecord(id=obj["id"], source=source, uri=obj["uri"], caption=caption)
        )
    return ImageBank(images=tuple(records))


def row_softmax(logits_row: np.ndarray) -> np.ndarray:
    """Stabilized softmax of one logit row, in float64."""
    row = np.asarray(logits_row, dtype=np.float64)
    if row.ndim != 1 or row.size == 0:
        raise EmptyInputError("softmax needs a non-empty 1-d row")
    if not np.all(np.isfinite(row)):
        raise NumericError("softmax input contains NaN or infinity")
    shifted = row - row.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


class SimMatrix:
    """Dense phrase-by-image score matrix with id-based lookup."""

    def __init__(
        self,
        phrase_ids: Iterable[str],
        image_ids: Iterable[str],
        logits: np.ndarray,
    ) -> None:
        self.phrase_ids: tuple[str, ...] = tuple(phrase_ids)
        self.image_ids: tuple[str, ...] = tuple(image_ids)
        logits = np.asarray(logits, dtype=np.float32)
        if logits.ndim != 2:
            raise SchemaError("logits must be 2-d (phrases x images)")
        if logits.shape != (len(self.phrase_ids), len(self.image_ids)):
            raise SchemaError(
                f"logit shape {logits.shape} does not match "
                f"{len(self.phrase_ids)} phrase ids x {len(self.image_ids)} image ids"
            )
        if not np.all(np.isfinite(logits)):
            raise NumericError("logits contain NaN or infinity")
        for kind, seq in (("phrase", self.phrase_ids), ("image", self.image_ids)):
            if len(set(seq)) != len(seq):
                raise IntegrityError(f"duplicate {kind} id in similarity matrix")
        self.logits = logits
        self._phrase_index = {p: i for i, p in enumerate(self.phrase_ids)}
        self._image_index = {im: j for j, im in enumerate(self.image_ids)}
        self._probs: np.ndarray | None = None

    @property
    def n_phrases(self) -> int:
        return len(self.phrase_ids)

    @property
    def n_images(self) -> int:
        return len(self.image_ids)

    @property
    def probs(self) -> np.ndarray:
        """Row-softmaxed scores, float64, computed once on first use."""
        if self._probs is None:
            logits = self.logits.astype(np.float64)
            shifted = logits - logits.max(axis=1, keepdims=True)
            exp = np.exp(shifted)
            self._probs = exp / exp.sum(axis=1, keepdims=True)
        return self._probs

    def phrase_row(self, phrase_id: str) -> np.ndarray:
        try:
            return self.probs[self._phrase_index[phrase_id]]
        except KeyError:
            raise UnknownIdError(f"unknown phrase id {phrase_id!r}") from None

    def image_column(self, image_id: str) -> int:
        try:
            return self._image_index[image_id]
        except KeyError:
            raise UnknownIdError(f"unknown image id {image_id!r}") from None

    def sim(self, image_id: str, phrase_id: str) -> float:
        """Post-softmax probability of one (image, phrase) pair."""
        return float(self.phrase_row(phrase_id)[self.image_column(image_id)])

    def has_phrase(self, phrase_id: str) -> bool:
        return phrase_id in self._phrase_index


class Aggregate(Enum):
    MEAN = "mean"


def aggregate_relevance(
    sub: Subsection,
    matrix: SimMatrix,
    cfg: WindowConfig = WindowConfig(),
    agg: Aggregate = Aggregate.MEAN,
) -> np.ndarray:
    """Per-image relevance of a subsection: aggregate over its phrase rows.

    The subsection is windowed with ``cfg``; every resulting phrase must be
    present in the matrix.
    """
    phrases = window_phrases(sub, cfg)
    rows = np.stack([matrix.phrase_row(p.key) for p in phrases])
    if agg is Aggregate.MEAN:
        return rows.mean(axis=0)
    raise SchemaError(f"unsupported aggregate {agg!r}")


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def _read_exact(buf: bytes, offset: int, size: int, what: str) -> tuple[bytes, int]:
    if offset + size > len(buf):
        raise SchemaError(f"similarity file truncated while reading {what}")
    return buf[offset : offset + size], offset + size


def _decode_id_table(buf: bytes, offset: int, count: int, what: str) -> tuple[list[str], int]:
    ids = []
    for i in range(count):
        raw, offset = _read_exact(buf, offset, 4, f"{what}[{i}] length")
        (length,) = struct.unpack("<I", raw)
        raw, offset = _read_exact(buf, offset, length, f"{what}[{i}]")
        try:
            ids.append(raw.decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise SchemaError(f"{what}[{i}] is not valid UTF-8") from exc
    return ids, offset


def _load_binary(buf: bytes, origin: str) -> SimMatrix:
    offset = 0
    raw, offset = _read_exact(buf, offset, 4, "magic")
    if raw != MAGIC:
        raise SchemaError(f"{origin}: bad magic {raw!r}, expected {MAGIC!r}")
    raw, offset = _read_exact(buf, offset, 4, "version")
    (version,) = struct.unpack("<I", raw)
    if version != VERSION:
        raise SchemaError(f"{origin}: unsupported version {version}")
    raw, offset = _read_exact(buf, offset, 8, "dimensions")
    n_phrases, n_images = struct.unpack("<II", raw)
    raw, offset = _read_exact(buf, offset, 4 * n_phrases * n_images, "logits")
    logits = np.frombuffer(raw, dtype="<f4").reshape(n_phrases, n_images).copy()
    phrase_ids, offset = _decode_id_table(buf, offset, n_phrases, "phrase id")
    image_ids, offset = _decode_id_table(buf, offset, n_images, "image id")
    if offset != len(buf):
        raise SchemaError(f"{origin}: {len(buf) - offset} trailing bytes")
    return SimMatrix(phrase_ids, image_ids, logits)


def _load_text(doc: dict, origin: str) -> SimMatrix:
    if not isinstance(doc, dict):
        raise SchemaError(f"{origin}: expected JSON object")
    for key in ("phrase_ids", "image_ids", "logits"):
        if not isinstance(doc.get(key), list):
            raise SchemaError(f"{origin}: missing array field {key!r}")
    if doc.get("version", VERSION) != VERSION:
        raise SchemaError(f"{origin}: unsupported version {doc.get('version')}")
    phrase_ids = doc["phrase_ids"]
    image_ids = doc["image_ids"]
    declared_p = doc.get("n_phrases", len(phrase_ids))
    declared_i = doc.get("n_images", len(image_ids))
    if declared_p != len(phrase_ids) or declared_i != len(image_ids):
        raise SchemaError(
            f"{origin}: declared dimensions ({declared_p}, {declared_i}) do not "
            f"match id tables ({len(phrase_ids)}, {len(image_ids)})"
        )
    rows = doc["logits"]
    if len(rows) != len(phrase_ids):
        raise SchemaError(
            f"{origin}: {len(rows)} logit rows for {len(phrase_ids)} phrase ids"
        )
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != len(image_ids):
            raise SchemaError(
                f"{origin}: logits[{i}] does not have {len(image_ids)} columns"
            )
    logits = np.asarray(rows, dtype=np.float32)
    return SimMatrix(phrase_ids, image_ids, logits)


def load_similarity(path: str | Path) -> SimMatrix:
    """Load a similarity file, sniffing binary vs text by the magic bytes."""
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as exc:
        raise SchemaError(f"cannot read similarity file {path}: {exc}") from exc
    if buf[:4] == MAGIC:
        return _load_binary(buf, str(path))
    try:
        doc = json.loads(buf.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaError(
            f"{path}: neither a SIMM binary file nor valid JSON"
        ) from exc
    return _load_text(doc, str(path))


def dump_binary(matrix: SimMatrix) -> bytes:
    parts = [
        MAGIC,
        struct.pack("<I", VERSION),
        struct.pack("<II", matrix.n_phrases, matrix.n_images),
        np.ascontiguousarray(matrix.logits, dtype="<f4").tobytes(),
    ]
    for table in (matrix.phrase_ids, matrix.image_ids):
        for ident in table:
            raw = ident.encode("utf-8")
            parts.append(struct.pack("<I", len(raw)))
            parts.append(raw)
    return b"".join(parts)


def dump_text(matrix: SimMatrix) -> str:
    doc = {
        "format": "SIMM",
        "version": VERSION,
        "n_phrases": matrix.n_phrases,
        "n_images": matrix.n_images,
        "phrase_ids": list(matrix.phrase_ids),
        "image_ids": list(matrix.image_ids),
        # float32 -> float is exact, and repr round-trips, so text form
        # preserves the logits bit-for-bit.
        "logits": [[float(v) for v in row] for row in matrix.logits],
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def write_similarity(matrix: SimMatrix, path: str | Path, fmt: str = "binary") -> None:
    path = Path(path)
    if fmt == "binary":
        path.write_bytes(dump_binary(matrix))
    elif fmt == "text":
        path.write_text(dump_text(matrix), encoding="utf-8")
    else:
        raise SchemaError(f"unknown similarity format {fmt!r}")
