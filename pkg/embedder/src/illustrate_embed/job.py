"""End-to-end embedding job: corpus phrases x image bank -> similarity file.

``embed_and_export`` reads the corpus, decodes the bank, encodes both
sides with the configured backend, and writes the binary similarity
file whose entry [p][i] is the dot product of the unit-normalized phrase
and image encodings. Unreadable images are skipped and reported, not
fatal; a job with zero usable images or zero phrases is an error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from PIL import Image

from .encoders import resolve_encoder
from .errors import JobError
from .images import ImageRef, discover_images, load_rgb
from .simwrite import write_binary
from .textio import Window, corpus_phrases


@dataclass(frozen=True)
class EmbeddingJob:
    corpus: Path
    images: Path
    output: Path
    model: str = "palette"
    batch_size: int = 32
    device: str = "cpu"
    window: int = 75
    overlap: Fraction = field(default_factory=lambda: Fraction(1, 3))

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise JobError(f"batch size must be >= 1, got {self.batch_size}")


@dataclass(frozen=True)
class SkippedImage:
    id: str
    uri: str
    reason: str


@dataclass(frozen=True)
class JobReport:
    output: str
    model: str
    n_phrases: int
    n_images: int
    skipped: tuple[SkippedImage, ...]

    def to_dict(self) -> dict:
        return {
            "output": self.output,
            "model": self.model,
            "n_phrases": self.n_phrases,
            "n_images": self.n_images,
            "skipped": [
                {"id": s.id, "uri": s.uri, "reason": s.reason} for s in self.skipped
            ],
        }


def _load_bank(
    refs: list[ImageRef],
) -> tuple[list[ImageRef], list[Image.Image], list[SkippedImage]]:
    usable: list[ImageRef] = []
    loaded: list[Image.Image] = []
    skipped: list[SkippedImage] = []
    for ref in refs:
        try:
            img = load_rgb(ref)
        except (OSError, ValueError, JobError, Image.DecompressionBombError) as exc:
            skipped.append(
                SkippedImage(id=ref.id, uri=ref.uri, reason=str(exc) or repr(exc))
            )
            continue
        usable.append(ref)
        loaded.append(img)
    return usable, loaded, skipped


def embed_and_export(job: EmbeddingJob) -> JobReport:
    window = Window(width=job.window, overlap=job.overlap)
    phrases = corpus_phrases(job.corpus, window)
    if not phrases:
        raise JobError(f"{job.corpus}: corpus produced no phrases")

    refs = discover_images(job.images)
    if not refs:
        raise JobError(f"{job.images}: no images found")
    usable, loaded, skipped = _load_bank(refs)
    if not usable:
        raise JobError(
            f"{job.images}: none of the {len(refs)} images could be decoded"
        )

    encoder = resolve_encoder(job.model, device=job.device)
    image_rows = encoder.encode_images(loaded, job.batch_size)
    text_rows = encoder.encode_texts([p.text for p in phrases], job.batch_size)
    logits = text_rows.astype(np.float32) @ image_rows.astype(np.float32).T

    write_binary(job.output, [p.key for p in phrases], [r.id for r in usable], logits)
    return JobReport(
        output=str(job.output),
        model=job.model,
        n_phrases=len(phrases),
        n_images=len(usable),
        skipped=tuple(skipped),
    )
