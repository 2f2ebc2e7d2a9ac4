"""Text/image encoders producing unit-normalized embedding rows.

Two backends share one interface:

* ``palette`` needs no weights at all. Images are described by a named
  color histogram plus a crude fill-ratio shape descriptor; texts by
  occurrences of the same color and shape vocabulary. Useful for smoke
  tests, offline pipelines, and anywhere a pretrained checkpoint is
  unavailable.
* a directory path (optionally prefixed ``clip:``) loads a CLIP
  checkpoint from local disk via ``transformers`` and uses its projected
  text/image features.

Both return float32 arrays whose rows have unit norm (rows with no
signal stay zero), so the score of a (phrase, image) pair is the plain
dot product.
"""

from __future__ import annotations

import math
import string
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np
from PIL import Image

from .errors import JobError


class Encoder(Protocol):
    name: str

    def encode_texts(self, texts: Sequence[str], batch_size: int) -> np.ndarray: ...

    def encode_images(
        self, images: Sequence[Image.Image], batch_size: int
    ) -> np.ndarray: ...


def _chunks(seq: Sequence, size: int) -> Iterable[Sequence]:
    for i in range(0, len(seq), size):
        yield seq[i : i + size]


def _unit_rows(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    return np.divide(mat, norms, out=np.zeros_like(mat), where=norms > 0)


# ---------------------------------------------------------------------------
# Palette backend
# ---------------------------------------------------------------------------

_COLOR_ANCHORS: tuple[tuple[str, tuple[int, int, int]], ...] = (
    ("red", (255, 0, 0)),
    ("green", (0, 128, 0)),
    ("blue", (0, 0, 255)),
    ("yellow", (255, 255, 0)),
    ("orange", (255, 165, 0)),
    ("purple", (128, 0, 128)),
    ("pink", (255, 105, 180)),
    ("brown", (139, 69, 19)),
    ("cyan", (0, 255, 255)),
    ("gray", (128, 128, 128)),
    ("black", (0, 0, 0)),
    ("white", (255, 255, 255)),
)

_COLOR_INDEX = {name: i for i, (name, _) in enumerate(_COLOR_ANCHORS)}
_COLOR_WORDS = dict(_COLOR_INDEX)
_COLOR_WORDS["grey"] = _COLOR_INDEX["gray"]
_COLOR_WORDS["violet"] = _COLOR_INDEX["purple"]

_SHAPES = ("circle", "square", "triangle")
_SHAPE_INDEX = {name: i for i, name in enumerate(_SHAPES)}
_SHAPE_WORDS = {
    "circle": 0,
    "circles": 0,
    "round": 0,
    "square": 1,
    "squares": 1,
    "triangle": 2,
    "triangles": 2,
    "triangular": 2,
}

# Foreground-pixel share of the shape's bounding box: pi/4 for a circle,
# ~1 for a filled square, 1/2 for a triangle split along its diagonal.
_FILL_PROTOTYPES = np.array([math.pi / 4.0, 1.0, 0.5])
_FILL_SIGMA = 0.08

_RESAMPLE_SIZE = 64
_BACKGROUND_DISTANCE = 60.0


class PaletteEncoder:
    """Deterministic color/shape features; no model weights involved."""

    name = "palette"

    def encode_texts(self, texts: Sequence[str], batch_size: int) -> np.ndarray:
        rows = []
        for chunk in _chunks(texts, batch_size):
            rows.extend(self._text_features(t) for t in chunk)
        return _unit_rows(np.array(rows, dtype=np.float32).reshape(len(texts), -1))

    def encode_images(
        self, images: Sequence[Image.Image], batch_size: int
    ) -> np.ndarray:
        rows = []
        for chunk in _chunks(images, batch_size):
            rows.extend(self._image_features(img) for img in chunk)
        return _unit_rows(np.array(rows, dtype=np.float32).reshape(len(images), -1))

    @staticmethod
    def _text_features(text: str) -> np.ndarray:
        vec = np.zeros(len(_COLOR_ANCHORS) + len(_SHAPES))
        for raw in text.lower().split():
            tok = raw.strip(string.punctuation)
            if tok in _COLOR_WORDS:
                vec[_COLOR_WORDS[tok]] += 1.0
            elif tok in _SHAPE_WORDS:
                vec[len(_COLOR_ANCHORS) + _SHAPE_WORDS[tok]] += 1.0
        return vec

    @staticmethod
    def _image_features(img: Image.Image) -> np.ndarray:
        small = img.convert("RGB").resize(
            (_RESAMPLE_SIZE, _RESAMPLE_SIZE), Image.BILINEAR
        )
        px = np.asarray(small, dtype=np.float64)
        border = np.concatenate(
            [px[0], px[-1], px[1:-1, 0], px[1:-1, -1]], axis=0
        )
        colors, counts = np.unique(border.reshape(-1, 3), axis=0, return_counts=True)
        background = colors[counts.argmax()]
        distance = np.sqrt(((px - background) ** 2).sum(axis=-1))
        mask = distance > _BACKGROUND_DISTANCE
        foreground = px[mask] if mask.any() else px.reshape(-1, 3)

        anchors = np.array([rgb for _, rgb in _COLOR_ANCHORS], dtype=np.float64)
        nearest = ((foreground[:, None, :] - anchors[None]) ** 2).sum(-1).argmin(1)
        hist = np.bincount(nearest, minlength=len(anchors)).astype(np.float64)
        hist /= hist.sum()

        shape = np.zeros(len(_SHAPES))
        if mask.any():
            ys, xs = np.nonzero(mask)
            box = (ys.max() - ys.min() + 1) * (xs.max() - xs.min() + 1)
            fill = mask.sum() / box
            scores = np.exp(
                -((fill - _FILL_PROTOTYPES) ** 2) / (2.0 * _FILL_SIGMA**2)
            )
            shape = scores / scores.sum()
        return np.concatenate([hist, shape])


# ---------------------------------------------------------------------------
# CLIP backend
# ---------------------------------------------------------------------------


class ClipEncoder:
    """Projected CLIP features from a checkpoint directory on local disk."""

    name = "clip"

    def __init__(self, path: str, device: str = "cpu") -> None:
        try:
            import torch
            from transformers import CLIPImageProcessor, CLIPModel, CLIPTokenizer
        except ImportError as exc:
            raise JobError(
                "the clip backend needs torch and transformers installed"
            ) from exc
        self._torch = torch
        try:
            # The pieces load separately so checkpoints saved without a
            # combined processor config still work.
            self._model = CLIPModel.from_pretrained(path, local_files_only=True)
            self._tokenizer = CLIPTokenizer.from_pretrained(path, local_files_only=True)
            self._image_processor = CLIPImageProcessor.from_pretrained(
                path, local_files_only=True
            )
        except (OSError, ValueError, EnvironmentError) as exc:
            raise JobError(f"cannot load clip checkpoint from {path}: {exc}") from exc
        try:
            self._model.to(device)
        except (RuntimeError, ValueError) as exc:
            raise JobError(f"cannot use device {device!r}: {exc}") from exc
        self._model.eval()
        self._device = device

    @staticmethod
    def _features(result):
        # transformers < 5 returns the projected tensor directly; 5.x
        # returns the model output with the projection in pooler_output.
        return getattr(result, "pooler_output", result)

    def encode_texts(self, texts: Sequence[str], batch_size: int) -> np.ndarray:
        torch = self._torch
        rows = []
        with torch.no_grad():
            for chunk in _chunks(texts, batch_size):
                tok = self._tokenizer(
                    list(chunk), padding=True, truncation=True, return_tensors="pt"
                )
                tok = {k: v.to(self._device) for k, v in tok.items()}
                feats = self._features(self._model.get_text_features(**tok))
                feats = feats / feats.norm(dim=-1, keepdim=True)
                rows.append(feats.cpu().numpy().astype(np.float32))
        return np.concatenate(rows, axis=0)

    def encode_images(
        self, images: Sequence[Image.Image], batch_size: int
    ) -> np.ndarray:
        torch = self._torch
        rows = []
        with torch.no_grad():
            for chunk in _chunks(images, batch_size):
                pixels = self._image_processor(
                    images=list(chunk), return_tensors="pt"
                ).pixel_values.to(self._device)
                feats = self._features(self._model.get_image_features(pixel_values=pixels))
                feats = feats / feats.norm(dim=-1, keepdim=True)
                rows.append(feats.cpu().numpy().astype(np.float32))
        return np.concatenate(rows, axis=0)


def resolve_encoder(model_id: str, device: str = "cpu") -> Encoder:
    """Map a model identifier to a backend.

    ``palette`` selects the weight-free backend; anything else must name
    a local CLIP checkpoint directory, optionally prefixed ``clip:``.
    """
    if model_id == "palette":
        return PaletteEncoder()
    path = model_id[len("clip:") :] if model_id.startswith("clip:") else model_id
    if Path(path).is_dir():
        return ClipEncoder(path, device=device)
    raise JobError(
        f"unknown model identifier {model_id!r}; expected 'palette' or a "
        "local clip checkpoint directory"
    )
