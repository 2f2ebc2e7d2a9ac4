"""Shared test fixtures: drawn shapes, corpus builders, a tiny clip checkpoint."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

PALETTE_RGB = {
    "red": (255, 0, 0),
    "green": (0, 128, 0),
    "blue": (0, 0, 255),
    "yellow": (255, 255, 0),
    "orange": (255, 165, 0),
    "purple": (128, 0, 128),
    "pink": (255, 105, 180),
    "brown": (139, 69, 19),
    "cyan": (0, 255, 255),
    "gray": (128, 128, 128),
}

SHAPES = ("circle", "square", "triangle")


def shape_image(color: str, shape: str, size: int = 64) -> Image.Image:
    rgb = PALETTE_RGB[color]
    img = Image.new("RGB", (size, size), (255, 255, 255))
    draw = ImageDraw.Draw(img)
    lo, hi = size // 5, size - size // 5
    if shape == "circle":
        draw.ellipse([lo, lo, hi, hi], fill=rgb)
    elif shape == "square":
        draw.rectangle([lo, lo, hi, hi], fill=rgb)
    elif shape == "triangle":
        draw.polygon([(size // 2, lo), (lo, hi), (hi, hi)], fill=rgb)
    else:
        raise ValueError(f"unknown shape {shape!r}")
    return img


def subsection_doc(sub_id: str, text: str, gold_images: list[str] | None = None) -> dict:
    return {
        "id": sub_id,
        "text": text,
        "concepts": [],
        "gold_images": list(gold_images or []),
    }


def corpus_doc(subsections: list[dict], subject: str = "science") -> dict:
    """One book, one chapter, one section around the given subsections."""
    return {
        "books": [
            {
                "id": "b1",
                "title": "Shapes",
                "subject": subject,
                "split": "train",
                "chapters": [
                    {
                        "id": "ch1",
                        "title": "Chapter One",
                        "sections": [{"id": "s1", "subsections": list(subsections)}],
                    }
                ],
            }
        ]
    }


def write_corpus(path: Path, doc: dict) -> Path:
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def smoke_pairs() -> list[tuple[str, str, str, str]]:
    """(image id, color, shape, caption) for the ten-pair smoke set."""
    colors = list(PALETTE_RGB)
    out = []
    for i, color in enumerate(colors):
        shape = SHAPES[i % len(SHAPES)]
        out.append(
            (
                f"img_{color}_{shape}",
                color,
                shape,
                f"a {color} {shape} on a white background",
            )
        )
    return out


def build_smoke_set(root: Path) -> tuple[Path, Path, list[tuple[str, str]]]:
    """Ten shape images plus a corpus whose subsection texts are their captions.

    Returns (corpus path, image directory, [(image id, caption phrase id)]).
    Captions are shorter than any realistic window, so each subsection
    yields exactly one phrase.
    """
    bank = root / "bank"
    bank.mkdir()
    subs = []
    pairs = []
    for i, (img_id, color, shape, caption) in enumerate(smoke_pairs()):
        shape_image(color, shape).save(bank / f"{img_id}.png")
        sub_id = f"cap{i:02d}"
        subs.append(subsection_doc(sub_id, caption, gold_images=[img_id]))
        pairs.append((img_id, f"{sub_id}:0:{len(caption.split())}"))
    corpus = write_corpus(root / "corpus.json", corpus_doc(subs))
    return corpus, bank, pairs


def read_simm(path: Path) -> tuple[list[str], list[str], np.ndarray]:
    """Minimal test-side reader for the binary similarity format."""
    buf = path.read_bytes()
    assert buf[:4] == b"SIMM"
    (version,) = struct.unpack_from("<I", buf, 4)
    assert version == 1
    n_phrases, n_images = struct.unpack_from("<II", buf, 8)
    offset = 16
    logits = (
        np.frombuffer(buf, dtype="<f4", count=n_phrases * n_images, offset=offset)
        .reshape(n_phrases, n_images)
        .copy()
    )
    offset += 4 * n_phrases * n_images
    tables = []
    for count in (n_phrases, n_images):
        ids = []
        for _ in range(count):
            (length,) = struct.unpack_from("<I", buf, offset)
            offset += 4
            ids.append(buf[offset : offset + length].decode("utf-8"))
            offset += length
        tables.append(ids)
    assert offset == len(buf)
    return tables[0], tables[1], logits


def tiny_clip_checkpoint(root: Path, seed: int = 0) -> Path:
    """Save a tiny randomly initialized clip checkpoint under ``root``.

    Character-level vocabulary, two layers, 16-dim projection: enough to
    exercise the loading and batching paths without real weights.
    """
    import torch
    from transformers import CLIPConfig, CLIPImageProcessor, CLIPModel, CLIPTokenizer

    root.mkdir(parents=True, exist_ok=True)
    vocab = {"<|startoftext|>": 0, "<|endoftext|>": 1}
    for ch in "abcdefghijklmnopqrstuvwxyz0123456789":
        vocab[ch] = len(vocab)
        vocab[ch + "</w>"] = len(vocab)
    (root / "vocab.json").write_text(json.dumps(vocab), encoding="utf-8")
    (root / "merges.txt").write_text("#version: 0.2\n", encoding="utf-8")

    config = CLIPConfig(
        text_config={
            "vocab_size": len(vocab),
            "hidden_size": 32,
            "intermediate_size": 37,
            "num_hidden_layers": 2,
            "num_attention_heads": 4,
            "max_position_embeddings": 77,
            "bos_token_id": 0,
            "eos_token_id": 1,
        },
        vision_config={
            "hidden_size": 32,
            "intermediate_size": 37,
            "num_hidden_layers": 2,
            "num_attention_heads": 4,
            "image_size": 30,
            "patch_size": 15,
        },
        projection_dim=16,
    )
    torch.manual_seed(seed)
    CLIPModel(config).save_pretrained(root)
    CLIPTokenizer(str(root / "vocab.json"), str(root / "merges.txt")).save_pretrained(root)
    CLIPImageProcessor(
        size={"shortest_edge": 30}, crop_size={"height": 30, "width": 30}
    ).save_pretrained(root)
    return root
