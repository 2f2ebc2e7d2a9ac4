"""Shared builders for synthetic corpora and similarity matrices.

Kept as plain functions (not fixtures) so tests can parametrize them
freely; conftest wraps the common configurations.
"""

from __future__ import annotations

import numpy as np

from illustrate.corpus import Corpus, Split, WindowConfig, parse_corpus, window_phrases
from illustrate.simstore import SimMatrix


def subsection_doc(
    sub_id: str,
    text: str,
    concepts: list[tuple[str, str]] | None = None,
    gold_images: list[str] | None = None,
    paragraph_offsets: list[int] | None = None,
) -> dict:
    doc = {
        "id": sub_id,
        "text": text,
        "concepts": [
            {"id": cid, "surface": surface} for cid, surface in (concepts or [])
        ],
        "gold_images": list(gold_images or []),
    }
    if paragraph_offsets is not None:
        doc["paragraph_offsets"] = paragraph_offsets
    return doc


def corpus_doc(sections: list[dict], subject: str = "science", split: str = "train") -> dict:
    """One book, one chapter, caller-supplied sections."""
    return {
        "books": [
            {
                "id": "b1",
                "title": "Test Book",
                "subject": subject,
                "split": split,
                "chapters": [
                    {"id": "ch1", "title": "Chapter One", "sections": sections}
                ],
            }
        ]
    }


def section_doc(section_id: str, subsections: list[dict], subject: str | None = None) -> dict:
    doc = {"id": section_id, "subsections": subsections}
    if subject is not None:
        doc["subject"] = subject
    return doc


def words(n: int, prefix: str = "w") -> str:
    return " ".join(f"{prefix}{i}" for i in range(n))


def small_corpus_doc() -> dict:
    """Raw document for :func:`small_corpus`, for tests that write it out."""
    return corpus_doc(
        [
            section_doc(
                "s1",
                [
                    subsection_doc(
                        "s1u1",
                        "the cell membrane regulates transport across the cell membrane boundary",
                        concepts=[("k1", "cell membrane"), ("k2", "transport")],
                        gold_images=["img_a"],
                    ),
                    subsection_doc(
                        "s1u2",
                        "mitochondria produce energy and mitochondria need oxygen for energy",
                        concepts=[("k3", "mitochondria"), ("k4", "energy")],
                        gold_images=["img_b", "img_c"],
                    ),
                ],
            ),
            section_doc(
                "s2",
                [
                    subsection_doc(
                        "s2u1",
                        "osmosis moves water across membranes by diffusion gradients",
                        concepts=[("k5", "osmosis")],
                        gold_images=["img_d"],
                    ),
                ],
            ),
        ]
    )


def small_corpus() -> Corpus:
    """Two sections; concepts embedded in the text; golds from a 4-image bank.

    Token counts stay below one window so each subsection is one phrase,
    which keeps hand computations feasible.
    """
    return parse_corpus(small_corpus_doc())


BANK_IDS = ("img_a", "img_b", "img_c", "img_d")


def matrix_for(
    corpus: Corpus,
    image_ids: tuple[str, ...] = BANK_IDS,
    seed: int = 0,
    gold_boost: float = 0.0,
    window_cfg: WindowConfig = WindowConfig(),
) -> SimMatrix:
    """Random-logit matrix over every phrase of the corpus.

    gold_boost is added to the logits pairing a subsection's phrases with
    its own gold images, which makes retrieval-oriented tests
    non-vacuous.
    """
    rng = np.random.default_rng(seed)
    phrase_keys: list[str] = []
    boosts: list[np.ndarray] = []
    col = {image_id: j for j, image_id in enumerate(image_ids)}
    for _, sub in corpus.subsections():
        for phrase in window_phrases(sub, window_cfg):
            phrase_keys.append(phrase.key)
            row = np.zeros(len(image_ids), dtype=np.float32)
            for gold in sub.gold_images:
                if gold in col:
                    row[col[gold]] = gold_boost
            boosts.append(row)
    logits = rng.normal(size=(len(phrase_keys), len(image_ids))).astype(np.float32)
    logits += np.stack(boosts)
    return SimMatrix(phrase_keys, list(image_ids), logits)


def explicit_matrix(
    corpus: Corpus,
    image_ids: tuple[str, ...],
    rows: dict[str, list[float]],
    window_cfg: WindowConfig = WindowConfig(),
) -> SimMatrix:
    """Matrix with hand-chosen logits per phrase key; missing keys get 0."""
    phrase_keys = [
        p.key
        for _, sub in corpus.subsections()
        for p in window_phrases(sub, window_cfg)
    ]
    logits = np.zeros((len(phrase_keys), len(image_ids)), dtype=np.float32)
    for i, key in enumerate(phrase_keys):
        if key in rows:
            logits[i] = np.asarray(rows[key], dtype=np.float32)
    return SimMatrix(phrase_keys, list(image_ids), logits)
