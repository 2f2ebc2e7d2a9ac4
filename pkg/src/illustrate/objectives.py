"""Scoring functions for image selection.

Three families of scores drive the assignment engine:

* local similarity: sum of phrase-image probabilities over a text scope,
  additive over images and phrases (modular);
* concept coverage: how many distinct concepts of the scope are covered by
  at least one selected image, where an image covers a concept when some
  phrase both mentions the concept and clears the similarity threshold;
* redundancy: excess concept coverings beyond the first, per concept.

The global score is coverage minus redundancy; the joint score adds the
local similarity with a non-negative trade-off weight. Coverage is
submodular, negative redundancy is submodular, and the local sum is
modular, so every selection objective built here has diminishing returns
and the exact identity ``total coverings == coverage + redundancy`` holds.

All scoring runs off a :class:`SectionContext`, which precomputes, per
section: phrase windows, per-image similarity sums, and boolean
concept-by-image coverage tables for the section and each subsection.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .corpus import (
    Concept,
    Phrase,
    Section,
    Subsection,
    WindowConfig,
    contains_run,
    window_phrases,
)
from .errors import SchemaError, UnknownIdError
from .simstore import SimMatrix


class Mode(Enum):
    LOCAL = "local"
    GLOBAL = "global"
    JOINT = "joint"


class AllocScore(Enum):
    """How allocation scores a candidate subsection in joint mode."""

    SINGLE_IMAGE = "single_image"
    FULL_SET = "full_set"


@dataclass(frozen=True)
class ObjectiveConfig:
    """Threshold, trade-off, and mode knobs.

    ``tau`` fixes the coverage threshold; when None it is resolved per
    section as the ``tau_quantile`` quantile of that section's phrase-image
    probabilities (softmax scales shift with bank size, so a fixed default
    would not transfer between banks).
    """

    tau: float | None = None
    tau_quantile: float = 0.95
    beta: float = 1.0
    mode: Mode = Mode.JOINT
    alloc_score: AllocScore = AllocScore.SINGLE_IMAGE

    def __post_init__(self) -> None:
        if self.tau is not None and not (0.0 < self.tau < 1.0):
            raise SchemaError(f"tau must be in (0, 1), got {self.tau}")
        if not (0.0 < self.tau_quantile < 1.0):
            raise SchemaError(
                f"tau_quantile must be in (0, 1), got {self.tau_quantile}"
            )
        if self.beta < 0:
            raise SchemaError(f"beta must be >= 0, got {self.beta}")


# ---------------------------------------------------------------------------
# Array kernels
#
# A selection is a sequence of column indices into the image axis. Integer
# counts are exact in float64; local sums are accumulated in ascending
# index order so results never depend on pick order.
# ---------------------------------------------------------------------------


def _as_index_array(selection: Iterable[int]) -> np.ndarray:
    idx = np.fromiter(selection, dtype=np.int64)
    return np.sort(idx)


def coverage_value(cov: np.ndarray, selection: Iterable[int]) -> int:
    """Distinct concepts covered by at least one selected image."""
    idx = _as_index_array(selection)
    if idx.size == 0 or cov.shape[0] == 0:
        return 0
    return int(cov[:, idx].any(axis=1).sum())


def total_coverings(cov: np.ndarray, selection: Iterable[int]) -> int:
    idx = _as_index_array(selection)
    if idx.size == 0 or cov.shape[0] == 0:
        return 0
    return int(cov[:, idx].sum())


def redundancy_value(cov: np.ndarray, selection: Iterable[int]) -> int:
    """Coverings beyond the first per concept; total - coverage by identity."""
    idx = _as_index_array(selection)
    if idx.size == 0 or cov.shape[0] == 0:
        return 0
    per_concept = cov[:, idx].sum(axis=1)
    return int(per_concept.sum() - (per_concept > 0).sum())


def local_value(s_by_image: np.ndarray, selection: Iterable[int]) -> float:
    idx = _as_index_array(selection)
    if idx.size == 0:
        return 0.0
    return float(s_by_image[idx].sum())


def global_value(cov: np.ndarray, selection: Iterable[int]) -> int:
    idx = _as_index_array(selection)
    return coverage_value(cov, idx) - redundancy_value(cov, idx)


def joint_value(
    cov: np.ndarray,
    s_by_image: np.ndarray,
    selection: Iterable[int],
    beta: float,
) -> float:
    idx = _as_index_array(selection)
    return local_value(s_by_image, idx) + beta * global_value(cov, idx)


def covered_mask(cov: np.ndarray, selection: Iterable[int]) -> np.ndarray:
    """Boolean concept mask covered by the selection."""
    idx = _as_index_array(selection)
    if idx.size == 0 or cov.shape[0] == 0:
        return np.zeros(cov.shape[0], dtype=bool)
    return cov[:, idx].any(axis=1)


def marginal_gains(
    cov: np.ndarray,
    s_by_image: np.ndarray,
    covered: np.ndarray,
    *,
    sim_weight: float,
    new_weight: float,
    dup_weight: float,
) -> np.ndarray:
    """Marginal gain of adding each image, given currently covered concepts.

    gain(x) = sim_weight * s(x) + new_weight * |newly covered by x|
                                + dup_weight * |re-covered by x|

    Objectives map onto the weights as: local (1,0,0), coverage (0,1,0),
    redundancy (0,0,1), global (0,1,-1), joint (1,beta,-beta).
    """
    n_images = s_by_image.shape[0]
    gains = sim_weight * s_by_image if sim_weight else np.zeros(n_images)
    if (new_weight or dup_weight) and cov.shape[0] > 0:
        fresh = cov & ~covered[:, None]
        dup = cov & covered[:, None]
        gains = gains + new_weight * fresh.sum(axis=0) + dup_weight * dup.sum(axis=0)
    return np.asarray(gains, dtype=np.float64)


def objective_weights(kind: str, beta: float = 1.0) -> tuple[float, float, float]:
    """(sim_weight, new_weight, dup_weight) for a named objective."""
    table = {
        "local": (1.0, 0.0, 0.0),
        "coverage": (0.0, 1.0, 0.0),
        "redundancy": (0.0, 0.0, 1.0),
        "neg_redundancy": (0.0, 0.0, -1.0),
        "global": (0.0, 1.0, -1.0),
        "joint": (1.0, beta, -beta),
    }
    try:
        return table[kind]
    except KeyError:
        raise SchemaError(f"unknown objective {kind!r}") from None


# ---------------------------------------------------------------------------
# Section context
# ---------------------------------------------------------------------------


def _mention_matrix(concepts: Sequence[Concept], phrases: Sequence[Phrase]) -> np.ndarray:
    m = np.zeros((len(concepts), len(phrases)), dtype=bool)
    for ci, concept in enumerate(concepts):
        for pi, phrase in enumerate(phrases):
            if contains_run(phrase.tokens, concept.tokens):
                m[ci, pi] = True
    return m


def dedupe_concepts(subsections: Iterable[Subsection]) -> list[Concept]:
    """Union of subsection concepts, first occurrence wins per surface."""
    seen: set[tuple[str, ...]] = set()
    out: list[Concept] = []
    for sub in subsections:
        for concept in sub.concepts:
            if concept.tokens not in seen:
                seen.add(concept.tokens)
                out.append(concept)
    return out


@dataclass(frozen=True)
class SectionContext:
    """Precomputed scoring tables for one section against one matrix."""

    section: Section
    image_ids: tuple[str, ...]
    tau: float
    beta: float
    alloc_score: AllocScore
    phrases_by_subsection: tuple[tuple[Phrase, ...], ...]
    section_concepts: tuple[Concept, ...]
    # Similarity sums: per image over all section phrases, and per
    # (subsection, image).
    s_section: np.ndarray
    s_subsection: np.ndarray
    # Coverage tables: section concepts x images, and per subsection its
    # own concepts x images.
    cov_section: np.ndarray
    cov_subsection: tuple[np.ndarray, ...] = field(repr=False)
    _image_index: dict = field(repr=False, default_factory=dict)

    @property
    def n_images(self) -> int:
        return len(self.image_ids)

    def image_indices(self, image_ids: Iterable[str]) -> list[int]:
        out = []
        for image_id in image_ids:
            try:
                out.append(self._image_index[image_id])
            except KeyError:
                raise UnknownIdError(f"unknown image id {image_id!r}") from None
        return out

    def subsection_index(self, subsection_id: str) -> int:
        for i, sub in enumerate(self.section.subsections):
            if sub.id == subsection_id:
                return i
        raise UnknownIdError(
            f"subsection {subsection_id!r} not in section {self.section.id!r}"
        )

    # -- public scores over image id sets ------------------------------

    def score_local(self, image_ids: Iterable[str], subsection_id: str) -> float:
        """Similarity sum of the selection against one subsection's phrases."""
        ui = self.subsection_index(subsection_id)
        return local_value(self.s_subsection[ui], self.image_indices(image_ids))

    def score_local_section(self, image_ids: Iterable[str]) -> float:
        """Similarity sum of the selection against all section phrases."""
        return local_value(self.s_section, self.image_indices(image_ids))

    def _scope_cov(self, subsection_id: str | None) -> np.ndarray:
        if subsection_id is None:
            return self.cov_section
        return self.cov_subsection[self.subsection_index(subsection_id)]

    def cov(self, concept: Concept, image_id: str, subsection_id: str | None = None) -> int:
        """1 when the image covers the concept within the scope."""
        table = self._scope_cov(subsection_id)
        concepts = (
            self.section_concepts
            if subsection_id is None
            else self.section.subsections[self.subsection_index(subsection_id)].concepts
        )
        for ci, known in enumerate(concepts):
            if known.tokens == concept.tokens:
                j = self.image_indices([image_id])[0]
                return int(table[ci, j])
        raise UnknownIdError(f"concept {concept.surface!r} not in scope")

    def coverage(self, image_ids: Iterable[str], subsection_id: str | None = None) -> int:
        return coverage_value(self._scope_cov(subsection_id), self.image_indices(image_ids))

    def redundancy(self, image_ids: Iterable[str], subsection_id: str | None = None) -> int:
        return redundancy_value(self._scope_cov(subsection_id), self.image_indices(image_ids))

    def score_global(self, image_ids: Iterable[str], subsection_id: str | None = None) -> int:
        return global_value(self._scope_cov(subsection_id), self.image_indices(image_ids))

    def score_joint(self, image_ids: Iterable[str]) -> float:
        return joint_value(
            self.cov_section,
            self.s_section,
            self.image_indices(image_ids),
            self.beta,
        )


def resolve_tau(probs_block: np.ndarray, cfg: ObjectiveConfig) -> float:
    """Fixed threshold, or the configured quantile of the section's scores."""
    if cfg.tau is not None:
        return cfg.tau
    return float(np.quantile(probs_block, cfg.tau_quantile))


def build_section_context(
    section: Section,
    matrix: SimMatrix,
    window_cfg: WindowConfig = WindowConfig(),
    objective_cfg: ObjectiveConfig = ObjectiveConfig(),
) -> SectionContext:
    """Window every subsection, pull its rows, and build all score tables."""
    phrases_by_sub = [tuple(window_phrases(sub, window_cfg)) for sub in section.subsections]
    rows_by_sub = [
        np.stack([matrix.phrase_row(p.key) for p in phrases])
        for phrases in phrases_by_sub
    ]
    all_rows = np.concatenate(rows_by_sub, axis=0)
    tau = resolve_tau(all_rows, objective_cfg)

    s_subsection = np.stack([rows.sum(axis=0) for rows in rows_by_sub])
    s_section = s_subsection.sum(axis=0)

    thresholded = [rows >= tau for rows in rows_by_sub]

    section_concepts = dedupe_concepts(section.subsections)
    # Section-scope coverage: a concept is covered by an image when ANY
    # section phrase mentions it with similarity above threshold.
    n_images = matrix.n_images
    cov_section = np.zeros((len(section_concepts), n_images), dtype=bool)
    for phrases, passed in zip(phrases_by_sub, thresholded):
        mention_m = _mention_matrix(section_concepts, phrases)
        if mention_m.any():
            cov_section |= (mention_m.astype(np.int64) @ passed.astype(np.int64)) > 0

    cov_subsection = []
    for sub, phrases, passed in zip(section.subsections, phrases_by_sub, thresholded):
        mention_m = _mention_matrix(sub.concepts, phrases)
        table = (mention_m.astype(np.int64) @ passed.astype(np.int64)) > 0
        cov_subsection.append(table)

    return SectionContext(
        section=section,
        image_ids=matrix.image_ids,
        tau=tau,
        beta=objective_cfg.beta,
        alloc_score=objective_cfg.alloc_score,
        phrases_by_subsection=tuple(phrases_by_sub),
        section_concepts=tuple(section_concepts),
        s_section=s_section,
        s_subsection=s_subsection,
        cov_section=cov_section,
        cov_subsection=tuple(cov_subsection),
        _image_index={im: j for j, im in enumerate(matrix.image_ids)},
    )
