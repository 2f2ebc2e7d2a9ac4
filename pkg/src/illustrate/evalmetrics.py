"""Retrieval evaluation of a similarity matrix against gold placements.

Each subsection ranks the whole image bank by aggregated relevance and
is scored against its gold images: precision and recall at fixed cutoffs,
precision at R (R = number of golds, where precision and recall coincide),
and the mean 1-based rank of the golds. Macro averages run over the
subsections that have at least one gold image; the rest are skipped and
counted. Reports scale precision and recall by 100.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, Subsection, WindowConfig
from .errors import EmptyInputError, UnknownIdError
from .simstore import Aggregate, SimMatrix, aggregate_relevance

DEFAULT_CUTOFFS = (1, 5, 20, 100)


def rank_images(
    sub: Subsection,
    matrix: SimMatrix,
    window_cfg: WindowConfig = WindowConfig(),
    agg: Aggregate = Aggregate.MEAN,
) -> tuple[str, ...]:
    """Bank image ids by descending aggregated relevance, ties by id.

    The tie rule makes the order a strict total order, so shuffling the
    matrix's column order cannot change the result.
    """
    relevance = aggregate_relevance(sub, matrix, window_cfg, agg)
    ids = np.array(matrix.image_ids)
    order = np.lexsort((ids, -relevance))
    return tuple(str(ids[i]) for i in order)


def precision_recall_at(
    ranking: tuple[str, ...] | list[str],
    gold: set[str] | frozenset[str],
    k: int,
) -> tuple[float, float]:
    """Literal fractions: hits/K and hits/|gold|.

    K beyond the bank size just means the top-K is the whole ranking;
    precision still divides by K.
    """
    if k < 1:
        raise EmptyInputError(f"cutoff must be >= 1, got {k}")
    if not gold:
        raise EmptyInputError("gold set is empty")
    hits = sum(1 for image_id in ranking[:k] if image_id in gold)
    return hits / k, hits / len(gold)


def mean_gold_rank(
    ranking: tuple[str, ...] | list[str],
    gold: set[str] | frozenset[str],
) -> float:
    """Mean 1-based position of the gold images in the ranking."""
    if not gold:
        raise EmptyInputError("gold set is empty")
    positions = {image_id: i + 1 for i, image_id in enumerate(ranking)}
    ranks = []
    for image_id in sorted(gold):
        if image_id not in positions:
            raise UnknownIdError(f"gold image {image_id!r} not in ranking")
        ranks.append(positions[image_id])
    return float(np.mean(ranks))


@dataclass(frozen=True)
class SubsectionEval:
    subsection_id: str
    n_gold: int
    precision_at: dict[int, float]
    recall_at: dict[int, float]
    precision_at_r: float
    mean_gold_rank: float


@dataclass(frozen=True)
class EvalReport:
    bank_size: int
    cutoffs: tuple[int, ...]
    per_subsection: tuple[SubsectionEval, ...]
    n_skipped: int

    @property
    def n_evaluated(self) -> int:
        return len(self.per_subsection)

    def macro(self) -> dict[str, float]:
        """Unweighted means over evaluated subsections."""
        if not self.per_subsection:
            return {}
        out: dict[str, float] = {}
        for k in self.cutoffs:
            out[f"precision@{k}"] = float(
                np.mean([s.precision_at[k] for s in self.per_subsection])
            )
            out[f"recall@{k}"] = float(
                np.mean([s.recall_at[k] for s in self.per_subsection])
            )
        out["precision@R"] = float(
            np.mean([s.precision_at_r for s in self.per_subsection])
        )
        out["mean_gold_rank"] = float(
            np.mean([s.mean_gold_rank for s in self.per_subsection])
        )
        return out


def evaluate_subsection(
    sub: Subsection,
    matrix: SimMatrix,
    cutoffs: tuple[int, ...] = DEFAULT_CUTOFFS,
    window_cfg: WindowConfig = WindowConfig(),
) -> SubsectionEval:
    if not sub.gold_images:
        raise EmptyInputError(f"subsection {sub.id!r} has no gold images")
    gold = frozenset(sub.gold_images)
    missing = sorted(g for g in gold if g not in matrix.image_ids)
    if missing:
        raise UnknownIdError(
            f"gold images absent from the bank: {', '.join(missing)}"
        )
    ranking = rank_images(sub, matrix, window_cfg)
    precision_at = {}
    recall_at = {}
    for k in cutoffs:
        p, r = precision_recall_at(ranking, gold, k)
        precision_at[k] = p
        recall_at[k] = r
    p_at_r, _ = precision_recall_at(ranking, gold, len(gold))
    return SubsectionEval(
        subsection_id=sub.id,
        n_gold=len(gold),
        precision_at=precision_at,
        recall_at=recall_at,
        precision_at_r=p_at_r,
        mean_gold_rank=mean_gold_rank(ranking, gold),
    )


def evaluate(
    corpus: Corpus,
    matrix: SimMatrix,
    cutoffs: tuple[int, ...] = DEFAULT_CUTOFFS,
    window_cfg: WindowConfig = WindowConfig(),
) -> EvalReport:
    """Macro evaluation over every subsection that has gold images."""
    per_sub = []
    skipped = 0
    for _, sub in corpus.subsections():
        if not sub.gold_images:
            skipped += 1
            continue
        per_sub.append(evaluate_subsection(sub, matrix, cutoffs, window_cfg))
    return EvalReport(
        bank_size=matrix.n_images,
        cutoffs=tuple(cutoffs),
        per_subsection=tuple(per_sub),
        n_skipped=skipped,
    )


def report_to_dict(report: EvalReport, scale: float = 100.0) -> dict:
    """JSON document mirroring the cutoff-table layout, values x100."""
    macro = report.macro()
    scaled = {
        key: (value * scale if not key.startswith("mean_gold") else value)
        for key, value in macro.items()
    }
    return {
        "version": 1,
        "bank_size": report.bank_size,
        "averaging": "macro",
        "scale": scale,
        "evaluated_subsections": report.n_evaluated,
        "skipped_subsections": report.n_skipped,
        "macro": scaled,
        "per_subsection": [
            {
                "subsection_id": s.subsection_id,
                "n_gold": s.n_gold,
                "precision_at": {
                    str(k): v * scale for k, v in s.precision_at.items()
                },
                "recall_at": {str(k): v * scale for k, v in s.recall_at.items()},
                "precision_at_r": s.precision_at_r * scale,
                "mean_gold_rank": s.mean_gold_rank,
            }
            for s in report.per_subsection
        ],
    }
