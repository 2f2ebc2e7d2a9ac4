"""Corpus statistics, the image-count regression, and similarity probes.

Four questions about a parsed corpus, answerable without any model:

* how concepts distribute over subsections (counts, mention frequency,
  spread across a section);
* whether surface features of a subsection predict how many images it
  deserves (ordinary least squares with per-feature inference);
* whether a gold image is tied exclusively to its own subsection, or its
  best-matching phrase lives in a neighbor;
* how much of a subsection's concept list is already mentioned in the few
  phrases most similar to its gold images.

The last two need a phrase-image similarity matrix; the first two do not.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.linalg import qr
from scipy.special import stdtr

from .corpus import (
    Corpus,
    Section,
    Subject,
    Subsection,
    WindowConfig,
    contains_run,
    count_runs,
    window_phrases,
)
from .errors import NumericError, SchemaError
from .objectives import dedupe_concepts
from .simstore import SimMatrix

# ---------------------------------------------------------------------------
# Concept distribution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConceptDistribution:
    """Corpus-wide concept statistics with integer-bucketed histograms."""

    mean_concepts_per_subsection: float
    mean_mentions_per_concept: float
    mean_subsections_per_concept: float
    hist_concepts: dict[int, int]
    hist_mentions: dict[int, int]
    hist_subsections: dict[int, int]
    degenerate: bool


def concept_distribution(corpus: Corpus) -> ConceptDistribution:
    """Mean concepts per subsection, text mentions per concept within its
    subsection, and subsections per section-level concept.

    Mentions are counted as (possibly overlapping) token runs of the
    normalized concept surface in the subsection's own tokens. The spread
    statistic deduplicates a section's concepts by surface, then counts
    in how many of its subsections each one is mentioned.
    """
    concepts_counts: list[int] = []
    mention_counts: list[int] = []
    spread_counts: list[int] = []
    for section in corpus.sections():
        for sub in section.subsections:
            concepts_counts.append(len(sub.concepts))
            for concept in sub.concepts:
                mention_counts.append(count_runs(sub.tokens, concept.tokens))
        for concept in dedupe_concepts(section.subsections):
            spread = sum(
                1
                for sub in section.subsections
                if contains_run(sub.tokens, concept.tokens)
            )
            spread_counts.append(spread)

    def mean(xs: list[int]) -> float:
        return float(np.mean(xs)) if xs else 0.0

    return ConceptDistribution(
        mean_concepts_per_subsection=mean(concepts_counts),
        mean_mentions_per_concept=mean(mention_counts),
        mean_subsections_per_concept=mean(spread_counts),
        hist_concepts=dict(sorted(Counter(concepts_counts).items())),
        hist_mentions=dict(sorted(Counter(mention_counts).items())),
        hist_subsections=dict(sorted(Counter(spread_counts).items())),
        degenerate=not mention_counts,
    )


# ---------------------------------------------------------------------------
# Features and regression
# ---------------------------------------------------------------------------

FEATURE_NAMES = (
    "concepts",
    "concept_mentions",
    "words",
    "paragraphs",
    "pct_sec_concepts",
    "pct_sec_concept_mentions",
    "pct_sec_words",
    "pct_sec_paragraphs",
    "position",
    "subject_math",
    "subject_science",
    "subject_social",
)


@dataclass(frozen=True)
class FeatureVector:
    """Per-subsection predictors for the image-count regression.

    Percentages are of the subsection's share within its section; subject
    is one-hot with business as the reference level.
    """

    concepts: int
    concept_mentions: int
    words: int
    paragraphs: int
    pct_sec_concepts: float
    pct_sec_concept_mentions: float
    pct_sec_words: float
    pct_sec_paragraphs: float
    position: float
    subject_math: int
    subject_science: int
    subject_social: int

    def as_row(self) -> tuple[float, ...]:
        return tuple(float(getattr(self, name)) for name in FEATURE_NAMES)


def _pct(part: float, whole: float) -> float:
    return 100.0 * part / whole if whole else 0.0


def _mention_total(sub: Subsection) -> int:
    return sum(count_runs(sub.tokens, c.tokens) for c in sub.concepts)


def extract_features(sub: Subsection, section: Section) -> FeatureVector:
    subs = section.subsections
    try:
        ui = subs.index(sub)
    except ValueError:
        raise SchemaError(
            f"subsection {sub.id!r} is not part of section {section.id!r}"
        ) from None
    sec_concepts = len(dedupe_concepts(subs))
    sec_mentions = sum(_mention_total(u) for u in subs)
    sec_words = sum(len(u.tokens) for u in subs)
    sec_paragraphs = sum(len(u.paragraph_offsets) for u in subs)
    unique_here = len({c.tokens for c in sub.concepts})
    return FeatureVector(
        concepts=len(sub.concepts),
        concept_mentions=_mention_total(sub),
        words=len(sub.tokens),
        paragraphs=len(sub.paragraph_offsets),
        pct_sec_concepts=_pct(unique_here, sec_concepts),
        pct_sec_concept_mentions=_pct(_mention_total(sub), sec_mentions),
        pct_sec_words=_pct(len(sub.tokens), sec_words),
        pct_sec_paragraphs=_pct(len(sub.paragraph_offsets), sec_paragraphs),
        position=ui / (len(subs) - 1) if len(subs) > 1 else 0.0,
        subject_math=int(section.subject is Subject.MATH),
        subject_science=int(section.subject is Subject.SCIENCE),
        subject_social=int(section.subject is Subject.SOCIAL_SCIENCE),
    )


@dataclass(frozen=True, eq=False)
class RegressionResult:
    names: tuple[str, ...]
    coefficients: np.ndarray
    standard_errors: np.ndarray
    t_values: np.ndarray
    p_values: np.ndarray
    dof: int
    rss: float
    pearson_r: float
    n_rows: int

    def coefficient(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])

    def standard_error(self, name: str) -> float:
        return float(self.standard_errors[self.names.index(name)])


def fit_ols(
    X: np.ndarray,
    y: np.ndarray,
    names: Sequence[str] | None = None,
    add_intercept: bool = True,
) -> RegressionResult:
    """Least squares with standard errors and two-sided t-test p-values.

    The solve goes through an SVD-backed least squares; rank deficiency
    is detected first by QR with column pivoting so the error can name
    the offending columns. Perfect fits are legal: they produce zero
    standard errors and p-values of exactly zero for nonzero
    coefficients.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise SchemaError("X must be 2-d")
    if y.shape != (X.shape[0],):
        raise SchemaError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise NumericError("non-finite values in regression inputs")
    if names is None:
        names = tuple(f"x{i}" for i in range(X.shape[1]))
    names = tuple(names)
    if len(names) != X.shape[1]:
        raise SchemaError(
            f"{len(names)} names for {X.shape[1]} feature columns"
        )
    if add_intercept:
        X = np.hstack([X, np.ones((X.shape[0], 1))])
        names = names + ("intercept",)
    n, p = X.shape
    if n <= p:
        raise NumericError(
            f"need more rows than columns for inference: {n} rows, {p} columns"
        )

    _, r_diag, pivots = qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r_diag))
    tol = diag.max() * max(n, p) * np.finfo(np.float64).eps if diag.size else 0.0
    rank = int((diag > tol).sum())
    if rank < p:
        collinear = sorted(names[j] for j in pivots[rank:])
        raise NumericError(
            "design matrix is rank deficient; collinear columns: "
            + ", ".join(collinear)
        )

    coef, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    fitted = X @ coef
    residuals = y - fitted
    rss = float(residuals @ residuals)
    dof = n - p
    s2 = rss / dof
    xtx_inv = np.linalg.inv(X.T @ X)
    se = np.sqrt(np.clip(s2 * np.diag(xtx_inv), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = coef / se
    p_values = 2.0 * stdtr(dof, -np.abs(t))

    if np.std(fitted) > 0 and np.std(y) > 0:
        pearson = float(np.corrcoef(fitted, y)[0, 1])
    else:
        pearson = float("nan")

    return RegressionResult(
        names=names,
        coefficients=coef,
        standard_errors=se,
        t_values=t,
        p_values=np.asarray(p_values, dtype=np.float64),
        dof=dof,
        rss=rss,
        pearson_r=pearson,
        n_rows=n,
    )


@dataclass(frozen=True, eq=False)
class ImageCountModel:
    """Fitted image-count regression plus a per-subsection predictor."""

    result: RegressionResult
    predictor: Callable[[Section, Subsection], float]
    dropped_features: tuple[str, ...]


def fit_image_count_model(corpus: Corpus) -> ImageCountModel:
    """Fit gold image counts on subsection features.

    Constant feature columns (a single-subject corpus makes every subject
    indicator constant, for instance) carry no information and would be
    collinear with the intercept, so they are dropped up front and
    reported rather than raising the rank-deficiency error.
    """
    rows = []
    y = []
    for section, sub in corpus.subsections():
        rows.append(extract_features(sub, section).as_row())
        y.append(len(sub.gold_images))
    if not rows:
        raise SchemaError("corpus has no subsections to fit on")
    X = np.array(rows, dtype=np.float64)
    keep = [j for j in range(X.shape[1]) if np.ptp(X[:, j]) > 0]
    if not keep:
        raise NumericError("every feature is constant; nothing to fit")
    dropped = tuple(
        FEATURE_NAMES[j] for j in range(X.shape[1]) if j not in set(keep)
    )
    kept_names = tuple(FEATURE_NAMES[j] for j in keep)
    result = fit_ols(X[:, keep], np.array(y, dtype=np.float64), kept_names)

    def predictor(section: Section, sub: Subsection) -> float:
        row = np.array(extract_features(sub, section).as_row())[keep]
        return float(row @ result.coefficients[:-1] + result.coefficients[-1])

    return ImageCountModel(
        result=result, predictor=predictor, dropped_features=dropped
    )


# ---------------------------------------------------------------------------
# Similarity-dependent probes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExclusivityReport:
    """Where each gold image's best phrase lives, tallied by subject."""

    by_subject: dict[str, dict[str, float]]
    counts: dict[str, int]

    @property
    def overall(self) -> dict[str, float]:
        return self.by_subject["all"]


def exclusivity_analysis(
    corpus: Corpus,
    matrix: SimMatrix,
    window_cfg: WindowConfig = WindowConfig(),
) -> ExclusivityReport:
    """For every gold image, find its best phrase among the previous,
    own, and next subsection's phrases (one pooled argmax) and tally the
    winning bucket. Boundary subsections simply lack one neighbor."""
    tallies: dict[str, Counter] = {"all": Counter()}
    counts: Counter = Counter()
    for section in corpus.sections():
        subs = section.subsections
        phrase_lists = [window_phrases(sub, window_cfg) for sub in subs]
        for ui, sub in enumerate(subs):
            pool: list[tuple[str, str]] = []
            if ui > 0:
                pool += [("before", p.key) for p in phrase_lists[ui - 1]]
            pool += [("present", p.key) for p in phrase_lists[ui]]
            if ui + 1 < len(subs):
                pool += [("after", p.key) for p in phrase_lists[ui + 1]]
            for gold_id in sub.gold_images:
                best_bucket = None
                best_sim = -np.inf
                for bucket, phrase_key in pool:
                    sim = matrix.sim(gold_id, phrase_key)
                    if sim > best_sim:
                        best_sim = sim
                        best_bucket = bucket
                assert best_bucket is not None
                subject = section.subject.value
                tallies.setdefault(subject, Counter())[best_bucket] += 1
                tallies["all"][best_bucket] += 1
                counts[subject] += 1
                counts["all"] += 1

    by_subject = {}
    for subject, tally in tallies.items():
        total = counts[subject]
        by_subject[subject] = {
            bucket: tally.get(bucket, 0) / total if total else 0.0
            for bucket in ("before", "present", "after")
        }
    return ExclusivityReport(by_subject=by_subject, counts=dict(counts))


@dataclass(frozen=True)
class TopkCoverage:
    k: int
    mean_fraction: float
    n_subsections: int
    n_skipped: int


def topk_concept_coverage(
    corpus: Corpus,
    matrix: SimMatrix,
    k: int,
    window_cfg: WindowConfig = WindowConfig(),
) -> TopkCoverage:
    """Average fraction of a subsection's concepts mentioned within its
    k phrases most similar to any of its gold images.

    Subsections without gold images or concepts are skipped and counted.
    Phrases are ranked by their max similarity over the subsection's gold
    images; ties keep document order.
    """
    if k < 1:
        raise SchemaError(f"k must be >= 1, got {k}")
    fractions = []
    skipped = 0
    for _, sub in corpus.subsections():
        if not sub.gold_images or not sub.concepts:
            skipped += 1
            continue
        phrases = window_phrases(sub, window_cfg)
        scores = np.array(
            [
                max(matrix.sim(g, p.key) for g in sub.gold_images)
                for p in phrases
            ]
        )
        order = np.lexsort((np.arange(len(phrases)), -scores))
        top = [phrases[i] for i in order[:k]]
        mentioned = sum(
            1
            for concept in sub.concepts
            if any(contains_run(p.tokens, concept.tokens) for p in top)
        )
        fractions.append(mentioned / len(sub.concepts))
    return TopkCoverage(
        k=k,
        mean_fraction=float(np.mean(fractions)) if fractions else 0.0,
        n_subsections=len(fractions),
        n_skipped=skipped,
    )


# ---------------------------------------------------------------------------
# Report assembly
# ---------------------------------------------------------------------------


def _finite_or_none(x: float) -> float | None:
    return float(x) if np.isfinite(x) else None


def regression_to_dict(result: RegressionResult) -> dict:
    return {
        "n_rows": result.n_rows,
        "dof": result.dof,
        "rss": result.rss,
        "pearson_r": _finite_or_none(result.pearson_r),
        "terms": [
            {
                "name": name,
                "coefficient": float(result.coefficients[i]),
                "standard_error": float(result.standard_errors[i]),
                "t_value": _finite_or_none(result.t_values[i]),
                "p_value": _finite_or_none(result.p_values[i]),
            }
            for i, name in enumerate(result.names)
        ],
    }


def analyze_corpus(
    corpus: Corpus,
    matrix: SimMatrix | None = None,
    k_values: Iterable[int] = (1, 2, 3, 5, 10),
    window_cfg: WindowConfig = WindowConfig(),
) -> dict:
    """The full report document: distribution and regression always,
    similarity-dependent probes only when a matrix is supplied."""
    dist = concept_distribution(corpus)
    n_sections, n_subsections, n_gold = corpus.counts()
    report: dict = {
        "version": 1,
        "corpus": {
            "sections": n_sections,
            "subsections": n_subsections,
            "gold_placements": n_gold,
        },
        "concept_distribution": {
            "mean_concepts_per_subsection": dist.mean_concepts_per_subsection,
            "mean_mentions_per_concept": dist.mean_mentions_per_concept,
            "mean_subsections_per_concept": dist.mean_subsections_per_concept,
            "hist_concepts": {str(k): v for k, v in dist.hist_concepts.items()},
            "hist_mentions": {str(k): v for k, v in dist.hist_mentions.items()},
            "hist_subsections": {
                str(k): v for k, v in dist.hist_subsections.items()
            },
            "degenerate": dist.degenerate,
        },
    }
    try:
        model = fit_image_count_model(corpus)
        entry = regression_to_dict(model.result)
        entry["dropped_features"] = list(model.dropped_features)
        report["image_count_regression"] = entry
    except (NumericError, SchemaError) as exc:
        report["image_count_regression"] = {"error": str(exc)}
    if matrix is not None:
        excl = exclusivity_analysis(corpus, matrix, window_cfg)
        report["exclusivity"] = {
            "by_subject": excl.by_subject,
            "counts": excl.counts,
        }
        report["topk_concept_coverage"] = [
            {
                "k": cov.k,
                "mean_fraction": cov.mean_fraction,
                "subsections": cov.n_subsections,
                "skipped": cov.n_skipped,
            }
            for cov in (
                topk_concept_coverage(corpus, matrix, k, window_cfg)
                for k in k_values
            )
        ]
    return report
