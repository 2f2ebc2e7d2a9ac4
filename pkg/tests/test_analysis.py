from __future__ import annotations

import json

import numpy as np
import pytest
from scipy import stats

from helpers import (
    corpus_doc,
    explicit_matrix,
    matrix_for,
    section_doc,
    small_corpus,
    subsection_doc,
    words,
)
from illustrate.analysis import (
    FEATURE_NAMES,
    analyze_corpus,
    concept_distribution,
    exclusivity_analysis,
    extract_features,
    fit_image_count_model,
    fit_ols,
    topk_concept_coverage,
)
from illustrate.assign import BudgetKind, BudgetPolicy
from illustrate.corpus import Split, parse_corpus
from illustrate.errors import NumericError, SchemaError, UnknownIdError
from illustrate.simstore import SimMatrix


class TestConceptDistribution:
    def test_small_corpus_hand_counts(self):
        # s1u1: "cell membrane" x2 + "transport" x1; s1u2: "mitochondria" x2
        # + "energy" x2; s2u1: "osmosis" x1.
        dist = concept_distribution(small_corpus())
        assert dist.mean_concepts_per_subsection == pytest.approx(5 / 3)
        assert dist.mean_mentions_per_concept == pytest.approx(8 / 5)
        assert dist.mean_subsections_per_concept == pytest.approx(1.0)
        assert dist.hist_concepts == {1: 1, 2: 2}
        assert dist.hist_mentions == {1: 2, 2: 3}
        assert dist.hist_subsections == {1: 5}
        assert not dist.degenerate

    def test_histograms_account_for_every_subsection_and_concept(self):
        dist = concept_distribution(small_corpus())
        assert sum(dist.hist_concepts.values()) == 3
        assert sum(dist.hist_mentions.values()) == 5
        assert sum(dist.hist_subsections.values()) == 5

    def test_concept_mentioned_only_in_sibling(self):
        # The concept never occurs in its own subsection but does in the
        # sibling: zero own-mentions, spread of one.
        doc = corpus_doc(
            [
                section_doc(
                    "s1",
                    [
                        subsection_doc(
                            "u1", "nothing here", concepts=[("k1", "glacier")]
                        ),
                        subsection_doc("u2", "the glacier retreats"),
                    ],
                )
            ]
        )
        dist = concept_distribution(parse_corpus(doc))
        assert dist.hist_mentions == {0: 1}
        assert dist.mean_mentions_per_concept == 0.0
        assert dist.hist_subsections == {1: 1}
        assert not dist.degenerate

    def test_no_concepts_anywhere_is_degenerate(self):
        doc = corpus_doc(
            [section_doc("s1", [subsection_doc("u1", "plain prose only")])]
        )
        dist = concept_distribution(parse_corpus(doc))
        assert dist.degenerate
        assert dist.mean_concepts_per_subsection == 0.0
        assert dist.mean_mentions_per_concept == 0.0
        assert dist.hist_concepts == {0: 1}
        assert dist.hist_mentions == {}


class TestExtractFeatures:
    def test_hand_counted_vector(self):
        corpus = small_corpus()
        section = next(corpus.sections())
        fv = extract_features(section.subsections[0], section)
        assert fv.concepts == 2
        assert fv.concept_mentions == 3
        assert fv.words == 10
        assert fv.paragraphs == 1
        assert fv.pct_sec_concepts == pytest.approx(50.0)
        assert fv.pct_sec_concept_mentions == pytest.approx(100 * 3 / 7)
        assert fv.pct_sec_words == pytest.approx(100 * 10 / 19)
        assert fv.pct_sec_paragraphs == pytest.approx(50.0)
        assert fv.position == 0.0
        assert (fv.subject_math, fv.subject_science, fv.subject_social) == (
            0,
            1,
            0,
        )

    def test_last_subsection_position_is_one(self):
        corpus = small_corpus()
        section = next(corpus.sections())
        fv = extract_features(section.subsections[1], section)
        assert fv.position == 1.0

    def test_single_subsection_section(self):
        corpus = small_corpus()
        section = list(corpus.sections())[1]
        fv = extract_features(section.subsections[0], section)
        assert fv.position == 0.0
        assert fv.pct_sec_concepts == 100.0
        assert fv.pct_sec_words == 100.0
        assert fv.pct_sec_paragraphs == 100.0

    def test_middle_of_three_is_half(self):
        doc = corpus_doc(
            [
                section_doc(
                    "s1",
                    [
                        subsection_doc("u1", words(5)),
                        subsection_doc("u2", words(5)),
                        subsection_doc("u3", words(5)),
                    ],
                )
            ]
        )
        corpus = parse_corpus(doc)
        section = next(corpus.sections())
        positions = [
            extract_features(sub, section).position
            for sub in section.subsections
        ]
        assert positions == [0.0, 0.5, 1.0]

    @pytest.mark.parametrize(
        "subject,one_hot",
        [
            ("math", (1, 0, 0)),
            ("science", (0, 1, 0)),
            ("social_science", (0, 0, 1)),
            ("business", (0, 0, 0)),
        ],
    )
    def test_subject_one_hot_business_reference(self, subject, one_hot):
        doc = corpus_doc(
            [section_doc("s1", [subsection_doc("u1", words(4))])],
            subject=subject,
        )
        corpus = parse_corpus(doc)
        section = next(corpus.sections())
        fv = extract_features(section.subsections[0], section)
        assert (fv.subject_math, fv.subject_science, fv.subject_social) == one_hot

    def test_foreign_subsection_rejected(self):
        corpus = small_corpus()
        sections = list(corpus.sections())
        with pytest.raises(SchemaError, match="not part of section"):
            extract_features(sections[0].subsections[0], sections[1])

    def test_as_row_follows_feature_name_order(self):
        corpus = small_corpus()
        section = next(corpus.sections())
        fv = extract_features(section.subsections[0], section)
        row = fv.as_row()
        assert len(row) == len(FEATURE_NAMES)
        assert row[FEATURE_NAMES.index("words")] == 10.0
        assert row[FEATURE_NAMES.index("subject_science")] == 1.0


class TestFitOls:
    def test_exact_line(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = 2.0 * X[:, 0] + 1.0
        result = fit_ols(X, y)
        assert result.names == ("x0", "intercept")
        np.testing.assert_allclose(result.coefficients, [2.0, 1.0], atol=1e-10)
        assert result.rss <= 1e-20
        assert result.standard_errors.max() <= 1e-9
        assert result.p_values.max() <= 1e-12
        assert result.pearson_r == pytest.approx(1.0)
        assert result.dof == 2
        assert result.n_rows == 4

    def test_planted_coefficients_recovered_within_three_se(self):
        rng = np.random.default_rng(13)
        n = 5000
        beta = np.array([1.5, -2.0, 0.0, 0.25, 3.0, -0.5])
        X = rng.normal(size=(n, beta.size))
        y = X @ beta + 0.7 + rng.normal(scale=0.1, size=n)
        result = fit_ols(X, y)
        truth = np.append(beta, 0.7)
        err = np.abs(result.coefficients - truth)
        assert (err <= 3.0 * result.standard_errors).all()
        assert result.pearson_r > 0.99
        # Noise variance should be recovered too: rss/dof estimates 0.01.
        assert result.rss / result.dof == pytest.approx(0.01, rel=0.1)

    def test_matches_independent_normal_equations(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(120, 4))
        y = rng.normal(size=120)
        result = fit_ols(X, y)
        Xa = np.hstack([X, np.ones((120, 1))])
        direct = np.linalg.solve(Xa.T @ Xa, Xa.T @ y)
        np.testing.assert_allclose(result.coefficients, direct, rtol=1e-8)

    def test_residuals_orthogonal_to_design(self):
        rng = np.random.default_rng(17)
        X = rng.normal(size=(200, 5))
        y = rng.normal(size=200)
        result = fit_ols(X, y)
        Xa = np.hstack([X, np.ones((200, 1))])
        residuals = y - Xa @ result.coefficients
        assert np.abs(Xa.T @ residuals).max() <= 1e-6

    def test_p_values_match_t_distribution(self):
        rng = np.random.default_rng(23)
        X = rng.normal(size=(60, 3))
        y = rng.normal(size=60)
        result = fit_ols(X, y)
        expected = 2.0 * stats.t.sf(np.abs(result.t_values), result.dof)
        np.testing.assert_allclose(result.p_values, expected, atol=1e-12)

    def test_duplicate_column_names_the_culprit(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=50)
        b = rng.normal(size=50)
        X = np.column_stack([a, b, a])
        with pytest.raises(NumericError, match="collinear") as exc_info:
            fit_ols(X, rng.normal(size=50), names=("left", "mid", "right"))
        named = str(exc_info.value).split("collinear columns: ", 1)[1]
        assert named in ("left", "right")

    def test_linear_combination_detected(self):
        rng = np.random.default_rng(4)
        a = rng.normal(size=40)
        b = rng.normal(size=40)
        X = np.column_stack([a, b, 2.0 * a - 3.0 * b])
        with pytest.raises(NumericError, match="rank deficient"):
            fit_ols(X, rng.normal(size=40))

    def test_without_intercept(self):
        X = np.array([[1.0], [2.0], [4.0], [8.0]])
        y = 3.0 * X[:, 0]
        result = fit_ols(X, y, names=("slope",), add_intercept=False)
        assert result.names == ("slope",)
        assert result.coefficient("slope") == pytest.approx(3.0)

    def test_too_few_rows(self):
        with pytest.raises(NumericError, match="more rows"):
            fit_ols(np.eye(3), np.zeros(3))

    def test_non_finite_rejected(self):
        X = np.array([[1.0], [np.nan], [2.0], [3.0]])
        with pytest.raises(NumericError, match="non-finite"):
            fit_ols(X, np.zeros(4))

    def test_shape_mismatch(self):
        with pytest.raises(SchemaError, match="expected"):
            fit_ols(np.zeros((4, 2)), np.zeros(5))
        with pytest.raises(SchemaError, match="2-d"):
            fit_ols(np.zeros(4), np.zeros(4))

    def test_name_count_mismatch(self):
        with pytest.raises(SchemaError, match="names"):
            fit_ols(np.zeros((5, 2)) + np.eye(5, 2), np.zeros(5), names=("only",))

    def test_constant_target_has_undefined_pearson(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(30, 2))
        result = fit_ols(X, np.ones(30))
        assert np.isnan(result.pearson_r)

    def test_named_accessors(self):
        X = np.array([[0.0], [1.0], [2.0], [5.0]])
        result = fit_ols(X, 2.0 * X[:, 0] + 1.0, names=("width",))
        assert result.coefficient("width") == pytest.approx(2.0)
        assert result.standard_error("intercept") >= 0.0
        with pytest.raises(ValueError):
            result.coefficient("height")


def _multi_subject_corpus():
    """Four books, one per subject, with gold counts driven by length.

    Word counts cycle through five values; one gold image per 15 words.
    Concept surfaces are planted into the text, the first one twice for
    alternating subsections so mention counts are not collinear with
    concept counts.
    """
    books = []
    serial = 0
    for bi, subject in enumerate(
        ["math", "science", "social_science", "business"]
    ):
        sections = []
        for si in range(3):
            subs = []
            for ui in range(3):
                n_words = 12 + 9 * ((bi + si + ui) % 5)
                tokens = [f"t{bi}{si}{ui}n{k}" for k in range(n_words)]
                concepts = []
                # The extra term varies the per-section concept total, so
                # the within-section percentage is not proportional to the
                # raw count.
                n_concepts = (ui + si) % 3 + (1 if (bi + si) % 2 == 0 else 0)
                for ci in range(n_concepts):
                    surface = f"term{bi}{si}{ui}c{ci}"
                    tokens[ci] = surface
                    if ci == 0 and ui % 2 == 0:
                        tokens[5] = surface
                    concepts.append((f"k{bi}{si}{ui}c{ci}", surface))
                n_gold = n_words // 15
                golds = [f"g{serial + j}" for j in range(n_gold)]
                serial += n_gold
                subs.append(
                    subsection_doc(
                        f"b{bi}s{si}u{ui}",
                        " ".join(tokens),
                        concepts=concepts,
                        gold_images=golds,
                    )
                )
            sections.append(section_doc(f"b{bi}s{si}", subs))
        books.append(
            {
                "id": f"bk{bi}",
                "title": f"Book {bi}",
                "subject": subject,
                "split": "train",
                "chapters": [
                    {"id": f"c{bi}", "title": "only", "sections": sections}
                ],
            }
        )
    return parse_corpus({"books": books})


class TestImageCountModel:
    def test_fits_multi_subject_corpus(self):
        model = fit_image_count_model(_multi_subject_corpus())
        assert model.result.names[-1] == "intercept"
        # Paragraph counts are constant in this corpus; everything else
        # varies, including the subject indicators.
        assert "paragraphs" in model.dropped_features
        assert "subject_math" not in model.dropped_features
        assert np.isfinite(model.result.coefficients).all()
        # Gold counts were derived from word counts, so the fit must find
        # a strongly predictive model.
        assert model.result.pearson_r > 0.9

    def test_predictor_matches_manual_dot_product(self):
        corpus = _multi_subject_corpus()
        model = fit_image_count_model(corpus)
        kept = [n for n in FEATURE_NAMES if n not in model.dropped_features]
        for section, sub in corpus.subsections():
            fv = extract_features(sub, section)
            row = np.array(
                [fv.as_row()[FEATURE_NAMES.index(n)] for n in kept]
            )
            manual = float(
                row @ model.result.coefficients[:-1]
                + model.result.coefficients[-1]
            )
            assert model.predictor(section, sub) == pytest.approx(manual)

    def test_predictor_plugs_into_budget_policy(self):
        corpus = _multi_subject_corpus()
        model = fit_image_count_model(corpus)
        policy = BudgetPolicy(
            kind=BudgetKind.PREDICTED, predictor=model.predictor
        )
        for section, sub in corpus.subsections():
            quota = policy.quota(section, sub)
            assert quota >= 0
            assert quota == max(
                0, int(np.floor(model.predictor(section, sub) + 0.5))
            )

    def test_single_subject_corpus_drops_subject_columns(self):
        # One book means constant subject indicators; they must be dropped
        # rather than tripping the rank check. The fit itself still fails
        # here because three subsections cannot support nine columns.
        with pytest.raises(NumericError, match="more rows"):
            fit_image_count_model(small_corpus())

    def test_empty_split_rejected(self):
        doc = corpus_doc(
            [section_doc("s1", [subsection_doc("u1", words(4))])],
            split="train",
        )
        with pytest.raises(SchemaError, match="no subsections"):
            fit_image_count_model(parse_corpus(doc, split=Split.TEST))


EXCL_BANK = ("img_a", "img_b", "img_c", "img_d")


def _exclusivity_corpus():
    """Three subsections in one section, one gold image each."""
    doc = corpus_doc(
        [
            section_doc(
                "s1",
                [
                    subsection_doc("u1", words(5), gold_images=["img_a"]),
                    subsection_doc("u2", words(5), gold_images=["img_b"]),
                    subsection_doc("u3", words(5), gold_images=["img_c"]),
                ],
            )
        ]
    )
    return parse_corpus(doc)


class TestExclusivity:
    def test_constructed_buckets(self):
        corpus = _exclusivity_corpus()
        # img_b peaks in u1 (before), img_a in u2 (after), img_c in its
        # own u3 (present).
        matrix = explicit_matrix(
            corpus,
            EXCL_BANK,
            {
                "u1:0:5": [-8.0, 8.0, -8.0, -8.0],
                "u2:0:5": [8.0, 0.0, 0.0, 0.0],
                "u3:0:5": [0.0, 0.0, 8.0, 0.0],
            },
        )
        report = exclusivity_analysis(corpus, matrix)
        assert report.overall == pytest.approx(
            {"before": 1 / 3, "present": 1 / 3, "after": 1 / 3}
        )
        assert report.counts == {"all": 3, "science": 3}
        assert report.by_subject["science"] == report.overall

    def test_proportions_sum_to_one(self):
        corpus = _exclusivity_corpus()
        matrix = matrix_for(corpus, EXCL_BANK, seed=11)
        report = exclusivity_analysis(corpus, matrix)
        for buckets in report.by_subject.values():
            assert sum(buckets.values()) == pytest.approx(1.0)

    def test_single_subsection_is_always_present(self):
        # With one subsection per section the pool never includes a
        # neighbor, no matter what the similarities say.
        doc = corpus_doc(
            [
                section_doc(
                    "s1",
                    [subsection_doc("u1", words(5), gold_images=["img_a"])],
                ),
                section_doc(
                    "s2",
                    [subsection_doc("v1", words(5), gold_images=["img_b"])],
                ),
            ]
        )
        corpus = parse_corpus(doc)
        matrix = explicit_matrix(
            corpus,
            EXCL_BANK,
            {"u1:0:5": [-9.0, 0.0, 0.0, 0.0], "v1:0:5": [9.0, 0.0, 0.0, 0.0]},
        )
        report = exclusivity_analysis(corpus, matrix)
        assert report.overall == {"before": 0.0, "present": 1.0, "after": 0.0}

    def test_subjects_tallied_separately(self):
        doc = {
            "books": [
                {
                    "id": "b1",
                    "title": "M",
                    "subject": "math",
                    "split": "train",
                    "chapters": [
                        {
                            "id": "c1",
                            "title": "one",
                            "sections": [
                                section_doc(
                                    "m1",
                                    [
                                        subsection_doc(
                                            "m1u1",
                                            words(6),
                                            gold_images=["img_a"],
                                        )
                                    ],
                                )
                            ],
                        }
                    ],
                },
                {
                    "id": "b2",
                    "title": "B",
                    "subject": "business",
                    "split": "train",
                    "chapters": [
                        {
                            "id": "c2",
                            "title": "one",
                            "sections": [
                                section_doc(
                                    "z1",
                                    [
                                        subsection_doc(
                                            "z1u1",
                                            words(6),
                                            gold_images=["img_b"],
                                        )
                                    ],
                                )
                            ],
                        }
                    ],
                },
            ]
        }
        corpus = parse_corpus(doc)
        matrix = matrix_for(corpus, EXCL_BANK, seed=2)
        report = exclusivity_analysis(corpus, matrix)
        assert report.counts == {"all": 2, "math": 1, "business": 1}
        assert set(report.by_subject) == {"all", "math", "business"}

    def test_gold_missing_from_matrix(self):
        corpus = _exclusivity_corpus()
        matrix = matrix_for(corpus, ("img_a", "img_b"), seed=0)
        with pytest.raises(UnknownIdError, match="img_c"):
            exclusivity_analysis(corpus, matrix)


TOPK_BANK = ("img_a", "img_b")


def _topk_corpus():
    """One 102-token subsection that windows into exactly two phrases.

    "alpha" sits at token 10 (first phrase only), "mid" at token 60
    (both phrases). The keys are t1:0:75 and t1:50:102.
    """
    tokens = [f"w{i}" for i in range(102)]
    tokens[10] = "alpha"
    tokens[60] = "mid"
    doc = corpus_doc(
        [
            section_doc(
                "s1",
                [
                    subsection_doc(
                        "t1",
                        " ".join(tokens),
                        concepts=[("c1", "alpha"), ("c2", "mid")],
                        gold_images=["img_a"],
                    )
                ],
            )
        ]
    )
    return parse_corpus(doc)


class TestTopkCoverage:
    def test_top_phrase_carries_both_concepts(self):
        corpus = _topk_corpus()
        matrix = explicit_matrix(
            corpus,
            TOPK_BANK,
            {"t1:0:75": [5.0, 0.0], "t1:50:102": [0.0, 0.0]},
        )
        cov = topk_concept_coverage(corpus, matrix, k=1)
        assert cov.mean_fraction == pytest.approx(1.0)
        assert cov.n_subsections == 1
        assert cov.n_skipped == 0

    def test_top_phrase_misses_one_concept(self):
        corpus = _topk_corpus()
        matrix = explicit_matrix(
            corpus,
            TOPK_BANK,
            {"t1:0:75": [0.0, 0.0], "t1:50:102": [5.0, 0.0]},
        )
        assert topk_concept_coverage(
            corpus, matrix, k=1
        ).mean_fraction == pytest.approx(0.5)
        assert topk_concept_coverage(
            corpus, matrix, k=2
        ).mean_fraction == pytest.approx(1.0)

    def test_ties_keep_document_order(self):
        corpus = _topk_corpus()
        matrix = explicit_matrix(corpus, TOPK_BANK, {})
        assert topk_concept_coverage(
            corpus, matrix, k=1
        ).mean_fraction == pytest.approx(1.0)

    def test_max_over_gold_images_selects_the_ranking(self):
        tokens = [f"w{i}" for i in range(102)]
        tokens[10] = "alpha"
        tokens[60] = "mid"
        doc = corpus_doc(
            [
                section_doc(
                    "s1",
                    [
                        subsection_doc(
                            "t1",
                            " ".join(tokens),
                            concepts=[("c1", "alpha"), ("c2", "mid")],
                            gold_images=["img_a", "img_b"],
                        )
                    ],
                )
            ]
        )
        corpus = parse_corpus(doc)
        # img_b dominates the first phrase, img_a the second, but img_b's
        # peak is sharper, so the max over golds ranks the first phrase on
        # top. It mentions both concepts.
        matrix = explicit_matrix(
            corpus,
            TOPK_BANK,
            {"t1:0:75": [0.0, 6.0], "t1:50:102": [3.0, 0.0]},
        )
        assert topk_concept_coverage(
            corpus, matrix, k=1
        ).mean_fraction == pytest.approx(1.0)

    def test_monotone_in_k(self):
        corpus = small_corpus()
        matrix = matrix_for(corpus, seed=21)
        fractions = [
            topk_concept_coverage(corpus, matrix, k).mean_fraction
            for k in (1, 2, 3, 5)
        ]
        assert fractions == sorted(fractions)

    def test_skips_subsections_without_gold_or_concepts(self):
        doc = corpus_doc(
            [
                section_doc(
                    "s1",
                    [
                        subsection_doc(
                            "u1",
                            "alpha prose",
                            concepts=[("c1", "alpha")],
                            gold_images=["img_a"],
                        ),
                        subsection_doc(
                            "u2", "more prose", concepts=[("c2", "beta")]
                        ),
                        subsection_doc("u3", words(4), gold_images=["img_b"]),
                    ],
                )
            ]
        )
        corpus = parse_corpus(doc)
        matrix = matrix_for(corpus, TOPK_BANK, seed=1)
        cov = topk_concept_coverage(corpus, matrix, k=1)
        assert cov.n_subsections == 1
        assert cov.n_skipped == 2
        assert cov.mean_fraction == pytest.approx(1.0)

    def test_mean_over_subsections(self):
        tokens_a = ["alpha"] + [f"a{i}" for i in range(4)]
        tokens_b = [f"b{i}" for i in range(5)]
        doc = corpus_doc(
            [
                section_doc(
                    "s1",
                    [
                        subsection_doc(
                            "u1",
                            " ".join(tokens_a),
                            concepts=[("c1", "alpha")],
                            gold_images=["img_a"],
                        ),
                        subsection_doc(
                            "u2",
                            " ".join(tokens_b),
                            concepts=[("c2", "gamma"), ("c3", "b0")],
                            gold_images=["img_b"],
                        ),
                    ],
                )
            ]
        )
        corpus = parse_corpus(doc)
        matrix = matrix_for(corpus, TOPK_BANK, seed=3)
        cov = topk_concept_coverage(corpus, matrix, k=1)
        # u1 mentions its only concept (fraction 1), u2 mentions one of
        # two ("gamma" never occurs), so the mean is 0.75.
        assert cov.mean_fraction == pytest.approx(0.75)

    def test_k_must_be_positive(self):
        corpus = small_corpus()
        matrix = matrix_for(corpus)
        with pytest.raises(SchemaError, match="k must be"):
            topk_concept_coverage(corpus, matrix, k=0)


class TestAnalyzeCorpus:
    def test_report_without_matrix(self):
        report = analyze_corpus(small_corpus())
        assert report["version"] == 1
        assert report["corpus"] == {
            "sections": 2,
            "subsections": 3,
            "gold_placements": 4,
        }
        dist = report["concept_distribution"]
        assert dist["mean_concepts_per_subsection"] == pytest.approx(5 / 3)
        assert dist["hist_concepts"] == {"1": 1, "2": 2}
        # Three subsections cannot support the full design, and the report
        # says so instead of failing.
        assert "error" in report["image_count_regression"]
        assert "exclusivity" not in report
        assert "topk_concept_coverage" not in report

    def test_report_with_matrix(self):
        corpus = small_corpus()
        report = analyze_corpus(
            corpus, matrix_for(corpus, seed=0, gold_boost=3.0), k_values=(1, 2)
        )
        assert [e["k"] for e in report["topk_concept_coverage"]] == [1, 2]
        assert set(report["exclusivity"]["by_subject"]) == {"all", "science"}
        json.dumps(report)

    def test_report_with_successful_regression(self):
        report = analyze_corpus(_multi_subject_corpus())
        reg = report["image_count_regression"]
        assert "error" not in reg
        assert "paragraphs" in reg["dropped_features"]
        names = [t["name"] for t in reg["terms"]]
        assert names[-1] == "intercept"
        json.dumps(report)
