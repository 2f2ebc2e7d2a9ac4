from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from helpers import (
    corpus_doc,
    read_simm,
    shape_image,
    subsection_doc,
    write_corpus,
)
from illustrate_embed.errors import JobError
from illustrate_embed.job import EmbeddingJob, embed_and_export


@pytest.fixture()
def workdir(tmp_path):
    long_text = " ".join(f"tok{i}" for i in range(102))
    corpus = write_corpus(
        tmp_path / "corpus.json",
        corpus_doc(
            [
                subsection_doc("u1", "a red circle and a blue square"),
                subsection_doc("u2", long_text),
            ]
        ),
    )
    bank = tmp_path / "bank"
    bank.mkdir()
    shape_image("red", "circle").save(bank / "img_red.png")
    shape_image("blue", "square").save(bank / "img_blue.png")
    shape_image("green", "triangle").save(bank / "img_green.png")
    return tmp_path, corpus, bank


def _job(corpus: Path, bank: Path, out: Path, **kw) -> EmbeddingJob:
    return EmbeddingJob(corpus=corpus, images=bank, output=out, **kw)


class TestHappyPath:
    def test_report_and_file_contents(self, workdir):
        tmp, corpus, bank = workdir
        out = tmp / "sim.simm"
        report = embed_and_export(_job(corpus, bank, out))
        assert report.n_phrases == 3  # u1 once, u2 twice
        assert report.n_images == 3
        assert report.skipped == ()
        assert report.model == "palette"
        phrase_ids, image_ids, logits = read_simm(out)
        assert phrase_ids == ["u1:0:7", "u2:0:75", "u2:50:102"]
        assert image_ids == ["img_blue", "img_green", "img_red"]
        assert logits.shape == (3, 3)
        assert logits.dtype == np.float32
        # u1 mentions red circle and blue square, not the green triangle.
        by_image = dict(zip(image_ids, logits[0]))
        assert by_image["img_red"] > by_image["img_green"]
        assert by_image["img_blue"] > by_image["img_green"]

    def test_custom_window_changes_phrase_ids(self, workdir):
        tmp, corpus, bank = workdir
        out = tmp / "sim.simm"
        embed_and_export(
            _job(corpus, bank, out, window=4, overlap=Fraction(1, 2))
        )
        phrase_ids, _, _ = read_simm(out)
        assert phrase_ids[:3] == ["u1:0:4", "u1:2:6", "u1:4:7"]

    def test_deterministic_bytes(self, workdir):
        tmp, corpus, bank = workdir
        a, b = tmp / "a.simm", tmp / "b.simm"
        embed_and_export(_job(corpus, bank, a))
        embed_and_export(_job(corpus, bank, b))
        assert a.read_bytes() == b.read_bytes()

    def test_batch_size_invariance(self, workdir):
        tmp, corpus, bank = workdir
        a, b = tmp / "a.simm", tmp / "b.simm"
        embed_and_export(_job(corpus, bank, a, batch_size=2))
        embed_and_export(_job(corpus, bank, b, batch_size=64))
        _, _, la = read_simm(a)
        _, _, lb = read_simm(b)
        assert np.abs(la - lb).max() <= 1e-5
        assert np.array_equal(la, lb)  # the palette backend is exact

    def test_duplicate_images_give_identical_columns(self, workdir):
        tmp, corpus, bank = workdir
        (bank / "img_copy.png").write_bytes((bank / "img_red.png").read_bytes())
        out = tmp / "sim.simm"
        embed_and_export(_job(corpus, bank, out))
        _, image_ids, logits = read_simm(out)
        copy_col = logits[:, image_ids.index("img_copy")]
        red_col = logits[:, image_ids.index("img_red")]
        assert np.abs(copy_col - red_col).max() <= 1e-6

    def test_manifest_source_with_captions_ignored(self, workdir):
        tmp, corpus, bank = workdir
        manifest = tmp / "bank.json"
        manifest.write_text(
            json.dumps(
                {
                    "images": [
                        {
                            "id": "only",
                            "uri": str(bank / "img_red.png"),
                            "source": "openstax",
                            "caption": "a red circle",
                        }
                    ]
                }
            ),
            encoding="utf-8",
        )
        report = embed_and_export(_job(corpus, manifest, tmp / "sim.simm"))
        assert report.n_images == 1


class TestSkipsAndErrors:
    def test_unreadable_image_is_skipped_with_reason(self, workdir):
        tmp, corpus, bank = workdir
        (bank / "broken.png").write_bytes(b"not really a png")
        out = tmp / "sim.simm"
        report = embed_and_export(_job(corpus, bank, out))
        assert report.n_images == 3
        assert [s.id for s in report.skipped] == ["broken"]
        assert report.skipped[0].reason
        _, image_ids, _ = read_simm(out)
        assert "broken" not in image_ids

    def test_remote_uri_is_skipped(self, workdir):
        tmp, corpus, bank = workdir
        manifest = tmp / "bank.json"
        manifest.write_text(
            json.dumps(
                {
                    "images": [
                        {"id": "web", "uri": "https://example.org/x.png"},
                        {"id": "ok", "uri": str(bank / "img_red.png")},
                    ]
                }
            ),
            encoding="utf-8",
        )
        report = embed_and_export(_job(corpus, manifest, tmp / "sim.simm"))
        assert report.n_images == 1
        assert report.skipped[0].id == "web"
        assert "remote uri" in report.skipped[0].reason

    def test_zero_usable_images_is_an_error(self, workdir):
        tmp, corpus, _ = workdir
        bad = tmp / "badbank"
        bad.mkdir()
        (bad / "x.png").write_bytes(b"junk")
        (bad / "y.jpg").write_bytes(b"more junk")
        with pytest.raises(JobError, match="none of the 2 images"):
            embed_and_export(_job(corpus, bad, tmp / "sim.simm"))

    def test_empty_bank_is_an_error(self, workdir):
        tmp, corpus, _ = workdir
        empty = tmp / "empty"
        empty.mkdir()
        with pytest.raises(JobError, match="no images found"):
            embed_and_export(_job(corpus, empty, tmp / "sim.simm"))

    def test_phrase_free_corpus_is_an_error(self, workdir):
        tmp, _, bank = workdir
        corpus = write_corpus(
            tmp / "empty.json", corpus_doc([subsection_doc("u1", "... !!")])
        )
        with pytest.raises(JobError, match="no phrases"):
            embed_and_export(_job(corpus, bank, tmp / "sim.simm"))

    def test_bad_batch_size_rejected_up_front(self, workdir):
        tmp, corpus, bank = workdir
        with pytest.raises(JobError, match="batch size"):
            _job(corpus, bank, tmp / "sim.simm", batch_size=0)

    def test_unwritable_output_location(self, workdir):
        tmp, corpus, bank = workdir
        with pytest.raises(JobError, match="cannot write output"):
            embed_and_export(_job(corpus, bank, tmp / "no_such_dir" / "sim.simm"))

    def test_no_temp_files_left_behind(self, workdir):
        tmp, corpus, bank = workdir
        embed_and_export(_job(corpus, bank, tmp / "sim.simm"))
        assert not list(tmp.glob("*.tmp"))
