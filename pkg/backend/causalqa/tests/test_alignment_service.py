"""
Tests for the alignment service.
"""
import math

import pytest

from backend.causalqa.exceptions import ConfigError, TrainingError, UsageError
from backend.causalqa.models.alignment import NULL_TOKEN, PROBABILITY_FLOOR, TranslationTable
from backend.causalqa.models.config import PipelineConfig
from backend.causalqa.repositories.corpus_repository import LemmaTableRepository
from backend.causalqa.repositories.pair_repository import ParallelRepository
from backend.causalqa.services.alignment_service import (
    AlignmentService,
    Model1Trainer,
    sentence_log_prob,
    sentence_prob,
    train_model1,
)


def create_test_table(entries):
    """Helper function to create a table from (dst, src, prob) entries."""
    table = TranslationTable()
    for dst, src, value in entries:
        table.assign(dst, src, value)
    return table


class TestSentenceProb:
    """Tests for Model 1 sentence probabilities."""

    def test_null_shares_alignment_mass(self):
        """Test that NULL is one of the uniformly aligned sources."""
        # Setup
        table = create_test_table([("flood", "rain", 0.8), ("flood", NULL_TOKEN, 0.2)])

        # Execute
        value = sentence_prob(table, ["rain"], ["flood"])

        # Verify
        assert value == pytest.approx(0.5)

    def test_unseen_destination_uses_floor(self):
        """Test that an unknown destination lemma gives a small finite log-probability."""
        # Setup
        table = create_test_table([("flood", "rain", 1.0)])

        # Execute
        value = sentence_log_prob(table, ["rain"], ["drought"])

        # Verify
        assert value == pytest.approx(math.log(PROBABILITY_FLOOR))
        assert math.isfinite(value)

    def test_empty_source_uses_null_only(self):
        """Test that an empty source side falls back to NULL."""
        # Setup
        table = create_test_table([("flood", NULL_TOKEN, 0.25)])

        # Execute
        value = sentence_prob(table, [], ["flood"])

        # Verify
        assert value == pytest.approx(0.25)

    def test_word_order_does_not_matter(self):
        """Test that permuting either side keeps the sentence probability."""
        # Setup
        table = create_test_table(
            [
                ("flood", "rain", 0.6),
                ("flood", "storm", 0.3),
                ("damage", "storm", 0.5),
                ("damage", NULL_TOKEN, 0.1),
            ]
        )
        src, dst = ["rain", "storm", "wind"], ["flood", "damage", "loss"]

        # Execute
        value = sentence_prob(table, src, dst)
        permuted = sentence_prob(table, src[::-1], [dst[1], dst[2], dst[0]])

        # Verify
        assert permuted == pytest.approx(value)
        assert value > 0.0

    def test_empty_destination(self):
        """Test that an empty destination side is an error."""
        # Setup
        table = create_test_table([("flood", "rain", 1.0)])

        # Execute and Verify
        with pytest.raises(ValueError):
            sentence_prob(table, ["rain"], [])


class TestModel1Trainer:
    """Tests for EM training."""

    def test_repeated_pair_converges(self):
        """Test that a pair seen a hundred times is learned."""
        # Setup
        corpus = [(["rain"], ["flood"])] * 100

        # Execute
        table = train_model1(corpus, iterations=10)

        # Verify
        assert table.prob("flood", "rain") >= 0.99

    def test_zero_iterations_keep_uniform_table(self):
        """Test that no EM round leaves t at 1/|destination vocabulary|."""
        # Setup
        corpus = [(["rain"], ["flood", "damage"]), (["wind"], ["damage", "outage", "delay"])]

        # Execute
        table = train_model1(corpus, iterations=0)

        # Verify
        assert table.prob("flood", "rain") == pytest.approx(0.25)
        assert table.prob("delay", "wind") == pytest.approx(0.25)
        assert table.prob("delay", "rain") == 0.0
        assert len(table.perplexity_history) == 1

    def test_rows_stay_normalized(self):
        """Test that every source row sums to one after training."""
        # Setup
        corpus = [
            (["rain", "wind"], ["flood", "damage"]),
            (["rain"], ["flood"]),
            (["wind"], ["damage"]),
        ]

        # Execute
        table = train_model1(corpus, iterations=5)

        # Verify
        for source in table.src_vocab:
            assert table.source_total(source) == pytest.approx(1.0)

    def test_em_disambiguates_shared_sentences(self):
        """Test that EM attributes each destination word to its consistent source."""
        # Setup
        corpus = [
            (["rain", "wind"], ["flood", "damage"]),
            (["rain"], ["flood"]),
            (["wind"], ["damage"]),
        ] * 5

        # Execute
        table = train_model1(corpus, iterations=20)

        # Verify
        assert table.prob("flood", "rain") > table.prob("damage", "rain")
        assert table.prob("damage", "wind") > table.prob("flood", "wind")

    def test_perplexity_never_increases(self):
        """Test that each EM round lowers or keeps the corpus perplexity."""
        # Setup
        corpus = [
            (["rain", "wind"], ["flood", "damage"]),
            (["rain"], ["flood", "mud"]),
            (["wind"], ["damage", "outage"]),
        ]

        # Execute
        table = train_model1(corpus, iterations=5)

        # Verify
        history = table.perplexity_history
        assert len(history) == 6
        assert all(later <= earlier + 1e-9 for earlier, later in zip(history, history[1:]))

    def test_empty_sides_are_skipped(self):
        """Test that pairs with an empty side do not take part."""
        # Setup
        corpus = [(["rain"], ["flood"]), ([], ["flood"]), (["wind"], [])]

        # Execute
        table = train_model1(corpus, iterations=1)

        # Verify
        assert table.src_vocab == {NULL_TOKEN, "rain"}

    def test_nothing_usable(self):
        """Test that a corpus of empty sides is a training error."""
        # Execute and Verify
        with pytest.raises(TrainingError):
            train_model1([([], ["flood"])])

    def test_negative_iterations(self):
        """Test that a negative round count is rejected."""
        # Execute and Verify
        with pytest.raises(ValueError):
            Model1Trainer(iterations=-1)


class TestAlignmentService:
    """Tests for the configured alignment corpora."""

    def test_unknown_mode(self, tmp_path):
        """Test that an unknown alignment mode is a usage error."""
        # Setup
        service = AlignmentService(PipelineConfig(output_dir=tmp_path, seed=1))

        # Execute and Verify
        with pytest.raises(UsageError, match="sideways"):
            service.train("sideways")

    def test_vanilla_needs_question_answer_corpus(self, tmp_path):
        """Test that the vanilla mode names the missing key."""
        # Setup
        service = AlignmentService(PipelineConfig(output_dir=tmp_path, seed=1))

        # Execute and Verify
        with pytest.raises(ConfigError, match="qa_parallel"):
            service.train("vanilla")

    def test_vanilla_aligns_answer_lemmas_to_question_lemmas(self, tmp_path):
        """Test that raw question/answer text is lemmatized and answers become the source side."""
        # Setup
        raw = ParallelRepository().save([(["Why", "floods", "?"], ["Heavy", "storms", "."])], tmp_path / "qa.tsv")
        LemmaTableRepository().save({"floods": "flood", "storms": "storm"}, tmp_path / "lemmas.tsv")
        service = AlignmentService(PipelineConfig(output_dir=tmp_path, qa_parallel=raw, seed=1))

        # Execute
        corpus = service.parallel_corpus("vanilla")
        path = service.train("vanilla")

        # Verify
        assert corpus == [(["heavy", "storm"], ["flood"])]
        assert path == tmp_path / "align-vanilla.tsv"
        assert service.load("vanilla").prob("flood", "storm") > PROBABILITY_FLOOR
