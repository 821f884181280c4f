"""
Alignment service: IBM Model 1 trained by EM, and sentence-level scoring.

The causal model "translates" cause lemmas into effect lemmas; the vanilla
baseline translates answers into questions. Both use the same trainer, the
caller decides which side is the source.
"""
import logging
import math
from collections import defaultdict
from collections.abc import Sequence
from pathlib import Path
from typing import Optional

from backend.causalqa.exceptions import TrainingError, UsageError
from backend.causalqa.models.alignment import NULL_TOKEN, PROBABILITY_FLOOR, TranslationTable
from backend.causalqa.models.config import PARALLEL_FILE, PipelineConfig, align_path
from backend.causalqa.repositories.model_repository import TranslationTableRepository
from backend.causalqa.repositories.pair_repository import ParallelRepository
from backend.causalqa.services.corpus_service import CorpusService, lemmatize_raw

logger = logging.getLogger(__name__)

ParallelPair = tuple[list[str], list[str]]

ALIGN_MODES = ("causal", "vanilla")


def _with_null(src: Sequence[str]) -> list[str]:
    return [NULL_TOKEN, *src]


def sentence_log_prob(table: TranslationTable, src: Sequence[str], dst: Sequence[str]) -> float:
    """
    Log of p(dst | src) under Model 1.

    Every destination lemma is generated by the source lemmas or NULL with
    uniform alignment; pairs missing from the table count as the floor.

    Args:
        table: Translation table
        src: Source lemmas (may be empty)
        dst: Destination lemmas

    Returns:
        The log-probability

    Raises:
        ValueError: If dst is empty
    """
    if not dst:
        raise ValueError("Destination side cannot be empty")
    sources = _with_null(src)
    log_prob = 0.0
    for word in dst:
        total = 0.0
        for source in sources:
            value = table.prob(word, source)
            total += value if value > 0.0 else PROBABILITY_FLOOR
        log_prob += math.log(total / len(sources))
    return log_prob


def sentence_prob(table: TranslationTable, src: Sequence[str], dst: Sequence[str]) -> float:
    """p(dst | src) under Model 1; see sentence_log_prob."""
    return math.exp(sentence_log_prob(table, src, dst))


def _perplexity(table: TranslationTable, corpus: Sequence[ParallelPair]) -> float:
    log_total = 0.0
    tokens = 0
    for src, dst in corpus:
        log_total += sentence_log_prob(table, src, dst)
        tokens += len(dst)
    return math.exp(-log_total / tokens)


class Model1Trainer:
    """Expectation-maximization for IBM Model 1 over a parallel lemma corpus."""

    def __init__(self, iterations: int = 5):
        if iterations < 0:
            raise ValueError("iterations cannot be negative")
        self.iterations = iterations

    def initialize(self, corpus: Sequence[ParallelPair]) -> TranslationTable:
        """
        Uniform t(dst | src) = 1/|dst vocabulary| for every co-occurring pair.
        """
        dst_vocab = {word for _, dst in corpus for word in dst}
        table = TranslationTable(dst_vocab)
        uniform = 1.0 / len(dst_vocab)
        for src, dst in corpus:
            for source in _with_null(src):
                for word in dst:
                    table.assign(word, source, uniform)
        return table

    def iterate(self, table: TranslationTable, corpus: Sequence[ParallelPair]) -> None:
        """Run one E-step and M-step in place."""
        counts: dict[str, dict[str, float]] = defaultdict(lambda: defaultdict(float))
        totals: dict[str, float] = defaultdict(float)
        for src, dst in corpus:
            sources = _with_null(src)
            for word in dst:
                norm = sum(table.prob(word, source) for source in sources)
                for source in sources:
                    share = table.prob(word, source) / norm
                    counts[source][word] += share
                    totals[source] += share
        for source, row in counts.items():
            for word, count in row.items():
                table.assign(word, source, count / totals[source])

    def train(self, corpus: Sequence[ParallelPair]) -> TranslationTable:
        """
        Train a translation table.

        Args:
            corpus: (source lemmas, destination lemmas) pairs; pairs with an
                empty side are skipped

        Returns:
            The table, with the corpus perplexity recorded before the first
            and after every EM round

        Raises:
            TrainingError: If no usable pair remains
        """
        usable = [(list(src), list(dst)) for src, dst in corpus if src and dst]
        if len(usable) < len(corpus):
            logger.warning(f"Skipped {len(corpus) - len(usable)} parallel pairs with an empty side")
        if not usable:
            raise TrainingError("Cannot train Model 1 on an empty parallel corpus")

        table = self.initialize(usable)
        table.perplexity_history.append(_perplexity(table, usable))
        for iteration in range(self.iterations):
            self.iterate(table, usable)
            perplexity = _perplexity(table, usable)
            table.perplexity_history.append(perplexity)
            logger.info(f"EM iteration {iteration + 1}/{self.iterations}: perplexity {perplexity:.4f}")
        logger.info(
            f"Trained Model 1 over {len(usable)} pairs: {len(table.src_vocab)} source and "
            f"{len(table.dst_vocab)} destination lemmas"
        )
        return table


def train_model1(corpus: Sequence[ParallelPair], iterations: int = 5) -> TranslationTable:
    """
    Train IBM Model 1 for a fixed number of EM rounds.

    Args:
        corpus: (source lemmas, destination lemmas) pairs
        iterations: Number of EM rounds

    Returns:
        The translation table
    """
    return Model1Trainer(iterations).train(corpus)


class AlignmentService:
    """
    Alignment service for the pipeline stages.

    The causal mode reads the cause-to-effect parallel corpus written by
    extraction. The vanilla mode lemmatizes a raw question/answer corpus and
    aligns answers to questions.
    """

    def __init__(self, config: PipelineConfig):
        """
        Initialize the alignment service.

        Args:
            config: The pipeline configuration
        """
        self.config = config
        self.corpus_service = CorpusService(config)
        self.parallel_repository = ParallelRepository()
        self.table_repository = TranslationTableRepository()

    def parallel_corpus(self, mode: str) -> list[ParallelPair]:
        if mode == "causal":
            return self.parallel_repository.load(self.config.models_path / PARALLEL_FILE)
        lemma_table = self.corpus_service.lemma_table()
        lemma_filter = self.corpus_service.lemma_filter
        raw = self.parallel_repository.load(self.config.require("qa_parallel", "train-align vanilla"))
        return [
            (
                lemmatize_raw(" ".join(answer), lemma_table, lemma_filter),
                lemmatize_raw(" ".join(question), lemma_table, lemma_filter),
            )
            for question, answer in raw
        ]

    def train(self, mode: Optional[str] = None) -> Path:
        """
        Train and save the translation table of one mode.

        Args:
            mode: causal (the default) or vanilla

        Returns:
            The translation table file
        """
        mode = mode or "causal"
        if mode not in ALIGN_MODES:
            raise UsageError(f"unknown alignment mode {mode!r}")
        table = train_model1(self.parallel_corpus(mode), self.config.align_iterations)
        return self.table_repository.save(table, align_path(self.config.output_dir, mode))

    def load(self, mode: str) -> TranslationTable:
        return self.table_repository.load(align_path(self.config.models_path, mode))
