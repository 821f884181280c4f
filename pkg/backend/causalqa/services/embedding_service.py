"""
Embedding service: skip-gram with negative sampling over arbitrary contexts.

The trainer never looks at sentences. It consumes (target, context, weight)
triples, so the same code learns the vanilla model (linear-window contexts)
and the causal models (cause words as targets, effect words as contexts, or
the reverse). Noise-aware models scale each gradient step by the pair weight.
"""
import logging
import math
from collections import Counter
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.special import expit

from backend.causalqa.exceptions import TrainingError, UsageError
from backend.causalqa.models.config import PipelineConfig, embed_stem
from backend.causalqa.models.corpus import LemmaFilter, ParsedSentence
from backend.causalqa.models.embedding import (
    EmbeddingModel,
    PairScore,
    ScoreMode,
    TrainConfig,
    TrainMode,
)
from backend.causalqa.models.extraction import WeightedPair
from backend.causalqa.repositories.model_repository import EmbeddingRepository
from backend.causalqa.services.corpus_service import CorpusService, content_lemmas
from backend.causalqa.services.weighting_service import WeightingService

logger = logging.getLogger(__name__)

TrainingPair = tuple[str, str, float]

NEGATIVE_POWER = 0.75
CUM_TABLE_DOMAIN = 2**31 - 1
LOSS_REPORTS = 100
MAX_DRAWS_PER_NEGATIVE = 10


def vanilla_pairs(
    sentences: Iterable[ParsedSentence],
    lemma_filter: LemmaFilter,
    window: int = 5,
) -> list[TrainingPair]:
    """
    Linear-window skip-gram pairs over the filtered lemmas of each sentence.

    Args:
        sentences: The corpus
        lemma_filter: Lemma filter
        window: Maximum distance between target and context

    Returns:
        (w_i, w_j, 1.0) for every 0 < |i - j| <= window
    """
    pairs = []
    for sentence in sentences:
        lemmas = content_lemmas(sentence.tokens, lemma_filter)
        for i, target in enumerate(lemmas):
            for j in range(max(0, i - window), min(len(lemmas), i + window + 1)):
                if j != i:
                    pairs.append((target, lemmas[j], 1.0))
    return pairs


def causal_pairs(
    weighted_pairs: Iterable[WeightedPair],
    reverse: bool = False,
    use_weights: bool = False,
) -> list[TrainingPair]:
    """
    Expand weighted causal pairs into a training stream.

    Args:
        weighted_pairs: Decomposed causal pairs
        reverse: Use effects as targets and causes as contexts
        use_weights: Carry the quantile weight instead of 1.0

    Returns:
        Each pair repeated freq times, in input order
    """
    pairs = []
    for pair in weighted_pairs:
        target, context = pair.cause_lemma, pair.effect_lemma
        if reverse:
            target, context = context, target
        weight = pair.weight if use_weights else 1.0
        pairs.extend([(target, context, weight)] * pair.freq)
    return pairs


class SkipGramTrainer:
    """
    Negative-sampling skip-gram trainer over an explicit pair stream.

    For each positive (t, c) the update raises sigma(v_t . u_c) and lowers
    sigma(v_t . u_n) for sampled negatives n, which are drawn from the context
    unigram distribution raised to the 3/4 power.
    """

    def __init__(self, config: TrainConfig):
        self.config = config
        self.loss_history: list[float] = []
        self.rng = np.random.default_rng(config.seed)
        self.words: list[str] = []
        self.vocab: dict[str, int] = {}
        self.cum_table = np.zeros(0, dtype=np.int64)
        self.target_vectors = np.zeros((0, config.dim))
        self.context_vectors = np.zeros((0, config.dim))

    def build_vocab(self, pairs: Sequence[TrainingPair]) -> list[TrainingPair]:
        """
        Build the shared vocabulary and the negative-sampling table.

        Words are ordered by descending frequency, then alphabetically; words
        below min_count are pruned together with every pair that uses them.

        Args:
            pairs: The raw pair stream

        Returns:
            The pairs that survive pruning

        Raises:
            TrainingError: If no pair survives
        """
        counts: Counter = Counter()
        for target, context, _ in pairs:
            counts[target] += 1
            counts[context] += 1
        kept = {word for word, count in counts.items() if count >= self.config.min_count}
        pruned = [pair for pair in pairs if pair[0] in kept and pair[1] in kept]
        if not pruned:
            raise TrainingError("No training pairs left after min_count pruning")

        self.words = sorted(kept, key=lambda word: (-counts[word], word))
        self.vocab = {word: i for i, word in enumerate(self.words)}

        context_counts = np.zeros(len(self.words))
        for _, context, _ in pruned:
            context_counts[self.vocab[context]] += 1
        powered = context_counts**NEGATIVE_POWER
        cumulative = np.cumsum(powered) / powered.sum()
        self.cum_table = np.round(cumulative * CUM_TABLE_DOMAIN).astype(np.int64)

        logger.info(
            f"Vocabulary of {len(self.words)} words over {len(pruned)} training pairs "
            f"({len(pairs) - len(pruned)} pruned)"
        )
        return pruned

    def reset_weights(self) -> None:
        """Targets start uniform in [-0.5/d, 0.5/d], contexts at zero."""
        dim = self.config.dim
        self.target_vectors = (self.rng.random((len(self.words), dim)) - 0.5) / dim
        self.context_vectors = np.zeros((len(self.words), dim))

    def _draw_negatives(self, positive: int, rng: np.random.Generator) -> np.ndarray:
        # A context holding all the sampling mass yields fewer negatives.
        wanted = self.config.negatives
        negatives = np.zeros(0, dtype=np.int64)
        for _ in range(MAX_DRAWS_PER_NEGATIVE):
            draws = np.searchsorted(self.cum_table, rng.integers(self.cum_table[-1], size=wanted), side="right")
            negatives = np.concatenate([negatives, draws[draws != positive]])
            if len(negatives) >= wanted:
                break
        return np.concatenate([[positive], negatives[:wanted]]).astype(np.int64)

    def epochs_for(self, stream_size: int) -> int:
        """Configured epochs, raised until the stream is presented at least min_updates times."""
        return max(self.config.epochs, math.ceil(self.config.min_updates / stream_size))

    def train_pair(
        self,
        target: int,
        context: int,
        weight: float,
        alpha: float,
        rng: np.random.Generator,
    ) -> float:
        """
        Apply one negative-sampling update.

        Returns:
            The (unweighted) negative log-likelihood of the presentation
        """
        indices = self._draw_negatives(context, rng)
        l1 = self.target_vectors[target]
        l2 = self.context_vectors[indices]
        prod = l2 @ l1
        labels = np.zeros(len(indices))
        labels[0] = 1.0
        gradient = (labels - expit(prod)) * alpha * weight
        neu1e = gradient @ l2
        np.add.at(self.context_vectors, indices, np.outer(gradient, l1))
        self.target_vectors[target] += neu1e
        return float(np.logaddexp(0.0, -prod[0]) + np.logaddexp(0.0, prod[1:]).sum())

    def _run_shard(
        self,
        encoded: np.ndarray,
        weights: np.ndarray,
        order: np.ndarray,
        start_step: int,
        total_steps: int,
        rng: np.random.Generator,
        record: bool,
    ) -> float:
        lr = self.config.learning_rate
        interval = max(1, total_steps // LOSS_REPORTS)
        window_loss, window_size, total_loss = 0.0, 0, 0.0
        for offset, index in enumerate(order):
            step = start_step + offset
            alpha = lr * (1.0 - step / total_steps)
            loss = self.train_pair(
                int(encoded[index, 0]), int(encoded[index, 1]), float(weights[index]), alpha, rng
            )
            if not math.isfinite(loss):
                raise TrainingError(f"Non-finite loss at step {step}")
            total_loss += loss
            if record:
                window_loss += loss
                window_size += 1
                if window_size == interval:
                    self.loss_history.append(window_loss / window_size)
                    window_loss, window_size = 0.0, 0
        if record and window_size:
            self.loss_history.append(window_loss / window_size)
        return total_loss

    def train(self, pairs: Sequence[TrainingPair]) -> EmbeddingModel:
        """
        Train target and context tables on a pair stream.

        Args:
            pairs: (target, context, weight) triples

        Returns:
            The trained model

        Raises:
            TrainingError: On an empty stream or a non-finite loss
        """
        if not pairs:
            raise TrainingError("Cannot train embeddings on an empty pair stream")
        pairs = self.build_vocab(pairs)
        self.reset_weights()
        self.loss_history = []

        encoded = np.array([(self.vocab[t], self.vocab[c]) for t, c, _ in pairs], dtype=np.int64)
        weights = np.array([w for _, _, w in pairs], dtype=float)
        per_epoch = len(pairs)
        epochs = self.epochs_for(per_epoch)
        total_steps = per_epoch * epochs
        parallel = not self.config.deterministic and self.config.workers > 1

        if epochs > self.config.epochs:
            logger.info(
                f"Raised epochs from {self.config.epochs} to {epochs} "
                f"to reach {self.config.min_updates} updates"
            )

        for epoch in range(epochs):
            order = self.rng.permutation(per_epoch)
            start = epoch * per_epoch
            if parallel:
                epoch_loss = self._train_parallel(encoded, weights, order, start, total_steps)
            else:
                epoch_loss = self._run_shard(
                    encoded, weights, order, start, total_steps, self.rng, record=True
                )
            logger.debug(f"Epoch {epoch + 1}/{epochs}: mean loss {epoch_loss / per_epoch:.4f}")
        logger.info(
            f"Trained {len(self.words)} words over {total_steps} updates, "
            f"final epoch loss {epoch_loss / per_epoch:.4f}"
        )

        model = EmbeddingModel(self.words, self.target_vectors, self.context_vectors)
        if not model.is_finite():
            raise TrainingError("Training produced non-finite vectors")
        return model

    def _train_parallel(
        self,
        encoded: np.ndarray,
        weights: np.ndarray,
        order: np.ndarray,
        start: int,
        total_steps: int,
    ) -> float:
        # Workers update the shared tables without locking; lost updates are tolerated.
        shards = np.array_split(order, self.config.workers)
        seeds = self.rng.integers(2**32, size=len(shards))
        offsets = np.cumsum([0] + [len(shard) for shard in shards[:-1]])
        with ThreadPoolExecutor(max_workers=self.config.workers) as executor:
            futures = [
                executor.submit(
                    self._run_shard,
                    encoded,
                    weights,
                    shard,
                    start + int(offset),
                    total_steps,
                    np.random.default_rng(int(seed)),
                    False,
                )
                for shard, offset, seed in zip(shards, offsets, seeds)
            ]
            return sum(future.result() for future in futures)


def train_skipgram(pairs: Sequence[TrainingPair], config: TrainConfig) -> EmbeddingModel:
    """
    Train a skip-gram model on an explicit pair stream.

    Args:
        pairs: (target, context, weight) triples
        config: Training hyperparameters

    Returns:
        The trained model
    """
    return SkipGramTrainer(config).train(pairs)


def cosine(a: Optional[np.ndarray], b: Optional[np.ndarray]) -> PairScore:
    """Cosine similarity; MISSING for an absent vector, 0.0 for a zero vector."""
    if a is None or b is None:
        return PairScore.MISSING()
    norm = float(np.linalg.norm(a) * np.linalg.norm(b))
    if norm == 0.0:
        return PairScore(value=0.0)
    return PairScore(value=float(np.clip(np.dot(a, b) / norm, -1.0, 1.0)))


def score_pair(
    forward: EmbeddingModel,
    reverse: Optional[EmbeddingModel],
    cause: str,
    effect: str,
    mode: ScoreMode = ScoreMode.UNI,
) -> PairScore:
    """
    Score how strongly `cause` causes `effect`.

    UNI compares the cause's target vector with the effect's context vector in
    the forward model. BI averages that with the reverse model's score of the
    swapped pair.

    Args:
        forward: Model trained with causes as targets
        reverse: Model trained with effects as targets (required for BI)
        cause: Cause lemma
        effect: Effect lemma
        mode: UNI or BI

    Returns:
        The score, or MISSING when a needed vector is absent

    Raises:
        ValueError: If BI is requested without a reverse model
    """
    if mode == ScoreMode.BI and reverse is None:
        raise ValueError("Bidirectional scoring requires a reverse model")
    forward_score = cosine(forward.target(cause), forward.context(effect))
    if mode == ScoreMode.UNI or forward_score.missing:
        return forward_score
    assert reverse is not None
    reverse_score = cosine(reverse.target(effect), reverse.context(cause))
    if forward_score.value is None or reverse_score.value is None:
        return PairScore.MISSING()
    return PairScore(value=(forward_score.value + reverse_score.value) / 2)


def word_similarity(model: EmbeddingModel, a: str, b: str) -> PairScore:
    """Symmetric word-vs-word cosine over target vectors."""
    return cosine(model.target(a), model.target(b))


class EmbeddingService:
    """
    Embedding service for the pipeline stages.

    Trains one skip-gram model per mode and loads trained models back from
    model_dir.
    """

    def __init__(self, config: PipelineConfig):
        """
        Initialize the embedding service.

        Args:
            config: The pipeline configuration
        """
        self.config = config
        self.corpus_service = CorpusService(config)
        self.weighting_service = WeightingService(config)
        self.embedding_repository = EmbeddingRepository()

    def training_pairs(self, mode: TrainMode) -> list[TrainingPair]:
        """Window pairs of the corpus for vanilla, weighted causal pairs otherwise."""
        if mode == TrainMode.VANILLA:
            sentences = self.corpus_service.load_corpus("train-embed vanilla")
            return vanilla_pairs(sentences, self.corpus_service.lemma_filter, self.config.window)
        weighted = self.weighting_service.load_pairs()
        return causal_pairs(weighted, reverse=mode.reverse, use_weights=mode.weighted)

    def train(self, mode: Optional[str] = None) -> Path:
        """
        Train and save the embeddings of one mode.

        Args:
            mode: A TrainMode value; causal when omitted

        Returns:
            The target vector file; the context vectors are written beside it
        """
        try:
            train_mode = TrainMode(mode or TrainMode.CAUSAL.value)
        except ValueError as e:
            raise UsageError(f"unknown embedding mode {mode!r}") from e
        pairs = self.training_pairs(train_mode)
        logger.info(f"Training {train_mode.value} embeddings on {len(pairs)} pairs")
        model = train_skipgram(pairs, self.config.train_config())
        return self.embedding_repository.save(model, embed_stem(self.config.output_dir, train_mode.value))

    def load(self, mode: str) -> EmbeddingModel:
        return self.embedding_repository.load(embed_stem(self.config.models_path, mode))
