"""
Weighting service: decomposing causal tuples into word pairs and scoring them.

A tuple contributes every (cause lemma, effect lemma) combination of its two
spans. Each pair is scored by how much more often it occurs as a causal pair
than as a plain sentence co-occurrence, damped by its log frequency, and the
score ranks are cut into five bins that become training weights.
"""
import logging
import math
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path

from backend.causalqa.models.config import PAIRS_FILE, PipelineConfig
from backend.causalqa.models.corpus import LemmaFilter, ParsedSentence
from backend.causalqa.models.extraction import QUANTILE_WEIGHTS, CausalTuple, WeightedPair
from backend.causalqa.repositories.pair_repository import WeightedPairRepository
from backend.causalqa.services.corpus_service import content_lemmas
from backend.causalqa.services.extraction_service import ExtractionService, tuple_lemmas

logger = logging.getLogger(__name__)

Pair = tuple[str, str]


def _sentence_index(sentences: Iterable[ParsedSentence]) -> dict[tuple[str, int], ParsedSentence]:
    return {sentence.ref: sentence for sentence in sentences}


def decompose_tuples(
    tuples: Iterable[CausalTuple],
    sentences: Iterable[ParsedSentence],
    lemma_filter: LemmaFilter,
) -> Counter:
    """
    Decompose tuples into aggregated (cause lemma, effect lemma) counts.

    Args:
        tuples: Extracted causal tuples
        sentences: The sentences the tuples point into
        lemma_filter: Filter applied to both spans

    Returns:
        Pair counts; pairs whose two lemmas are equal are dropped
    """
    by_ref = _sentence_index(sentences)
    counts: Counter = Counter()
    for causal_tuple in tuples:
        sentence = by_ref[causal_tuple.sentence_ref]
        causes, effects = tuple_lemmas(sentence, causal_tuple, lemma_filter)
        for cause in causes:
            for effect in effects:
                if cause != effect:
                    counts[(cause, effect)] += 1
    logger.info(f"Decomposed tuples into {len(counts)} distinct word pairs")
    return counts


def background_counts(
    sentences: Iterable[ParsedSentence],
    lemma_filter: LemmaFilter,
) -> Counter:
    """
    Count, for every ordered lemma pair, the sentences containing both lemmas.

    Args:
        sentences: The full corpus
        lemma_filter: Filter selecting content lemmas

    Returns:
        Ordered pair to number of sentences
    """
    counts: Counter = Counter()
    for sentence in sentences:
        lemmas = sorted(set(content_lemmas(sentence.tokens, lemma_filter)))
        for first in lemmas:
            for second in lemmas:
                if first != second:
                    counts[(first, second)] += 1
    return counts


def score_noise(
    pair_freq: Mapping[Pair, int],
    background: Mapping[Pair, int],
) -> dict[Pair, float]:
    """
    Score each causal pair by log-ratio of causal to background probability
    times log frequency.

    Background probabilities are taken over the whole background map; a causal
    pair never seen in the background counts as seen once.

    Args:
        pair_freq: Causal pair frequencies
        background: Sentence co-occurrence counts over the same corpus

    Returns:
        Pair to score

    Raises:
        ValueError: If there are no causal pairs or the background is empty
    """
    if not pair_freq:
        raise ValueError("Cannot score an empty pair map")
    causal_total = sum(pair_freq.values())
    background_total = sum(background.values())
    if causal_total <= 0 or background_total <= 0:
        raise ValueError("Causal and background totals must be positive")

    scores = {}
    for pair, freq in pair_freq.items():
        p_causal = freq / causal_total
        p_background = max(background.get(pair, 0), 1) / background_total
        scores[pair] = math.log(p_causal / p_background) * math.log(freq)
    return scores


def _bin_sizes(count: int) -> list[int]:
    bins = len(QUANTILE_WEIGHTS)
    base, remainder = divmod(count, bins)
    return [base + (1 if position < remainder else 0) for position in range(bins)]


def quantile_weights(scores: Mapping[Pair, float]) -> dict[Pair, float]:
    """
    Turn scores into five rank bins with linearly decreasing weights.

    Pairs are ranked by descending score, ties broken by the pair itself.
    Bins are equal-sized, leftover pairs going to the top bins.

    Args:
        scores: Pair to score

    Returns:
        Pair to weight in {1.0, 0.8, 0.6, 0.4, 0.2}
    """
    ranked = sorted(scores, key=lambda pair: (-scores[pair], pair))
    weights = {}
    position = 0
    for weight, size in zip(QUANTILE_WEIGHTS, _bin_sizes(len(ranked))):
        for pair in ranked[position : position + size]:
            weights[pair] = weight
        position += size
    return weights


def weight_pairs(
    tuples: Sequence[CausalTuple],
    sentences: Sequence[ParsedSentence],
    lemma_filter: LemmaFilter,
) -> list[WeightedPair]:
    """
    Run decomposition, noise scoring and quantile weighting end to end.

    Args:
        tuples: Extracted causal tuples
        sentences: The corpus the tuples were extracted from
        lemma_filter: Lemma filter

    Returns:
        Weighted pairs sorted by descending score, then cause and effect lemma
    """
    freq = decompose_tuples(tuples, sentences, lemma_filter)
    if not freq:
        logger.warning("No causal word pairs to weight")
        return []
    scores = score_noise(freq, background_counts(sentences, lemma_filter))
    weights = quantile_weights(scores)
    pairs = [
        WeightedPair(
            cause_lemma=cause,
            effect_lemma=effect,
            freq=freq[(cause, effect)],
            score=scores[(cause, effect)],
            weight=weights[(cause, effect)],
        )
        for cause, effect in freq
    ]
    pairs.sort(key=lambda pair: (-pair.score, pair.cause_lemma, pair.effect_lemma))
    logger.info(f"Weighted {len(pairs)} causal pairs")
    return pairs


class WeightingService:
    """
    Weighting service for the pipeline stages.

    Turns the tuples of the configured corpus into weighted causal pairs and
    reads them back for the stages trained on them.
    """

    def __init__(self, config: PipelineConfig):
        """
        Initialize the weighting service.

        Args:
            config: The pipeline configuration
        """
        self.config = config
        self.extraction_service = ExtractionService(config)
        self.pair_repository = WeightedPairRepository()

    def run(self) -> Path:
        """
        Extract, decompose, score and weight the causal pairs of the corpus.

        Returns:
            The weighted pair file under output_dir
        """
        sentences, tuples = self.extraction_service.extract("weight")
        lemma_filter = self.extraction_service.corpus_service.lemma_filter
        pairs = weight_pairs(tuples, sentences, lemma_filter)
        return self.pair_repository.save(pairs, self.config.output_dir / PAIRS_FILE)

    def load_pairs(self) -> list[WeightedPair]:
        """Weighted pairs previously written to model_dir."""
        return self.pair_repository.load(self.config.models_path / PAIRS_FILE)
