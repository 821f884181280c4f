"""
Feature service: question direction, candidate retrieval scores and the
per-model reranking features.

Every model contributes a fixed group of named features (see MODEL_FEATURES).
Raw values are computed per candidate, with None marking a value that could
not be computed, and are then min-max normalized within each question.
"""
import logging
import re
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from sklearn.feature_extraction.text import TfidfVectorizer
from sklearn.metrics.pairwise import cosine_similarity

from backend.causalqa.exceptions import DataFormatError
from backend.causalqa.models.alignment import TranslationTable
from backend.causalqa.models.config import FEATURES_FILE, PipelineConfig
from backend.causalqa.models.corpus import LemmaFilter
from backend.causalqa.models.embedding import EmbeddingModel, ScoreMode
from backend.causalqa.models.lookup import LookupDB
from backend.causalqa.models.qa import (
    CR_FEATURE,
    MODEL_FEATURES,
    EmbeddingVariant,
    QAQuestion,
    QuestionRole,
    feature_registry,
)
from backend.causalqa.repositories.qa_repository import FeatureDumpRepository, QADatasetRepository
from backend.causalqa.services.alignment_service import AlignmentService, sentence_log_prob
from backend.causalqa.services.corpus_service import CorpusService, default_filter, lemmatize_raw
from backend.causalqa.services.embedding_service import EmbeddingService, cosine, score_pair, word_similarity
from backend.causalqa.services.lookup_service import LookupService, lookup_feature

logger = logging.getLogger(__name__)

MIDPOINT = 0.5

# Questions asking for a cause: the question text is the effect.
CAUSE_QUESTION_PATTERNS = [
    re.compile(r"^[Ww]hat ([a-z]+ ){0,3}cause.+"),
    re.compile(r"^[Ww]hat ([a-z]+ ){0,4}causes of\b"),
    re.compile(r"^[Ww]hy (does|do|is|are|did|was|were)\b"),
]
# Questions asking for a result: the question text is the cause.
RESULT_QUESTION_PATTERNS = [
    re.compile(
        r"^[Ww]hat (is|are|was|were) the (results?|effects?|consequences?) of\b"
    ),
    re.compile(r"^[Ww]hat happens (if|when)\b"),
]

EmbeddingFeatures = dict[str, Optional[float]]


def detect_direction(question_text: str) -> QuestionRole:
    """
    Decide whether the question names the effect or the cause.

    Args:
        question_text: The raw question

    Returns:
        QUESTION_IS_EFFECT for cause-seeking questions (and by default),
        QUESTION_IS_CAUSE for result-seeking questions
    """
    text = question_text.strip()
    if any(pattern.search(text) for pattern in CAUSE_QUESTION_PATTERNS):
        return QuestionRole.QUESTION_IS_EFFECT
    if any(pattern.search(text) for pattern in RESULT_QUESTION_PATTERNS):
        return QuestionRole.QUESTION_IS_CAUSE
    return QuestionRole.QUESTION_IS_EFFECT


def _lemma_list(document: list[str]) -> list[str]:
    return document


class CandidateRetrievalScorer:
    """
    Shallow retrieval baseline: tf-idf cosine between question and candidate
    lemma bags, with idf taken from the question's candidate pool.
    """

    def __init__(self, pool: Sequence[list[str]]):
        self.vectorizer: Optional[TfidfVectorizer] = TfidfVectorizer(analyzer=_lemma_list)
        try:
            self.vectorizer.fit(list(pool))
        except ValueError:
            # Empty vocabulary: every score is 0.0.
            self.vectorizer = None

    def score(self, question: list[str], candidate: list[str]) -> float:
        if self.vectorizer is None or not question or not candidate:
            return 0.0
        matrix = self.vectorizer.transform([question, candidate])
        return float(np.clip(cosine_similarity(matrix[0], matrix[1])[0, 0], 0.0, 1.0))


def cr_score(question: list[str], candidate: list[str], scorer: CandidateRetrievalScorer) -> float:
    """
    Candidate retrieval score of one candidate.

    Args:
        question: Question lemmas
        candidate: Candidate lemmas
        scorer: Scorer fitted on the candidate pool

    Returns:
        tf-idf cosine in [0, 1]
    """
    return scorer.score(question, candidate)


def _summed(vectors: Sequence[Optional[np.ndarray]]) -> Optional[np.ndarray]:
    present = [vector for vector in vectors if vector is not None]
    if not present:
        return None
    return np.sum(present, axis=0)


def _summary(name: str, pairwise: list[float], overall: Optional[float]) -> EmbeddingFeatures:
    if not pairwise:
        return {f"{name}_{kind}": None for kind in ("max", "min", "avg", "overall")}
    return {
        f"{name}_max": max(pairwise),
        f"{name}_min": min(pairwise),
        f"{name}_avg": sum(pairwise) / len(pairwise),
        f"{name}_overall": overall,
    }


def _causal_composite(model: EmbeddingModel, causes: Sequence[str], effects: Sequence[str]) -> Optional[float]:
    composite = cosine(
        _summed([model.target(word) for word in causes]),
        _summed([model.context(word) for word in effects]),
    )
    return composite.value


def embedding_features(
    name: str,
    forward: EmbeddingModel,
    q_lemmas: Sequence[str],
    a_lemmas: Sequence[str],
    direction: QuestionRole,
    variant: EmbeddingVariant,
    reverse: Optional[EmbeddingModel] = None,
) -> EmbeddingFeatures:
    """
    Max, min and average pairwise similarity plus composite similarity.

    Vanilla models compare target vectors of question and answer words. Causal
    models put the answer in the cause role when the question is the effect
    (and vice versa): cause words use target vectors, effect words context
    vectors. With a reverse model the two orientations are averaged.

    Args:
        name: Model name used as feature prefix
        forward: The vanilla or forward causal model
        q_lemmas: Question lemmas
        a_lemmas: Answer lemmas
        direction: Role of the question text
        variant: VANILLA or CAUSAL
        reverse: Reverse causal model for the bidirectional variant

    Returns:
        The four named features; None where nothing could be scored
    """
    if variant == EmbeddingVariant.VANILLA:
        pairwise = [word_similarity(forward, q, a).value for q in q_lemmas for a in a_lemmas]
        overall = cosine(
            _summed([forward.target(word) for word in q_lemmas]),
            _summed([forward.target(word) for word in a_lemmas]),
        ).value
        return _summary(name, [value for value in pairwise if value is not None], overall)

    if direction == QuestionRole.QUESTION_IS_EFFECT:
        causes, effects = a_lemmas, q_lemmas
    else:
        causes, effects = q_lemmas, a_lemmas
    mode = ScoreMode.UNI if reverse is None else ScoreMode.BI
    pairwise = [score_pair(forward, reverse, c, e, mode).value for c in causes for e in effects]

    overall = _causal_composite(forward, causes, effects)
    if reverse is not None and overall is not None:
        backward = _causal_composite(reverse, effects, causes)
        overall = None if backward is None else (overall + backward) / 2
    return _summary(name, [value for value in pairwise if value is not None], overall)


def alignment_feature(
    name: str,
    table: TranslationTable,
    q_lemmas: Sequence[str],
    a_lemmas: Sequence[str],
    direction: Optional[QuestionRole],
) -> dict[str, Optional[float]]:
    """
    Length-normalized log p(effect side | cause side).

    Args:
        name: Model name used as feature prefix
        table: Translation table
        q_lemmas: Question lemmas
        a_lemmas: Answer lemmas
        direction: Role of the question text, or None for the vanilla
            question-given-answer orientation

    Returns:
        One named feature; None if the destination side is empty
    """
    if direction is None or direction == QuestionRole.QUESTION_IS_EFFECT:
        src, dst = a_lemmas, q_lemmas
    else:
        src, dst = q_lemmas, a_lemmas
    if not dst:
        return {f"{name}_prob": None}
    return {f"{name}_prob": sentence_log_prob(table, src, dst) / len(dst)}


@dataclass
class ModelBundle:
    """The trained models a feature manifest may draw on."""

    embeddings: dict[str, EmbeddingModel] = field(default_factory=dict)
    alignments: dict[str, TranslationTable] = field(default_factory=dict)
    lookup: Optional[LookupDB] = None
    lemma_table: dict[str, str] = field(default_factory=dict)


# Embedding model name to (forward mode, reverse mode or None, variant).
EMBEDDING_SOURCES: dict[str, tuple[str, Optional[str], EmbeddingVariant]] = {
    "vEmbed": ("vanilla", None, EmbeddingVariant.VANILLA),
    "cEmbed": ("causal", None, EmbeddingVariant.CAUSAL),
    "cEmbedBi": ("causal", "causal-reverse", EmbeddingVariant.CAUSAL),
    "cEmbedNoise": ("causal-noise", None, EmbeddingVariant.CAUSAL),
    "cEmbedBiNoise": ("causal-noise", "causal-noise-reverse", EmbeddingVariant.CAUSAL),
}
# Alignment model name to training mode.
ALIGNMENT_SOURCES = {"cAlign": "causal", "vAlign": "vanilla"}


def required_artifacts(models: Sequence[str]) -> tuple[set[str], set[str], bool]:
    """
    Training modes whose artifacts the given models need.

    Returns:
        (embedding modes, alignment modes, whether the look-up DB is needed)
    """
    embed_modes: set[str] = set()
    align_modes: set[str] = set()
    for model in models:
        if model in EMBEDDING_SOURCES:
            forward, reverse, _ = EMBEDDING_SOURCES[model]
            embed_modes.add(forward)
            if reverse:
                embed_modes.add(reverse)
        elif model in ALIGNMENT_SOURCES:
            align_modes.add(ALIGNMENT_SOURCES[model])
    return embed_modes, align_modes, "LU" in models


def model_features(
    model: str,
    bundle: ModelBundle,
    q_lemmas: Sequence[str],
    a_lemmas: Sequence[str],
    direction: QuestionRole,
) -> dict[str, Optional[float]]:
    """
    Raw features one model contributes for one candidate.

    Raises:
        KeyError: If the model is unknown or its artifacts are not in the bundle
    """
    if model in EMBEDDING_SOURCES:
        forward_mode, reverse_mode, variant = EMBEDDING_SOURCES[model]
        return embedding_features(
            model,
            bundle.embeddings[forward_mode],
            q_lemmas,
            a_lemmas,
            direction,
            variant,
            reverse=bundle.embeddings[reverse_mode] if reverse_mode else None,
        )
    if model in ALIGNMENT_SOURCES:
        mode = ALIGNMENT_SOURCES[model]
        orientation = None if mode == "vanilla" else direction
        return alignment_feature(model, bundle.alignments[mode], q_lemmas, a_lemmas, orientation)
    if model == "LU":
        if bundle.lookup is None:
            raise KeyError("LU")
        return {"LU_match": float(lookup_feature(bundle.lookup, q_lemmas, a_lemmas, direction))}
    raise KeyError(model)


def extract_features(
    questions: Sequence[QAQuestion],
    bundle: ModelBundle,
    models: Sequence[str],
    lemma_filter: Optional[LemmaFilter] = None,
) -> list[QAQuestion]:
    """
    Compute and normalize the CR feature and every feature of the given models.

    Args:
        questions: Questions with candidates in retrieval order
        bundle: Trained models and the lemma table
        models: Model names from MODEL_FEATURES
        lemma_filter: Stopword filter for raw text

    Returns:
        Copies of the questions with normalized features
    """
    lemma_filter = lemma_filter or default_filter()
    extracted = []
    for question in questions:
        q_lemmas = lemmatize_raw(question.text, bundle.lemma_table, lemma_filter)
        a_lemmas = [lemmatize_raw(c.text, bundle.lemma_table, lemma_filter) for c in question.candidates]
        scorer = None
        candidates = []
        for candidate, lemmas in zip(question.candidates, a_lemmas):
            features: dict[str, Optional[float]] = {}
            if candidate.cr_score is not None:
                features[CR_FEATURE] = candidate.cr_score
            else:
                scorer = scorer or CandidateRetrievalScorer(a_lemmas)
                features[CR_FEATURE] = cr_score(q_lemmas, lemmas, scorer)
            for model in models:
                features.update(model_features(model, bundle, q_lemmas, lemmas, question.direction))
            candidates.append(candidate.copy(update={"features": features}))
        extracted.append(question.copy(update={"candidates": candidates}))
        logger.debug(f"Extracted features for question {question.qid}")

    logger.info(f"Extracted features for {len(extracted)} questions over models {list(models)}")
    return normalize_features(extracted, feature_registry(list(models)))


def _normalized(values: list[Optional[float]]) -> list[float]:
    present = [value for value in values if value is not None]
    if len(values) < 2 or not present:
        return [MIDPOINT] * len(values)
    low, high = min(present), max(present)
    if high == low:
        return [MIDPOINT] * len(values)
    return [MIDPOINT if value is None else (value - low) / (high - low) for value in values]


def normalize_features(questions: Sequence[QAQuestion], registry: Sequence[str]) -> list[QAQuestion]:
    """
    Min-max normalize each feature over the candidates of each question.

    Constant features, single-candidate questions and missing values map to 0.5.

    Args:
        questions: Questions with raw features
        registry: Feature names to normalize

    Returns:
        Copies of the questions with every registry feature in [0, 1]
    """
    normalized = []
    for question in questions:
        columns = {
            name: _normalized([candidate.features.get(name) for candidate in question.candidates])
            for name in registry
        }
        candidates = [
            candidate.copy(update={"features": {name: columns[name][i] for name in registry}})
            for i, candidate in enumerate(question.candidates)
        ]
        normalized.append(question.copy(update={"candidates": candidates}))
    return normalized


def assign_directions(questions: Sequence[QAQuestion]) -> list[QAQuestion]:
    """Copies of the questions with their detected direction."""
    return [question.copy(update={"direction": detect_direction(question.text)}) for question in questions]


class FeatureService:
    """
    Feature service for the pipeline stages.

    Loads the trained models the configured feature manifest needs, writes the
    feature table and reads it back for ranking and evaluation.
    """

    def __init__(self, config: PipelineConfig):
        """
        Initialize the feature service.

        Args:
            config: The pipeline configuration
        """
        self.config = config
        self.corpus_service = CorpusService(config)
        self.embedding_service = EmbeddingService(config)
        self.alignment_service = AlignmentService(config)
        self.lookup_service = LookupService(config)
        self.dataset_repository = QADatasetRepository()
        self.feature_repository = FeatureDumpRepository()

    def load_bundle(self) -> ModelBundle:
        embed_modes, align_modes, needs_lookup = required_artifacts(self.config.features)
        bundle = ModelBundle(lemma_table=self.corpus_service.lemma_table())
        for mode in sorted(embed_modes):
            bundle.embeddings[mode] = self.embedding_service.load(mode)
        for mode in sorted(align_modes):
            bundle.alignments[mode] = self.alignment_service.load(mode)
        if needs_lookup:
            bundle.lookup = self.lookup_service.load()
        return bundle

    def featurize(self) -> Path:
        """
        Compute normalized CR and model features for every candidate answer.

        Returns:
            The feature table under output_dir
        """
        dataset = self.dataset_repository.load(self.config.require("qa_dataset", "qa-features"))
        questions = assign_directions(dataset)
        featured = extract_features(
            questions, self.load_bundle(), self.config.features, self.corpus_service.lemma_filter
        )
        return self.feature_repository.save(featured, self.config.output_dir / FEATURES_FILE)

    def load_features(self) -> tuple[list[QAQuestion], list[str]]:
        """
        Read the feature table from model_dir.

        Returns:
            The questions and the feature column names

        Raises:
            DataFormatError: If the table holds no questions
        """
        path = self.config.models_path / FEATURES_FILE
        questions = self.feature_repository.load(path)
        if not questions:
            raise DataFormatError("feature table has no questions", path=str(path))
        return questions, self.feature_repository.feature_names(path)
