"""
Ranking service: a linear pairwise hinge ranker for candidate answers.

Training minimizes max(0, 1 - w.(x_gold - x_other)) + (1/2C)|w|^2 over every
(gold, non-gold) candidate pair of every question, by seeded stochastic
subgradient descent with step size 1/(lambda t), lambda = 1/C.
"""
import logging
from collections.abc import Sequence
from pathlib import Path
from typing import Optional

import numpy as np

from backend.causalqa.exceptions import TrainingError
from backend.causalqa.models.config import RANKER_FILE, RERANKED_FILE, PipelineConfig
from backend.causalqa.models.qa import QACandidate, QAQuestion, RankerHyper, RankerModel
from backend.causalqa.repositories.model_repository import RankerRepository
from backend.causalqa.repositories.qa_repository import RerankedRepository
from backend.causalqa.services.feature_service import FeatureService

logger = logging.getLogger(__name__)


def _vector(candidate: QACandidate, features: Sequence[str]) -> np.ndarray:
    return np.array([candidate.features.get(name) or 0.0 for name in features], dtype=float)


def candidate_score(model: RankerModel, candidate: QACandidate) -> float:
    """w . x over the model's features."""
    return sum(weight * (candidate.features.get(name) or 0.0) for name, weight in model.weights.items())


def rerank(question: QAQuestion, model: RankerModel) -> list[QACandidate]:
    """
    Order candidates by descending model score.

    Args:
        question: A question with normalized features
        model: The ranker

    Returns:
        The candidates; ties keep their retrieval order
    """
    scores = [candidate_score(model, candidate) for candidate in question.candidates]
    order = sorted(range(len(scores)), key=lambda i: -scores[i])
    return [question.candidates[i] for i in order]


def top_is_gold(question: QAQuestion, model: RankerModel) -> bool:
    """Whether the top reranked candidate is a gold answer."""
    ranked = rerank(question, model)
    return bool(ranked) and ranked[0].gold


def _accuracy(questions: Sequence[QAQuestion], model: RankerModel) -> float:
    return sum(top_is_gold(question, model) for question in questions) / len(questions)


class PairwiseRanker:
    """Trainer for the linear pairwise hinge ranker."""

    def __init__(self, features: Sequence[str], hyper: Optional[RankerHyper] = None):
        self.features = list(features)
        self.hyper = hyper or RankerHyper()
        self.dev_history: list[float] = []

    def training_pairs(self, questions: Sequence[QAQuestion]) -> np.ndarray:
        """
        Feature differences x_gold - x_other for every usable question.

        Raises:
            TrainingError: If no question has both a gold and a non-gold candidate
        """
        differences = []
        skipped = 0
        for question in questions:
            gold = [_vector(c, self.features) for c in question.candidates if c.gold]
            other = [_vector(c, self.features) for c in question.candidates if not c.gold]
            if not gold or not other:
                skipped += 1
                logger.warning(f"Skipping question {question.qid}: needs gold and non-gold candidates")
                continue
            differences.extend(g - o for g in gold for o in other)
        if not differences:
            raise TrainingError(f"No usable training questions ({skipped} skipped)")
        return np.array(differences)

    def _model(self, weights: np.ndarray) -> RankerModel:
        return RankerModel(
            weights={name: float(value) for name, value in zip(self.features, weights)},
            hyper=self.hyper,
        )

    def train(
        self,
        questions: Sequence[QAQuestion],
        dev: Optional[Sequence[QAQuestion]] = None,
    ) -> RankerModel:
        """
        Train the ranker.

        Args:
            questions: Training questions with normalized features
            dev: Optional development questions; when given, the weights after
                the epoch with the best dev P@1 are returned (later epochs win ties)

        Returns:
            The trained model
        """
        differences = self.training_pairs(questions)
        rng = np.random.default_rng(self.hyper.seed)
        lam = 1.0 / self.hyper.c
        weights = np.zeros(len(self.features))
        best: Optional[tuple[float, np.ndarray]] = None
        self.dev_history = []
        step = 0

        for epoch in range(self.hyper.epochs):
            for index in rng.permutation(len(differences)):
                step += 1
                eta = 1.0 / (lam * step)
                delta = differences[index]
                violated = float(weights @ delta) < 1.0
                weights = (1.0 - eta * lam) * weights
                if violated:
                    weights = weights + eta * delta
            if dev:
                accuracy = _accuracy(dev, self._model(weights))
                self.dev_history.append(accuracy)
                logger.debug(f"Ranker epoch {epoch + 1}: dev P@1 {accuracy:.4f}")
                if best is None or accuracy >= best[0]:
                    best = (accuracy, weights.copy())

        if best is not None:
            logger.info(f"Selected ranker weights with dev P@1 {best[0]:.4f}")
            weights = best[1]
        model = self._model(weights)
        logger.info(f"Trained ranker on {len(differences)} preference pairs")
        return model


def train_ranker(
    questions: Sequence[QAQuestion],
    features: Sequence[str],
    hyper: Optional[RankerHyper] = None,
    dev: Optional[Sequence[QAQuestion]] = None,
) -> RankerModel:
    """
    Train a pairwise hinge ranker.

    Args:
        questions: Training questions with normalized features
        features: Feature names the ranker weighs
        hyper: Hyperparameters
        dev: Optional development questions for epoch selection

    Returns:
        The trained model
    """
    return PairwiseRanker(features, hyper).train(questions, dev)


def _with_texts(question: QAQuestion, source: Optional[QAQuestion]) -> QAQuestion:
    if source is None or len(source.candidates) != len(question.candidates):
        return question
    candidates = [
        candidate.copy(update={"text": original.text})
        for candidate, original in zip(question.candidates, source.candidates)
    ]
    return question.copy(update={"text": source.text, "candidates": candidates})


class RankingService:
    """
    Ranking service for the pipeline stages.
    """

    def __init__(self, config: PipelineConfig):
        """
        Initialize the ranking service.

        Args:
            config: The pipeline configuration
        """
        self.config = config
        self.feature_service = FeatureService(config)
        self.ranker_repository = RankerRepository()
        self.reranked_repository = RerankedRepository()

    def train(self) -> Path:
        """Train the ranker on every question of the feature table."""
        questions, names = self.feature_service.load_features()
        model = train_ranker(questions, names, self.config.ranker_hyper())
        return self.ranker_repository.save(model, self.config.output_dir / RANKER_FILE)

    def rerank(self) -> Path:
        """
        Rerank every question with the trained ranker.

        Question and answer texts come from qa_dataset when it is configured,
        since the feature table does not carry them.
        """
        questions, _ = self.feature_service.load_features()
        model = self.ranker_repository.load(self.config.models_path / RANKER_FILE)
        if self.config.qa_dataset is not None:
            dataset = self.feature_service.dataset_repository.load(self.config.qa_dataset)
            texts = {question.qid: question for question in dataset}
            questions = [_with_texts(question, texts.get(question.qid)) for question in questions]
        ranked = [(question.qid, rerank(question, model)) for question in questions]
        hits = sum(bool(candidates) and candidates[0].gold for _, candidates in ranked)
        logger.info(f"Reranked P@1 {hits / len(ranked):.4f}")
        return self.reranked_repository.save(ranked, self.config.output_dir / RERANKED_FILE)
