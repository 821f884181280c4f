"""
Evaluation service: PR curves over labeled word pairs, precision-at-one with
k-fold cross-validation, and the paired bootstrap significance test.
"""
import logging
import math
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Optional

import numpy as np

from backend.causalqa.exceptions import UsageError
from backend.causalqa.models.config import SUMMARY_FILE, PipelineConfig, correctness_path, pr_path
from backend.causalqa.models.embedding import ScoreMode
from backend.causalqa.models.evaluation import (
    CrossValidationResult,
    FoldPlan,
    FoldRound,
    LabeledPair,
    PRPoint,
)
from backend.causalqa.models.qa import QACandidate, QAQuestion, RankerHyper
from backend.causalqa.repositories.pair_repository import LabeledPairRepository
from backend.causalqa.repositories.qa_repository import CorrectnessRepository
from backend.causalqa.repositories.report_repository import PRCurveRepository, SummaryRepository
from backend.causalqa.services.alignment_service import sentence_prob
from backend.causalqa.services.embedding_service import score_pair, word_similarity
from backend.causalqa.services.feature_service import FeatureService
from backend.causalqa.services.lookup_service import lookup_count
from backend.causalqa.services.ranking_service import top_is_gold, train_ranker

logger = logging.getLogger(__name__)

BOOTSTRAP_CHUNK = 1000
SCORING_MODELS = ("vEmbed", "cEmbed", "cEmbedBi", "cEmbedNoise", "cEmbedBiNoise", "cAlign", "LU", "random")


def pr_curve(
    scored: Sequence[tuple[LabeledPair, float]],
    group_ties: bool = False,
) -> list[PRPoint]:
    """
    Precision and recall at every rank cutoff.

    Args:
        scored: Labeled pairs with their scores
        group_ties: Only cut after the last pair of each run of equal scores

    Returns:
        One point per cutoff, ties ordered by input position; with
        group_ties, one point per distinct score

    Raises:
        ValueError: If there is no causal pair
    """
    labels = np.array([pair.causal for pair, _ in scored], dtype=bool)
    positives = int(labels.sum())
    if positives == 0:
        raise ValueError("PR curve needs at least one causal pair")
    scores = np.array([score for _, score in scored], dtype=float)
    order = np.argsort(-scores, kind="stable")
    hits = np.cumsum(labels[order])
    cutoffs = np.arange(1, len(order) + 1)
    if group_ties:
        ranked = scores[order]
        last = np.append(ranked[1:] != ranked[:-1], True)
        hits, cutoffs = hits[last], cutoffs[last]
    precision = hits / cutoffs
    recall = hits / positives
    return [
        PRPoint(rank_cutoff=int(k), precision=float(p), recall=float(r))
        for k, p, r in zip(cutoffs, precision, recall)
    ]


def pr_area(points: Sequence[PRPoint]) -> float:
    """
    Average precision: the mean of the precision values at the cutoffs where
    recall increases.

    Over a tie-grouped curve the area does not depend on the input order of
    equally scored pairs.
    """
    area = 0.0
    previous_recall = 0.0
    for point in points:
        if point.recall > previous_recall:
            area += point.precision * (point.recall - previous_recall)
            previous_recall = point.recall
    return area


def split_labeled_pairs(
    pairs: Sequence[LabeledPair],
    seed: int,
) -> tuple[list[LabeledPair], list[LabeledPair]]:
    """
    Split labeled pairs at random into a development and a test half.

    Returns:
        (dev, test); with an odd count the test half gets the extra pair
    """
    order = np.random.default_rng(seed).permutation(len(pairs))
    half = len(pairs) // 2
    dev = [pairs[i] for i in sorted(order[:half])]
    test = [pairs[i] for i in sorted(order[half:])]
    return dev, test


def precision_at_1(reranked: Sequence[Sequence[QACandidate]]) -> float:
    """
    Fraction of questions whose top-ranked candidate is gold.

    Raises:
        ValueError: If there are no questions
    """
    if not reranked:
        raise ValueError("Cannot compute P@1 over an empty question set")
    return sum(1 for candidates in reranked if candidates and candidates[0].gold) / len(reranked)


def kfold(qids: Sequence[str], k: int = 5, seed: int = 1) -> FoldPlan:
    """
    Assign questions to k folds and rotate fold roles.

    Round i tests on fold i, develops on fold (i + 1) mod k and trains on the rest.

    Raises:
        ValueError: If there are fewer questions than folds
    """
    if len(qids) < k:
        raise ValueError(f"Need at least {k} questions for {k} folds, got {len(qids)}")
    order = np.random.default_rng(seed).permutation(len(qids))
    assignment = {qids[index]: position % k for position, index in enumerate(order)}
    rounds = [
        FoldRound(
            test=i,
            dev=(i + 1) % k,
            train=[fold for fold in range(k) if fold not in (i, (i + 1) % k)],
        )
        for i in range(k)
    ]
    return FoldPlan(k=k, assignment=assignment, rounds=rounds)


def bootstrap_test(
    correct_a: Sequence[int],
    correct_b: Sequence[int],
    iterations: int = 10000,
    seed: int = 1,
) -> float:
    """
    One-tailed paired bootstrap test that system A beats system B.

    Args:
        correct_a: Per-question 0/1 correctness of A
        correct_b: Per-question 0/1 correctness of B, same question order
        iterations: Number of resamples
        seed: Random seed

    Returns:
        The fraction of resamples in which A does not beat B (ties count)

    Raises:
        ValueError: On empty or mismatched vectors
    """
    a = np.asarray(correct_a, dtype=float)
    b = np.asarray(correct_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"Correctness vectors differ in length: {len(a)} vs {len(b)}")
    if a.size == 0:
        raise ValueError("Correctness vectors cannot be empty")
    if iterations < 1:
        raise ValueError("iterations must be positive")

    rng = np.random.default_rng(seed)
    n = a.size
    not_better = 0
    remaining = iterations
    while remaining:
        chunk = min(BOOTSTRAP_CHUNK, remaining)
        indices = rng.integers(n, size=(chunk, n))
        differences = a[indices].mean(axis=1) - b[indices].mean(axis=1)
        not_better += int((differences <= 0).sum())
        remaining -= chunk
    return not_better / iterations


def cross_validate(
    questions: Sequence[QAQuestion],
    features: Sequence[str],
    hyper: Optional[RankerHyper] = None,
    seed: int = 1,
    k: int = 5,
) -> CrossValidationResult:
    """
    k-fold evaluation of the ranker: train on k - 2 folds, select the epoch on
    the dev fold, test on the held-out fold.

    Args:
        questions: Questions with normalized features
        features: Feature names the ranker uses
        hyper: Ranker hyperparameters
        seed: Seed for the fold plan
        k: Number of folds

    Returns:
        Per-question correctness over all test folds and the overall P@1
    """
    hyper = hyper or RankerHyper(seed=seed)
    plan = kfold([question.qid for question in questions], k, seed)
    correct: dict[str, int] = {}
    for round_number, fold_round in enumerate(plan.rounds, start=1):
        train_folds = set(fold_round.train)
        train = [q for q in questions if plan.assignment[q.qid] in train_folds]
        dev = [q for q in questions if plan.assignment[q.qid] == fold_round.dev]
        test = [q for q in questions if plan.assignment[q.qid] == fold_round.test]
        model = train_ranker(train, features, hyper, dev)
        hits = 0
        for question in test:
            correct[question.qid] = int(top_is_gold(question, model))
            hits += correct[question.qid]
        logger.info(f"Fold round {round_number}/{plan.k}: test P@1 {hits / len(test):.4f}")

    ordered = {question.qid: correct[question.qid] for question in questions}
    precision = sum(ordered.values()) / len(ordered)
    logger.info(f"Cross-validated P@1 {precision:.4f} over {len(ordered)} questions")
    return CrossValidationResult(correct=ordered, precision_at_1=precision)


def random_baseline(questions: Sequence[QAQuestion], seed: int = 1) -> dict[str, int]:
    """
    Correctness of a uniformly random ranking of each question's candidates.

    Returns:
        Question id to 1 if the randomly chosen top candidate is gold, else 0
    """
    rng = np.random.default_rng(seed)
    correct = {}
    for question in questions:
        if not question.candidates:
            correct[question.qid] = 0
            continue
        top = question.candidates[int(rng.integers(len(question.candidates)))]
        correct[question.qid] = int(top.gold)
    return correct


class EvaluationService:
    """
    Evaluation service for the pipeline stages.

    Scores labeled word pairs with one trained model, cross-validates the
    configured QA system and tests it against a baseline.
    """

    def __init__(self, config: PipelineConfig):
        """
        Initialize the evaluation service.

        Args:
            config: The pipeline configuration
        """
        self.config = config
        self.feature_service = FeatureService(config)
        self.embedding_service = self.feature_service.embedding_service
        self.alignment_service = self.feature_service.alignment_service
        self.lookup_service = self.feature_service.lookup_service
        self.labeled_pair_repository = LabeledPairRepository()
        self.pr_curve_repository = PRCurveRepository()
        self.correctness_repository = CorrectnessRepository()
        self.summary_repository = SummaryRepository()

    def pair_scorer(self, model: str) -> Callable[[str, str], Optional[float]]:
        """
        A directional (w1 causes w2) scorer for one model; None marks a missing score.

        Raises:
            UsageError: If the model is not one of SCORING_MODELS
        """
        if model == "vEmbed":
            vanilla = self.embedding_service.load("vanilla")
            return lambda a, b: word_similarity(vanilla, a, b).value
        if model in ("cEmbed", "cEmbedNoise"):
            forward = self.embedding_service.load("causal" if model == "cEmbed" else "causal-noise")
            return lambda a, b: score_pair(forward, None, a, b, ScoreMode.UNI).value
        if model in ("cEmbedBi", "cEmbedBiNoise"):
            prefix = "causal" if model == "cEmbedBi" else "causal-noise"
            forward = self.embedding_service.load(prefix)
            reverse = self.embedding_service.load(f"{prefix}-reverse")
            return lambda a, b: score_pair(forward, reverse, a, b, ScoreMode.BI).value
        if model == "cAlign":
            table = self.alignment_service.load("causal")
            return lambda a, b: sentence_prob(table, [a], [b])
        if model == "LU":
            db = self.lookup_service.load()
            return lambda a, b: float(lookup_count(db, a, b))
        if model == "random":
            rng = np.random.default_rng(self.config.run_seed)
            return lambda a, b: float(rng.random())
        raise UsageError(f"unknown scoring model {model!r}; choose from {', '.join(SCORING_MODELS)}")

    def score_pairs(self, model: Optional[str]) -> Path:
        """
        Rank the test half of the labeled pairs with one model and write its PR curve.

        Pairs the model cannot score rank last. The logged area groups tied
        scores, so it does not depend on the order of the labeled pair file.
        """
        if model is None:
            raise UsageError("score-pairs needs --model")
        scorer = self.pair_scorer(model)
        labeled = self.labeled_pair_repository.load(self.config.require("labeled_pairs", "score-pairs"))
        _, test = split_labeled_pairs(labeled, self.config.run_seed)
        scored: list[tuple[LabeledPair, float]] = []
        for pair in test:
            score = scorer(pair.w1, pair.w2)
            scored.append((pair, -math.inf if score is None else score))
        area = pr_area(pr_curve(scored, group_ties=True))
        logger.info(f"{model}: PR area {area:.4f} over {len(test)} test pairs")
        return self.pr_curve_repository.save(pr_curve(scored), pr_path(self.config.output_dir, model))

    def evaluate_qa(self) -> Path:
        """Cross-validate the configured system and record its per-question correctness."""
        questions, names = self.feature_service.load_features()
        system = self.config.system_name
        if system == "random":
            correct = random_baseline(questions, self.config.run_seed)
            precision = sum(correct.values()) / len(correct)
        else:
            result = cross_validate(
                questions, names, self.config.ranker_hyper(), self.config.run_seed, self.config.folds
            )
            correct, precision = result.correct, result.precision_at_1
        logger.info(f"{system}: P@1 {precision:.4f}")
        self.correctness_repository.save(correct, correctness_path(self.config.output_dir, system))
        return self.summary_repository.save([(system, precision, None)], self.config.output_dir / SUMMARY_FILE)

    def significance(self) -> Path:
        """Bootstrap test of the configured system against the baseline."""
        system, baseline = self.config.system_name, self.config.baseline
        ours = self.correctness_repository.load(correctness_path(self.config.models_path, system))
        theirs = self.correctness_repository.load(correctness_path(self.config.models_path, baseline))
        shared = [qid for qid in ours if qid in theirs]
        if len(shared) != len(ours) or len(shared) != len(theirs):
            logger.warning(f"Comparing {len(shared)} shared questions of {system} and {baseline}")
        p_value = bootstrap_test(
            [ours[qid] for qid in shared],
            [theirs[qid] for qid in shared],
            self.config.bootstrap_iterations,
            self.config.run_seed,
        )
        precision = sum(ours[qid] for qid in shared) / len(shared) if shared else 0.0
        logger.info(f"{system} vs {baseline}: p = {p_value:.4f}")
        return self.summary_repository.save([(system, precision, p_value)], self.config.output_dir / SUMMARY_FILE)
