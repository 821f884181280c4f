"""
Pipeline stages, one per subcommand.

Every stage reads its inputs from the paths in the configuration, writes its
artifacts under output_dir and returns the main path it wrote. The work is
done by the services; a stage only picks the service call for its subcommand.
"""
from collections.abc import Callable
from pathlib import Path
from typing import Optional

from backend.causalqa.models.config import PipelineConfig
from backend.causalqa.services.alignment_service import AlignmentService
from backend.causalqa.services.embedding_service import EmbeddingService
from backend.causalqa.services.evaluation_service import EvaluationService
from backend.causalqa.services.extraction_service import ExtractionService
from backend.causalqa.services.feature_service import FeatureService
from backend.causalqa.services.lookup_service import LookupService
from backend.causalqa.services.ranking_service import RankingService
from backend.causalqa.services.weighting_service import WeightingService


def run_extract(config: PipelineConfig, mode: Optional[str] = None) -> Path:
    """Extract causal tuples, the causal parallel corpus and the lemma table."""
    return ExtractionService(config).run()


def run_weight(config: PipelineConfig, mode: Optional[str] = None) -> Path:
    """Decompose, score and weight the causal pairs of the corpus."""
    return WeightingService(config).run()


def run_train_embed(config: PipelineConfig, mode: Optional[str] = None) -> Path:
    """Train one skip-gram model: vanilla over the corpus or causal over the pairs."""
    return EmbeddingService(config).train(mode)


def run_train_align(config: PipelineConfig, mode: Optional[str] = None) -> Path:
    """Train IBM Model 1 cause-to-effect, or answer-to-question for the vanilla baseline."""
    return AlignmentService(config).train(mode)


def run_build_lookup(config: PipelineConfig, mode: Optional[str] = None) -> Path:
    """Build the look-up database from the weighted pairs."""
    return LookupService(config).build()


def run_score_pairs(config: PipelineConfig, model: Optional[str] = None) -> Path:
    """Rank the test half of the labeled pairs with one model and write its PR curve."""
    return EvaluationService(config).score_pairs(model)


def run_qa_features(config: PipelineConfig, mode: Optional[str] = None) -> Path:
    """Compute normalized CR and model features for every candidate answer."""
    return FeatureService(config).featurize()


def run_train_rank(config: PipelineConfig, mode: Optional[str] = None) -> Path:
    """Train the ranker on every question of the feature table."""
    return RankingService(config).train()


def run_rerank(config: PipelineConfig, mode: Optional[str] = None) -> Path:
    """Rerank every question with the trained ranker."""
    return RankingService(config).rerank()


def run_eval_qa(config: PipelineConfig, mode: Optional[str] = None) -> Path:
    """Cross-validate the configured system and record its per-question correctness."""
    return EvaluationService(config).evaluate_qa()


def run_significance(config: PipelineConfig, mode: Optional[str] = None) -> Path:
    """Bootstrap test of the configured system against the baseline."""
    return EvaluationService(config).significance()


STAGES: dict[str, Callable[[PipelineConfig, Optional[str]], Path]] = {
    "extract": run_extract,
    "weight": run_weight,
    "train-embed": run_train_embed,
    "train-align": run_train_align,
    "build-lookup": run_build_lookup,
    "score-pairs": run_score_pairs,
    "qa-features": run_qa_features,
    "train-rank": run_train_rank,
    "rerank": run_rerank,
    "eval-qa": run_eval_qa,
    "significance": run_significance,
}
