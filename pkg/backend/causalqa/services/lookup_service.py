"""
Look-up service: the causal pair frequency database.
"""
import logging
from collections.abc import Mapping, Sequence
from pathlib import Path

from backend.causalqa.models.config import LOOKUP_FILE, PipelineConfig
from backend.causalqa.models.lookup import LookupDB
from backend.causalqa.models.qa import QuestionRole
from backend.causalqa.repositories.pair_repository import LookupRepository
from backend.causalqa.services.weighting_service import WeightingService

logger = logging.getLogger(__name__)


def build_lookup(pair_freq: Mapping[tuple[str, str], int], threshold: int = 100) -> LookupDB:
    """
    Build the database from decomposed causal pair counts.

    Args:
        pair_freq: (cause lemma, effect lemma) to count
        threshold: Matches needed for the QA feature to fire

    Returns:
        The database
    """
    db = LookupDB(counts={pair: count for pair, count in pair_freq.items() if count > 0}, threshold=threshold)
    logger.info(f"Built look-up database with {len(db)} pairs")
    return db


def lookup_count(db: LookupDB, cause: str, effect: str) -> int:
    """Stored count of the directional pair, 0 if absent."""
    return db.counts.get((cause, effect), 0)


def lookup_feature(
    db: LookupDB,
    q_lemmas: Sequence[str],
    a_lemmas: Sequence[str],
    direction: QuestionRole,
) -> int:
    """
    Whether question and answer words co-occur often enough as causal pairs.

    Args:
        db: The database
        q_lemmas: Question lemmas
        a_lemmas: Answer lemmas
        direction: Which role the question text plays

    Returns:
        1 if the summed cross-product count reaches the threshold, else 0
    """
    if direction == QuestionRole.QUESTION_IS_EFFECT:
        causes, effects = a_lemmas, q_lemmas
    else:
        causes, effects = q_lemmas, a_lemmas
    total = sum(lookup_count(db, cause, effect) for cause in causes for effect in effects)
    return 1 if total >= db.threshold else 0


class LookupService:
    """
    Look-up service for the pipeline stages.
    """

    def __init__(self, config: PipelineConfig):
        """
        Initialize the look-up service.

        Args:
            config: The pipeline configuration
        """
        self.config = config
        self.weighting_service = WeightingService(config)
        self.lookup_repository = LookupRepository(config.lookup_threshold)

    def build(self) -> Path:
        """
        Build the database from the weighted pairs in model_dir and save it.

        Returns:
            The look-up file under output_dir
        """
        weighted = self.weighting_service.load_pairs()
        db = build_lookup({pair.key: pair.freq for pair in weighted}, self.config.lookup_threshold)
        return self.lookup_repository.save(db, self.config.output_dir / LOOKUP_FILE)

    def load(self) -> LookupDB:
        return self.lookup_repository.load(self.config.models_path / LOOKUP_FILE)
