"""
QA models: questions, candidate answers and the linear ranker.
"""
from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field, validator

MIN_CANDIDATES = 4


class QuestionRole(str, Enum):
    """Which side of the causal relation the question text plays."""

    QUESTION_IS_EFFECT = "QUESTION_IS_EFFECT"
    QUESTION_IS_CAUSE = "QUESTION_IS_CAUSE"


class EmbeddingVariant(str, Enum):
    VANILLA = "VANILLA"
    CAUSAL = "CAUSAL"


class QACandidate(BaseModel):
    """A candidate answer with its retrieval score and reranking features."""

    text: str
    gold: bool = False
    cr_score: Optional[float] = None
    features: dict[str, Optional[float]] = Field(
        default_factory=dict,
        description="Named feature values; None marks a missing value",
    )


class QAQuestion(BaseModel):
    """A causal question with its candidate answers in retrieval order."""

    qid: str
    text: str
    direction: QuestionRole = QuestionRole.QUESTION_IS_EFFECT
    candidates: list[QACandidate] = Field(default_factory=list)

    @property
    def gold_count(self) -> int:
        return sum(1 for candidate in self.candidates if candidate.gold)


class RankerHyper(BaseModel):
    """Pairwise hinge ranker hyperparameters."""

    c: float = Field(default=1.0, gt=0.0, description="Margin penalty C")
    epochs: int = Field(default=20, ge=1)
    seed: int = 1


class RankerModel(BaseModel):
    """Linear scoring weights over named features."""

    weights: dict[str, float] = Field(default_factory=dict)
    hyper: RankerHyper = Field(default_factory=RankerHyper)

    @validator("weights")
    def weights_must_be_finite(cls, v):
        for name, weight in v.items():
            if weight != weight or weight in (float("inf"), float("-inf")):
                raise ValueError(f"Weight for {name} must be finite")
        return v


CR_FEATURE = "cr"
EMBEDDING_MODELS = ("vEmbed", "cEmbed", "cEmbedBi", "cEmbedNoise", "cEmbedBiNoise")
ALIGNMENT_MODELS = ("cAlign", "vAlign")
LOOKUP_MODELS = ("LU",)


def _model_features() -> dict[str, tuple[str, ...]]:
    features: dict[str, tuple[str, ...]] = {}
    for name in EMBEDDING_MODELS:
        features[name] = tuple(f"{name}_{kind}" for kind in ("max", "min", "avg", "overall"))
    for name in ALIGNMENT_MODELS:
        features[name] = (f"{name}_prob",)
    for name in LOOKUP_MODELS:
        features[name] = (f"{name}_match",)
    return features


MODEL_FEATURES = _model_features()

# Systems compared in the QA evaluation, by the models they add to CR.
COMBINATIONS: dict[str, tuple[str, ...]] = {
    "CR": (),
    "CR+vEmbed": ("vEmbed",),
    "CR+vAlign": ("vAlign",),
    "CR+LU": ("LU",),
    "CR+cEmbedBi": ("cEmbedBi",),
    "CR+cEmbedBiNoise": ("cEmbedBiNoise",),
    "CR+cAlign": ("cAlign",),
    "CR+vEmbed+cEmbedBi": ("vEmbed", "cEmbedBi"),
    "CR+vEmbed+cEmbedBiNoise": ("vEmbed", "cEmbedBiNoise"),
    "CR+vEmbed+cEmbedBi+LU": ("vEmbed", "cEmbedBi", "LU"),
    "CR+vEmbed+cAlign": ("vEmbed", "cAlign"),
    "CR+vEmbed+cEmbedBi+cEmbedBiNoise": ("vEmbed", "cEmbedBi", "cEmbedBiNoise"),
}


def feature_registry(models: list[str]) -> list[str]:
    """
    Feature names for CR plus the given models, in manifest order.

    Args:
        models: Model names, e.g. ["vEmbed", "cEmbedBi"]

    Returns:
        The ordered list of feature names
    """
    names = [CR_FEATURE]
    for model in models:
        for feature in MODEL_FEATURES[model]:
            if feature not in names:
                names.append(feature)
    return names
