"""
Embedding models: training configuration, the two-table vector model and pair scores.
"""
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field


class TrainMode(str, Enum):
    VANILLA = "vanilla"
    CAUSAL = "causal"
    CAUSAL_REVERSE = "causal-reverse"
    CAUSAL_NOISE = "causal-noise"
    CAUSAL_NOISE_REVERSE = "causal-noise-reverse"

    @property
    def reverse(self) -> bool:
        return self in (TrainMode.CAUSAL_REVERSE, TrainMode.CAUSAL_NOISE_REVERSE)

    @property
    def weighted(self) -> bool:
        return self in (TrainMode.CAUSAL_NOISE, TrainMode.CAUSAL_NOISE_REVERSE)


class ScoreMode(str, Enum):
    UNI = "UNI"
    BI = "BI"


class TrainConfig(BaseModel):
    """Skip-gram with negative sampling hyperparameters."""

    dim: int = Field(default=200, ge=1, description="Vector dimensionality")
    negatives: int = Field(default=5, ge=1, description="Negative samples per positive")
    epochs: int = Field(default=5, ge=1, description="Passes over the pair stream")
    min_updates: int = Field(
        default=30_000,
        ge=0,
        description="Floor on total pair presentations; short streams get extra epochs to reach it",
    )
    learning_rate: float = Field(
        default=0.025,
        gt=0.0,
        description="Initial learning rate, decayed linearly to 0 over all presentations",
    )
    min_count: int = Field(default=1, ge=1, description="Vocabulary frequency floor")
    window: int = Field(default=5, ge=1, description="Linear window (vanilla mode only)")
    seed: int = 1
    deterministic: bool = Field(
        default=True,
        description="Single-threaded seeded training with byte-identical output",
    )
    workers: int = Field(
        default=1,
        ge=1,
        description="Threads used when deterministic is off",
    )


class PairScore(BaseModel):
    """A cosine-based score, or MISSING when a lemma has no vector."""

    value: Optional[float] = None

    @property
    def missing(self) -> bool:
        return self.value is None

    @classmethod
    def MISSING(cls) -> "PairScore":
        return cls(value=None)


class EmbeddingModel:
    """
    Two vector tables over one vocabulary.

    For causal models the target table holds words in their cause role and the
    context table holds words in their effect role. For the vanilla model the
    target table holds the word vectors proper.
    """

    def __init__(
        self,
        vocab: list[str],
        target_vectors: np.ndarray,
        context_vectors: np.ndarray,
    ):
        if target_vectors.shape != context_vectors.shape:
            raise ValueError("Target and context tables must have the same shape")
        if target_vectors.shape[0] != len(vocab):
            raise ValueError("Vector tables must have one row per vocabulary entry")
        self.words = list(vocab)
        self.vocab = {word: i for i, word in enumerate(self.words)}
        self.target_vectors = target_vectors
        self.context_vectors = context_vectors

    @property
    def dim(self) -> int:
        return int(self.target_vectors.shape[1])

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.vocab

    def target(self, word: str) -> Optional[np.ndarray]:
        index = self.vocab.get(word)
        return None if index is None else self.target_vectors[index]

    def context(self, word: str) -> Optional[np.ndarray]:
        index = self.vocab.get(word)
        return None if index is None else self.context_vectors[index]

    def is_finite(self) -> bool:
        return bool(
            np.isfinite(self.target_vectors).all()
            and np.isfinite(self.context_vectors).all()
        )
