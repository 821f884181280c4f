"""
Configuration models for the causal QA pipeline.
"""
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, Field, validator

from backend.causalqa.exceptions import ConfigError
from backend.causalqa.models.embedding import TrainConfig
from backend.causalqa.models.qa import MODEL_FEATURES, RankerHyper

BUNDLED_GRAMMAR = Path(__file__).resolve().parent.parent / "data" / "causal_grammar.txt"

# Artifact file names under output_dir (written) and model_dir (read back)
TUPLES_FILE = "tuples.tsv"
PARALLEL_FILE = "causal_parallel.tsv"
LEMMA_FILE = "lemmas.tsv"
PAIRS_FILE = "pairs.tsv"
LOOKUP_FILE = "lookup.tsv"
FEATURES_FILE = "features.tsv"
RANKER_FILE = "ranker.tsv"
RERANKED_FILE = "reranked.tsv"
SUMMARY_FILE = "eval-summary.tsv"


def embed_stem(directory: Path, mode: str) -> Path:
    return directory / f"embed-{mode}"


def align_path(directory: Path, mode: str) -> Path:
    return directory / f"align-{mode}.tsv"


def pr_path(directory: Path, model: str) -> Path:
    return directory / f"pr-{model}.tsv"


def correctness_path(directory: Path, system: str) -> Path:
    return directory / f"correct-{system}.tsv"


class PipelineConfig(BaseModel):
    """Flat configuration shared by every pipeline stage."""

    corpus: Optional[Path] = Field(
        default=None,
        description="Dependency-parsed corpus in 10-column CoNLL format",
    )
    grammar: Path = Field(
        default=BUNDLED_GRAMMAR,
        description="Causal trigger grammar",
    )
    output_dir: Path = Field(
        default=Path("out"),
        description="Directory receiving every artifact",
    )
    model_dir: Optional[Path] = Field(
        default=None,
        description="Directory holding trained models (defaults to output_dir)",
    )
    lemma_table: Optional[Path] = Field(
        default=None,
        description="Surface to lemma TSV for unparsed QA text",
    )
    labeled_pairs: Optional[Path] = Field(
        default=None,
        description="Labeled word pairs for the direct evaluation",
    )
    qa_dataset: Optional[Path] = Field(
        default=None,
        description="Causal questions with candidate answers",
    )
    qa_parallel: Optional[Path] = Field(
        default=None,
        description="Question to answer parallel TSV for the vanilla alignment model",
    )
    seed: Optional[int] = Field(
        default=None,
        description="Seed for every random choice (required for train/eval stages)",
    )
    dim: int = Field(default=200, ge=1)
    negatives: int = Field(default=5, ge=1)
    epochs: int = Field(default=5, ge=1)
    min_updates: int = Field(default=30_000, ge=0)
    learning_rate: float = Field(default=0.025, gt=0.0)
    min_count: int = Field(default=1, ge=1)
    window: int = Field(default=5, ge=1)
    deterministic: bool = True
    workers: int = Field(default=1, ge=1)
    align_iterations: int = Field(default=5, ge=0)
    lookup_threshold: int = Field(default=100, ge=1)
    ranker_c: float = Field(default=1.0, gt=0.0)
    ranker_epochs: int = Field(default=20, ge=1)
    folds: int = Field(default=5, ge=3)
    bootstrap_iterations: int = Field(default=10000, ge=1)
    features: list[str] = Field(
        default_factory=list,
        description="Model names whose features join the CR score",
    )
    system: str = Field(default="", description="Name of the evaluated system")
    baseline: str = Field(default="CR", description="System compared against")

    @validator("features", pre=True)
    def split_feature_list(cls, v):
        if isinstance(v, str):
            return [name.strip() for name in v.replace("+", ",").split(",") if name.strip()]
        return v

    @validator("features")
    def validate_feature_models(cls, v):
        unknown = [name for name in v if name != "CR" and name not in MODEL_FEATURES]
        if unknown:
            raise ValueError(f"Unknown feature models: {', '.join(unknown)}")
        return [name for name in v if name != "CR"]

    @property
    def models_path(self) -> Path:
        return self.model_dir or self.output_dir

    @property
    def system_name(self) -> str:
        return self.system or "+".join(["CR", *self.features])

    @property
    def run_seed(self) -> int:
        """The configured seed, 1 when none is set."""
        return self.seed if self.seed is not None else 1

    def require(self, key: str, command: str) -> Path:
        """
        Get a path-valued key that a command cannot run without.

        Args:
            key: The configuration key
            command: The command needing it, used in the error message

        Returns:
            The configured path

        Raises:
            ConfigError: If the key is not set
        """
        value = getattr(self, key)
        if value is None:
            raise ConfigError([f"missing required key {key!r} for {command}"])
        return Path(value)

    def train_config(self) -> TrainConfig:
        """Skip-gram settings derived from this configuration."""
        return TrainConfig(
            dim=self.dim,
            negatives=self.negatives,
            epochs=self.epochs,
            min_updates=self.min_updates,
            learning_rate=self.learning_rate,
            min_count=self.min_count,
            window=self.window,
            seed=self.run_seed,
            deterministic=self.deterministic,
            workers=self.workers,
        )

    def ranker_hyper(self) -> RankerHyper:
        """Ranker settings derived from this configuration."""
        return RankerHyper(
            c=self.ranker_c,
            epochs=self.ranker_epochs,
            seed=self.run_seed,
        )
