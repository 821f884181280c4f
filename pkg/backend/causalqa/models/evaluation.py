"""
Evaluation models: labeled word pairs, PR points and cross-validation folds.
"""
from pydantic import BaseModel, Field, validator


class LabeledPair(BaseModel):
    """A word pair labeled causal or other."""

    w1: str
    w2: str
    causal: bool


class PRPoint(BaseModel):
    """Precision and recall after the top `rank_cutoff` items."""

    rank_cutoff: int = Field(ge=1)
    precision: float = Field(ge=0.0, le=1.0)
    recall: float = Field(ge=0.0, le=1.0)


class FoldRound(BaseModel):
    """Fold roles for one cross-validation round."""

    test: int
    dev: int
    train: list[int]


class FoldPlan(BaseModel):
    """A partition of question ids into k folds, with rotating roles."""

    k: int = Field(default=5, ge=3)
    assignment: dict[str, int] = Field(description="Question id to fold number")
    rounds: list[FoldRound] = Field(default_factory=list)

    @validator("assignment")
    def folds_must_be_in_range(cls, v, values):
        k = values.get("k", 5)
        for qid, fold in v.items():
            if not 0 <= fold < k:
                raise ValueError(f"Fold {fold} of {qid} outside 0..{k - 1}")
        return v

    def fold_members(self, fold: int) -> list[str]:
        return [qid for qid, assigned in self.assignment.items() if assigned == fold]


class CrossValidationResult(BaseModel):
    """Per-question correctness on held-out folds and the overall P@1."""

    correct: dict[str, int] = Field(default_factory=dict)
    precision_at_1: float = 0.0
