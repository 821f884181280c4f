"""
Look-up model: frequency database over extracted causal pairs.
"""
from pydantic import BaseModel, Field, validator


class LookupDB(BaseModel):
    """Directional counts of (cause lemma, effect lemma) pairs."""

    counts: dict[tuple[str, str], int] = Field(default_factory=dict)
    threshold: int = Field(
        default=100,
        ge=1,
        description="Total matches needed before a candidate counts as causal",
    )

    @validator("counts")
    def counts_must_be_positive(cls, v):
        for pair, count in v.items():
            if count < 1:
                raise ValueError(f"Count for {pair} must be at least 1")
        return v

    def __len__(self) -> int:
        return len(self.counts)
