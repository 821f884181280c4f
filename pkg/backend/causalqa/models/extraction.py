"""
Extraction models: causal mentions, causal tuples, grammar rules and weighted pairs.
"""
from enum import Enum

from pydantic import BaseModel, Field, validator

QUANTILE_WEIGHTS = (1.0, 0.8, 0.6, 0.4, 0.2)


class MentionKind(str, Enum):
    NP = "NP"
    CLAUSE = "CLAUSE"


class CausalMention(BaseModel):
    """A noun phrase or clause that can fill a cause or effect slot."""

    head_index: int = Field(ge=1)
    span: frozenset[int] = Field(description="Token indices covered by the mention")
    kind: MentionKind

    @validator("span")
    def span_must_contain_head(cls, v, values):
        head = values.get("head_index")
        if head is not None and head not in v:
            raise ValueError(f"Mention span must contain its head {head}")
        if any(index < 1 for index in v):
            raise ValueError("Mention span indices must be positive")
        return v


class RuleOrder(str, Enum):
    CAUSE_FIRST = "cause-first"
    EFFECT_FIRST = "effect-first"
    ANY = "any"


class PathStep(BaseModel):
    """One hop of a grammar path: to a child (down) or to the head (up)."""

    down: bool
    labels: list[str] = Field(description="Alternatives, tried in order")

    def __str__(self) -> str:
        return (">" if self.down else "<") + "|".join(self.labels)


class CausalRule(BaseModel):
    """A trigger pattern with the dependency paths to its two arguments."""

    rule_id: str
    trigger: list[str] = Field(description="Lemma sequence anchoring the rule")
    cause_path: list[PathStep]
    effect_path: list[PathStep]
    order: RuleOrder = RuleOrder.CAUSE_FIRST

    @validator("trigger")
    def trigger_must_not_be_empty(cls, v):
        if not v:
            raise ValueError("Trigger phrase cannot be empty")
        return [word.lower() for word in v]


class CausalTuple(BaseModel):
    """A (cause mention, effect mention) pair found through a trigger."""

    cause: CausalMention
    effect: CausalMention
    trigger: list[int] = Field(description="Token indices of the trigger phrase")
    doc_id: str = ""
    sent_index: int = 0
    rule_id: str = ""

    @validator("effect")
    def spans_must_be_disjoint(cls, v, values):
        cause = values.get("cause")
        if cause is not None and cause.span & v.span:
            raise ValueError("Cause and effect spans must be disjoint")
        return v

    @validator("trigger")
    def trigger_must_not_be_empty(cls, v):
        if not v:
            raise ValueError("Trigger span cannot be empty")
        return v

    @property
    def sentence_ref(self) -> tuple[str, int]:
        return (self.doc_id, self.sent_index)


class WeightedPair(BaseModel):
    """A decomposed (cause lemma, effect lemma) training datum."""

    cause_lemma: str
    effect_lemma: str
    freq: int = Field(ge=1, description="Number of source tuples producing the pair")
    score: float = Field(default=0.0, description="PMI times log-frequency score")
    weight: float = Field(default=1.0, description="Quantile weight used in training")

    @validator("weight")
    def weight_must_be_a_quantile_weight(cls, v):
        if not any(abs(v - allowed) < 1e-9 for allowed in QUANTILE_WEIGHTS):
            raise ValueError(f"Weight must be one of {QUANTILE_WEIGHTS}")
        return v

    @property
    def key(self) -> tuple[str, str]:
        return (self.cause_lemma, self.effect_lemma)


class TupleRecord(BaseModel):
    """The surface form of an extracted tuple as written to the tuple file."""

    cause_text: str
    effect_text: str
    doc_id: str = ""
    sent_index: int = Field(default=0, ge=0)
