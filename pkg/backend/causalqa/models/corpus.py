"""
Corpus models: dependency-parsed tokens and sentences, and the lemma filter.
"""
from collections.abc import Iterable

from pydantic import BaseModel, Field, validator

# Penn Treebank prefixes folded onto the coarse tags the filters work with.
PENN_COARSE = {
    "NN": "NOUN",
    "VB": "VERB",
    "JJ": "ADJ",
}
UD_COARSE = {
    "PROPN": "NOUN",
}

CONTENT_POS = frozenset({"NOUN", "VERB", "ADJ"})


class Token(BaseModel):
    """A single token of a dependency-parsed sentence."""

    index: int = Field(ge=1, description="1-based position in the sentence")
    surface: str
    lemma: str
    pos: str = Field(description="POS tag as found in the corpus (column 4)")
    head: int = Field(ge=0, description="Index of the parent token, 0 for root")
    deprel: str = Field(description="Dependency label of the edge to the head")

    @validator("deprel")
    def deprel_must_not_be_empty(cls, v):
        if not v or not v.strip():
            raise ValueError("Dependency label cannot be empty")
        return v.strip()

    @property
    def coarse_pos(self) -> str:
        """The POS folded onto NOUN/VERB/ADJ where possible, else the raw tag."""
        if self.pos in UD_COARSE:
            return UD_COARSE[self.pos]
        for prefix, coarse in PENN_COARSE.items():
            if self.pos.startswith(prefix):
                return coarse
        return self.pos


class ParsedSentence(BaseModel):
    """A sentence with lemmas, POS tags and a dependency tree."""

    tokens: list[Token]
    doc_id: str = ""
    sent_index: int = Field(default=0, ge=0)

    @validator("tokens")
    def indices_must_be_contiguous(cls, v):
        for position, token in enumerate(v, start=1):
            if token.index != position:
                raise ValueError(
                    f"Token indices must be contiguous from 1, found {token.index} "
                    f"at position {position}"
                )
        return v

    def __len__(self) -> int:
        return len(self.tokens)

    def token(self, index: int) -> Token:
        """Get a token by its 1-based index."""
        return self.tokens[index - 1]

    def child_map(self) -> dict[int, list[Token]]:
        """
        Map every head index to its dependents, in sentence order.

        Returns:
            A dictionary from head index (0 for the root) to child tokens
        """
        children: dict[int, list[Token]] = {}
        for token in self.tokens:
            children.setdefault(token.head, []).append(token)
        return children

    def root(self) -> Token:
        """The token attached to the artificial root."""
        return next(token for token in self.tokens if token.head == 0)

    def span_text(self, span: Iterable[int]) -> str:
        """Surface text of a set of token indices, in sentence order."""
        return " ".join(self.token(i).surface for i in sorted(span))

    @property
    def ref(self) -> tuple[str, int]:
        return (self.doc_id, self.sent_index)


class LemmaFilter(BaseModel):
    """Stopword and part-of-speech filter applied to lemmas."""

    stopwords: frozenset[str]
    keep_pos: frozenset[str] = Field(default=CONTENT_POS)

    @validator("stopwords")
    def stopwords_must_not_be_empty(cls, v):
        if not v:
            raise ValueError("Stopword list cannot be empty")
        return frozenset(word.lower() for word in v)

    def is_stopword(self, lemma: str) -> bool:
        return lemma.lower() in self.stopwords

    def keeps(self, token: Token) -> bool:
        """Check whether a token survives the filter."""
        return token.coarse_pos in self.keep_pos and not self.is_stopword(token.lemma)
