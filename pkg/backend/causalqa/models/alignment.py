"""
Alignment models: the IBM Model 1 lexical translation table.
"""
from collections import defaultdict
from typing import Optional

NULL_TOKEN = "<NULL>"
PROBABILITY_FLOOR = 1e-9


class TranslationTable:
    """
    Lexical translation probabilities t(dst | src).

    Entries are stored per source lemma; pairs that never co-occurred are
    absent and read as the floor when scoring.
    """

    def __init__(self, dst_vocab: Optional[set[str]] = None):
        self.t: dict[str, dict[str, float]] = defaultdict(dict)
        self.dst_vocab: set[str] = set(dst_vocab or ())
        self.perplexity_history: list[float] = []

    @property
    def src_vocab(self) -> set[str]:
        return set(self.t)

    def prob(self, dst: str, src: str) -> float:
        """t(dst | src), or 0.0 when the pair is unseen."""
        return self.t.get(src, {}).get(dst, 0.0)

    def assign(self, dst: str, src: str, value: float) -> None:
        self.t[src][dst] = value
        self.dst_vocab.add(dst)

    def source_total(self, src: str) -> float:
        return sum(self.t.get(src, {}).values())

    def entries(self) -> list[tuple[str, str, float]]:
        """All (dst, src, prob) entries sorted by source then descending probability."""
        rows = []
        for src in sorted(self.t):
            for dst, value in sorted(self.t[src].items(), key=lambda kv: (-kv[1], kv[0])):
                rows.append((dst, src, value))
        return rows
