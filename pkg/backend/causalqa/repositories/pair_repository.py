"""
Pair repositories: extracted tuples, weighted pairs, parallel corpora,
labeled evaluation pairs and the look-up database.
"""
import logging
from pathlib import Path

from backend.causalqa.exceptions import DataFormatError
from backend.causalqa.models.evaluation import LabeledPair
from backend.causalqa.models.extraction import TupleRecord, WeightedPair
from backend.causalqa.models.lookup import LookupDB
from backend.causalqa.repositories.base import BaseRepository
from backend.causalqa.repositories.file_store import file_store, format_float

logger = logging.getLogger(__name__)

ParallelCorpus = list[tuple[list[str], list[str]]]


def _parse_int(value: str, path: Path, line_number: int, name: str) -> int:
    try:
        return int(value)
    except ValueError as e:
        raise DataFormatError(f"{name} must be an integer, found {value!r}", path=str(path), line_number=line_number) from e


def _parse_float(value: str, path: Path, line_number: int, name: str) -> float:
    try:
        return float(value)
    except ValueError as e:
        raise DataFormatError(f"{name} must be a number, found {value!r}", path=str(path), line_number=line_number) from e


class TupleRepository(BaseRepository[list[TupleRecord]]):
    """Tuple files: cause text, effect text, doc id, sentence index."""

    def load(self, path: Path) -> list[TupleRecord]:
        rows = file_store.read_rows(file_store.require(path), columns=4)
        return [
            TupleRecord(
                cause_text=fields[0],
                effect_text=fields[1],
                doc_id=fields[2],
                sent_index=_parse_int(fields[3], path, line_number, "sent_index"),
            )
            for line_number, fields in rows
        ]

    def save(self, item: list[TupleRecord], path: Path) -> Path:
        rows = [[r.cause_text, r.effect_text, r.doc_id, str(r.sent_index)] for r in item]
        return file_store.write_rows(path, rows)


class WeightedPairRepository(BaseRepository[list[WeightedPair]]):
    """Weighted pair files: cause, effect, freq, score, weight."""

    def load(self, path: Path) -> list[WeightedPair]:
        pairs = []
        for line_number, fields in file_store.read_rows(file_store.require(path), columns=5):
            try:
                pairs.append(
                    WeightedPair(
                        cause_lemma=fields[0],
                        effect_lemma=fields[1],
                        freq=_parse_int(fields[2], path, line_number, "freq"),
                        score=_parse_float(fields[3], path, line_number, "score"),
                        weight=_parse_float(fields[4], path, line_number, "weight"),
                    )
                )
            except ValueError as e:
                if isinstance(e, DataFormatError):
                    raise
                raise DataFormatError(f"invalid pair: {e}", path=str(path), line_number=line_number) from e
        return pairs

    def save(self, item: list[WeightedPair], path: Path) -> Path:
        rows = [
            [p.cause_lemma, p.effect_lemma, str(p.freq), format_float(p.score), f"{p.weight:.1f}"]
            for p in item
        ]
        return file_store.write_rows(path, rows)


class ParallelRepository(BaseRepository[ParallelCorpus]):
    """Parallel corpora: space-separated source lemmas, then destination lemmas."""

    def load(self, path: Path) -> ParallelCorpus:
        rows = file_store.read_rows(file_store.require(path), columns=2)
        return [(fields[0].split(), fields[1].split()) for _, fields in rows]

    def save(self, item: ParallelCorpus, path: Path) -> Path:
        return file_store.write_rows(path, [[" ".join(src), " ".join(dst)] for src, dst in item])


class LabeledPairRepository(BaseRepository[list[LabeledPair]]):
    """Labeled word pairs: w1, w2, label (1 causal, 0 other)."""

    def load(self, path: Path) -> list[LabeledPair]:
        pairs = []
        for line_number, fields in file_store.read_rows(file_store.require(path), columns=3):
            if fields[2] not in ("0", "1"):
                raise DataFormatError(
                    f"label must be 0 or 1, found {fields[2]!r}", path=str(path), line_number=line_number
                )
            pairs.append(LabeledPair(w1=fields[0], w2=fields[1], causal=fields[2] == "1"))
        logger.info(f"Loaded {len(pairs)} labeled pairs from {path}")
        return pairs

    def save(self, item: list[LabeledPair], path: Path) -> Path:
        return file_store.write_rows(path, [[p.w1, p.w2, "1" if p.causal else "0"] for p in item])


class LookupRepository(BaseRepository[LookupDB]):
    """Look-up databases: cause, effect, count."""

    def __init__(self, threshold: int = 100):
        self.threshold = threshold

    def load(self, path: Path) -> LookupDB:
        counts = {}
        for line_number, fields in file_store.read_rows(file_store.require(path), columns=3):
            count = _parse_int(fields[2], path, line_number, "count")
            if count < 1:
                raise DataFormatError("count must be at least 1", path=str(path), line_number=line_number)
            counts[(fields[0], fields[1])] = count
        return LookupDB(counts=counts, threshold=self.threshold)

    def save(self, item: LookupDB, path: Path) -> Path:
        rows = [[cause, effect, str(count)] for (cause, effect), count in sorted(item.counts.items())]
        return file_store.write_rows(path, rows)
