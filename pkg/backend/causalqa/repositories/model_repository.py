"""
Model repositories: embedding tables, translation tables and ranker weights.
"""
import logging
from pathlib import Path

import numpy as np
from gensim.models import KeyedVectors

from backend.causalqa.exceptions import DataFormatError
from backend.causalqa.models.alignment import TranslationTable
from backend.causalqa.models.embedding import EmbeddingModel
from backend.causalqa.models.qa import RankerHyper, RankerModel
from backend.causalqa.repositories.base import BaseRepository
from backend.causalqa.repositories.file_store import file_store, format_float, format_prob

logger = logging.getLogger(__name__)

TARGET_SUFFIX = ".target.vec"
CONTEXT_SUFFIX = ".context.vec"


def vector_paths(stem: Path) -> tuple[Path, Path]:
    """The target and context files of the model stored under `stem`."""
    stem = Path(stem)
    return (
        stem.with_name(stem.name + TARGET_SUFFIX),
        stem.with_name(stem.name + CONTEXT_SUFFIX),
    )


def _write_vectors(path: Path, words: list[str], vectors: np.ndarray) -> Path:
    path = Path(path)
    keyed = KeyedVectors(vectors.shape[1], dtype=np.float64)
    keyed.add_vectors(words, vectors)
    # The count attribute pins the stored order to the vocabulary order.
    for rank, word in enumerate(words):
        keyed.set_vecattr(word, "count", len(words) - rank)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        keyed.save_word2vec_format(str(path), binary=False)
    except OSError as e:
        file_store.handle_error("write", path, e)
    return path


def _read_vectors(path: Path) -> tuple[list[str], np.ndarray]:
    path = file_store.require(path)
    try:
        keyed = KeyedVectors.load_word2vec_format(str(path), binary=False, datatype=np.float64)
    except (OSError, UnicodeDecodeError) as e:
        file_store.handle_error("read", path, e)
    except (ValueError, EOFError) as e:
        raise DataFormatError(f"malformed word2vec text: {e!s}", path=str(path)) from e
    return list(keyed.index_to_key), np.asarray(keyed.vectors, dtype=float)


class EmbeddingRepository(BaseRepository[EmbeddingModel]):
    """
    Two-table embedding models in word2vec text format.

    A model stored under stem `out/embed-causal` lives in
    `out/embed-causal.target.vec` and `out/embed-causal.context.vec`.
    """

    def load(self, path: Path) -> EmbeddingModel:
        target_path, context_path = vector_paths(path)
        words, targets = _read_vectors(target_path)
        context_words, contexts = _read_vectors(context_path)
        if context_words != words:
            raise DataFormatError(f"vocabulary differs from {target_path}", path=str(context_path))
        logger.info(f"Loaded embedding model {path} ({len(words)} words)")
        return EmbeddingModel(words, targets, contexts)

    def save(self, item: EmbeddingModel, path: Path) -> Path:
        target_path, context_path = vector_paths(path)
        _write_vectors(target_path, item.words, item.target_vectors)
        _write_vectors(context_path, item.words, item.context_vectors)
        return target_path


class TranslationTableRepository(BaseRepository[TranslationTable]):
    """Translation tables: dst, src, probability, sorted by source then probability."""

    def load(self, path: Path) -> TranslationTable:
        table = TranslationTable()
        for line_number, fields in file_store.read_rows(file_store.require(path), columns=3):
            try:
                value = float(fields[2])
            except ValueError as e:
                raise DataFormatError("probability must be a number", path=str(path), line_number=line_number) from e
            if not 0.0 <= value <= 1.0:
                raise DataFormatError("probability outside [0, 1]", path=str(path), line_number=line_number)
            table.assign(fields[0], fields[1], value)
        logger.info(f"Loaded translation table {path} ({len(table.src_vocab)} source lemmas)")
        return table

    def save(self, item: TranslationTable, path: Path) -> Path:
        rows = [[dst, src, format_prob(value)] for dst, src, value in item.entries()]
        return file_store.write_rows(path, rows)


class RankerRepository(BaseRepository[RankerModel]):
    """Ranker weights: feature name, weight."""

    def load(self, path: Path) -> RankerModel:
        weights = {}
        for line_number, fields in file_store.read_rows(file_store.require(path), columns=2):
            try:
                weights[fields[0]] = float(fields[1])
            except ValueError as e:
                raise DataFormatError("weight must be a number", path=str(path), line_number=line_number) from e
        return RankerModel(weights=weights, hyper=RankerHyper())

    def save(self, item: RankerModel, path: Path) -> Path:
        return file_store.write_rows(path, [[name, format_float(value)] for name, value in item.weights.items()])
