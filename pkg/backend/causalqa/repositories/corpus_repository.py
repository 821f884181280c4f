"""
Corpus repositories: parsed corpora, lemma tables and causal grammars.

The CoNLL and grammar parsers are imported where they are used, since the
corpus and extraction services build on these repositories.
"""
import logging
from pathlib import Path

from backend.causalqa.exceptions import DataFormatError, with_path
from backend.causalqa.models.corpus import ParsedSentence
from backend.causalqa.models.extraction import CausalRule
from backend.causalqa.repositories.base import BaseRepository
from backend.causalqa.repositories.file_store import file_store

logger = logging.getLogger(__name__)


class CorpusRepository(BaseRepository[list[ParsedSentence]]):
    """
    Dependency-parsed corpora in 10-column CoNLL format.

    Sentences without a `# doc_id` comment take the file stem as document id.
    """

    def __init__(self, normalize: bool = True):
        self.normalize = normalize

    def load(self, path: Path) -> list[ParsedSentence]:
        from backend.causalqa.services.corpus_service import parse_conllu

        path = file_store.require(path)
        try:
            sentences = parse_conllu(file_store.read_text(path), doc_id=path.stem, normalize=self.normalize)
        except DataFormatError as e:
            if e.path is not None:
                raise
            raise with_path(e, str(path)) from e
        logger.info(f"Loaded {len(sentences)} sentences from {path}")
        return sentences

    def save(self, item: list[ParsedSentence], path: Path) -> Path:
        from backend.causalqa.services.corpus_service import serialize_conllu

        return file_store.write_text(path, serialize_conllu(item))


class LemmaTableRepository(BaseRepository[dict[str, str]]):
    """Surface form to lemma tables: `surface<TAB>lemma` per line."""

    def load(self, path: Path) -> dict[str, str]:
        rows = file_store.read_rows(file_store.require(path), columns=2)
        return {fields[0].lower(): fields[1].lower() for _, fields in rows}

    def save(self, item: dict[str, str], path: Path) -> Path:
        return file_store.write_rows(path, [[surface, item[surface]] for surface in sorted(item)])


class GrammarRepository(BaseRepository[list[CausalRule]]):
    """Line-based causal trigger grammars."""

    def load(self, path: Path) -> list[CausalRule]:
        from backend.causalqa.services.extraction_service import load_grammar

        path = file_store.require(path)
        try:
            return load_grammar(file_store.read_text(path))
        except DataFormatError as e:
            raise with_path(e, str(path)) from e

    def save(self, item: list[CausalRule], path: Path) -> Path:
        lines = []
        for rule in item:
            cause = ".".join(str(step) for step in rule.cause_path)
            effect = ".".join(str(step) for step in rule.effect_path)
            lines.append(
                f"RULE {rule.rule_id} TRIGGER {' '.join(rule.trigger)} CAUSE {cause} "
                f"EFFECT {effect} ORDER {rule.order.value}\n"
            )
        return file_store.write_text(path, "".join(lines))
