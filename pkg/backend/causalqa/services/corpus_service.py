"""
Corpus service: reading dependency-parsed text and filtering lemmas.

Sentences arrive as 10-column CoNLL blocks. Only the columns the pipeline uses
are kept (index, surface, lemma, POS, head, label). Modern case-marked parses
are rewritten into collapsed prepositional labels so the extraction grammar
sees one label scheme.
"""
import logging
import re
from collections import Counter, defaultdict
from collections.abc import Iterable, Sequence
from functools import lru_cache
from pathlib import Path
from typing import Optional

from backend.causalqa.exceptions import CorpusStructureError, DataFormatError
from backend.causalqa.models.config import LEMMA_FILE, PipelineConfig
from backend.causalqa.models.corpus import LemmaFilter, ParsedSentence, Token
from backend.causalqa.repositories.corpus_repository import CorpusRepository, LemmaTableRepository

logger = logging.getLogger(__name__)

STOPWORDS_FILE = Path(__file__).resolve().parent.parent / "data" / "stopwords.txt"
CONLL_COLUMNS = 10

# UD labels with a direct collapsed-dependency counterpart
LABEL_MAP = {
    "compound": "nn",
    "obj": "dobj",
    "nsubj:pass": "nsubjpass",
    "aux:pass": "auxpass",
    "obl:agent": "agent",
    "csubj:pass": "csubjpass",
}
CASE_MARKED = ("nmod", "obl")
MULTIWORD_CASE = ("fixed", "mwe", "goeswith")

RAW_TOKEN = re.compile(r"[^\W_]+(?:['’][^\W_]+)?")


@lru_cache(maxsize=1)
def load_stopwords() -> frozenset[str]:
    """
    Load the bundled English function-word list.

    Returns:
        The stopword set, lowercased
    """
    words = set()
    for line in STOPWORDS_FILE.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.lower())
    return frozenset(words)


def default_filter() -> LemmaFilter:
    """The lemma filter used throughout the pipeline."""
    return LemmaFilter(stopwords=load_stopwords())


def _sentence_name(doc_id: str, sent_index: int) -> str:
    return f"sentence {doc_id or '<unnamed>'}#{sent_index}"


def validate_structure(tokens: Sequence[Token], doc_id: str, sent_index: int) -> None:
    """
    Check the dependency-tree invariants of one sentence.

    Args:
        tokens: The sentence tokens in order
        doc_id: Document identifier, used in error messages
        sent_index: Sentence position, used in error messages

    Raises:
        CorpusStructureError: On indices other than 1..n, out-of-range heads,
            a root count other than one, or a dependency cycle
    """
    name = _sentence_name(doc_id, sent_index)
    length = len(tokens)
    indices = [token.index for token in tokens]
    if indices != list(range(1, length + 1)):
        raise CorpusStructureError(
            f"{name}: token indices must run 1..{length} in order, found {indices}"
        )
    for token in tokens:
        if not 0 <= token.head <= length:
            raise CorpusStructureError(
                f"{name}: token {token.index} has head {token.head} beyond "
                f"sentence length {length}"
            )
        if token.head == token.index:
            raise CorpusStructureError(f"{name}: token {token.index} heads itself")

    roots = [token.index for token in tokens if token.head == 0]
    if len(roots) != 1:
        raise CorpusStructureError(f"{name}: expected one root, found {len(roots)}")

    heads = {token.index: token.head for token in tokens}
    for token in tokens:
        current, steps = token.index, 0
        while current != 0:
            current = heads[current]
            steps += 1
            if steps > length:
                raise CorpusStructureError(
                    f"{name}: dependency cycle through token {token.index}"
                )


def _token_from_fields(fields: list[str], line_number: int) -> Token:
    try:
        index = int(fields[0])
        head = int(fields[6])
    except ValueError as e:
        raise DataFormatError(
            f"non-integer index or head ({fields[0]!r}, {fields[6]!r})",
            line_number=line_number,
        ) from e
    try:
        return Token(
            index=index,
            surface=fields[1],
            lemma=fields[2] if fields[2] != "_" else fields[1].lower(),
            pos=fields[3],
            head=head,
            deprel=fields[7],
        )
    except ValueError as e:
        raise DataFormatError(f"invalid token: {e}", line_number=line_number) from e


def parse_conllu(
    stream: str,
    doc_id: str = "",
    normalize: bool = True,
) -> list[ParsedSentence]:
    """
    Parse 10-column CoNLL text into sentences.

    Comment lines may carry `# doc_id = X` (or `# newdoc id = X`) and
    `# sent_index = N`; otherwise sentences are numbered from 0 within the
    document. Multi-word token ranges and empty nodes are skipped.

    Args:
        stream: The file contents
        doc_id: Document identifier used until a comment sets one
        normalize: Rewrite case-marked labels into collapsed prepositional labels

    Returns:
        One ParsedSentence per block

    Raises:
        DataFormatError: If a token line does not have 10 columns
        CorpusStructureError: If a sentence is not a well-formed tree
    """
    sentences: list[ParsedSentence] = []
    current_doc = doc_id
    next_index = 0
    explicit_index: Optional[int] = None
    tokens: list[Token] = []

    def flush() -> None:
        nonlocal tokens, next_index, explicit_index
        if tokens:
            sent_index = explicit_index if explicit_index is not None else next_index
            validate_structure(tokens, current_doc, sent_index)
            sentence = ParsedSentence(tokens=tokens, doc_id=current_doc, sent_index=sent_index)
            if normalize:
                sentence = normalize_dependencies(sentence)
            sentences.append(sentence)
            next_index = sent_index + 1
        tokens = []
        explicit_index = None

    for line_number, raw in enumerate(stream.splitlines(), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            key, value = key.strip(), value.strip()
            if key in ("doc_id", "newdoc id") and value:
                if value != current_doc:
                    current_doc = value
                    next_index = 0
            elif key == "sent_index" and value:
                try:
                    explicit_index = int(value)
                except ValueError as e:
                    raise DataFormatError(
                        f"sent_index must be an integer, found {value!r}",
                        line_number=line_number,
                    ) from e
            continue
        fields = line.split("\t")
        if len(fields) != CONLL_COLUMNS:
            raise DataFormatError(
                f"expected {CONLL_COLUMNS} tab-separated columns, found {len(fields)}",
                line_number=line_number,
            )
        if "-" in fields[0] or "." in fields[0]:
            continue
        tokens.append(_token_from_fields(fields, line_number))
    flush()

    logger.debug(f"Parsed {len(sentences)} sentences")
    return sentences


def serialize_conllu(sentences: Iterable[ParsedSentence]) -> str:
    """
    Write sentences back as 10-column CoNLL text.

    Only the retained columns are filled; the others are written as `_`.

    Args:
        sentences: The sentences to write

    Returns:
        The CoNLL text, one blank line after every sentence
    """
    lines = []
    for sentence in sentences:
        if sentence.doc_id:
            lines.append(f"# doc_id = {sentence.doc_id}")
        lines.append(f"# sent_index = {sentence.sent_index}")
        for token in sentence.tokens:
            lines.append(
                "\t".join(
                    [
                        str(token.index),
                        token.surface,
                        token.lemma,
                        token.pos,
                        "_",
                        "_",
                        str(token.head),
                        token.deprel,
                        "_",
                        "_",
                    ]
                )
            )
        lines.append("")
    return "\n".join(lines) + ("\n" if lines else "")


def _collapsed_label(token: Token, children: dict[int, list[Token]]) -> str:
    label = token.deprel
    if label in LABEL_MAP:
        return LABEL_MAP[label]
    base = label.split(":", 1)[0]
    if base not in CASE_MARKED:
        return label
    for child in children.get(token.index, []):
        if child.deprel == "case":
            words = [child.lemma.lower()]
            words.extend(
                grandchild.lemma.lower()
                for grandchild in children.get(child.index, [])
                if grandchild.deprel in MULTIWORD_CASE
            )
            return "prep_" + "_".join(words)
    return label


def normalize_dependencies(sentence: ParsedSentence) -> ParsedSentence:
    """
    Rewrite a case-marked parse into collapsed prepositional labels.

    A token labelled nmod/obl (or a subtype) with a `case` dependent gets the
    label `prep_<case lemma>`; a handful of renamed UD labels are mapped onto
    their collapsed counterparts. Collapsed input is returned unchanged.

    Args:
        sentence: The sentence to normalize

    Returns:
        A sentence with collapsed labels
    """
    children = sentence.child_map()
    tokens = []
    changed = False
    for token in sentence.tokens:
        label = _collapsed_label(token, children)
        if label != token.deprel:
            changed = True
            token = Token(
                index=token.index,
                surface=token.surface,
                lemma=token.lemma,
                pos=token.pos,
                head=token.head,
                deprel=label,
            )
        tokens.append(token)
    if not changed:
        return sentence
    return ParsedSentence(tokens=tokens, doc_id=sentence.doc_id, sent_index=sentence.sent_index)


def content_lemmas(tokens: Iterable[Token], lemma_filter: LemmaFilter) -> list[str]:
    """
    Lowercased lemmas of the content words, in order.

    Args:
        tokens: The tokens to filter
        lemma_filter: Stopwords and the parts of speech to keep

    Returns:
        Lemmas of tokens whose coarse POS is kept and whose lemma is not a stopword
    """
    return [token.lemma.lower() for token in tokens if lemma_filter.keeps(token)]


def tokenize_raw(text: str) -> list[str]:
    """Lowercased word tokens of unparsed text."""
    return RAW_TOKEN.findall(text.lower())


def lemmatize_raw(
    text: str,
    lemma_table: dict[str, str],
    lemma_filter: Optional[LemmaFilter] = None,
) -> list[str]:
    """
    Best-effort lemmas for unparsed question or answer text.

    Args:
        text: Raw text
        lemma_table: Lowercased surface form to lemma
        lemma_filter: Supplies the stopword list (no POS filtering is possible)

    Returns:
        Lemmas in order, stopwords removed
    """
    lemma_filter = lemma_filter or default_filter()
    lemmas = []
    for word in tokenize_raw(text):
        lemma = lemma_table.get(word, word).lower()
        if not lemma_filter.is_stopword(lemma):
            lemmas.append(lemma)
    return lemmas


def build_lemma_table(sentences: Iterable[ParsedSentence]) -> dict[str, str]:
    """
    Map each lowercased surface form to its most frequent lemma.

    Args:
        sentences: The parsed corpus

    Returns:
        The surface to lemma table; ties go to the alphabetically first lemma
    """
    counts: dict[str, Counter] = defaultdict(Counter)
    for sentence in sentences:
        for token in sentence.tokens:
            counts[token.surface.lower()][token.lemma.lower()] += 1
    table = {}
    for surface, lemmas in counts.items():
        table[surface] = min(lemmas.items(), key=lambda kv: (-kv[1], kv[0]))[0]
    logger.info(f"Built lemma table with {len(table)} surface forms")
    return table


class CorpusService:
    """
    Corpus service for the pipeline stages.

    Loads the configured corpus, and provides the lemma table used to
    lemmatize unparsed question and answer text.
    """

    def __init__(self, config: PipelineConfig):
        """
        Initialize the corpus service.

        Args:
            config: The pipeline configuration
        """
        self.config = config
        self.corpus_repository = CorpusRepository()
        self.lemma_table_repository = LemmaTableRepository()
        self.lemma_filter = default_filter()

    def load_corpus(self, command: str) -> list[ParsedSentence]:
        """
        Load the configured corpus.

        Args:
            command: The command needing the corpus, named when the key is missing

        Returns:
            The parsed, validated sentences
        """
        return self.corpus_repository.load(self.config.require("corpus", command))

    def lemma_table(self) -> dict[str, str]:
        """
        Get the lemma table for raw text.

        An explicitly configured table must exist. Otherwise the table written
        by extraction is used when present, and an empty table when not.

        Returns:
            Lowercased surface form to lemma
        """
        path = self.config.lemma_table or self.config.models_path / LEMMA_FILE
        if self.config.lemma_table is None and not path.is_file():
            logger.warning("No lemma table found, raw QA text is used as is")
            return {}
        return self.lemma_table_repository.load(path)

    def save_lemma_table(self, sentences: Sequence[ParsedSentence]) -> Path:
        """Build the lemma table of the corpus and write it under output_dir."""
        table = build_lemma_table(sentences)
        return self.lemma_table_repository.save(table, self.config.output_dir / LEMMA_FILE)
