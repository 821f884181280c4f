"""
Extraction service: causal mentions and causal tuples over parsed sentences.

Extraction runs as a two-stage cascade. The first stage marks every noun
phrase and clause that could fill a cause or effect slot (a causal mention).
The second stage applies the trigger grammar: each rule anchors on a trigger
lemma phrase, follows dependency paths from the trigger and emits a tuple only
when both paths end on causal mentions.
"""
import logging
from collections import deque
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Optional

from backend.causalqa.exceptions import DataFormatError
from backend.causalqa.models.config import PARALLEL_FILE, TUPLES_FILE, PipelineConfig
from backend.causalqa.models.corpus import LemmaFilter, ParsedSentence, Token
from backend.causalqa.models.extraction import (
    CausalMention,
    CausalRule,
    CausalTuple,
    MentionKind,
    PathStep,
    RuleOrder,
    TupleRecord,
)
from backend.causalqa.repositories.corpus_repository import GrammarRepository
from backend.causalqa.repositories.pair_repository import ParallelRepository, TupleRepository
from backend.causalqa.services.corpus_service import CorpusService, content_lemmas

logger = logging.getLogger(__name__)

GRAMMAR_FILE = Path(__file__).resolve().parent.parent / "data" / "causal_grammar.txt"

# Modifier and prepositional edges followed out of noun heads
NP_EDGES = frozenset(
    {
        "nn",
        "amod",
        "advmod",
        "ccmod",
        "dobj",
        "prep_of",
        "prep_with",
        "prep_for",
        "prep_into",
        "prep_on",
        "prep_to",
        "prep_in",
    }
)
# Clause heads also follow their arguments
CLAUSE_EDGES = NP_EDGES | frozenset(
    {"nsubj", "dobj", "iobj", "xcomp", "ccomp", "advmod", "amod"}
)
# Verbs that signal causation themselves never head a clause mention
EXCLUDED_VERBS = frozenset({"cause", "result", "lead", "create"})
MAX_DEPTH = 2

FUNCTION_LABELS = frozenset({"det", "predet", "case", "aux", "auxpass", "mark"})
FUNCTION_POS = frozenset({"DET", "ADP", "DT", "IN", "TO"})


def _expand(
    head: Token,
    children: dict[int, list[Token]],
    edges: frozenset[str],
) -> set[int]:
    visited = {head.index}
    queue = deque([(head, 0)])
    while queue:
        token, depth = queue.popleft()
        if depth == MAX_DEPTH:
            continue
        for child in children.get(token.index, []):
            if child.deprel in edges and child.index not in visited:
                visited.add(child.index)
                queue.append((child, depth + 1))

    span = set(visited)
    for index in visited:
        for child in children.get(index, []):
            if child.deprel in FUNCTION_LABELS or child.pos in FUNCTION_POS:
                span.add(child.index)
    return span


def identify_causal_mentions(sentence: ParsedSentence) -> list[CausalMention]:
    """
    Find every noun phrase and clause that can serve as a causal argument.

    Noun heads are expanded over modifier and prepositional edges, verb heads
    (other than the causal verbs themselves) additionally over their argument
    edges, both to a depth of two links. Determiners and adpositions hanging
    off the visited tokens join the span.

    Args:
        sentence: A well-formed parsed sentence

    Returns:
        Mentions in sentence order of their heads
    """
    children = sentence.child_map()
    mentions = []
    for token in sentence.tokens:
        coarse = token.coarse_pos
        if coarse == "NOUN":
            span = _expand(token, children, NP_EDGES)
            mentions.append(
                CausalMention(head_index=token.index, span=frozenset(span), kind=MentionKind.NP)
            )
        elif coarse == "VERB" and token.lemma.lower() not in EXCLUDED_VERBS:
            span = _expand(token, children, CLAUSE_EDGES)
            mentions.append(
                CausalMention(
                    head_index=token.index,
                    span=frozenset(span),
                    kind=MentionKind.CLAUSE,
                )
            )
    return mentions


def _parse_path(spec: str, line_number: int) -> list[PathStep]:
    steps = []
    for part in spec.split("."):
        if len(part) < 2 or part[0] not in "<>":
            raise DataFormatError(
                f"path step {part!r} must start with '>' or '<'",
                line_number=line_number,
            )
        labels = [label for label in part[1:].split("|") if label]
        if not labels:
            raise DataFormatError(f"path step {part!r} has no labels", line_number=line_number)
        steps.append(PathStep(down=part[0] == ">", labels=labels))
    return steps


def load_grammar(text: str) -> list[CausalRule]:
    """
    Parse a causal grammar.

    Each non-comment line reads
    `RULE <id> TRIGGER <lemma phrase> CAUSE <path> EFFECT <path> ORDER <order>`,
    where a path is a `.`-separated list of steps such as `>nsubj` or
    `<case.<prep_because_of`.

    Args:
        text: The grammar file contents

    Returns:
        The rules in file order

    Raises:
        DataFormatError: On a malformed record
    """
    rules = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        words = line.split()
        try:
            if words[0] != "RULE" or words[2] != "TRIGGER":
                raise ValueError("record must start with RULE <id> TRIGGER")
            cause_at = words.index("CAUSE")
            effect_at = words.index("EFFECT")
            order_at = words.index("ORDER")
            if not 3 < cause_at < effect_at < order_at or effect_at != cause_at + 2:
                raise ValueError("expected TRIGGER ... CAUSE <path> EFFECT <path> ORDER")
            if order_at != effect_at + 2 or len(words) != order_at + 2:
                raise ValueError("expected EFFECT <path> ORDER <order> at end of record")
            rule = CausalRule(
                rule_id=words[1],
                trigger=words[3:cause_at],
                cause_path=_parse_path(words[cause_at + 1], line_number),
                effect_path=_parse_path(words[effect_at + 1], line_number),
                order=RuleOrder(words[order_at + 1]),
            )
        except DataFormatError:
            raise
        except (ValueError, IndexError) as e:
            raise DataFormatError(f"bad grammar record: {e}", line_number=line_number) from e
        rules.append(rule)
    logger.debug(f"Loaded {len(rules)} causal rules")
    return rules


def bundled_grammar() -> list[CausalRule]:
    """The causal grammar shipped with the package."""
    return load_grammar(GRAMMAR_FILE.read_text(encoding="utf-8"))


def _follow(
    sentence: ParsedSentence,
    children: dict[int, list[Token]],
    start: Token,
    path: Sequence[PathStep],
) -> list[Token]:
    frontier = [start]
    for step in path:
        reached: list[Token] = []
        for token in frontier:
            if step.down:
                for label in step.labels:
                    reached.extend(
                        child for child in children.get(token.index, []) if child.deprel == label
                    )
            elif token.deprel in step.labels and token.head != 0:
                reached.append(sentence.token(token.head))
        frontier = reached
    return frontier


def _argument(
    sentence: ParsedSentence,
    children: dict[int, list[Token]],
    anchor: Token,
    path: Sequence[PathStep],
    by_head: dict[int, CausalMention],
) -> Optional[CausalMention]:
    for token in _follow(sentence, children, anchor, path):
        mention = by_head.get(token.index)
        if mention is not None:
            return mention
    return None


def _trigger_spans(sentence: ParsedSentence, rule: CausalRule) -> list[list[int]]:
    size = len(rule.trigger)
    lemmas = [token.lemma.lower() for token in sentence.tokens]
    spans = []
    for start in range(len(lemmas) - size + 1):
        if lemmas[start : start + size] == rule.trigger:
            spans.append(list(range(start + 1, start + size + 1)))
    return spans


def _trim(mention: CausalMention, removed: set[int]) -> CausalMention:
    return CausalMention(
        head_index=mention.head_index,
        span=frozenset(mention.span - removed),
        kind=mention.kind,
    )


def extract_causal_tuples(
    sentence: ParsedSentence,
    mentions: Sequence[CausalMention],
    rules: Optional[Sequence[CausalRule]] = None,
) -> list[CausalTuple]:
    """
    Apply the trigger grammar to one sentence.

    Argument spans lose any trigger tokens they contain. A match is kept only
    when both arguments are distinct mentions with disjoint spans in the
    surface order the rule requires.

    Args:
        sentence: The parsed sentence
        mentions: Causal mentions found in the sentence
        rules: Grammar to apply (defaults to the bundled grammar)

    Returns:
        Tuples ordered by trigger position, then rule order
    """
    rules = bundled_grammar() if rules is None else rules
    children = sentence.child_map()
    by_head = {mention.head_index: mention for mention in mentions}

    matches: list[tuple[int, int, CausalTuple]] = []
    seen: set[tuple[frozenset[int], frozenset[int]]] = set()
    for rule_position, rule in enumerate(rules):
        for trigger in _trigger_spans(sentence, rule):
            anchor = sentence.token(trigger[0])
            cause = _argument(sentence, children, anchor, rule.cause_path, by_head)
            effect = _argument(sentence, children, anchor, rule.effect_path, by_head)
            if cause is None or effect is None or cause.head_index == effect.head_index:
                continue
            cause_first = cause.head_index < effect.head_index
            wanted_first = rule.order == RuleOrder.CAUSE_FIRST
            if rule.order != RuleOrder.ANY and cause_first != wanted_first:
                logger.debug(f"Rule {rule.rule_id} matched out of order in {sentence.ref}")
                continue
            removed = set(trigger)
            if cause.head_index in removed or effect.head_index in removed:
                continue
            cause, effect = _trim(cause, removed), _trim(effect, removed)
            if cause.span & effect.span:
                logger.debug(f"Rule {rule.rule_id} produced nested arguments in {sentence.ref}")
                continue
            key = (cause.span, effect.span)
            if key in seen:
                continue
            seen.add(key)
            matches.append(
                (
                    trigger[0],
                    rule_position,
                    CausalTuple(
                        cause=cause,
                        effect=effect,
                        trigger=trigger,
                        doc_id=sentence.doc_id,
                        sent_index=sentence.sent_index,
                        rule_id=rule.rule_id,
                    ),
                )
            )
    matches.sort(key=lambda match: (match[0], match[1]))
    return [match[2] for match in matches]


def extract_corpus(
    sentences: Iterable[ParsedSentence],
    rules: Optional[Sequence[CausalRule]] = None,
) -> list[CausalTuple]:
    """
    Run the two-stage cascade over a corpus.

    Args:
        sentences: The parsed corpus
        rules: Grammar to apply (defaults to the bundled grammar)

    Returns:
        All tuples in corpus order
    """
    rules = bundled_grammar() if rules is None else rules
    tuples: list[CausalTuple] = []
    sentence_count = 0
    for sentence in sentences:
        sentence_count += 1
        mentions = identify_causal_mentions(sentence)
        tuples.extend(extract_causal_tuples(sentence, mentions, rules))
    logger.info(f"Extracted {len(tuples)} causal tuples from {sentence_count} sentences")
    return tuples


def tuple_text(sentence: ParsedSentence, causal_tuple: CausalTuple) -> tuple[str, str]:
    """Surface text of the cause and effect spans."""
    return (
        sentence.span_text(causal_tuple.cause.span),
        sentence.span_text(causal_tuple.effect.span),
    )


def tuple_lemmas(
    sentence: ParsedSentence,
    causal_tuple: CausalTuple,
    lemma_filter: LemmaFilter,
) -> tuple[list[str], list[str]]:
    """Filtered content lemmas of the cause and effect spans."""
    cause = [sentence.token(i) for i in sorted(causal_tuple.cause.span)]
    effect = [sentence.token(i) for i in sorted(causal_tuple.effect.span)]
    return content_lemmas(cause, lemma_filter), content_lemmas(effect, lemma_filter)


def causal_parallel(
    tuples: Iterable[CausalTuple],
    sentences: Iterable[ParsedSentence],
    lemma_filter: LemmaFilter,
) -> list[tuple[list[str], list[str]]]:
    """
    Build the cause-to-effect parallel corpus used for alignment training.

    Args:
        tuples: Extracted causal tuples
        sentences: The sentences the tuples point into
        lemma_filter: Filter applied to both spans

    Returns:
        (cause lemmas, effect lemmas) per tuple, skipping tuples with an empty side
    """
    by_ref = {sentence.ref: sentence for sentence in sentences}
    parallel = []
    for causal_tuple in tuples:
        causes, effects = tuple_lemmas(by_ref[causal_tuple.sentence_ref], causal_tuple, lemma_filter)
        if causes and effects:
            parallel.append((causes, effects))
    return parallel


class ExtractionService:
    """
    Extraction service for the pipeline stages.

    Runs the cascade over the configured corpus and grammar, and writes the
    tuple file, the causal parallel corpus and the lemma table.
    """

    def __init__(self, config: PipelineConfig):
        """
        Initialize the extraction service.

        Args:
            config: The pipeline configuration
        """
        self.config = config
        self.corpus_service = CorpusService(config)
        self.grammar_repository = GrammarRepository()
        self.tuple_repository = TupleRepository()
        self.parallel_repository = ParallelRepository()

    def extract(self, command: str = "extract") -> tuple[list[ParsedSentence], list[CausalTuple]]:
        """
        Extract causal tuples from the configured corpus.

        Args:
            command: The command needing the corpus, named when the key is missing

        Returns:
            The corpus sentences and the tuples found in them
        """
        sentences = self.corpus_service.load_corpus(command)
        rules = self.grammar_repository.load(self.config.grammar)
        return sentences, extract_corpus(sentences, rules)

    def tuple_records(
        self,
        sentences: Sequence[ParsedSentence],
        tuples: Sequence[CausalTuple],
    ) -> list[TupleRecord]:
        """Surface-text records of the tuples, in extraction order."""
        by_ref = {sentence.ref: sentence for sentence in sentences}
        records = []
        for causal_tuple in tuples:
            cause, effect = tuple_text(by_ref[causal_tuple.sentence_ref], causal_tuple)
            records.append(
                TupleRecord(
                    cause_text=cause,
                    effect_text=effect,
                    doc_id=causal_tuple.doc_id,
                    sent_index=causal_tuple.sent_index,
                )
            )
        return records

    def run(self) -> Path:
        """
        Extract and write every extraction artifact under output_dir.

        Returns:
            The tuple file
        """
        sentences, tuples = self.extract()
        output = self.config.output_dir
        parallel = causal_parallel(tuples, sentences, self.corpus_service.lemma_filter)
        self.parallel_repository.save(parallel, output / PARALLEL_FILE)
        self.corpus_service.save_lemma_table(sentences)
        return self.tuple_repository.save(self.tuple_records(sentences, tuples), output / TUPLES_FILE)
