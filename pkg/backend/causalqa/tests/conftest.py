"""
Shared fixtures and builders for the causal QA tests.
"""
from pathlib import Path

import numpy as np
import pytest

from backend.causalqa.models.corpus import ParsedSentence, Token
from backend.causalqa.models.qa import QACandidate, QAQuestion
from backend.causalqa.services.corpus_service import default_filter, parse_conllu

FIXTURES_DIR = Path(__file__).parent / "fixtures"
FIXTURE_CORPUS = FIXTURES_DIR / "causal_fixture.conllu"
GOLDEN_TUPLES = FIXTURES_DIR / "golden_tuples.tsv"

PLANTED_PAIRS = [(f"w{2 * i:02d}", f"w{2 * i + 1:02d}") for i in range(10)]
DISTRACTOR_PAIRS = [(f"w{20 + 2 * i:02d}", f"w{21 + 2 * i:02d}") for i in range(10)]
FILLERS = [f"w{i:02d}" for i in range(40, 50)]


def build_sentence(rows, doc_id="test", sent_index=0):
    """Helper function to build a sentence from (surface, lemma, pos, head, deprel) rows."""
    tokens = [
        Token(index=i, surface=surface, lemma=lemma, pos=pos, head=head, deprel=deprel)
        for i, (surface, lemma, pos, head, deprel) in enumerate(rows, start=1)
    ]
    return ParsedSentence(tokens=tokens, doc_id=doc_id, sent_index=sent_index)


def housing_bubble_sentence(doc_id="test", sent_index=0):
    """The collapse of the housing bubble caused stock prices to fall."""
    return build_sentence(
        [
            ("The", "the", "DT", 2, "det"),
            ("collapse", "collapse", "NN", 7, "nsubj"),
            ("of", "of", "IN", 6, "case"),
            ("the", "the", "DT", 6, "det"),
            ("housing", "housing", "NN", 6, "nn"),
            ("bubble", "bubble", "NN", 2, "prep_of"),
            ("caused", "cause", "VBD", 0, "root"),
            ("stock", "stock", "NN", 9, "nn"),
            ("prices", "price", "NNS", 11, "nsubj"),
            ("to", "to", "TO", 11, "aux"),
            ("fall", "fall", "VB", 7, "xcomp"),
            (".", ".", ".", 7, "punct"),
        ],
        doc_id,
        sent_index,
    )


def causes_sentence(cause, effect, doc_id="planted", sent_index=0):
    """Helper function for '<cause> causes <effect> .'"""
    return build_sentence(
        [
            (cause, cause, "NN", 2, "nsubj"),
            ("causes", "cause", "VBZ", 0, "root"),
            (effect, effect, "NN", 2, "dobj"),
            (".", ".", ".", 2, "punct"),
        ],
        doc_id,
        sent_index,
    )


def leads_to_sentence(cause, effect, doc_id="planted", sent_index=0):
    """Helper function for '<cause> leads to <effect> .'"""
    return build_sentence(
        [
            (cause, cause, "NN", 2, "nsubj"),
            ("leads", "lead", "VBZ", 0, "root"),
            ("to", "to", "TO", 4, "case"),
            (effect, effect, "NN", 2, "prep_to"),
            (".", ".", ".", 2, "punct"),
        ],
        doc_id,
        sent_index,
    )


def meets_sentence(first, second, filler, doc_id="planted", sent_index=0):
    """Helper function for the non-causal '<first> meets <second> near <filler> .'"""
    return build_sentence(
        [
            (first, first, "NN", 2, "nsubj"),
            ("meets", "meet", "VBZ", 0, "root"),
            (second, second, "NN", 2, "dobj"),
            ("near", "near", "IN", 5, "case"),
            (filler, filler, "NN", 2, "prep_near"),
            (".", ".", ".", 2, "punct"),
        ],
        doc_id,
        sent_index,
    )


def planted_corpus(seed=7, size=1000):
    """
    Helper function to generate a corpus over a 50-lemma vocabulary.

    Sixty percent of the sentences express one of the ten planted cause-effect
    pairs through a trigger; the rest put one of the ten distractor pairs side
    by side without any trigger.
    """
    rng = np.random.default_rng(seed)
    causal_count = size * 3 // 5
    sentences = []
    for i in range(causal_count):
        cause, effect = PLANTED_PAIRS[i % len(PLANTED_PAIRS)]
        template = causes_sentence if (i // len(PLANTED_PAIRS)) % 2 == 0 else leads_to_sentence
        sentences.append(template(cause, effect))
    for i in range(size - causal_count):
        first, second = DISTRACTOR_PAIRS[i % len(DISTRACTOR_PAIRS)]
        filler = FILLERS[int(rng.integers(len(FILLERS)))]
        sentences.append(meets_sentence(first, second, filler))
    order = rng.permutation(len(sentences))
    return [sentences[i].copy(update={"sent_index": position}) for position, i in enumerate(order)]


def signal_questions(count, candidates=5, seed=3, informative=True):
    """
    Helper function to build QA questions with normalized features.

    Each question has one gold candidate at a random position. The `cr`
    feature is noise; the `signal` feature (when informative) is 1 for the
    gold candidate and 0 otherwise.
    """
    rng = np.random.default_rng(seed)
    questions = []
    for q in range(count):
        gold = int(rng.integers(candidates))
        items = []
        for c in range(candidates):
            features = {"cr": float(rng.random())}
            if informative:
                features["signal"] = 1.0 if c == gold else 0.0
            items.append(QACandidate(text=f"answer {c}", gold=c == gold, features=features))
        questions.append(QAQuestion(qid=f"q{q + 1}", text=f"question {q + 1}", candidates=items))
    return questions


@pytest.fixture()
def lemma_filter():
    """The default lemma filter."""
    return default_filter()


@pytest.fixture()
def fixture_sentences():
    """The parsed 20-sentence fixture corpus."""
    return parse_conllu(FIXTURE_CORPUS.read_text(encoding="utf-8"), doc_id="causal_fixture")
