"""
Tests for the extraction service.
"""
import pytest

from backend.causalqa.exceptions import DataFormatError
from backend.causalqa.models.extraction import MentionKind, RuleOrder
from backend.causalqa.services.extraction_service import (
    bundled_grammar,
    extract_causal_tuples,
    extract_corpus,
    identify_causal_mentions,
    load_grammar,
    tuple_lemmas,
    tuple_text,
)
from backend.causalqa.tests.conftest import (
    GOLDEN_TUPLES,
    build_sentence,
    causes_sentence,
    leads_to_sentence,
    housing_bubble_sentence,
)


def mention_texts(sentence, mentions):
    """Helper function to map mention kinds to their surface texts."""
    return {(m.kind, sentence.span_text(m.span)) for m in mentions}


def tuple_texts(sentence, tuples):
    """Helper function to get (cause, effect) surface texts."""
    return [tuple_text(sentence, t) for t in tuples]


class TestIdentifyCausalMentions:
    """Tests for the first cascade stage."""

    def test_nested_noun_phrase_and_clause(self):
        """Test that nested arguments of the example sentence become mentions."""
        # Setup
        sentence = housing_bubble_sentence()

        # Execute
        mentions = identify_causal_mentions(sentence)

        # Verify
        texts = mention_texts(sentence, mentions)
        assert (MentionKind.NP, "The collapse of the housing bubble") in texts
        assert (MentionKind.CLAUSE, "stock prices to fall") in texts

    def test_causal_verb_heads_no_clause(self):
        """Test that the causal verb itself never heads a clause mention."""
        # Setup
        sentence = housing_bubble_sentence()

        # Execute
        mentions = identify_causal_mentions(sentence)

        # Verify
        assert 7 not in {m.head_index for m in mentions}

    def test_simple_clause(self):
        """Test that a plain verb yields a clause over its subject."""
        # Setup
        sentence = build_sentence(
            [
                ("Rain", "rain", "NN", 2, "nsubj"),
                ("fell", "fall", "VBD", 0, "root"),
                (".", ".", ".", 2, "punct"),
            ]
        )

        # Execute
        mentions = identify_causal_mentions(sentence)

        # Verify
        assert mention_texts(sentence, mentions) == {
            (MentionKind.NP, "Rain"),
            (MentionKind.CLAUSE, "Rain fell"),
        }

    def test_no_nouns_and_causal_verb(self):
        """Test that a sentence with only a causal verb has no mentions."""
        # Setup
        sentence = build_sentence(
            [
                ("It", "it", "PRP", 2, "nsubj"),
                ("caused", "cause", "VBD", 0, "root"),
                ("this", "this", "DT", 2, "dobj"),
            ]
        )

        # Execute
        mentions = identify_causal_mentions(sentence)

        # Verify
        assert mentions == []

    def test_expansion_stops_after_two_links(self):
        """Test that a modifier three links below the head stays outside."""
        # Setup
        sentence = build_sentence(
            [
                ("very", "very", "RB", 2, "advmod"),
                ("old", "old", "JJ", 3, "amod"),
                ("engine", "engine", "NN", 4, "nn"),
                ("oil", "oil", "NN", 5, "nsubj"),
                ("leaked", "leak", "VBD", 0, "root"),
            ]
        )

        # Execute
        mentions = identify_causal_mentions(sentence)

        # Verify
        oil = next(m for m in mentions if m.head_index == 4)
        assert oil.span == frozenset({2, 3, 4})


class TestCausalGrammar:
    """Tests for loading trigger grammars."""

    def test_bundled_grammar_has_thirteen_rules(self):
        """Test that the shipped grammar parses into thirteen distinct rules."""
        # Execute
        rules = bundled_grammar()

        # Verify
        assert len(rules) == 13
        assert len({rule.rule_id for rule in rules}) == 13
        triggers = {" ".join(rule.trigger) for rule in rules}
        assert {"cause", "so that", "lead to", "because of", "give rise to", "reason for"} <= triggers

    def test_load_grammar_parses_paths(self):
        """Test that alternatives and up-steps are parsed."""
        # Setup
        text = "# comment\n\nRULE x TRIGGER because of CAUSE <case EFFECT <case.<prep_because_of|advcl ORDER effect-first\n"

        # Execute
        rules = load_grammar(text)

        # Verify
        rule = rules[0]
        assert rule.trigger == ["because", "of"]
        assert rule.order == RuleOrder.EFFECT_FIRST
        assert [str(step) for step in rule.effect_path] == ["<case", "<prep_because_of|advcl"]
        assert rule.effect_path[0].down is False

    def test_load_grammar_accepts_any_order(self):
        """Test that a rule may leave the surface order of its arguments open."""
        # Setup
        rules = load_grammar("RULE x TRIGGER cause CAUSE >nsubj EFFECT >dobj ORDER any")
        sentence = causes_sentence("smoking", "cancer")

        # Execute
        tuples = extract_causal_tuples(sentence, identify_causal_mentions(sentence), rules)

        # Verify
        assert rules[0].order == RuleOrder.ANY
        assert tuple_texts(sentence, tuples) == [("smoking", "cancer")]

    @pytest.mark.parametrize(
        "record",
        [
            "RULE 1 TRIGGER cause CAUSE nsubj EFFECT >dobj ORDER cause-first",
            "RULE 1 TRIGGER cause CAUSE >nsubj EFFECT >dobj",
            "RULE 1 TRIGGER cause CAUSE >nsubj EFFECT >dobj ORDER sideways",
            "RULE 1 TRIGGER CAUSE >nsubj EFFECT >dobj ORDER cause-first",
            "TRIGGER cause CAUSE >nsubj EFFECT >dobj ORDER cause-first",
        ],
    )
    def test_load_grammar_rejects_malformed_records(self, record):
        """Test that malformed records are reported with their line number."""
        # Setup
        text = "# header\n" + record + "\n"

        # Execute and Verify
        with pytest.raises(DataFormatError) as excinfo:
            load_grammar(text)
        assert excinfo.value.line_number == 2


class TestExtractCausalTuples:
    """Tests for the second cascade stage."""

    def test_nested_arguments(self):
        """Test the noun-phrase cause and clause effect of the example sentence."""
        # Setup
        sentence = housing_bubble_sentence()

        # Execute
        tuples = extract_causal_tuples(sentence, identify_causal_mentions(sentence))

        # Verify
        assert tuple_texts(sentence, tuples) == [
            ("The collapse of the housing bubble", "stock prices to fall")
        ]
        assert tuples[0].rule_id == "1"
        assert tuples[0].trigger == [7]

    @pytest.mark.parametrize(
        ("so_label", "so_head", "that_label", "that_head"),
        [
            ("mark", 8, "fixed", 5),
            ("advmod", 8, "mark", 8),
        ],
    )
    def test_so_that_purpose_clause(self, so_label, so_head, that_label, that_head):
        """Test that 'so that' takes the main clause as cause and the purpose clause as effect."""
        # Setup
        sentence = build_sentence(
            [
                ("Farmers", "farmer", "NNS", 2, "nsubj"),
                ("irrigated", "irrigate", "VBD", 0, "root"),
                ("the", "the", "DT", 4, "det"),
                ("fields", "field", "NNS", 2, "dobj"),
                ("so", "so", "IN", so_head, so_label),
                ("that", "that", "IN", that_head, that_label),
                ("crops", "crop", "NNS", 8, "nsubj"),
                ("survive", "survive", "VBP", 2, "advcl"),
                (".", ".", ".", 2, "punct"),
            ]
        )

        # Execute
        tuples = extract_causal_tuples(sentence, identify_causal_mentions(sentence))

        # Verify
        assert tuple_texts(sentence, tuples) == [("Farmers irrigated the fields", "crops survive")]
        assert tuples[0].rule_id == "2"
        assert tuples[0].trigger == [5, 6]

    def test_cause_rule_reads_both_voices(self):
        """Test that one rule covers the active and the passive use of 'cause'."""
        # Setup
        active = causes_sentence("smoking", "cancer")
        passive = build_sentence(
            [
                ("Cancer", "cancer", "NN", 3, "nsubjpass"),
                ("is", "be", "VBZ", 3, "auxpass"),
                ("caused", "cause", "VBN", 0, "root"),
                ("by", "by", "IN", 5, "case"),
                ("smoking", "smoking", "NN", 3, "prep_by"),
                (".", ".", ".", 3, "punct"),
            ]
        )

        # Execute
        active_tuples = extract_causal_tuples(active, identify_causal_mentions(active))
        passive_tuples = extract_causal_tuples(passive, identify_causal_mentions(passive))

        # Verify
        assert tuple_texts(active, active_tuples) == [("smoking", "cancer")]
        assert tuple_texts(passive, passive_tuples) == [("by smoking", "Cancer")]
        assert active_tuples[0].rule_id == passive_tuples[0].rule_id == "1"

    def test_multiword_trigger_is_trimmed_from_arguments(self):
        """Test that trigger tokens never end up inside an argument span."""
        # Setup
        sentence = leads_to_sentence("Smoking", "cancer")

        # Execute
        tuples = extract_causal_tuples(sentence, identify_causal_mentions(sentence))

        # Verify
        assert tuple_texts(sentence, tuples) == [("Smoking", "cancer")]
        assert tuples[0].trigger == [2, 3]

    def test_no_trigger(self):
        """Test that a sentence without a trigger yields nothing."""
        # Setup
        sentence = build_sentence(
            [
                ("He", "he", "PRP", 2, "nsubj"),
                ("walked", "walk", "VBD", 0, "root"),
                ("to", "to", "TO", 5, "case"),
                ("the", "the", "DT", 5, "det"),
                ("store", "store", "NN", 2, "prep_to"),
                (".", ".", ".", 2, "punct"),
            ]
        )

        # Execute
        tuples = extract_causal_tuples(sentence, identify_causal_mentions(sentence))

        # Verify
        assert tuples == []

    def test_order_mismatch_is_discarded(self):
        """Test that a rule requiring the other surface order does not fire."""
        # Setup
        rules = load_grammar("RULE x TRIGGER cause CAUSE >nsubj EFFECT >dobj ORDER effect-first")
        sentence = causes_sentence("smoking", "cancer")

        # Execute
        tuples = extract_causal_tuples(sentence, identify_causal_mentions(sentence), rules)

        # Verify
        assert tuples == []

    def test_duplicate_matches_are_emitted_once(self):
        """Test that two rules matching the same spans produce one tuple."""
        # Setup
        rules = load_grammar(
            "RULE a TRIGGER cause CAUSE >nsubj EFFECT >dobj ORDER cause-first\n"
            "RULE b TRIGGER cause CAUSE >nsubj EFFECT >dobj|xcomp ORDER cause-first\n"
        )
        sentence = causes_sentence("smoking", "cancer")

        # Execute
        tuples = extract_causal_tuples(sentence, identify_causal_mentions(sentence), rules)

        # Verify
        assert [t.rule_id for t in tuples] == ["a"]

    def test_missing_argument_mention(self):
        """Test that a match is dropped when an argument is not a mention."""
        # Setup
        sentence = build_sentence(
            [
                ("It", "it", "PRP", 2, "nsubj"),
                ("caused", "cause", "VBD", 0, "root"),
                ("delays", "delay", "NNS", 2, "dobj"),
            ]
        )

        # Execute
        tuples = extract_causal_tuples(sentence, identify_causal_mentions(sentence))

        # Verify
        assert tuples == []

    def test_tuple_lemmas(self, lemma_filter):
        """Test that argument spans reduce to their filtered content lemmas."""
        # Setup
        sentence = housing_bubble_sentence()
        tuples = extract_causal_tuples(sentence, identify_causal_mentions(sentence))

        # Execute
        causes, effects = tuple_lemmas(sentence, tuples[0], lemma_filter)

        # Verify
        assert causes == ["collapse", "housing", "bubble"]
        assert effects == ["stock", "price", "fall"]


class TestExtractCorpus:
    """Tests for extraction over the fixture corpus."""

    def test_fixture_matches_golden_tuples(self, fixture_sentences):
        """Test that the fixture corpus yields exactly the checked-in tuples."""
        # Setup
        by_ref = {sentence.ref: sentence for sentence in fixture_sentences}
        expected = GOLDEN_TUPLES.read_text(encoding="utf-8").splitlines()

        # Execute
        tuples = extract_corpus(fixture_sentences)

        # Verify
        rows = []
        for causal_tuple in tuples:
            cause, effect = tuple_text(by_ref[causal_tuple.sentence_ref], causal_tuple)
            rows.append(f"{cause}\t{effect}\t{causal_tuple.doc_id}\t{causal_tuple.sent_index}")
        assert rows == expected

    def test_question_sentence_yields_nothing(self, fixture_sentences):
        """Test that a question with a causal verb but no effect argument is skipped."""
        # Execute
        tuples = extract_corpus(fixture_sentences)

        # Verify
        assert ("news1", 16) not in {t.sentence_ref for t in tuples}

    def test_passive_rule_swaps_roles(self, fixture_sentences):
        """Test that the passive rule still puts the agent in the cause slot."""
        # Setup
        sentence = next(s for s in fixture_sentences if s.ref == ("news1", 3))

        # Execute
        tuples = extract_causal_tuples(sentence, identify_causal_mentions(sentence))

        # Verify
        assert tuple_texts(sentence, tuples) == [("by heavy rain", "The flood")]
        assert tuples[0].rule_id == "1"
