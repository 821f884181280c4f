"""
Tests for the corpus service.
"""
import pytest

from backend.causalqa.exceptions import ConfigError, CorpusStructureError, DataFormatError
from backend.causalqa.models.config import PipelineConfig
from backend.causalqa.models.corpus import LemmaFilter
from backend.causalqa.services.corpus_service import (
    CorpusService,
    build_lemma_table,
    content_lemmas,
    lemmatize_raw,
    normalize_dependencies,
    parse_conllu,
    serialize_conllu,
    tokenize_raw,
    validate_structure,
)
from backend.causalqa.tests.conftest import build_sentence, housing_bubble_sentence


def conll_line(index, surface, lemma, pos, head, deprel):
    """Helper function to create one 10-column token line."""
    return "\t".join([str(index), surface, lemma, pos, "_", "_", str(head), deprel, "_", "_"])


class TestParseConllu:
    """Tests for reading CoNLL text."""

    def test_parse_fixture_corpus(self, fixture_sentences):
        """Test that every sentence of the fixture is read with its reference."""
        # Verify
        assert len(fixture_sentences) == 20
        assert fixture_sentences[0].ref == ("news1", 0)
        assert fixture_sentences[17].ref == ("news1", 17)
        assert fixture_sentences[18].ref == ("news2", 0)
        assert fixture_sentences[19].ref == ("news2", 1)

    def test_parse_numbers_sentences_without_comments(self):
        """Test that sentences are numbered from zero within the given document."""
        # Setup
        text = "\n".join(
            [
                conll_line(1, "Rain", "rain", "NN", 2, "nsubj"),
                conll_line(2, "fell", "fall", "VBD", 0, "root"),
                "",
                conll_line(1, "Snow", "snow", "NN", 2, "nsubj"),
                conll_line(2, "fell", "fall", "VBD", 0, "root"),
                "",
            ]
        )

        # Execute
        sentences = parse_conllu(text, doc_id="weather")

        # Verify
        assert [s.ref for s in sentences] == [("weather", 0), ("weather", 1)]
        assert sentences[1].token(1).lemma == "snow"

    def test_parse_falls_back_to_lowercased_surface_for_missing_lemma(self):
        """Test that an underscore lemma becomes the lowercased surface form."""
        # Setup
        text = conll_line(1, "Rain", "_", "NN", 0, "root") + "\n"

        # Execute
        sentences = parse_conllu(text)

        # Verify
        assert sentences[0].token(1).lemma == "rain"

    def test_parse_skips_multiword_ranges(self):
        """Test that multi-word token ranges are skipped."""
        # Setup
        text = "\n".join(
            [
                "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_",
                conll_line(1, "do", "do", "VBP", 0, "root"),
                conll_line(2, "n't", "not", "RB", 1, "neg"),
            ]
        )

        # Execute
        sentences = parse_conllu(text)

        # Verify
        assert len(sentences[0]) == 2

    def test_parse_rejects_wrong_column_count(self):
        """Test that a short token line is a format error with its line number."""
        # Setup
        text = "# doc_id = d\n1\tRain\train\tNN\t0\troot\n"

        # Execute and Verify
        with pytest.raises(DataFormatError) as excinfo:
            parse_conllu(text)
        assert excinfo.value.line_number == 2

    def test_parse_rejects_two_roots(self):
        """Test that a sentence with two roots is rejected."""
        # Setup
        text = "\n".join(
            [
                conll_line(1, "Rain", "rain", "NN", 0, "root"),
                conll_line(2, "fell", "fall", "VBD", 0, "root"),
            ]
        )

        # Execute and Verify
        with pytest.raises(CorpusStructureError):
            parse_conllu(text)


class TestValidateStructure:
    """Tests for the tree invariants."""

    def test_head_beyond_sentence_length(self):
        """Test that a head pointing past the sentence is rejected."""
        # Setup
        sentence = build_sentence([("a", "a", "NN", 0, "root"), ("b", "b", "NN", 5, "dep")])

        # Execute and Verify
        with pytest.raises(CorpusStructureError, match="beyond"):
            validate_structure(sentence.tokens, "d", 0)

    def test_cycle(self):
        """Test that a dependency cycle is rejected."""
        # Setup
        sentence = build_sentence(
            [
                ("a", "a", "NN", 0, "root"),
                ("b", "b", "NN", 3, "dep"),
                ("c", "c", "NN", 2, "dep"),
            ]
        )

        # Execute and Verify
        with pytest.raises(CorpusStructureError, match="cycle"):
            validate_structure(sentence.tokens, "d", 0)

    def test_non_contiguous_indices(self):
        """Test that a gap in token indices is a structure error, not a lookup failure."""
        # Setup
        text = "\n".join(
            [
                conll_line(1, "rain", "rain", "NN", 0, "root"),
                conll_line(3, "floods", "flood", "VBZ", 2, "dep"),
            ]
        ) + "\n\n"

        # Execute and Verify
        with pytest.raises(CorpusStructureError, match="indices"):
            parse_conllu(text)

    def test_valid_tree(self):
        """Test that a well-formed tree passes."""
        # Setup
        sentence = housing_bubble_sentence()

        # Execute and Verify
        validate_structure(sentence.tokens, "d", 0)


class TestNormalizeDependencies:
    """Tests for collapsing case-marked parses."""

    def test_obl_with_case_becomes_prep_label(self):
        """Test that obl plus a case dependent becomes prep_<lemma>."""
        # Setup
        sentence = build_sentence(
            [
                ("Smoking", "smoking", "NN", 2, "nsubj"),
                ("leads", "lead", "VBZ", 0, "root"),
                ("to", "to", "IN", 4, "case"),
                ("cancer", "cancer", "NN", 2, "obl"),
            ]
        )

        # Execute
        normalized = normalize_dependencies(sentence)

        # Verify
        assert normalized.token(4).deprel == "prep_to"
        assert normalized.token(3).deprel == "case"

    def test_multiword_case_joins_lemmas(self):
        """Test that a fixed expression extends the collapsed label."""
        # Setup
        sentence = build_sentence(
            [
                ("Play", "play", "NN", 2, "nsubjpass"),
                ("stopped", "stop", "VBD", 0, "root"),
                ("because", "because", "IN", 5, "case"),
                ("of", "of", "IN", 3, "fixed"),
                ("rain", "rain", "NN", 2, "obl"),
            ]
        )

        # Execute
        normalized = normalize_dependencies(sentence)

        # Verify
        assert normalized.token(5).deprel == "prep_because_of"

    def test_renamed_labels_are_mapped(self):
        """Test that UD labels with a collapsed counterpart are renamed."""
        # Setup
        sentence = build_sentence(
            [
                ("stock", "stock", "NN", 2, "compound"),
                ("prices", "price", "NNS", 3, "nsubj"),
                ("fell", "fall", "VBD", 0, "root"),
            ]
        )

        # Execute
        normalized = normalize_dependencies(sentence)

        # Verify
        assert normalized.token(1).deprel == "nn"

    def test_collapsed_input_is_unchanged(self):
        """Test that an already collapsed parse comes back as is."""
        # Setup
        sentence = housing_bubble_sentence()

        # Execute
        normalized = normalize_dependencies(sentence)

        # Verify
        assert normalized is sentence


class TestSerializeConllu:
    """Tests for writing CoNLL text."""

    def test_serialized_fixture_reads_back_equal(self, fixture_sentences):
        """Test that serializing and re-reading keeps tokens and references."""
        # Execute
        reread = parse_conllu(serialize_conllu(fixture_sentences), normalize=False)

        # Verify
        assert [s.ref for s in reread] == [s.ref for s in fixture_sentences]
        assert reread[8].tokens == fixture_sentences[8].tokens


class TestLemmas:
    """Tests for lemma filtering and raw-text lemmatization."""

    def test_content_lemmas_keep_nouns_verbs_adjectives(self, lemma_filter):
        """Test that function words and stopwords are filtered out."""
        # Setup
        sentence = housing_bubble_sentence()

        # Execute
        lemmas = content_lemmas(sentence.tokens, lemma_filter)

        # Verify
        assert lemmas == ["collapse", "housing", "bubble", "cause", "stock", "price", "fall"]

    def test_custom_filter_pos(self):
        """Test that the kept parts of speech are configurable."""
        # Setup
        lemma_filter = LemmaFilter(stopwords={"the"}, keep_pos={"NOUN"})
        sentence = housing_bubble_sentence()

        # Execute
        lemmas = content_lemmas(sentence.tokens, lemma_filter)

        # Verify
        assert "cause" not in lemmas
        assert "fall" not in lemmas
        assert "bubble" in lemmas

    def test_tokenize_raw(self):
        """Test that raw text is lowercased and split on word characters."""
        # Execute
        tokens = tokenize_raw("What causes Insomnia?")

        # Verify
        assert tokens == ["what", "causes", "insomnia"]

    def test_tokenize_raw_keeps_accented_words(self):
        """Test that non-ASCII letters stay inside their word."""
        # Execute
        tokens = tokenize_raw("Café owners blame the Straße closure.")

        # Verify
        assert tokens == ["café", "owners", "blame", "the", "straße", "closure"]

    def test_content_lemmas_are_idempotent(self, lemma_filter):
        """Test that filtering already-filtered lemmas changes nothing."""
        # Setup
        sentence = housing_bubble_sentence()
        lemmas = content_lemmas(sentence.tokens, lemma_filter)
        kept = [token for token in sentence.tokens if token.lemma.lower() in lemmas]

        # Execute
        again = content_lemmas(kept, lemma_filter)

        # Verify
        assert again == lemmas

    def test_lemmatize_raw_uses_table_and_drops_stopwords(self, lemma_filter):
        """Test that known surfaces map to lemmas and stopwords are dropped."""
        # Setup
        table = {"causes": "cause", "headaches": "headache"}

        # Execute
        lemmas = lemmatize_raw("What causes headaches?", table, lemma_filter)

        # Verify
        assert lemmas == ["cause", "headache"]

    def test_build_lemma_table_prefers_most_frequent(self):
        """Test that the most frequent lemma wins for a surface form."""
        # Setup
        sentences = [
            build_sentence([("saw", "see", "VBD", 0, "root")]),
            build_sentence([("saw", "see", "VBD", 0, "root")]),
            build_sentence([("saw", "saw", "NN", 0, "root")]),
        ]

        # Execute
        table = build_lemma_table(sentences)

        # Verify
        assert table == {"saw": "see"}


class TestCorpusService:
    """Tests for the configured corpus and lemma table."""

    def test_missing_corpus_key(self, tmp_path):
        """Test that loading without a configured corpus names the command."""
        # Setup
        service = CorpusService(PipelineConfig(output_dir=tmp_path))

        # Execute and Verify
        with pytest.raises(ConfigError, match="extraction"):
            service.load_corpus("extraction")

    def test_absent_lemma_table_falls_back_to_empty(self, tmp_path):
        """Test that raw text is used as is when extraction wrote no lemma table."""
        # Setup
        service = CorpusService(PipelineConfig(output_dir=tmp_path))

        # Execute and Verify
        assert service.lemma_table() == {}

    def test_configured_lemma_table_must_exist(self, tmp_path):
        """Test that an explicitly configured table is never silently skipped."""
        # Setup
        service = CorpusService(PipelineConfig(output_dir=tmp_path, lemma_table=tmp_path / "absent.tsv"))

        # Execute and Verify
        with pytest.raises(DataFormatError, match="absent.tsv"):
            service.lemma_table()

    def test_saved_lemma_table_is_read_back(self, tmp_path):
        """Test that the table written during extraction is found under model_dir."""
        # Setup
        sentences = [housing_bubble_sentence()]
        writer = CorpusService(PipelineConfig(output_dir=tmp_path / "models"))
        reader = CorpusService(PipelineConfig(output_dir=tmp_path / "out", model_dir=tmp_path / "models"))

        # Execute
        path = writer.save_lemma_table(sentences)

        # Verify
        assert path == tmp_path / "models" / "lemmas.tsv"
        assert reader.lemma_table() == build_lemma_table(sentences)
