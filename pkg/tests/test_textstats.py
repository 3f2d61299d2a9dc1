import numpy as np
import pytest
from hypothesis import given, strategies as st

from acclaim.errors import EmptyText
from acclaim.featurize import (
    count_syllables,
    flesch_reading_ease,
    lexicon_percentages,
    parse_lexicon,
    question_ratio,
    split_sentences,
    tokenize,
)


class TestTokenizer:
    def test_lowercase_and_split(self):
        assert tokenize("Hello, World!") == ["hello", "world"]

    def test_contractions_kept_whole(self):
        assert tokenize("Don't stop; it's fine") == ["don't", "stop", "it's", "fine"]

    def test_numbers_kept(self):
        assert tokenize("2nd place of 3") == ["2nd", "place", "of", "3"]

    def test_empty(self):
        assert tokenize("...") == []


class TestSentences:
    def test_terminal_punctuation(self):
        got = split_sentences("One. Two! Three?")
        assert [p for _, p in got] == [".", "!", "?"]

    def test_trailing_fragment_counts(self):
        got = split_sentences("Done. trailing words")
        assert len(got) == 2 and got[1][1] == ""

    def test_multi_punct_uses_last(self):
        got = split_sentences("Really?! Sure.")
        assert [p for _, p in got] == ["!", "."]


class TestSyllables:
    # exact-count fixtures covering the vowel-group + silent-e rules
    @pytest.mark.parametrize(
        "word,count",
        [("go", 1), ("the", 1), ("cat", 1), ("mat", 1), ("table", 2),
         ("apple", 2), ("bee", 1), ("idea", 2), ("rhythm", 1), ("make", 1),
         ("making", 2), ("people", 2)],
    )
    def test_known_words(self, word, count):
        assert count_syllables(word) == count


class TestFlesch:
    def test_go_fixture(self):
        # 1 word, 1 sentence, 1 syllable: 206.835 - 1.015 - 84.6
        assert flesch_reading_ease("Go.") == pytest.approx(121.22, abs=1e-9)

    def test_cat_fixture(self):
        # 6 words, 1 sentence, 6 syllables
        assert flesch_reading_ease("The cat sat on the mat.") == pytest.approx(
            116.145, abs=1e-9
        )

    def test_duplication_invariance(self):
        text = "The cat sat on the mat. Why did it sit?"
        doubled = text + " " + text
        assert flesch_reading_ease(doubled) == pytest.approx(
            flesch_reading_ease(text), abs=1e-9
        )

    def test_empty_raises(self):
        with pytest.raises(EmptyText):
            flesch_reading_ease("...")


class TestQuestionRatio:
    def test_all_questions(self):
        assert question_ratio("How? Why?") == 1.0

    def test_half(self):
        assert question_ratio("Hello. How are you?") == 0.5

    def test_third_count_oracle(self):
        # independent count: 1 '?' of 3 sentences
        text = "One. Two! Three?"
        n_q = sum(1 for _, p in split_sentences(text) if p == "?")
        n = len(split_sentences(text))
        assert question_ratio(text) == pytest.approx(n_q / n)
        assert question_ratio(text) == pytest.approx(1 / 3)

    def test_duplication_invariance(self):
        text = "One. Two! Three?"
        assert question_ratio(text + " " + text) == pytest.approx(question_ratio(text))

    def test_empty_raises(self):
        with pytest.raises(EmptyText):
            question_ratio("   ")


SMALL_LEXICON = parse_lexicon("family\tmom*,dad*\ngreet\thi,hello\n")


class TestLexiconPercentages:
    def test_count_over_length_oracle(self):
        tokens = ["mom", "said", "hi"]
        got = lexicon_percentages(tokens, SMALL_LEXICON)
        assert got["family"] == pytest.approx(100 * 1 / 3, abs=1e-9)
        assert got["greet"] == pytest.approx(100 * 1 / 3, abs=1e-9)

    def test_no_match_zero(self):
        got = lexicon_percentages(["quartz", "zebra"], SMALL_LEXICON)
        assert got["family"] == 0.0

    def test_all_match_hundred(self):
        got = lexicon_percentages(["mommy", "dads", "mom"], SMALL_LEXICON)
        assert got["family"] == 100.0

    def test_values_bounded(self):
        got = lexicon_percentages(["mom", "hi", "x", "y"], SMALL_LEXICON)
        assert all(0.0 <= v <= 100.0 for v in got.values())

    def test_empty_raises(self):
        with pytest.raises(EmptyText):
            lexicon_percentages([], SMALL_LEXICON)

    @given(st.lists(st.sampled_from(["mom", "hi", "word", "daddy"]), min_size=1,
                    max_size=30))
    def test_duplication_invariance(self, tokens):
        once = lexicon_percentages(tokens, SMALL_LEXICON)
        twice = lexicon_percentages(tokens * 2, SMALL_LEXICON)
        for k in once:
            assert np.isclose(once[k], twice[k])
