import math
import random

import pytest

from cipolicy.crowd import AnnotationSet, Excerpt
from cipolicy.model import CROWD_KINDS, CiError, ParameterKind, Span
from cipolicy.readability import (
    CorrelationRow,
    correlate_difficulty,
    count_syllables,
    excerpt_stats,
    fog,
    reading_ease,
    spearman,
)

K = ParameterKind


class TestCountSyllables:
    def test_monosyllables(self):
        for word in ("cat", "sat", "go", "the"):
            assert count_syllables(word) == 1, word

    def test_terminal_silent_e(self):
        assert count_syllables("share") == 1
        assert count_syllables("update") == 2

    def test_le_ending_keeps_final_group(self):
        assert count_syllables("table") == 2
        assert count_syllables("possible") == 3

    def test_y_counts_as_vowel(self):
        assert count_syllables("privacy") == 3
        assert count_syllables("myth") == 1

    def test_minimum_one(self):
        assert count_syllables("tsk") == 1

    def test_case_insensitive(self):
        assert count_syllables("Information") == count_syllables("information") == 4


class TestReadingEase:
    def test_the_cat_sat(self):
        expected = 206.835 - 1.015 * 3 - 84.6 * 1
        assert abs(reading_ease("The cat sat.") - expected) < 1e-9
        assert abs(reading_ease("The cat sat.") - 119.19) < 1e-9

    def test_single_word_go(self):
        assert abs(reading_ease("Go.") - (206.835 - 1.015 - 84.6)) < 1e-9
        assert abs(reading_ease("Go.") - 121.22) < 1e-9

    def test_missing_terminator_counts_one_sentence(self):
        assert reading_ease("The cat sat") == reading_ease("The cat sat.")

    def test_repetition_invariance(self):
        text = "We may share certain data with vendors."
        assert abs(reading_ease(text) - reading_ease(text + " " + text)) < 1e-9
        assert abs(fog(text) - fog(text + " " + text)) < 1e-9

    def test_case_invariance(self):
        text = "We share data with partners."
        assert reading_ease(text) == reading_ease(text.upper())
        assert fog(text) == fog(text.upper())

    def test_empty_text_rejected(self):
        with pytest.raises(CiError):
            reading_ease("")
        with pytest.raises(CiError):
            fog("...")


class TestFog:
    def test_monosyllabic_sentence(self):
        # all one-syllable words, one sentence of n words -> 0.4 * n
        assert abs(fog("The cat sat on the mat.") - 0.4 * 6) < 1e-9

    def test_complex_word_share(self):
        # "information" (4 syllables) is the only complex word of 4
        text = "We share your information."
        expected = 0.4 * (4 + 100 * (1 / 4))
        assert abs(fog(text) - expected) < 1e-9


def sum_d2_oracle(xs, ys):
    """Classic tie-free formula: 1 - 6*sum(d^2) / (n*(n^2-1))."""
    n = len(xs)
    rank_x = {v: i + 1 for i, v in enumerate(sorted(xs))}
    rank_y = {v: i + 1 for i, v in enumerate(sorted(ys))}
    d2 = sum((rank_x[a] - rank_y[b]) ** 2 for a, b in zip(xs, ys))
    return 1 - 6 * d2 / (n * (n * n - 1))


class TestSpearman:
    def test_pinned_example(self):
        rho, p = spearman([1, 2, 3, 4, 5], [2, 1, 4, 3, 5])
        assert abs(rho - 0.8) < 1e-12
        assert abs(rho - sum_d2_oracle([1, 2, 3, 4, 5], [2, 1, 4, 3, 5])) < 1e-12

    def test_perfect_monotone(self):
        rho, p = spearman([1, 2, 3], [10, 20, 30])
        assert rho == 1.0 and p == 0.0
        rho, p = spearman([1, 2, 3], [30, 20, 10])
        assert rho == -1.0 and p == 0.0

    def test_constant_input(self):
        assert spearman([5, 5, 5], [1, 2, 3]) == (0.0, 1.0)

    def test_length_mismatch(self):
        with pytest.raises(CiError):
            spearman([1, 2, 3], [1, 2])

    def test_too_few_observations(self):
        with pytest.raises(CiError):
            spearman([1, 2], [2, 1])

    def test_matches_sum_d2_oracle_on_tie_free_vectors(self):
        rng = random.Random(2024)
        for _ in range(1000):
            n = rng.randint(3, 20)
            xs = rng.sample(range(10_000), n)
            ys = rng.sample(range(10_000), n)
            rho, _p = spearman(xs, ys)
            assert abs(rho - sum_d2_oracle(xs, ys)) < 1e-12

    def test_monotone_transform_invariance(self):
        rng = random.Random(8)
        for _ in range(50):
            n = rng.randint(3, 12)
            xs = rng.sample(range(1000), n)
            ys = rng.sample(range(1000), n)
            rho, p = spearman(xs, ys)
            rho2, p2 = spearman([math.exp(x / 100) for x in xs],
                                [y ** 3 for y in ys])
            assert abs(rho - rho2) < 1e-9
            assert abs(p - p2) < 1e-9

    def test_p_value_in_range(self):
        rng = random.Random(12)
        for _ in range(100):
            n = rng.randint(3, 15)
            xs = rng.sample(range(1000), n)
            ys = rng.sample(range(1000), n)
            _rho, p = spearman(xs, ys)
            assert 0.0 <= p <= 1.0


class TestExcerptStats:
    def test_counts_and_labels(self):
        text = "You give us contact information."
        gold = AnnotationSet("expert", "e1", (
            Span(0, 3, K.SENDER),
            Span(12, 31, K.ATTRIBUTE),
        ))
        stats = excerpt_stats(Excerpt("e1", text, gold))
        assert stats.total_words == 5
        assert stats.labeled_words_per_kind[K.SENDER] == 1
        assert stats.labeled_words_per_kind[K.ATTRIBUTE] == 2
        assert stats.labeled_words_per_kind[K.RECIPIENT] == 0

    def test_stopwords_not_counted_as_labeled(self):
        text = "the data"
        gold = AnnotationSet("expert", "e1", (Span(0, 8, K.ATTRIBUTE),))
        stats = excerpt_stats(Excerpt("e1", text, gold))
        assert stats.total_words == 2
        assert stats.labeled_words_per_kind[K.ATTRIBUTE] == 1

    def test_no_gold(self):
        stats = excerpt_stats(Excerpt("e1", "Plain text here."))
        assert all(v == 0 for v in stats.labeled_words_per_kind.values())


class TestCorrelateDifficulty:
    def _excerpts(self, n=5):
        out = []
        for i in range(n):
            text = " ".join(["word"] * (i + 3)) + "."
            out.append(Excerpt(f"e{i}", text))
        return out

    def test_four_by_four_grid(self):
        excerpts = self._excerpts()
        f1 = {e.excerpt_id: {k: random.Random(i).random() for k in CROWD_KINDS}
              for i, e in enumerate(excerpts)}
        rows = correlate_difficulty(excerpts, f1)
        assert len(rows) == 16
        assert [r.statistic for r in rows[:4]] == ["total_words"] * 4
        assert {r.kind for r in rows} == set(CROWD_KINDS)
        assert all(isinstance(r, CorrelationRow) for r in rows)

    def test_unscored_excerpts_ignored(self):
        excerpts = self._excerpts(5)
        f1 = {f"e{i}": {k: float(i) for k in CROWD_KINDS} for i in range(3)}
        rows = correlate_difficulty(excerpts, f1)
        # total_words increases with i, F1 = i: perfect rank agreement
        assert rows[0].statistic == "total_words"
        assert rows[0].rho == 1.0

    def test_too_few_scored(self):
        excerpts = self._excerpts(2)
        f1 = {e.excerpt_id: {k: 0.5 for k in CROWD_KINDS} for e in excerpts}
        with pytest.raises(CiError):
            correlate_difficulty(excerpts, f1)
