"""Excerpt statistics: readability indices and Spearman correlation of
per-excerpt scores against excerpt difficulty statistics.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from scipy.stats import t as t_dist

from .annotation_io import label_tokens, tokenize
from .crowd import Excerpt
from .model import CROWD_KINDS, CiError, ParameterKind

_SENTENCE_RE = re.compile(r"[.!?]+")
_VOWEL_GROUP_RE = re.compile(r"[aeiouy]+")


def count_syllables(word: str) -> int:
    """Vowel-group heuristic: count groups of a/e/i/o/u/y, subtract one for
    a terminal silent 'e' unless the word ends in 'le'; minimum one."""
    w = word.lower()
    groups = _VOWEL_GROUP_RE.findall(w)
    n = len(groups)
    if w.endswith("e") and not w.endswith("le") and n > 1:
        n -= 1
    return max(n, 1)


def _words_and_sentences(text: str):
    words = [t.text for t in tokenize(text)]
    if not words:
        raise CiError("readability indices require non-empty text")
    sentences = max(len(_SENTENCE_RE.findall(text)), 1)
    return words, sentences


def reading_ease(text: str) -> float:
    """Flesch-Kincaid Reading Ease:
    206.835 - 1.015 * (words/sentences) - 84.6 * (syllables/words)."""
    words, sentences = _words_and_sentences(text)
    syllables = sum(count_syllables(w) for w in words)
    return 206.835 - 1.015 * (len(words) / sentences) - 84.6 * (syllables / len(words))


def fog(text: str) -> float:
    """Gunning FOG index:
    0.4 * ((words/sentences) + 100 * (complex_words/words)), where complex
    means three or more syllables."""
    words, sentences = _words_and_sentences(text)
    complex_words = sum(1 for w in words if count_syllables(w) >= 3)
    return 0.4 * ((len(words) / sentences) + 100 * (complex_words / len(words)))


def _average_ranks(values: list[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2 + 1  # ranks are 1-based
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def spearman(xs: list[float], ys: list[float]) -> tuple[float, float]:
    """Spearman rho (Pearson on average ranks, ties get the mean rank) and
    a two-sided p-value from the t approximation."""
    if len(xs) != len(ys):
        raise CiError("input lengths differ")
    n = len(xs)
    if n < 3:
        raise CiError("spearman requires at least 3 observations")
    rx = _average_ranks(list(xs))
    ry = _average_ranks(list(ys))
    mean_x = sum(rx) / n
    mean_y = sum(ry) / n
    sxx = sum((a - mean_x) ** 2 for a in rx)
    syy = sum((b - mean_y) ** 2 for b in ry)
    if sxx == 0 or syy == 0:
        return 0.0, 1.0  # a constant input carries no rank information
    sxy = sum((a - mean_x) * (b - mean_y) for a, b in zip(rx, ry))
    rho = sxy / math.sqrt(sxx * syy)
    rho = max(-1.0, min(1.0, rho))
    if abs(rho) == 1.0:
        return rho, 0.0
    t_stat = rho * math.sqrt((n - 2) / (1 - rho * rho))
    p = 2 * t_dist.sf(abs(t_stat), n - 2)
    return rho, float(p)


@dataclass(frozen=True)
class ExcerptStats:
    excerpt_id: str
    total_words: int
    labeled_words_per_kind: dict[ParameterKind, int]
    flesch_kincaid_reading_ease: float
    fog_index: float


def excerpt_stats(excerpt: Excerpt) -> ExcerptStats:
    """Word counts (all tokens), expert-labeled non-stopword word counts
    per kind, and the two readability indices."""
    labeled = {kind: 0 for kind in ParameterKind}
    if excerpt.gold is not None:
        for _token, kind in label_tokens(excerpt.text, excerpt.gold.spans):
            if kind is not None:
                labeled[kind] += 1
    return ExcerptStats(
        excerpt.excerpt_id,
        len(tokenize(excerpt.text)),
        labeled,
        reading_ease(excerpt.text),
        fog(excerpt.text),
    )


#: Statistic name -> extractor over ExcerptStats, in table order.
_STATISTICS = (
    ("total_words", lambda s, kind: float(s.total_words)),
    ("labeled_words", lambda s, kind: float(s.labeled_words_per_kind[kind])),
    ("reading_ease", lambda s, kind: s.flesch_kincaid_reading_ease),
    ("fog_index", lambda s, kind: s.fog_index),
)


@dataclass(frozen=True)
class CorrelationRow:
    statistic: str
    kind: ParameterKind
    rho: float
    p_value: float


def correlate_difficulty(
    excerpts: list[Excerpt],
    f1_by_excerpt: dict[str, dict[ParameterKind, float]],
    kinds: tuple[ParameterKind, ...] = CROWD_KINDS,
) -> list[CorrelationRow]:
    """Spearman correlation of per-excerpt per-kind F1 against each
    excerpt statistic: 4 statistics x 4 kinds."""
    scored = [e for e in excerpts if e.excerpt_id in f1_by_excerpt]
    if len(scored) < 3:
        raise CiError("correlate_difficulty requires at least 3 scored excerpts")
    stats = [excerpt_stats(e) for e in scored]
    rows = []
    for name, extract in _STATISTICS:
        for kind in kinds:
            xs = [extract(s, kind) for s in stats]
            ys = [f1_by_excerpt[e.excerpt_id][kind] for e in scored]
            rho, p = spearman(xs, ys)
            rows.append(CorrelationRow(name, kind, rho, p))
    return rows
