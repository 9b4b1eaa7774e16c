"""Crowdsourced-annotation pipeline: screening gate, majority-vote
aggregation, word-based scoring, and span-based scoring with the error
ledger.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .annotation_io import label_tokens, tokenize
from .model import (
    CROWD_KINDS,
    AnnotationSet,
    CiError,
    KindScore,
    ParameterKind,
    ScoreReport,
    Span,
    f1_score,
    validate_spans,
)


@dataclass(frozen=True)
class Excerpt:
    excerpt_id: str
    text: str
    gold: AnnotationSet | None = None
    is_screening: bool = False
    screening_index: int | None = None  # 1..3 for screening excerpts

    def __post_init__(self):
        if self.is_screening and self.gold is None:
            raise CiError(f"screening excerpt {self.excerpt_id!r} must carry gold")
        if self.gold is not None:
            validate_spans(self.gold.spans, len(self.text), f"gold for {self.excerpt_id!r}")


@dataclass(frozen=True)
class ScreeningRule:
    """Pass iff micro-F1 >= threshold on Q1 and on at least one of Q2/Q3."""

    f1_threshold: float = 0.7

    def __post_init__(self):
        if not 0.0 <= self.f1_threshold <= 1.0:
            raise ValueError("f1_threshold must be in [0, 1]")

    def passes(self, q1: float, q2: float, q3: float) -> bool:
        t = self.f1_threshold
        return q1 >= t and (q2 >= t or q3 >= t)


@dataclass(frozen=True)
class AggregatedAnnotation:
    """Majority-vote result: one optional label per non-stopword token."""

    excerpt_id: str
    labels: dict[int, ParameterKind]  # token start offset -> winning kind
    vote_counts: dict[int, dict[ParameterKind, int]]
    n_annotators: int


def majority_vote(annotations: list[AnnotationSet], excerpt: Excerpt) -> AggregatedAnnotation:
    """Assign each non-stopword token the kind voted by at least 50% of
    annotators.  An exact two-way 50/50 tie assigns no label."""
    if not annotations:
        raise CiError("majority_vote requires at least one annotation")
    for ann in annotations:
        if ann.excerpt_id != excerpt.excerpt_id:
            raise CiError(
                f"annotation for {ann.excerpt_id!r} does not match excerpt "
                f"{excerpt.excerpt_id!r}"
            )
        validate_spans(ann.spans, len(excerpt.text), f"annotation {ann.annotator_id!r}")

    n = len(annotations)
    need = math.ceil(n / 2)  # "at least 50%"
    votes: dict[int, Counter] = defaultdict(Counter)
    for ann in annotations:
        for token, kind in label_tokens(excerpt.text, ann.spans):
            if kind is not None:
                votes[token.start][kind] += 1

    labels = {}
    for start, counter in votes.items():
        winners = [kind for kind, c in counter.items() if c >= need]
        if len(winners) == 1:
            labels[start] = winners[0]
    return AggregatedAnnotation(
        excerpt.excerpt_id,
        labels,
        {start: dict(counter) for start, counter in votes.items()},
        n,
    )


def _token_labels(source, excerpt: Excerpt) -> dict[int, ParameterKind]:
    """Map non-stopword token start offsets to kinds for an AnnotationSet
    or an AggregatedAnnotation."""
    if isinstance(source, AggregatedAnnotation):
        if source.excerpt_id != excerpt.excerpt_id:
            raise CiError("aggregate does not match excerpt")
        return dict(source.labels)
    if isinstance(source, AnnotationSet):
        if source.excerpt_id != excerpt.excerpt_id:
            raise CiError("annotation does not match excerpt")
        return {
            t.start: kind
            for t, kind in label_tokens(excerpt.text, source.spans)
            if kind is not None
        }
    raise TypeError(f"unsupported annotation source: {type(source).__name__}")


def word_scores(predicted, gold: AnnotationSet, excerpt: Excerpt) -> ScoreReport:
    """Word-based precision/recall/F1 per kind over non-stopword tokens.

    Edge conventions: a kind absent from gold scores recall 1; a kind
    absent from the prediction scores precision 1.  The micro score pools
    all kinds and follows the same conventions.
    """
    pred_labels = _token_labels(predicted, excerpt)
    gold_labels = _token_labels(gold, excerpt)

    def score(tp: int, fp: int, fn: int) -> KindScore:
        precision = 1.0 if tp + fp == 0 else tp / (tp + fp)
        recall = 1.0 if tp + fn == 0 else tp / (tp + fn)
        return KindScore(precision, recall, f1_score(precision, recall), tp, fp, fn)

    by_kind = {}
    total_tp = total_fp = total_fn = 0
    for kind in ParameterKind:
        pred_tokens = {s for s, k in pred_labels.items() if k == kind}
        gold_tokens = {s for s, k in gold_labels.items() if k == kind}
        tp = len(pred_tokens & gold_tokens)
        fp = len(pred_tokens - gold_tokens)
        fn = len(gold_tokens - pred_tokens)
        by_kind[kind] = score(tp, fp, fn)
        total_tp += tp
        total_fp += fp
        total_fn += fn
    return ScoreReport(by_kind, score(total_tp, total_fp, total_fn))


@dataclass(frozen=True)
class ScreeningOutcome:
    passed: bool
    micro_f1: tuple[float, float, float]
    reason: str | None = None


def screen_worker(
    responses: list[AnnotationSet | None],
    screening_excerpts: list[Excerpt],
    rule: ScreeningRule | None = None,
) -> ScreeningOutcome:
    """Evaluate the three screening responses against expert gold."""
    rule = rule or ScreeningRule()
    if len(screening_excerpts) != 3:
        raise CiError("exactly three screening excerpts required")
    if len(responses) != 3:
        return ScreeningOutcome(False, (0.0, 0.0, 0.0), "expected exactly three responses")
    scores = []
    for i, (resp, excerpt) in enumerate(zip(responses, screening_excerpts), 1):
        if excerpt.gold is None:
            raise CiError(f"screening excerpt {excerpt.excerpt_id!r} lacks gold")
        if resp is None:
            return ScreeningOutcome(False, (0.0, 0.0, 0.0), f"missing response to Q{i}")
        scores.append(word_scores(resp, excerpt.gold, excerpt).micro.f1)
    q1, q2, q3 = scores
    return ScreeningOutcome(rule.passes(q1, q2, q3), (q1, q2, q3))


# --- span-based (parameter-based) scoring ----------------------------------

#: Manual triage tags for ledger entries (assigned by humans, never here).
TRIAGE_TAGS = ("expert-error", "skipped-parameter", "ambiguous", "overlapping", "true-error")


@dataclass(frozen=True)
class LedgerEntry:
    kind: ParameterKind
    excerpt_id: str
    status: str  # correct | skipped | extra | mismatch
    gold_span: Span | None = None
    predicted_span: Span | None = None
    predicted_kind: ParameterKind | None = None  # set for mismatch entries
    triage: str | None = None


@dataclass(frozen=True)
class ErrorLedger:
    entries: tuple[LedgerEntry, ...]

    def by_status(self, status: str) -> tuple[LedgerEntry, ...]:
        return tuple(e for e in self.entries if e.status == status)


def span_scores(
    predicted,
    gold: AnnotationSet,
    excerpt: Excerpt,
    overlap_threshold: float = 0.5,
) -> tuple[dict[ParameterKind, dict[str, int]], ErrorLedger]:
    """Instance-level matching of gold vs. predicted spans.

    Same-kind spans match when the shared non-stopword tokens cover at
    least `overlap_threshold` of the gold span's tokens; matching is
    one-to-one greedy by overlap.  Unmatched gold spans are skipped (false
    negatives); unmatched predicted spans are extra (false positives);
    overlapping different-kind pairs are recorded as mismatches.  Triage
    is left for manual categorization.
    """
    pred_spans = _as_spans(predicted, excerpt)
    gold_spans = list(gold.spans)
    text = excerpt.text

    def tokens_of(span: Span) -> frozenset[int]:
        return frozenset(
            t.start + span.start
            for t in tokenize(text[span.start : span.end])
            if not t.is_stopword
        )

    gold_tok = {s: tokens_of(s) for s in gold_spans}
    pred_tok = {s: tokens_of(s) for s in pred_spans}

    def overlap_frac(g: Span, p: Span) -> float:
        gt = gold_tok[g]
        if not gt:
            # A gold span of only stopwords matches on character overlap.
            inter = min(g.end, p.end) - max(g.start, p.start)
            return inter / (g.end - g.start) if inter > 0 else 0.0
        return len(gt & pred_tok[p]) / len(gt)

    # Same-kind greedy matching by overlap (desc), deterministic tie-break.
    candidates = []
    for g in gold_spans:
        for p in pred_spans:
            if g.kind != p.kind:
                continue
            frac = overlap_frac(g, p)
            if frac >= overlap_threshold:
                candidates.append((-frac, g.start, p.start, g, p))
    candidates.sort(key=lambda c: c[:3])

    matched_gold: dict[Span, Span] = {}
    matched_pred: set[Span] = set()
    for _frac, _gs, _ps, g, p in candidates:
        if g in matched_gold or p in matched_pred:
            continue
        matched_gold[g] = p
        matched_pred.add(p)

    # Remaining different-kind overlapping pairs become mismatches.
    rest_gold = [g for g in gold_spans if g not in matched_gold]
    rest_pred = [p for p in pred_spans if p not in matched_pred]
    mismatch_pairs = []
    mm_candidates = []
    for g in rest_gold:
        for p in rest_pred:
            if g.kind == p.kind:
                continue
            shared = len(gold_tok[g] & pred_tok[p])
            if shared > 0:
                mm_candidates.append((-shared, g.start, p.start, g, p))
    mm_candidates.sort(key=lambda c: c[:3])
    mm_gold: set[Span] = set()
    mm_pred: set[Span] = set()
    for _s, _gs, _ps, g, p in mm_candidates:
        if g in mm_gold or p in mm_pred:
            continue
        mm_gold.add(g)
        mm_pred.add(p)
        mismatch_pairs.append((g, p))

    entries = []
    eid = excerpt.excerpt_id
    for g in gold_spans:
        if g in matched_gold:
            entries.append(
                LedgerEntry(g.kind, eid, "correct", gold_span=g, predicted_span=matched_gold[g])
            )
        elif g not in mm_gold:
            entries.append(LedgerEntry(g.kind, eid, "skipped", gold_span=g))
    for g, p in mismatch_pairs:
        entries.append(
            LedgerEntry(
                g.kind, eid, "mismatch", gold_span=g, predicted_span=p, predicted_kind=p.kind
            )
        )
    for p in rest_pred:
        if p not in mm_pred:
            entries.append(LedgerEntry(p.kind, eid, "extra", predicted_span=p))
    entries.sort(key=lambda e: (
        (e.gold_span or e.predicted_span).start,
        e.status,
    ))

    counts: dict[ParameterKind, dict[str, int]] = {
        kind: {"correct": 0, "skipped": 0, "extra": 0, "mismatch": 0}
        for kind in ParameterKind
    }
    for e in entries:
        counts[e.kind][e.status] += 1
    return counts, ErrorLedger(tuple(entries))


def _as_spans(predicted, excerpt: Excerpt) -> list[Span]:
    """Spans from an AnnotationSet directly, or maximal same-kind token
    runs from an AggregatedAnnotation."""
    if isinstance(predicted, AnnotationSet):
        validate_spans(predicted.spans, len(excerpt.text), "predicted")
        return list(predicted.spans)
    if isinstance(predicted, AggregatedAnnotation):
        return aggregate_to_spans(predicted, excerpt)
    raise TypeError(f"unsupported annotation source: {type(predicted).__name__}")


def aggregate_to_spans(agg: AggregatedAnnotation, excerpt: Excerpt) -> list[Span]:
    """Convert per-token majority labels to character spans: one span per
    maximal run of consecutive non-stopword tokens sharing a kind."""
    tokens = [t for t in tokenize(excerpt.text) if not t.is_stopword]
    spans = []
    run_kind = None
    run_start = run_end = 0
    for token in tokens:
        kind = agg.labels.get(token.start)
        if kind is not None and kind == run_kind:
            run_end = token.end
            continue
        if run_kind is not None:
            spans.append(Span(run_start, run_end, run_kind))
        run_kind = kind
        run_start, run_end = token.start, token.end
    if run_kind is not None:
        spans.append(Span(run_start, run_end, run_kind))
    return spans


# --- accuracy reporting -----------------------------------------------------


@dataclass(frozen=True)
class AccuracyReport:
    """Fig-5-style per-kind instance shares and Fig-6-style word-score
    distributions."""

    instance_counts: dict[ParameterKind, dict[str, int]]
    instance_shares: dict[ParameterKind, dict[str, float]]  # correct/skipped/other
    precision_hist: dict[ParameterKind, list[int]]  # 10 bins, [0,0.1) .. [0.9,1.0]
    recall_hist: dict[ParameterKind, list[int]]
    mean_precision: dict[ParameterKind, float]
    mean_recall: dict[ParameterKind, float]


def _bin_index(value: float) -> int:
    return min(int(value * 10), 9)


def accuracy_report(
    ledgers: list[ErrorLedger], score_reports: list[ScoreReport]
) -> AccuracyReport:
    """Summarize span-score ledgers and per-excerpt word scores."""
    if not ledgers or not score_reports:
        raise CiError("accuracy_report requires non-empty ledgers and score reports")
    counts: dict[ParameterKind, Counter] = {kind: Counter() for kind in ParameterKind}
    for ledger in ledgers:
        for e in ledger.entries:
            counts[e.kind][e.status] += 1

    shares = {}
    totals = {}
    for kind in ParameterKind:
        c = counts[kind]
        total = sum(c.values())
        totals[kind] = {
            "correct": c["correct"],
            "skipped": c["skipped"],
            "extra": c["extra"],
            "mismatch": c["mismatch"],
        }
        if total:
            shares[kind] = {
                "correct": round(c["correct"] / total, 4),
                "skipped": round(c["skipped"] / total, 4),
                "other": round((c["extra"] + c["mismatch"]) / total, 4),
            }
        else:
            shares[kind] = {"correct": 0.0, "skipped": 0.0, "other": 0.0}

    p_hist = {kind: [0] * 10 for kind in ParameterKind}
    r_hist = {kind: [0] * 10 for kind in ParameterKind}
    p_sum = {kind: 0.0 for kind in ParameterKind}
    r_sum = {kind: 0.0 for kind in ParameterKind}
    for report in score_reports:
        for kind, ks in report.by_kind.items():
            p_hist[kind][_bin_index(ks.precision)] += 1
            r_hist[kind][_bin_index(ks.recall)] += 1
            p_sum[kind] += ks.precision
            r_sum[kind] += ks.recall
    n = len(score_reports)
    return AccuracyReport(
        instance_counts=totals,
        instance_shares=shares,
        precision_hist=p_hist,
        recall_hist=r_hist,
        mean_precision={k: round(p_sum[k] / n, 4) for k in ParameterKind},
        mean_recall={k: round(r_sum[k] / n, 4) for k in ParameterKind},
    )
