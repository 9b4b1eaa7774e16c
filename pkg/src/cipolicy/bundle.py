"""Experiment bundle format and the replay pipeline.

A bundle is a directory:

    excerpts.json            list of excerpt records
    gold/<excerpt>.json      expert annotation per excerpt (span schema)
    responses/<annotator>__<excerpt>.json
                             one annotation per annotator per excerpt

Replay aggregates the responses per work excerpt by majority vote, scores
against gold, and produces the accuracy and correlation tables.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .annotation_io import annotation_from_obj, annotation_to_obj
from .crowd import (
    AccuracyReport,
    AggregatedAnnotation,
    AnnotationSet,
    ErrorLedger,
    Excerpt,
    accuracy_report,
    majority_vote,
    span_scores,
    word_scores,
)
from .model import CiError, ParameterKind, ScoreReport
from .readability import CorrelationRow, correlate_difficulty


def _dump_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2) + "\n"


def excerpt_to_obj(excerpt: Excerpt) -> dict:
    return {
        "excerpt_id": excerpt.excerpt_id,
        "text": excerpt.text,
        "is_screening": excerpt.is_screening,
        "screening_index": excerpt.screening_index,
    }


def excerpt_from_obj(obj: dict, gold: AnnotationSet | None = None) -> Excerpt:
    return Excerpt(
        excerpt_id=obj["excerpt_id"],
        text=obj["text"],
        gold=gold,
        is_screening=bool(obj.get("is_screening", False)),
        screening_index=obj.get("screening_index"),
    )


@dataclass(frozen=True)
class ExperimentBundle:
    excerpts: tuple[Excerpt, ...]  # gold attached where present
    responses: dict[str, tuple[AnnotationSet, ...]]  # excerpt_id -> annotations

    def excerpt(self, excerpt_id: str) -> Excerpt:
        for e in self.excerpts:
            if e.excerpt_id == excerpt_id:
                return e
        raise CiError(f"unknown excerpt {excerpt_id!r}")


def load_bundle(root: str | Path) -> ExperimentBundle:
    root = Path(root)
    excerpts_path = root / "excerpts.json"
    if not excerpts_path.is_file():
        raise CiError(f"{excerpts_path}: not found")
    records = json.loads(excerpts_path.read_text("utf-8"))

    excerpts = []
    for obj in records:
        gold_path = root / "gold" / f"{obj['excerpt_id']}.json"
        gold = None
        if gold_path.is_file():
            gold = annotation_from_obj(json.loads(gold_path.read_text("utf-8")))
        excerpts.append(excerpt_from_obj(obj, gold))

    responses: dict[str, list[AnnotationSet]] = {e.excerpt_id: [] for e in excerpts}
    responses_dir = root / "responses"
    if responses_dir.is_dir():
        for path in sorted(responses_dir.glob("*.json")):
            ann = annotation_from_obj(json.loads(path.read_text("utf-8")))
            if ann.excerpt_id not in responses:
                raise CiError(f"{path}: response for unknown excerpt {ann.excerpt_id!r}")
            responses[ann.excerpt_id].append(ann)
    return ExperimentBundle(
        tuple(excerpts),
        {eid: tuple(sorted(anns, key=lambda a: a.annotator_id)) for eid, anns in responses.items()},
    )


def write_bundle(bundle: ExperimentBundle, root: str | Path) -> None:
    root = Path(root)
    (root / "gold").mkdir(parents=True, exist_ok=True)
    (root / "responses").mkdir(parents=True, exist_ok=True)
    (root / "excerpts.json").write_text(
        _dump_json([excerpt_to_obj(e) for e in bundle.excerpts]), "utf-8"
    )
    for e in bundle.excerpts:
        if e.gold is not None:
            (root / "gold" / f"{e.excerpt_id}.json").write_text(
                _dump_json(annotation_to_obj(e.gold)), "utf-8"
            )
    for eid, anns in bundle.responses.items():
        for ann in anns:
            path = root / "responses" / f"{ann.annotator_id}__{eid}.json"
            path.write_text(_dump_json(annotation_to_obj(ann)), "utf-8")


@dataclass(frozen=True)
class ReplayResult:
    aggregates: dict[str, AggregatedAnnotation]
    word_reports: dict[str, ScoreReport]
    ledgers: dict[str, ErrorLedger]
    span_counts: dict[str, dict[ParameterKind, dict[str, int]]]
    accuracy: AccuracyReport
    correlations: list[CorrelationRow]


def replay(bundle: ExperimentBundle, overlap_threshold: float = 0.5) -> ReplayResult:
    """Run the full aggregation and scoring pipeline over all work
    excerpts with gold and at least one response."""
    aggregates = {}
    word_reports = {}
    ledgers = {}
    span_counts = {}
    scored_excerpts = []
    for excerpt in bundle.excerpts:
        if excerpt.is_screening or excerpt.gold is None:
            continue
        anns = bundle.responses.get(excerpt.excerpt_id, ())
        if not anns:
            continue
        agg = majority_vote(list(anns), excerpt)
        aggregates[excerpt.excerpt_id] = agg
        word_reports[excerpt.excerpt_id] = word_scores(agg, excerpt.gold, excerpt)
        counts, ledger = span_scores(agg, excerpt.gold, excerpt, overlap_threshold)
        span_counts[excerpt.excerpt_id] = counts
        ledgers[excerpt.excerpt_id] = ledger
        scored_excerpts.append(excerpt)
    if not scored_excerpts:
        raise CiError("bundle has no scorable work excerpts")
    accuracy = accuracy_report(
        [ledgers[e.excerpt_id] for e in scored_excerpts],
        [word_reports[e.excerpt_id] for e in scored_excerpts],
    )
    correlations = []
    if len(scored_excerpts) >= 3:
        f1_by_excerpt = {
            e.excerpt_id: {
                kind: word_reports[e.excerpt_id].by_kind[kind].f1 for kind in ParameterKind
            }
            for e in scored_excerpts
        }
        correlations = correlate_difficulty(scored_excerpts, f1_by_excerpt)
    return ReplayResult(aggregates, word_reports, ledgers, span_counts, accuracy, correlations)
