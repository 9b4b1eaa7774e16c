"""Command-line entry point.  One subcommand per analysis.

Exit codes: 0 success, 1 validation/input error, 2 usage error.
Diagnostics go to stderr; data goes to files (under --out) or stdout.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import analysis, bundle, crowd, diff, readability, reports
from .annotation_io import from_standoff, to_standoff
from .model import CiError, ParameterKind, ScoreReport

_THRESHOLD_KEYS = {
    "sender": ParameterKind.SENDER,
    "recipient": ParameterKind.RECIPIENT,
    "subject": ParameterKind.SUBJECT,
    "attribute": ParameterKind.ATTRIBUTE,
    "tp": ParameterKind.TRANSMISSION_PRINCIPLE,
}


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _load_doc(path: str):
    try:
        return from_standoff(Path(path).read_bytes())
    except OSError as exc:
        _fail(f"{path}: {exc.strerror or exc}")
    except CiError as exc:
        _fail(f"{path}: {exc}")


def _load_lexicon(path: str | None):
    if path is None:
        return analysis.VaguenessLexicon.default()
    try:
        return analysis.VaguenessLexicon.from_json(Path(path).read_text("utf-8"))
    except OSError as exc:
        _fail(f"{path}: {exc.strerror or exc}")
    except (ValueError, CiError) as exc:
        _fail(f"{path}: {exc}")


def _parse_thresholds(spec: str | None) -> diff.MatchConfig:
    thresholds = dict(diff.DEFAULT_THRESHOLDS)
    if spec:
        for part in spec.split(","):
            if "=" not in part:
                _fail(f"bad threshold {part!r}; expected kind=percent")
            key, _, value = part.partition("=")
            key = key.strip().lower()
            if key not in _THRESHOLD_KEYS:
                _fail(f"unknown parameter kind {key!r} in --thresholds")
            try:
                thresholds[_THRESHOLD_KEYS[key]] = int(value)
            except ValueError:
                _fail(f"bad threshold value {value!r} for {key}")
    try:
        return diff.MatchConfig(thresholds)
    except ValueError as exc:
        _fail(str(exc))


def _out_dir(out: str | None) -> Path:
    path = Path(out) if out else Path("reports")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _emit(obj) -> None:
    click.echo(json.dumps(obj, ensure_ascii=False, indent=2))


fmt_option = click.option(
    "--format", "formats", type=click.Choice(["json", "csv", "md"]), multiple=True,
    default=("json", "csv"), show_default=True, help="Report formats to write.")
out_option = click.option("--out", default=None, help="Output directory [default: reports].")
fig_option = click.option("--figures/--no-figures", default=True, show_default=True,
                          help="Also render PNG figures.")
lexicon_option = click.option("--lexicon", default=None,
                              help="Override the bundled vagueness lexicon (JSON).")


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def main():
    """Contextual-integrity privacy policy annotation toolkit."""


@main.command()
@click.argument("path")
def validate(path):
    """Check a standoff JSON document and report its flow count."""
    doc = _load_doc(path)
    click.echo(f"OK, {len(doc.flows)} flows")


@main.command()
@click.argument("path")
@lexicon_option
@fmt_option
@out_option
@fig_option
def stats(path, lexicon, formats, out, figures):
    """Parameter frequency tables and unique counts for one document."""
    doc = _load_doc(path)
    report = analysis.analyze_document(doc, _load_lexicon(lexicon))
    written = reports.write_analysis_reports(report, _out_dir(out), formats, figures)
    for p in written:
        click.echo(str(p), err=True)
    click.echo(f"{report.total_flows} flows; unique parameters: "
               + ", ".join(f"{k.value}={report.unique_counts[k]}" for k in ParameterKind))


@main.command()
@click.argument("path")
def incomplete(path):
    """Flows missing required parameters, with percentages."""
    doc = _load_doc(path)
    result = analysis.incomplete_flows(doc)
    _emit({
        "total_flows": result.total_flows,
        "incomplete_flows": len(result.missing_by_flow),
        "percent_overall": result.percent_overall,
        "percent_by_kind": {k.value: v for k, v in sorted(result.percent_by_kind.items())},
        "flows": {fid: sorted(k.value for k in missing)
                  for fid, missing in sorted(result.missing_by_flow.items())},
    })


@main.command()
@click.argument("path")
def bloat(path):
    """Histogram of flows containing multiple instances of one kind."""
    doc = _load_doc(path)
    hist = analysis.bloat_histogram(doc)
    _emit({k.value: {str(n): c for n, c in hist[k].items()} for k in ParameterKind})


@main.command()
@click.argument("path")
@lexicon_option
def vagueness(path, lexicon):
    """Flag flows containing vague terminology."""
    doc = _load_doc(path)
    result = analysis.vagueness_scan(doc, _load_lexicon(lexicon))
    _emit({
        "total_flows": result.total_flows,
        "percent_by_category": result.percent_by_category,
        "flows": {fid: [{"category": m.category, "term": m.term,
                         "start": m.start, "end": m.end} for m in matches]
                  for fid, matches in sorted(result.matches_by_flow.items())},
    })


@main.command("diff")
@click.argument("path_a")
@click.argument("path_b")
@click.option("--thresholds", default=None,
              help="Override similarity thresholds, e.g. sender=70,attribute=65,recipient=70,tp=55.")
@fmt_option
@out_option
@fig_option
def diff_cmd(path_a, path_b, thresholds, formats, out, figures):
    """Fuzzy-match parameters across two policy versions."""
    doc_a = _load_doc(path_a)
    doc_b = _load_doc(path_b)
    report = diff.compare_policies(doc_a, doc_b, _parse_thresholds(thresholds))
    written = reports.write_diff_reports(report, _out_dir(out), formats, figures)
    for p in written:
        click.echo(str(p), err=True)
    total_added = sum(len(d.added) for d in report.by_kind.values())
    total_removed = sum(len(d.removed) for d in report.by_kind.values())
    click.echo(f"added={total_added} removed={total_removed}")


def _load_bundle(path: str) -> bundle.ExperimentBundle:
    try:
        return bundle.load_bundle(path)
    except (OSError, CiError, ValueError) as exc:
        _fail(f"{path}: {exc}")


def _score_args(bundle_dir, excerpt_id, annotator):
    exp = _load_bundle(bundle_dir)
    excerpt = None
    try:
        excerpt = exp.excerpt(excerpt_id)
    except CiError as exc:
        _fail(str(exc))
    if excerpt.gold is None:
        _fail(f"excerpt {excerpt_id!r} has no gold annotation")
    anns = list(exp.responses.get(excerpt_id, ()))
    if annotator is not None:
        anns = [a for a in anns if a.annotator_id == annotator]
        if not anns:
            _fail(f"no response from annotator {annotator!r} for {excerpt_id!r}")
    if not anns:
        _fail(f"no responses for excerpt {excerpt_id!r}")
    return exp, excerpt, anns


@main.command()
@click.argument("bundle_dir")
@click.argument("excerpt_id")
def aggregate(bundle_dir, excerpt_id):
    """Majority-vote aggregation of all responses for one excerpt."""
    _exp, excerpt, anns = _score_args(bundle_dir, excerpt_id, None)
    agg = crowd.majority_vote(anns, excerpt)
    _emit({
        "excerpt_id": agg.excerpt_id,
        "n_annotators": agg.n_annotators,
        "labels": {str(start): kind.value for start, kind in sorted(agg.labels.items())},
        "spans": [{"start": s.start, "end": s.end, "kind": s.kind.value}
                  for s in crowd.aggregate_to_spans(agg, excerpt)],
    })


def _score_report_obj(report: ScoreReport) -> dict:
    return reports.score_report_to_obj(report)


@main.command("score-words")
@click.argument("bundle_dir")
@click.argument("excerpt_id")
@click.option("--annotator", default=None,
              help="Score one annotator instead of the majority vote.")
def score_words(bundle_dir, excerpt_id, annotator):
    """Word-based precision/recall/F1 against the expert annotation."""
    _exp, excerpt, anns = _score_args(bundle_dir, excerpt_id, annotator)
    predicted = anns[0] if annotator else crowd.majority_vote(anns, excerpt)
    _emit(_score_report_obj(crowd.word_scores(predicted, excerpt.gold, excerpt)))


@main.command("score-spans")
@click.argument("bundle_dir")
@click.argument("excerpt_id")
@click.option("--annotator", default=None)
@click.option("--overlap-threshold", default=0.5, show_default=True)
def score_spans(bundle_dir, excerpt_id, annotator, overlap_threshold):
    """Span-based instance matching with the error ledger."""
    _exp, excerpt, anns = _score_args(bundle_dir, excerpt_id, annotator)
    predicted = anns[0] if annotator else crowd.majority_vote(anns, excerpt)
    counts, ledger = crowd.span_scores(predicted, excerpt.gold, excerpt, overlap_threshold)
    _emit({
        "counts": {k.value: counts[k] for k in ParameterKind},
        "ledger": [
            {
                "kind": e.kind.value,
                "excerpt_id": e.excerpt_id,
                "status": e.status,
                "gold_span": None if e.gold_span is None else
                    {"start": e.gold_span.start, "end": e.gold_span.end},
                "predicted_span": None if e.predicted_span is None else
                    {"start": e.predicted_span.start, "end": e.predicted_span.end},
                "predicted_kind": None if e.predicted_kind is None else e.predicted_kind.value,
                "triage": e.triage,
            }
            for e in ledger.entries
        ],
    })


@main.command()
@click.argument("bundle_dir")
@click.argument("annotator")
@click.option("--threshold", default=0.7, show_default=True)
def screen(bundle_dir, annotator, threshold):
    """Apply the screening gate to one annotator's three screening answers."""
    exp = _load_bundle(bundle_dir)
    screening = sorted(
        (e for e in exp.excerpts if e.is_screening),
        key=lambda e: e.screening_index or 0,
    )
    if len(screening) != 3:
        _fail("bundle does not contain exactly 3 screening excerpts")
    responses = []
    for excerpt in screening:
        match = [a for a in exp.responses.get(excerpt.excerpt_id, ())
                 if a.annotator_id == annotator]
        responses.append(match[0] if match else None)
    outcome = crowd.screen_worker(responses, screening, crowd.ScreeningRule(threshold))
    _emit({
        "annotator": annotator,
        "passed": outcome.passed,
        "micro_f1": [round(f, 6) for f in outcome.micro_f1],
        "reason": outcome.reason,
    })
    if not outcome.passed and outcome.reason:
        click.echo(f"failed: {outcome.reason}", err=True)


@main.command("readability")
@click.argument("bundle_dir")
@fmt_option
@out_option
def readability_cmd(bundle_dir, formats, out):
    """Excerpt statistics and readability indices."""
    exp = _load_bundle(bundle_dir)
    rows = []
    for excerpt in exp.excerpts:
        try:
            s = readability.excerpt_stats(excerpt)
        except CiError as exc:
            _fail(f"{excerpt.excerpt_id}: {exc}")
        rows.append(s)
    out_dir = _out_dir(out)
    if "json" in formats:
        reports.write_json(out_dir / "readability.json", [
            {
                "excerpt_id": s.excerpt_id,
                "total_words": s.total_words,
                "labeled_words": {k.value: s.labeled_words_per_kind[k] for k in ParameterKind},
                "reading_ease": round(s.flesch_kincaid_reading_ease, 4),
                "fog_index": round(s.fog_index, 4),
            }
            for s in rows
        ])
        click.echo(str(out_dir / "readability.json"), err=True)
    if "csv" in formats:
        reports.write_csv(
            out_dir / "readability.csv",
            ["excerpt_id", "total_words", "reading_ease", "fog_index"],
            [[s.excerpt_id, s.total_words,
              format(s.flesch_kincaid_reading_ease, ".4f"),
              format(s.fog_index, ".4f")] for s in rows],
        )
        click.echo(str(out_dir / "readability.csv"), err=True)
    click.echo(f"{len(rows)} excerpts")


@main.command()
@click.argument("bundle_dir")
@click.option("--overlap-threshold", default=0.5, show_default=True)
@fmt_option
@out_option
@fig_option
def replay(bundle_dir, overlap_threshold, formats, out, figures):
    """Full experiment replay: aggregate, score, and report."""
    exp = _load_bundle(bundle_dir)
    try:
        result = bundle.replay(exp, overlap_threshold)
    except CiError as exc:
        _fail(str(exc))
    written = reports.write_replay_reports(result, _out_dir(out), formats, figures)
    for p in written:
        click.echo(str(p), err=True)
    click.echo(f"scored {len(result.word_reports)} excerpts")


@main.command()
@click.option("--store", required=True, help="Path of the append-only record log.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8700, show_default=True)
def serve(store, host, port):
    """Run the annotation collection service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(store), host=host, port=port)


@main.command()
@click.option("--store", required=True)
@click.argument("task_id")
@click.argument("dest")
def export(store, task_id, dest):
    """Export a task's experiment bundle from a service record log."""
    from .service import AnnotationService, ServiceError

    try:
        service = AnnotationService(store)
        data = service.export_bundle_data(task_id)
    except (ServiceError, CiError, OSError) as exc:
        _fail(str(exc))
    bundle.write_bundle(data, dest)
    click.echo(f"wrote bundle to {dest}")


def run(argv=None) -> int:
    """Programmatic entry point returning the exit code."""
    try:
        main.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.UsageError as exc:
        click.echo(exc.format_message(), err=True)
        return 2
    except click.exceptions.Abort:
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(run())
