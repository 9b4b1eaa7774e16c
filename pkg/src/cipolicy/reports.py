"""Report rendering: JSON / CSV / Markdown tables plus matplotlib figures
written alongside the delimited output.

All writers are deterministic: identical inputs produce byte-identical
files.  Files are written atomically (temp file + rename).
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .analysis import VAGUENESS_CATEGORIES, FlowAnalysisReport
from .bundle import ReplayResult
from .crowd import AccuracyReport
from .diff import VersionDiffReport
from .model import KindScore, ParameterKind, ScoreReport
from .readability import CorrelationRow

_KIND_COLORS = {
    ParameterKind.SENDER: "tab:blue",
    ParameterKind.RECIPIENT: "tab:green",
    ParameterKind.ATTRIBUTE: "tab:red",
    ParameterKind.TRANSMISSION_PRINCIPLE: "tab:purple",
    ParameterKind.SUBJECT: "tab:orange",
}


def write_atomic(path: str | Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str | Path, obj) -> None:
    write_atomic(path, (json.dumps(obj, ensure_ascii=False, indent=2) + "\n").encode("utf-8"))


def write_csv(path: str | Path, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    write_atomic(path, buf.getvalue().encode("utf-8"))


def save_figure(fig, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # metadata pinned so repeated runs produce identical bytes
    fig.savefig(path, format="png", dpi=100, metadata={"Software": None})
    plt.close(fig)


def _f(x: float) -> str:
    return format(x, ".4f")


# --- single-document analysis ----------------------------------------------


def analysis_to_obj(report: FlowAnalysisReport) -> dict:
    return {
        "policy_id": report.policy_id,
        "version_label": report.version_label,
        "total_flows": report.total_flows,
        "unique_counts": {k.value: report.unique_counts[k] for k in ParameterKind},
        "frequency": {
            k.value: [{"text": t, "count": c} for t, c in report.frequency[k]]
            for k in ParameterKind
        },
        "incomplete": {
            "percent_overall": report.incomplete.percent_overall,
            "percent_by_kind": {
                k.value: v for k, v in sorted(report.incomplete.percent_by_kind.items())
            },
            "flows": {
                fid: sorted(k.value for k in missing)
                for fid, missing in sorted(report.incomplete.missing_by_flow.items())
            },
        },
        "bloat": {
            k.value: {str(n): c for n, c in report.bloat[k].items()} for k in ParameterKind
        },
        "vagueness": {
            "percent_by_category": report.vagueness.percent_by_category,
            "flows": {
                fid: [
                    {"category": m.category, "term": m.term, "start": m.start, "end": m.end}
                    for m in matches
                ]
                for fid, matches in sorted(report.vagueness.matches_by_flow.items())
            },
        },
    }


def write_analysis_reports(report: FlowAnalysisReport, out: Path, formats, figures=True):
    written = []
    obj = analysis_to_obj(report)
    if "json" in formats:
        write_json(out / "analysis.json", obj)
        written.append(out / "analysis.json")
    if "csv" in formats:
        freq_rows = [
            [k.value, text, count]
            for k in ParameterKind
            for text, count in report.frequency[k]
        ]
        write_csv(out / "frequency.csv", ["kind", "text", "count"], freq_rows)
        write_csv(
            out / "incomplete.csv",
            ["kind", "percent_missing"],
            [[k.value, v] for k, v in sorted(report.incomplete.percent_by_kind.items())]
            + [["overall", report.incomplete.percent_overall]],
        )
        write_csv(
            out / "bloat.csv",
            ["kind", "instances_per_flow", "flow_count"],
            [
                [k.value, n, c]
                for k in ParameterKind
                for n, c in report.bloat[k].items()
            ],
        )
        write_csv(
            out / "vagueness.csv",
            ["category", "percent_flows"],
            [[cat, report.vagueness.percent_by_category[cat]] for cat in VAGUENESS_CATEGORIES],
        )
        written += [out / n for n in ("frequency.csv", "incomplete.csv", "bloat.csv", "vagueness.csv")]
    if figures:
        written += _analysis_figures(report, out)
    return written


def _analysis_figures(report: FlowAnalysisReport, out: Path):
    written = []

    fig, ax = plt.subplots(figsize=(6, 4))
    kinds = list(ParameterKind)
    ax.bar(
        [k.value for k in kinds],
        [report.unique_counts[k] for k in kinds],
        color=[_KIND_COLORS[k] for k in kinds],
    )
    ax.set_ylabel("unique parameters")
    ax.set_title(f"{report.policy_id} {report.version_label}: unique CI parameters")
    fig.tight_layout()
    save_figure(fig, out / "unique_counts.png")
    written.append(out / "unique_counts.png")

    fig, ax = plt.subplots(figsize=(6, 4))
    items = sorted(report.incomplete.percent_by_kind.items())
    ax.bar([k.value for k, _ in items], [v for _, v in items], color="tab:gray")
    ax.axhline(report.incomplete.percent_overall, color="black", linestyle="--",
               label=f"any missing: {report.incomplete.percent_overall}%")
    ax.set_ylabel("% of flows missing the parameter")
    ax.legend()
    fig.tight_layout()
    save_figure(fig, out / "incomplete.png")
    written.append(out / "incomplete.png")

    fig, axes = plt.subplots(1, len(kinds), figsize=(3 * len(kinds), 3), sharey=True)
    for ax, kind in zip(axes, kinds):
        hist = report.bloat[kind]
        ax.bar([str(n) for n in hist], list(hist.values()), color=_KIND_COLORS[kind])
        ax.set_title(kind.value)
        ax.set_xlabel("instances per flow")
    axes[0].set_ylabel("flows")
    fig.tight_layout()
    save_figure(fig, out / "bloat.png")
    written.append(out / "bloat.png")

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(
        VAGUENESS_CATEGORIES,
        [report.vagueness.percent_by_category[c] for c in VAGUENESS_CATEGORIES],
        color="tab:brown",
    )
    ax.set_ylabel("% of flows flagged")
    ax.tick_params(axis="x", rotation=20)
    fig.tight_layout()
    save_figure(fig, out / "vagueness.png")
    written.append(out / "vagueness.png")
    return written


# --- version diff -----------------------------------------------------------


def diff_to_obj(report: VersionDiffReport) -> dict:
    return {
        "policy_a": report.policy_a,
        "policy_b": report.policy_b,
        "unique_counts": {
            k.value: {"a": report.unique_counts_a[k], "b": report.unique_counts_b[k]}
            for k in ParameterKind
        },
        "by_kind": {
            k.value: {
                "matched": [
                    {"a": p.text_a, "b": p.text_b, "similarity": p.similarity}
                    for p in d.matched
                ],
                "added": list(d.added),
                "removed": list(d.removed),
                "review": [
                    {"a": p.text_a, "b": p.text_b, "similarity": p.similarity}
                    for p in d.review
                ],
            }
            for k, d in ((k, report.by_kind[k]) for k in ParameterKind)
        },
    }


def diff_to_markdown(report: VersionDiffReport) -> str:
    lines = [f"# Version diff: {report.policy_a} vs {report.policy_b}", ""]
    for kind in ParameterKind:
        d = report.by_kind[kind]
        lines.append(f"## {kind.value}")
        lines.append("")
        lines.append(
            f"Unique parameters: {report.unique_counts_a[kind]} (A) vs "
            f"{report.unique_counts_b[kind]} (B)"
        )
        lines.append("")
        for title, rows in (
            ("Matched", [f"| {p.text_a} | {p.text_b} | {p.similarity} |" for p in d.matched]),
            ("Added", [f"| {t} | | |" for t in d.added]),
            ("Removed", [f"| {t} | | |" for t in d.removed]),
            ("Review", [f"| {p.text_a} | {p.text_b} | {p.similarity} |" for p in d.review]),
        ):
            lines.append(f"### {title}")
            lines.append("")
            if rows:
                lines.append("| A | B | similarity |")
                lines.append("| --- | --- | --- |")
                lines.extend(rows)
            else:
                lines.append("(none)")
            lines.append("")
    return "\n".join(lines) + "\n"


def write_diff_reports(report: VersionDiffReport, out: Path, formats, figures=True):
    written = []
    if "json" in formats:
        write_json(out / "diff.json", diff_to_obj(report))
        written.append(out / "diff.json")
    if "csv" in formats:
        rows = []
        for kind in ParameterKind:
            d = report.by_kind[kind]
            for p in d.matched:
                rows.append([kind.value, "matched", p.text_a, p.text_b, p.similarity])
            for t in d.added:
                rows.append([kind.value, "added", "", t, ""])
            for t in d.removed:
                rows.append([kind.value, "removed", t, "", ""])
            for p in d.review:
                rows.append([kind.value, "review", p.text_a, p.text_b, p.similarity])
        write_csv(out / "diff.csv", ["kind", "status", "text_a", "text_b", "similarity"], rows)
        written.append(out / "diff.csv")
    if "md" in formats:
        write_atomic(out / "diff.md", diff_to_markdown(report).encode("utf-8"))
        written.append(out / "diff.md")
    if figures:
        kinds = list(ParameterKind)
        fig, ax = plt.subplots(figsize=(7, 4))
        xs = range(len(kinds))
        width = 0.4
        ax.bar([x - width / 2 for x in xs], [report.unique_counts_a[k] for k in kinds],
               width, label="A", color="tab:gray")
        ax.bar([x + width / 2 for x in xs], [report.unique_counts_b[k] for k in kinds],
               width, label="B", color="tab:blue")
        ax.set_xticks(list(xs))
        ax.set_xticklabels([k.value for k in kinds])
        ax.set_ylabel("unique parameters")
        ax.legend()
        fig.tight_layout()
        save_figure(fig, out / "unique_counts.png")
        written.append(out / "unique_counts.png")
    return written


# --- scoring / replay -------------------------------------------------------


def _kind_score_obj(ks: KindScore) -> dict:
    return {
        "precision": round(ks.precision, 6),
        "recall": round(ks.recall, 6),
        "f1": round(ks.f1, 6),
        "tp": ks.true_positives,
        "fp": ks.false_positives,
        "fn": ks.false_negatives,
    }


def score_report_to_obj(report: ScoreReport) -> dict:
    return {
        "by_kind": {k.value: _kind_score_obj(report.by_kind[k]) for k in ParameterKind},
        "micro": _kind_score_obj(report.micro),
    }


def accuracy_to_obj(acc: AccuracyReport) -> dict:
    return {
        "instance_counts": {
            k.value: acc.instance_counts[k] for k in ParameterKind
        },
        "instance_shares": {
            k.value: acc.instance_shares[k] for k in ParameterKind
        },
        "precision_hist": {k.value: acc.precision_hist[k] for k in ParameterKind},
        "recall_hist": {k.value: acc.recall_hist[k] for k in ParameterKind},
        "mean_precision": {k.value: acc.mean_precision[k] for k in ParameterKind},
        "mean_recall": {k.value: acc.mean_recall[k] for k in ParameterKind},
    }


def write_replay_reports(result: ReplayResult, out: Path, formats, figures=True):
    written = []
    acc = result.accuracy
    if "json" in formats:
        write_json(
            out / "replay.json",
            {
                "accuracy": accuracy_to_obj(acc),
                "word_scores": {
                    eid: score_report_to_obj(result.word_reports[eid])
                    for eid in sorted(result.word_reports)
                },
                "correlations": [
                    {
                        "statistic": row.statistic,
                        "kind": row.kind.value,
                        "rho": round(row.rho, 6),
                        "p_value": round(row.p_value, 6),
                    }
                    for row in result.correlations
                ],
            },
        )
        written.append(out / "replay.json")
    if "csv" in formats:
        write_csv(
            out / "instance_accuracy.csv",
            ["kind", "correct", "skipped", "extra", "mismatch",
             "share_correct", "share_skipped", "share_other"],
            [
                [
                    k.value,
                    acc.instance_counts[k]["correct"],
                    acc.instance_counts[k]["skipped"],
                    acc.instance_counts[k]["extra"],
                    acc.instance_counts[k]["mismatch"],
                    _f(acc.instance_shares[k]["correct"]),
                    _f(acc.instance_shares[k]["skipped"]),
                    _f(acc.instance_shares[k]["other"]),
                ]
                for k in ParameterKind
            ],
        )
        write_csv(
            out / "word_scores.csv",
            ["excerpt_id", "kind", "precision", "recall", "f1", "tp", "fp", "fn"],
            [
                [eid, k.value, _f(ks.precision), _f(ks.recall), _f(ks.f1),
                 ks.true_positives, ks.false_positives, ks.false_negatives]
                for eid in sorted(result.word_reports)
                for k, ks in (
                    (k, result.word_reports[eid].by_kind[k]) for k in ParameterKind
                )
            ],
        )
        write_csv(
            out / "correlations.csv",
            ["statistic", "parameter", "coefficient", "p_value"],
            [
                [row.statistic, row.kind.value, _f(row.rho), _f(row.p_value)]
                for row in result.correlations
            ],
        )
        written += [out / n for n in ("instance_accuracy.csv", "word_scores.csv", "correlations.csv")]
    if figures:
        kinds = list(ParameterKind)
        fig, ax = plt.subplots(figsize=(7, 4))
        correct = [acc.instance_counts[k]["correct"] for k in kinds]
        skipped = [acc.instance_counts[k]["skipped"] for k in kinds]
        other = [
            acc.instance_counts[k]["extra"] + acc.instance_counts[k]["mismatch"] for k in kinds
        ]
        labels = [k.value for k in kinds]
        ax.bar(labels, correct, label="correct", color="tab:green")
        ax.bar(labels, skipped, bottom=correct, label="skipped", color="tab:orange")
        ax.bar(labels, other, bottom=[c + s for c, s in zip(correct, skipped)],
               label="other incorrect", color="tab:red")
        ax.set_ylabel("parameter instances")
        ax.legend()
        fig.tight_layout()
        save_figure(fig, out / "instance_accuracy.png")
        written.append(out / "instance_accuracy.png")

        fig, axes = plt.subplots(2, len(kinds), figsize=(3 * len(kinds), 5), sharey=True)
        bin_labels = [f"{i / 10:.1f}" for i in range(10)]
        for col, kind in enumerate(kinds):
            axes[0][col].bar(bin_labels, acc.precision_hist[kind], color=_KIND_COLORS[kind])
            axes[0][col].set_title(f"{kind.value} precision")
            axes[1][col].bar(bin_labels, acc.recall_hist[kind], color=_KIND_COLORS[kind])
            axes[1][col].set_title(f"{kind.value} recall")
            for row in (0, 1):
                axes[row][col].tick_params(axis="x", rotation=90, labelsize=6)
        fig.tight_layout()
        save_figure(fig, out / "score_histograms.png")
        written.append(out / "score_histograms.png")
    return written
