#!/usr/bin/env python3
"""Regenerate the synthetic fixtures under fixtures/.

Everything here is deterministic (fixed seed); the outputs are committed
so tests and the acceptance suite never depend on this script running.
"""

from __future__ import annotations

import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from cipolicy.annotation_io import annotation_to_obj, parse_inline, to_standoff, tokenize
from cipolicy.bundle import ExperimentBundle, write_bundle
from cipolicy.crowd import AnnotationSet, Excerpt
from cipolicy.model import CROWD_KINDS, ParameterKind, Span

FIXTURES = ROOT / "fixtures"

SENDERS = ["you", "a business", "WhatsApp", "connected TV", "your devices", "advertisers"]
RECIPIENTS = [
    "we [Facebook]", "third party service, vendors, partners", "researchers",
    "page admins", "advertisers", "other users", "regulators", "content creator",
    "app developers", "sellers", "academics",
]
ATTRIBUTES = [
    "information", "contact information", "content about you", "device information",
    "usage data", "public information", "communications",
]
TPS = [
    "if you give consent", "when an update occurs", "to perform specified functions",
    "when you sync your address book", "if required by law",
]


def span_markup(kind: str, text: str) -> str:
    return f"<{kind}>{text}</{kind}>"


def make_fb_prev() -> str:
    """42 flows: 19 incomplete, exactly 3 flows with 2 senders, exactly one
    flow with 10 recipients, vague wording in a handful of flows."""
    rng = random.Random(42)
    flows = []

    def complete(i, senders=1, recipients=1, extra=""):
        s = " and ".join(
            span_markup("sender", SENDERS[(i + j) % len(SENDERS)]) for j in range(senders)
        )
        r = ", ".join(
            span_markup("recipient", RECIPIENTS[(i + j) % len(RECIPIENTS)])
            for j in range(recipients)
        )
        a = span_markup("attribute", ATTRIBUTES[i % len(ATTRIBUTES)])
        tp = span_markup("tp", TPS[i % len(TPS)])
        return f"{s} provide {a} to {r} {tp}{extra}."

    # 23 complete flows
    bodies = []
    bodies.append(complete(0, senders=2))
    bodies.append(complete(1, senders=2))
    bodies.append(complete(2, senders=2))
    bodies.append(complete(3, recipients=10))
    for i in range(4, 23):
        extra = ""
        if i in (5, 9):
            extra = " as needed from time to time"
        if i in (6, 10, 14):
            extra = " and this may happen often"
        if i == 7:
            extra = " in certain cases"
        bodies.append(complete(i, extra=extra))

    # 19 incomplete flows, deliberately varied missing sets
    missing_templates = [
        # missing tp
        lambda i: f"{span_markup('sender', SENDERS[i % len(SENDERS)])} provides "
                  f"{span_markup('attribute', ATTRIBUTES[i % len(ATTRIBUTES)])} to "
                  f"{span_markup('recipient', RECIPIENTS[i % len(RECIPIENTS)])}.",
        # missing sender
        lambda i: f"{span_markup('attribute', ATTRIBUTES[i % len(ATTRIBUTES)])} is shared with "
                  f"{span_markup('recipient', RECIPIENTS[i % len(RECIPIENTS)])} "
                  f"{span_markup('tp', TPS[i % len(TPS)])}.",
        # missing recipient
        lambda i: f"{span_markup('sender', SENDERS[i % len(SENDERS)])} shares "
                  f"{span_markup('attribute', ATTRIBUTES[i % len(ATTRIBUTES)])} "
                  f"{span_markup('tp', TPS[i % len(TPS)])}.",
        # only attribute
        lambda i: f"Only {span_markup('attribute', ATTRIBUTES[i % len(ATTRIBUTES)])} is mentioned here.",
    ]
    for i in range(19):
        bodies.append(missing_templates[i % len(missing_templates)](i))

    assert len(bodies) == 42
    markup = "\n".join(
        f'<flow id="f{i + 1:02d}">{body}</flow>' for i, body in enumerate(bodies)
    )
    return markup


def make_diff_pair():
    """Two versions with pinned unique-attribute counts (86 vs 179) and a
    recipient ('content creator') present only in the update."""
    def doc_markup(n_attrs, recipients, version):
        flows = []
        attrs = [f"detail {i:03d} about usage" for i in range(n_attrs)]
        i = 0
        fid = 0
        while i < len(attrs):
            chunk = attrs[i : i + 4]
            fid += 1
            a = " and ".join(span_markup("attribute", t) for t in chunk)
            r = span_markup("recipient", recipients[fid % len(recipients)])
            s = span_markup("sender", SENDERS[fid % 3])
            tp = span_markup("tp", TPS[fid % len(TPS)])
            flows.append(f'<flow id="{version}{fid:03d}">{s} sends {a} to {r} {tp}.</flow>')
            i += 4
        return "\n".join(flows)

    prev_recipients = [
        "we [Facebook]", "partners conducting academic research",
        "third-party companies who help us provide and improve our services",
    ]
    updated_recipients = [
        "we [Facebook]", "research partners", "content creator",
        "companies that aggregate",
    ]
    return (
        doc_markup(86, prev_recipients, "p"),
        doc_markup(179, updated_recipients, "u"),
    )


SCREENING_TEXTS = [
    ("s1", "We collect contact information that you provide if you upload an address book.",
     [("recipient", "We"), ("attribute", "contact information"), ("sender", "you"),
      ("tp", "if you upload an address book")]),
    ("s2", "Advertisers send us reports about the ads you see when you browse their sites.",
     [("sender", "Advertisers"), ("recipient", "us"), ("attribute", "reports about the ads"),
      ("tp", "when you browse their sites")]),
    ("s3", "Your profile details are shared with page admins to measure audience reach.",
     [("attribute", "Your profile details"), ("recipient", "page admins"),
      ("tp", "to measure audience reach")]),
]

WORK_TEXTS = [
    ("w01", "We receive device information from your phone when you install our apps.",
     [("recipient", "We"), ("attribute", "device information"), ("sender", "your phone"),
      ("tp", "when you install our apps")]),
    ("w02", "Partners share purchase history with us to improve ad delivery.",
     [("sender", "Partners"), ("attribute", "purchase history"), ("recipient", "us"),
      ("tp", "to improve ad delivery")]),
    ("w03", "You provide payment details to sellers when you complete a checkout.",
     [("sender", "You"), ("attribute", "payment details"), ("recipient", "sellers"),
      ("tp", "when you complete a checkout")]),
    ("w04", "Your contacts are uploaded to our servers if you enable the sync feature.",
     [("attribute", "Your contacts"), ("recipient", "our servers"),
      ("tp", "if you enable the sync feature")]),
    ("w05", "Researchers obtain aggregated statistics from us under data agreements.",
     [("recipient", "Researchers"), ("attribute", "aggregated statistics"), ("sender", "us"),
      ("tp", "under data agreements")]),
    ("w06", "Apps you use send activity logs to advertisers for measurement purposes.",
     [("sender", "Apps you use"), ("attribute", "activity logs"), ("recipient", "advertisers"),
      ("tp", "for measurement purposes")]),
    ("w07", "We disclose account records to regulators when the law requires it.",
     [("recipient", "We"), ("attribute", "account records"), ("recipient", "regulators"),
      ("tp", "when the law requires it")]),
    ("w08", "Content creators receive engagement metrics about their posts every week.",
     [("recipient", "Content creators"), ("attribute", "engagement metrics"),
      ("tp", "every week")]),
    ("w09", "Your location history is stored by our systems while navigation is active.",
     [("attribute", "Your location history"), ("recipient", "our systems"),
      ("tp", "while navigation is active")]),
    ("w10", "Browsers transmit cookie identifiers to measurement vendors during page loads.",
     [("sender", "Browsers"), ("attribute", "cookie identifiers"),
      ("recipient", "measurement vendors"), ("tp", "during page loads")]),
]


def _find_spans(text, labeled_phrases):
    spans = []
    used = 0
    for kind, phrase in labeled_phrases:
        start = text.index(phrase, used)
        spans.append(Span(start, start + len(phrase),
                          ParameterKind.from_label(kind)))
        used = start + len(phrase)
    return tuple(spans)


def _perturb(rng, excerpt_text, gold_spans):
    """Annotator simulation: mostly copies gold, sometimes drops a span or
    relabels one (producing realistic skipped/mismatch errors)."""
    spans = []
    for span in gold_spans:
        roll = rng.random()
        if roll < 0.12:
            continue  # skipped parameter
        kind = span.kind
        if roll < 0.18:
            others = [k for k in CROWD_KINDS if k != kind]
            kind = rng.choice(others)
        spans.append(Span(span.start, span.end, kind))
    return tuple(spans)


def make_experiment_bundle():
    rng = random.Random(2018)
    excerpts = []
    for i, (eid, text, phrases) in enumerate(SCREENING_TEXTS, 1):
        gold = AnnotationSet("expert", eid, _find_spans(text, phrases))
        excerpts.append(Excerpt(eid, text, gold, is_screening=True, screening_index=i))
    for eid, text, phrases in WORK_TEXTS:
        gold = AnnotationSet("expert", eid, _find_spans(text, phrases))
        excerpts.append(Excerpt(eid, text, gold))

    # 7..12 annotators per work excerpt, mean 10.2 over the 10 excerpts
    group_sizes = [7, 8, 9, 10, 10, 11, 11, 12, 12, 12]
    assert sum(group_sizes) / len(group_sizes) == 10.2

    responses = {e.excerpt_id: [] for e in excerpts}
    annotators = [f"a{i:02d}" for i in range(1, 15)]

    # screening answers: a01 passes cleanly, a02 fails (empty answers)
    for i, (eid, text, phrases) in enumerate(SCREENING_TEXTS):
        gold_spans = _find_spans(text, phrases)
        responses[eid].append(AnnotationSet("a01", eid, gold_spans, "2018-06-01T00:00:00+00:00"))
        responses[eid].append(AnnotationSet("a02", eid, (), "2018-06-01T00:00:00+00:00"))

    for (eid, text, phrases), size in zip(WORK_TEXTS, group_sizes):
        gold_spans = _find_spans(text, phrases)
        chosen = rng.sample(annotators, size)
        for name in sorted(chosen):
            spans = _perturb(rng, text, gold_spans)
            responses[eid].append(
                AnnotationSet(name, eid, spans, "2018-06-02T00:00:00+00:00")
            )

    return ExperimentBundle(
        tuple(excerpts),
        {eid: tuple(anns) for eid, anns in responses.items()},
    )


def main():
    FIXTURES.mkdir(exist_ok=True)

    prev = parse_inline(make_fb_prev(), "facebook", "previous")
    (FIXTURES / "fb_prev.json").write_bytes(to_standoff(prev))

    markup_a, markup_b = make_diff_pair()
    doc_a = parse_inline(markup_a, "diffdemo", "previous")
    doc_b = parse_inline(markup_b, "diffdemo", "updated")
    (FIXTURES / "diff_prev.json").write_bytes(to_standoff(doc_a))
    (FIXTURES / "diff_updated.json").write_bytes(to_standoff(doc_b))

    bundle = make_experiment_bundle()
    write_bundle(bundle, FIXTURES / "experiment")

    # quick self-checks
    from cipolicy.analysis import bloat_histogram, incomplete_flows

    result = incomplete_flows(prev)
    hist = bloat_histogram(prev)
    print("fb_prev flows:", len(prev.flows))
    print("incomplete:", len(result.missing_by_flow), result.percent_overall)
    print("sender bloat:", hist[ParameterKind.SENDER])
    print("recipient bloat:", hist[ParameterKind.RECIPIENT])
    from cipolicy.diff import compare_policies
    report = compare_policies(doc_a, doc_b)
    print("unique attrs:", report.unique_counts_a[ParameterKind.ATTRIBUTE],
          report.unique_counts_b[ParameterKind.ATTRIBUTE])


if __name__ == "__main__":
    main()
