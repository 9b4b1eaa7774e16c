"""Cross-version comparison of two annotated policies via fuzzy string
matching on normalized parameter texts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .analysis import extract_instances
from .model import ParameterKind, PolicyDocument

#: Similarity thresholds (percent) used in the Facebook case study.
DEFAULT_THRESHOLDS = {
    ParameterKind.SENDER: 70,
    ParameterKind.RECIPIENT: 70,
    ParameterKind.SUBJECT: 70,
    ParameterKind.ATTRIBUTE: 65,
    ParameterKind.TRANSMISSION_PRINCIPLE: 55,
}


@dataclass(frozen=True)
class MatchConfig:
    thresholds: dict[ParameterKind, int] = field(
        default_factory=lambda: dict(DEFAULT_THRESHOLDS)
    )
    review_band: int = 5

    def __post_init__(self):
        for kind, t in self.thresholds.items():
            if not 0 <= t <= 100:
                raise ValueError(f"threshold for {kind.value} out of range: {t}")


def indel_distance(a: str, b: str) -> int:
    """Edit distance with insertions/deletions costing 1 and substitutions
    costing 2 (equivalently: len(a) + len(b) - 2 * LCS)."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        curr = [i]
        for j, cb in enumerate(b, 1):
            if ca == cb:
                curr.append(prev[j - 1])
            else:
                curr.append(min(prev[j], curr[-1]) + 1)
        prev = curr
    return prev[-1]


def similarity(a: str, b: str) -> int:
    """Indel ratio as an integer percentage: 100 * (1 - D / (|a| + |b|)),
    rounded.  Two empty strings are fully similar."""
    total = len(a) + len(b)
    if total == 0:
        return 100
    return round(100 * (1 - indel_distance(a, b) / total))


@dataclass(frozen=True)
class MatchedPair:
    text_a: str
    text_b: str
    similarity: int


@dataclass(frozen=True)
class KindDiff:
    kind: ParameterKind
    matched: tuple[MatchedPair, ...]
    added: tuple[str, ...]  # only in B
    removed: tuple[str, ...]  # only in A
    review: tuple[MatchedPair, ...]  # matched within review_band of threshold


def match_parameters(
    texts_a: set[str] | list[str],
    texts_b: set[str] | list[str],
    kind: ParameterKind,
    config: MatchConfig | None = None,
) -> KindDiff:
    """Greedy one-to-one assignment of normalized texts across versions.

    Pairs at or above the kind threshold are sorted by (similarity desc,
    text_a asc, text_b asc) and assigned while both sides are unused.
    """
    config = config or MatchConfig()
    threshold = config.thresholds[kind]
    set_a = sorted(set(texts_a))
    set_b = sorted(set(texts_b))

    candidates = []
    for ta in set_a:
        for tb in set_b:
            sim = similarity(ta, tb)
            if sim >= threshold:
                candidates.append((-sim, ta, tb))
    candidates.sort()

    used_a: set[str] = set()
    used_b: set[str] = set()
    matched = []
    for neg_sim, ta, tb in candidates:
        if ta in used_a or tb in used_b:
            continue
        used_a.add(ta)
        used_b.add(tb)
        matched.append(MatchedPair(ta, tb, -neg_sim))

    review = tuple(
        p for p in matched if p.similarity < threshold + config.review_band
    )
    return KindDiff(
        kind=kind,
        matched=tuple(matched),
        added=tuple(t for t in set_b if t not in used_b),
        removed=tuple(t for t in set_a if t not in used_a),
        review=review,
    )


@dataclass(frozen=True)
class VersionDiffReport:
    policy_a: str
    policy_b: str
    by_kind: dict[ParameterKind, KindDiff]
    unique_counts_a: dict[ParameterKind, int]
    unique_counts_b: dict[ParameterKind, int]


def compare_policies(
    doc_a: PolicyDocument, doc_b: PolicyDocument, config: MatchConfig | None = None
) -> VersionDiffReport:
    """Extract instances from both documents, dedup on normalized text per
    kind, and run the fuzzy match per kind."""
    config = config or MatchConfig()
    inst_a = extract_instances(doc_a)
    inst_b = extract_instances(doc_b)
    by_kind = {}
    counts_a = {}
    counts_b = {}
    for kind in ParameterKind:
        texts_a = {i.normalized_text for i in inst_a if i.kind == kind}
        texts_b = {i.normalized_text for i in inst_b if i.kind == kind}
        counts_a[kind] = len(texts_a)
        counts_b[kind] = len(texts_b)
        by_kind[kind] = match_parameters(texts_a, texts_b, kind, config)
    return VersionDiffReport(
        f"{doc_a.policy_id}/{doc_a.version_label}",
        f"{doc_b.policy_id}/{doc_b.version_label}",
        by_kind,
        counts_a,
        counts_b,
    )
