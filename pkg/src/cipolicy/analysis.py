"""Single-document analyses: parameter inventory and frequency, incomplete
flows, parameter bloating, and vagueness scanning.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from importlib import resources

from .annotation_io import tokenize
from .model import CROWD_KINDS, ParameterKind, PolicyDocument

#: Kinds required for a flow to count as complete.  Subject is excluded:
#: it is almost always the consumer and is analyzed separately.
DEFAULT_REQUIRED_KINDS = frozenset(CROWD_KINDS)

_STRIP_CHARS = ".,;:!?'\"‘’“”"

VAGUENESS_CATEGORIES = (
    "conditionality",
    "generalization",
    "modality",
    "numeric_quantifier",
)


def normalize(raw: str) -> str:
    """Lowercase, trim, collapse internal whitespace, and strip surrounding
    sentence punctuation (quotes and terminators; brackets are kept because
    annotators use them for glosses like "we [facebook]")."""
    collapsed = " ".join(raw.lower().split())
    return collapsed.strip(_STRIP_CHARS).strip()


@dataclass(frozen=True)
class ParameterInstance:
    kind: ParameterKind
    raw_text: str
    normalized_text: str
    flow_id: str


def extract_instances(doc: PolicyDocument) -> list[ParameterInstance]:
    """One instance per span, in document order."""
    out = []
    for flow in doc.flows:
        for span in flow.spans:
            raw = flow.text[span.start : span.end]
            out.append(ParameterInstance(span.kind, raw, normalize(raw), flow.id))
    return out


def frequency_table(
    instances: list[ParameterInstance], kind: ParameterKind
) -> list[tuple[str, int]]:
    """Frequency of normalized texts for one kind, descending by count,
    ties broken lexicographically."""
    counts = Counter(i.normalized_text for i in instances if i.kind == kind)
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


@dataclass(frozen=True)
class IncompleteFlowsResult:
    missing_by_flow: dict[str, frozenset[ParameterKind]]  # incomplete flows only
    percent_by_kind: dict[ParameterKind, float]
    percent_overall: float
    total_flows: int


def _pct(count: int, total: int) -> float:
    return round(100.0 * count / total, 2) if total else 0.0


def incomplete_flows(
    doc: PolicyDocument, required: frozenset[ParameterKind] = DEFAULT_REQUIRED_KINDS
) -> IncompleteFlowsResult:
    """Flows lacking at least one required kind, with per-kind and overall
    percentages over all flows (two decimals)."""
    if not required:
        raise ValueError("required kind set must be non-empty")
    missing_by_flow = {}
    missing_counts = {kind: 0 for kind in sorted(required)}
    for flow in doc.flows:
        missing = frozenset(required - flow.kinds_present())
        if missing:
            missing_by_flow[flow.id] = missing
            for kind in missing:
                missing_counts[kind] += 1
    total = len(doc.flows)
    return IncompleteFlowsResult(
        missing_by_flow,
        {kind: _pct(n, total) for kind, n in missing_counts.items()},
        _pct(len(missing_by_flow), total),
        total,
    )


def bloat_histogram(doc: PolicyDocument) -> dict[ParameterKind, dict[int, int]]:
    """Per kind: map from instances-per-flow (>= 2) to the number of flows
    with that many instances.  Flows with 0 or 1 instance are excluded."""
    hist: dict[ParameterKind, Counter] = {kind: Counter() for kind in ParameterKind}
    for flow in doc.flows:
        per_kind = Counter(span.kind for span in flow.spans)
        for kind, n in per_kind.items():
            if n >= 2:
                hist[kind][n] += 1
    return {kind: dict(sorted(c.items())) for kind, c in hist.items()}


@dataclass(frozen=True)
class VaguenessLexicon:
    """Term lists for the four vagueness categories (lowercase, single- or
    multi-word)."""

    categories: dict[str, frozenset[str]]

    def __post_init__(self):
        unknown = set(self.categories) - set(VAGUENESS_CATEGORIES)
        if unknown:
            raise ValueError(f"unknown vagueness categories: {sorted(unknown)}")
        seen: dict[str, str] = {}
        for cat in VAGUENESS_CATEGORIES:
            for term in self.categories.get(cat, ()):
                if term in seen:
                    raise ValueError(
                        f"term {term!r} appears in both {seen[term]} and {cat}"
                    )
                seen[term] = cat

    @classmethod
    def from_json(cls, text: str) -> "VaguenessLexicon":
        obj = json.loads(text)
        return cls({cat: frozenset(terms) for cat, terms in obj.items()})

    @classmethod
    def default(cls) -> "VaguenessLexicon":
        return _DEFAULT_LEXICON


def _load_default_lexicon() -> VaguenessLexicon:
    text = resources.files("cipolicy.data").joinpath("vagueness_lexicon.json").read_text("utf-8")
    return VaguenessLexicon.from_json(text)


_DEFAULT_LEXICON = _load_default_lexicon()


@dataclass(frozen=True)
class VaguenessMatch:
    category: str
    term: str
    start: int
    end: int


@dataclass(frozen=True)
class VaguenessResult:
    matches_by_flow: dict[str, tuple[VaguenessMatch, ...]]  # flagged flows only
    percent_by_category: dict[str, float]
    total_flows: int


def find_vague_terms(text: str, lexicon: VaguenessLexicon) -> list[VaguenessMatch]:
    """All whole-token (or whole multi-token sequence) case-insensitive
    lexicon matches in `text`, with character offsets."""
    tokens = tokenize(text)
    lowered = [t.text.lower() for t in tokens]
    matches = []
    for category in VAGUENESS_CATEGORIES:
        for term in sorted(lexicon.categories.get(category, ())):
            words = term.split()
            n = len(words)
            for i in range(len(tokens) - n + 1):
                if lowered[i : i + n] == words:
                    matches.append(
                        VaguenessMatch(category, term, tokens[i].start, tokens[i + n - 1].end)
                    )
    matches.sort(key=lambda m: (m.start, m.end, m.category, m.term))
    return matches


def vagueness_scan(
    doc: PolicyDocument, lexicon: VaguenessLexicon | None = None
) -> VaguenessResult:
    """Flag flows containing vague terminology, per category."""
    lexicon = lexicon or VaguenessLexicon.default()
    matches_by_flow = {}
    flagged: dict[str, set[str]] = defaultdict(set)
    for flow in doc.flows:
        found = find_vague_terms(flow.text, lexicon)
        if found:
            matches_by_flow[flow.id] = tuple(found)
            for m in found:
                flagged[m.category].add(flow.id)
    total = len(doc.flows)
    return VaguenessResult(
        matches_by_flow,
        {cat: _pct(len(flagged.get(cat, ())), total) for cat in VAGUENESS_CATEGORIES},
        total,
    )


@dataclass(frozen=True)
class FlowAnalysisReport:
    """All single-document statistics in one bundle, ready for reporting."""

    policy_id: str
    version_label: str
    total_flows: int
    unique_counts: dict[ParameterKind, int]
    frequency: dict[ParameterKind, list[tuple[str, int]]]
    incomplete: IncompleteFlowsResult
    bloat: dict[ParameterKind, dict[int, int]]
    vagueness: VaguenessResult


def analyze_document(
    doc: PolicyDocument,
    lexicon: VaguenessLexicon | None = None,
    required: frozenset[ParameterKind] = DEFAULT_REQUIRED_KINDS,
) -> FlowAnalysisReport:
    instances = extract_instances(doc)
    frequency = {kind: frequency_table(instances, kind) for kind in ParameterKind}
    return FlowAnalysisReport(
        policy_id=doc.policy_id,
        version_label=doc.version_label,
        total_flows=len(doc.flows),
        unique_counts={kind: len(frequency[kind]) for kind in ParameterKind},
        frequency=frequency,
        incomplete=incomplete_flows(doc, required),
        bloat=bloat_histogram(doc),
        vagueness=vagueness_scan(doc, lexicon),
    )
