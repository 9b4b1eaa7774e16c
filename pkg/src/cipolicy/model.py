"""Core domain types for contextual-integrity policy annotation.

All types are immutable value objects. Validation happens at construction;
an overlapping or out-of-bounds span set is always an error, never silently
normalized.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class CiError(Exception):
    """Base class for all toolkit errors."""


class SpanError(CiError):
    """Invalid span set: overlap, bad bounds, or bad offsets."""


class ParseError(CiError):
    """Malformed inline markup.  Carries 1-based line/column when known."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class SchemaError(CiError):
    """Standoff JSON does not conform to the schema.  `path` is a JSON path."""

    def __init__(self, message, path="$"):
        self.path = path
        super().__init__(f"{path}: {message}")


class ParameterKind(enum.Enum):
    """The five information-flow parameter kinds.

    Enum order defines the canonical ordering used everywhere output must
    be deterministic.
    """

    SENDER = "sender"
    RECIPIENT = "recipient"
    SUBJECT = "subject"
    ATTRIBUTE = "attribute"
    TRANSMISSION_PRINCIPLE = "tp"

    def __lt__(self, other):
        if not isinstance(other, ParameterKind):
            return NotImplemented
        return _KIND_ORDER[self] < _KIND_ORDER[other]

    @classmethod
    def from_label(cls, label: str) -> "ParameterKind":
        try:
            return cls(label)
        except ValueError:
            raise SchemaError(f"unknown parameter kind {label!r}") from None


_KIND_ORDER = {k: i for i, k in enumerate(ParameterKind)}

#: The four kinds used by the crowdsourcing task (subject is annotated by
#: experts but excluded from the crowd task and from flow analysis).
CROWD_KINDS = (
    ParameterKind.SENDER,
    ParameterKind.RECIPIENT,
    ParameterKind.ATTRIBUTE,
    ParameterKind.TRANSMISSION_PRINCIPLE,
)


@dataclass(frozen=True, order=True)
class Span:
    """A labeled character range.  Offsets count Unicode scalar values,
    start inclusive, end exclusive."""

    start: int
    end: int
    kind: ParameterKind = field(compare=False)

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise SpanError(f"invalid span offsets [{self.start}, {self.end})")

    def contains(self, offset: int) -> bool:
        return self.start <= offset < self.end


def validate_spans(spans, text_length, owner=""):
    """Check bounds and pairwise non-overlap; return spans sorted by start.

    Raises SpanError naming `owner` on the first violation.
    """
    ordered = sorted(spans, key=lambda s: (s.start, s.end))
    prev = None
    for span in ordered:
        if span.end > text_length:
            raise SpanError(
                f"{owner or 'span set'}: span [{span.start}, {span.end}) "
                f"exceeds text length {text_length}"
            )
        if prev is not None and span.start < prev.end:
            raise SpanError(
                f"{owner or 'span set'}: spans [{prev.start}, {prev.end}) and "
                f"[{span.start}, {span.end}) overlap"
            )
        prev = span
    return tuple(ordered)


@dataclass(frozen=True)
class FlowStatement:
    """One privacy statement carrying a single set of CI parameter spans."""

    id: str
    text: str
    spans: tuple[Span, ...] = ()
    source_ref: str | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "spans", validate_spans(self.spans, len(self.text), f"flow {self.id!r}")
        )

    def spans_of(self, kind: ParameterKind) -> tuple[Span, ...]:
        return tuple(s for s in self.spans if s.kind == kind)

    def kinds_present(self) -> frozenset[ParameterKind]:
        return frozenset(s.kind for s in self.spans)


@dataclass(frozen=True)
class PolicyDocument:
    """An annotated policy: one version of one policy, as a list of flows."""

    policy_id: str
    version_label: str
    flows: tuple[FlowStatement, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "flows", tuple(self.flows))
        seen = set()
        for flow in self.flows:
            if flow.id in seen:
                raise SpanError(f"duplicate flow id {flow.id!r} in {self.policy_id!r}")
            seen.add(flow.id)


@dataclass(frozen=True)
class AnnotationSet:
    """One annotator's labeled spans over one excerpt."""

    annotator_id: str
    excerpt_id: str
    spans: tuple[Span, ...] = ()
    submitted_at: str | None = None

    def __post_init__(self):
        # Bounds are checked against the excerpt text at use time; overlap
        # is a structural property checked here.
        ordered = sorted(self.spans, key=lambda s: (s.start, s.end))
        for a, b in zip(ordered, ordered[1:]):
            if b.start < a.end:
                raise SpanError(
                    f"annotation {self.annotator_id!r}/{self.excerpt_id!r}: "
                    f"spans [{a.start}, {a.end}) and [{b.start}, {b.end}) overlap"
                )
        object.__setattr__(self, "spans", tuple(ordered))


@dataclass(frozen=True)
class KindScore:
    """Precision/recall/F1 plus raw counts for one parameter kind."""

    precision: float
    recall: float
    f1: float
    true_positives: int
    false_positives: int
    false_negatives: int


@dataclass(frozen=True)
class ScoreReport:
    """Word-based scores per kind plus the micro average over all kinds."""

    by_kind: dict[ParameterKind, KindScore]
    micro: KindScore


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)
