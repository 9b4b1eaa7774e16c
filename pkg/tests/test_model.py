import pytest

from cipolicy.model import (
    AnnotationSet,
    FlowStatement,
    ParameterKind,
    PolicyDocument,
    Span,
    SpanError,
)


def test_parameter_kind_has_five_values_in_fixed_order():
    assert [k.value for k in ParameterKind] == [
        "sender", "recipient", "subject", "attribute", "tp",
    ]
    assert ParameterKind.SENDER < ParameterKind.TRANSMISSION_PRINCIPLE
    assert sorted(ParameterKind, reverse=True)[0] == ParameterKind.TRANSMISSION_PRINCIPLE


def test_span_rejects_bad_offsets():
    with pytest.raises(SpanError):
        Span(3, 3, ParameterKind.SENDER)
    with pytest.raises(SpanError):
        Span(-1, 2, ParameterKind.SENDER)
    with pytest.raises(SpanError):
        Span(5, 2, ParameterKind.SENDER)


def test_flow_rejects_overlapping_spans():
    with pytest.raises(SpanError):
        FlowStatement("f1", "hello world", (
            Span(0, 5, ParameterKind.SENDER),
            Span(3, 8, ParameterKind.ATTRIBUTE),
        ))


def test_flow_rejects_out_of_bounds_span():
    with pytest.raises(SpanError):
        FlowStatement("f1", "short", (Span(0, 10, ParameterKind.SENDER),))


def test_flow_sorts_spans_by_start():
    flow = FlowStatement("f1", "one two three", (
        Span(8, 13, ParameterKind.ATTRIBUTE),
        Span(0, 3, ParameterKind.SENDER),
    ))
    assert [s.start for s in flow.spans] == [0, 8]


def test_adjacent_spans_allowed():
    flow = FlowStatement("f1", "abcdef", (
        Span(0, 3, ParameterKind.SENDER),
        Span(3, 6, ParameterKind.RECIPIENT),
    ))
    assert len(flow.spans) == 2


def test_document_rejects_duplicate_flow_ids():
    flow = FlowStatement("f1", "text")
    with pytest.raises(SpanError):
        PolicyDocument("p", "v1", (flow, FlowStatement("f1", "other")))


def test_annotation_set_rejects_overlap():
    with pytest.raises(SpanError):
        AnnotationSet("a1", "e1", (
            Span(0, 4, ParameterKind.SENDER),
            Span(2, 6, ParameterKind.SENDER),
        ))


def test_offsets_count_unicode_scalars():
    # é as one scalar value: span offsets are code points, not bytes
    flow = FlowStatement("f1", "café data", (Span(5, 9, ParameterKind.ATTRIBUTE),))
    assert flow.text[flow.spans[0].start:flow.spans[0].end] == "data"
