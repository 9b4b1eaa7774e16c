import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cipolicy.annotation_io import (
    from_standoff,
    parse_inline,
    stopwords,
    to_inline,
    to_standoff,
    tokenize,
    words_with_kind,
)
from cipolicy.model import (
    FlowStatement,
    ParameterKind,
    ParseError,
    PolicyDocument,
    SchemaError,
    Span,
)


class TestParseInline:
    def test_section4_example(self, section4_markup):
        doc = parse_inline(section4_markup)
        assert len(doc.flows) == 1
        flow = doc.flows[0]
        assert flow.text.startswith("We also collect contact information")
        kinds = [s.kind for s in flow.spans]
        assert kinds == [
            ParameterKind.RECIPIENT,
            ParameterKind.ATTRIBUTE,
            ParameterKind.SENDER,
            ParameterKind.TRANSMISSION_PRINCIPLE,
        ]
        texts = [flow.text[s.start:s.end] for s in flow.spans]
        assert texts == [
            "We",
            "contact information",
            "you",
            "if you upload, sync or import this information (such as an "
            "address book) from a device",
        ]

    def test_flow_without_tags(self):
        doc = parse_inline('<flow id="f1">plain text with no tags</flow>')
        assert len(doc.flows) == 1
        assert doc.flows[0].text == "plain text with no tags"
        assert doc.flows[0].spans == ()

    def test_nested_parameter_tags_rejected(self):
        with pytest.raises(ParseError, match="nested parameters unsupported"):
            parse_inline('<flow id="f1"><sender>we <attribute>x</attribute></sender></flow>')

    def test_unknown_tag_named_in_error(self):
        with pytest.raises(ParseError, match="unknown tag <bogus>"):
            parse_inline('<flow id="f1"><bogus>x</bogus></flow>')

    def test_unbalanced_tag_reports_line_and_column(self):
        with pytest.raises(ParseError) as exc:
            parse_inline('<flow id="f1">text\n<sender>we</recipient></flow>')
        assert exc.value.line == 2
        assert exc.value.column is not None

    def test_unclosed_flow_is_error(self):
        with pytest.raises(ParseError, match="unclosed"):
            parse_inline('<flow id="f1">text')

    def test_missing_flow_id_is_error(self):
        with pytest.raises(ParseError, match="missing id"):
            parse_inline("<flow>text</flow>")

    def test_text_between_flows_ignored(self):
        doc = parse_inline(
            'preamble\n<flow id="f1">one</flow>\nbetween\n<flow id="f2">two</flow>'
        )
        assert [f.id for f in doc.flows] == ["f1", "f2"]

    def test_inline_round_trip(self, section4_markup):
        doc = parse_inline(section4_markup)
        assert parse_inline(to_inline(doc)) == doc


class TestStandoff:
    def test_empty_document_round_trips(self):
        doc = PolicyDocument("p1", "v1")
        data = to_standoff(doc)
        obj = json.loads(data)
        assert obj == {"policy_id": "p1", "version_label": "v1", "flows": []}
        assert from_standoff(data) == doc

    def test_section4_round_trip(self, section4_markup):
        doc = parse_inline(section4_markup, "fb", "prev")
        again = from_standoff(to_standoff(doc))
        assert again == doc
        assert len(again.flows[0].spans) == 4

    def test_key_order_and_formatting(self):
        doc = PolicyDocument("p", "v", (
            FlowStatement("f1", "we collect", (Span(0, 2, ParameterKind.SENDER),)),
        ))
        text = to_standoff(doc).decode()
        assert text.index('"policy_id"') < text.index('"version_label"') < text.index('"flows"')
        assert text.index('"id"') < text.index('"text"') < text.index('"source_ref"')
        assert "\r" not in text
        assert text.endswith("\n")

    def test_serialization_deterministic(self, fb_prev_doc):
        assert to_standoff(fb_prev_doc) == to_standoff(fb_prev_doc)

    def test_out_of_bounds_span_names_flow(self):
        payload = json.dumps({
            "policy_id": "p", "version_label": "v",
            "flows": [{"id": "f9", "text": "short", "source_ref": None,
                       "spans": [{"start": 0, "end": 10, "kind": "sender"}]}],
        })
        with pytest.raises(SchemaError, match="f9"):
            from_standoff(payload)

    def test_schema_error_names_path(self):
        payload = json.dumps({"policy_id": "p", "version_label": "v",
                              "flows": [{"id": "f1", "spans": []}]})
        with pytest.raises(SchemaError, match=r"\$\.flows\[0\]"):
            from_standoff(payload)

    def test_unknown_kind_rejected(self):
        payload = json.dumps({
            "policy_id": "p", "version_label": "v",
            "flows": [{"id": "f1", "text": "abc", "source_ref": None,
                       "spans": [{"start": 0, "end": 1, "kind": "owner"}]}],
        })
        with pytest.raises(SchemaError, match="owner"):
            from_standoff(payload)

    def test_not_json_rejected(self):
        with pytest.raises(SchemaError):
            from_standoff(b"not json at all")


# hypothesis strategy for valid documents
_kinds = st.sampled_from(list(ParameterKind))


@st.composite
def _flows(draw, fid):
    n_words = draw(st.integers(min_value=1, max_value=12))
    words = draw(st.lists(
        st.text(alphabet="abcdefgé", min_size=1, max_size=6),
        min_size=n_words, max_size=n_words))
    text = " ".join(words)
    # non-overlapping spans over word boundaries
    spans = []
    pos = 0
    for word in words:
        start, end = pos, pos + len(word)
        pos = end + 1
        if draw(st.booleans()):
            spans.append(Span(start, end, draw(_kinds)))
    return FlowStatement(fid, text, tuple(spans),
                         draw(st.one_of(st.none(), st.just("sec"))))


@st.composite
def documents(draw):
    n = draw(st.integers(min_value=0, max_value=5))
    flows = tuple(draw(_flows(f"f{i}")) for i in range(n))
    return PolicyDocument(draw(st.text(max_size=8)), draw(st.text(max_size=8)), flows)


@settings(max_examples=200, deadline=None)
@given(documents())
def test_standoff_round_trip_property(doc):
    assert from_standoff(to_standoff(doc)) == doc


class TestTokenize:
    def test_basic(self):
        tokens = tokenize("We collect data.")
        assert [t.text for t in tokens] == ["We", "collect", "data"]
        assert tokens[0].is_stopword is False  # "we" retained deliberately

    def test_empty(self):
        assert tokenize("") == []

    def test_all_stopwords(self):
        tokens = tokenize("the of and")
        assert len(tokens) == 3
        assert all(t.is_stopword for t in tokens)

    def test_retained_pronouns_not_stopwords(self):
        for word in ("you", "your", "them", "we", "You", "WE"):
            (token,) = tokenize(word)
            assert token.is_stopword is False, word

    def test_pinned_list_still_applies(self):
        for word in ("yours", "they", "their", "ours", "don't"):
            (token,) = tokenize(word)
            assert token.is_stopword is True, word

    def test_apostrophes_kept_inside_tokens(self):
        tokens = tokenize("don't stop")
        assert [t.text for t in tokens] == ["don't", "stop"]

    def test_offsets(self):
        tokens = tokenize("a bb  ccc")
        assert [(t.start, t.end) for t in tokens] == [(0, 1), (2, 4), (6, 9)]

    @given(st.text(alphabet="ab'é -.", max_size=30))
    @settings(max_examples=200, deadline=None)
    def test_idempotent_on_token_substrings(self, text):
        for token in tokenize(text):
            sub = tokenize(text[token.start:token.end])
            assert len(sub) == 1
            assert sub[0].text == token.text
            assert (sub[0].start, sub[0].end) == (0, token.end - token.start)


def test_stopword_file_shape():
    words = stopwords()
    assert len(words) == 175  # 179-word list minus the four retained pronouns
    assert {"you", "your", "them", "we"}.isdisjoint(words)
    assert {"the", "of", "and", "is", "don't"} <= words
    assert all(w == w.lower() for w in words)


class TestWordsWithKind:
    def test_attribute_tokens(self, section4_markup):
        flow = parse_inline(section4_markup).flows[0]
        pairs = words_with_kind(flow)
        attr_span = flow.spans[1]
        attr_tokens = [t.text for t, kind in pairs
                       if attr_span.contains(t.start)]
        attr_kinds = {kind for t, kind in pairs if attr_span.contains(t.start)}
        assert attr_tokens == ["contact", "information"]
        assert attr_kinds == {ParameterKind.ATTRIBUTE}
        assert pairs[0] == (pairs[0][0], ParameterKind.RECIPIENT)
        assert pairs[0][0].text == "We"

    def test_no_spans_all_none(self):
        flow = FlowStatement("f1", "companies collect data")
        assert all(kind is None for _t, kind in words_with_kind(flow))

    def test_hand_traced_example(self):
        text = "you provide data"
        flow = FlowStatement("f1", text, (Span(0, 3, ParameterKind.SENDER),))
        pairs = [(t.text, kind) for t, kind in words_with_kind(flow)]
        assert pairs == [
            ("you", ParameterKind.SENDER),
            ("provide", None),
            ("data", None),
        ]

    def test_stopword_tokens_excluded(self):
        flow = FlowStatement("f1", "the data", (Span(0, 8, ParameterKind.ATTRIBUTE),))
        assert [t.text for t, _ in words_with_kind(flow)] == ["data"]

    def test_containment_by_token_start(self):
        # span covers only the first half of "information": token start in span
        text = "information"
        flow = FlowStatement("f1", text, (Span(0, 5, ParameterKind.ATTRIBUTE),))
        (pair,) = words_with_kind(flow)
        assert pair[1] == ParameterKind.ATTRIBUTE
