"""Parsing and serialization of annotated policies, plus the tokenizer
shared by all word-based scoring.

Two on-disk formats:

* inline markup -- flows delimited by ``<flow id="...">...</flow>`` with
  parameter tags ``<sender>``, ``<recipient>``, ``<subject>``,
  ``<attribute>``, ``<tp>`` inside (tags may not nest);
* canonical standoff JSON -- offsets into untouched text, UTF-8, LF,
  2-space indent, fixed key order.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources

from .model import (
    AnnotationSet,
    FlowStatement,
    ParameterKind,
    ParseError,
    PolicyDocument,
    SchemaError,
    Span,
    SpanError,
)

_TAG_NAMES = {
    "sender": ParameterKind.SENDER,
    "recipient": ParameterKind.RECIPIENT,
    "subject": ParameterKind.SUBJECT,
    "attribute": ParameterKind.ATTRIBUTE,
    "tp": ParameterKind.TRANSMISSION_PRINCIPLE,
}

_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*", re.UNICODE)


def stopwords() -> frozenset[str]:
    """The pinned stopword list (lowercase), minus the four retained
    pronouns "you", "your", "them", "we"."""
    return _STOPWORDS


def _load_stopwords() -> frozenset[str]:
    data = resources.files("cipolicy.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(line.strip() for line in data.splitlines() if line.strip())


_STOPWORDS = _load_stopwords()


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int
    is_stopword: bool


def tokenize(text: str) -> list[Token]:
    """Split text into word tokens: maximal runs of letters/digits with
    internal apostrophes.  Everything else separates tokens."""
    tokens = []
    for m in _TOKEN_RE.finditer(text):
        word = m.group(0)
        tokens.append(
            Token(word, m.start(), m.end(), word.lower() in _STOPWORDS)
        )
    return tokens


def words_with_kind(flow: FlowStatement) -> list[tuple[Token, ParameterKind | None]]:
    """Pair each non-stopword token with the kind of the span containing
    its start offset, if any.  Stopword tokens are dropped: they never
    count in scoring."""
    return label_tokens(flow.text, flow.spans)


def label_tokens(text: str, spans) -> list[tuple[Token, ParameterKind | None]]:
    """Same as words_with_kind but for a bare (text, spans) pair."""
    out = []
    spans = sorted(spans, key=lambda s: s.start)
    i = 0
    for token in tokenize(text):
        if token.is_stopword:
            continue
        while i < len(spans) and spans[i].end <= token.start:
            i += 1
        kind = None
        if i < len(spans) and spans[i].contains(token.start):
            kind = spans[i].kind
        out.append((token, kind))
    return out


# --- inline markup ---------------------------------------------------------

_INLINE_TAG_RE = re.compile(r"<(/?)([a-zA-Z]+)((?:\s+[a-zA-Z]+=\"[^\"]*\")*)\s*(/?)>")
_ATTR_RE = re.compile(r"([a-zA-Z]+)=\"([^\"]*)\"")


def _line_col(text: str, pos: int) -> tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def parse_inline(
    text: str, policy_id: str = "", version_label: str = ""
) -> PolicyDocument:
    """Parse inline markup into a PolicyDocument.

    Flow texts are the tag-stripped flow contents; spans cover exactly the
    tagged regions at stripped-text offsets.  Text outside <flow> elements
    is ignored.
    """
    flows = []
    flow_id = None
    flow_start_pos = None  # position of the <flow> tag, for error messages
    buf: list[str] = []
    spans: list[Span] = []
    open_kind: ParameterKind | None = None
    open_kind_start = 0
    pos = 0

    def err(msg, at):
        line, col = _line_col(text, at)
        raise ParseError(msg, line, col)

    for m in _INLINE_TAG_RE.finditer(text):
        if flow_id is not None:
            buf.append(text[pos : m.start()])
        pos = m.end()
        closing, name, attrs, _self = m.group(1), m.group(2).lower(), m.group(3), m.group(4)

        if name == "flow":
            if closing:
                if flow_id is None:
                    err("</flow> without matching <flow>", m.start())
                if open_kind is not None:
                    err(f"unclosed <{open_kind.value}> at end of flow", m.start())
                flow_text = "".join(buf)
                flows.append(FlowStatement(flow_id, flow_text, tuple(spans)))
                flow_id = None
            else:
                if flow_id is not None:
                    err("nested <flow> elements unsupported", m.start())
                attr_map = dict(_ATTR_RE.findall(attrs))
                if "id" not in attr_map:
                    err("<flow> missing id attribute", m.start())
                flow_id = attr_map["id"]
                flow_start_pos = m.start()
                buf = []
                spans = []
                open_kind = None
        elif name in _TAG_NAMES:
            if flow_id is None:
                err(f"<{name}> outside of a <flow> element", m.start())
            if closing:
                if open_kind is not _TAG_NAMES[name]:
                    err(f"unbalanced </{name}>", m.start())
                end = sum(len(part) for part in buf)
                if end == open_kind_start:
                    err(f"empty <{name}> element", m.start())
                spans.append(Span(open_kind_start, end, open_kind))
                open_kind = None
            else:
                if open_kind is not None:
                    err("nested parameters unsupported", m.start())
                open_kind = _TAG_NAMES[name]
                open_kind_start = sum(len(part) for part in buf)
        else:
            err(f"unknown tag <{name}>", m.start())

    if flow_id is not None:
        err(f"unclosed <flow id=\"{flow_id}\">", flow_start_pos)
    return PolicyDocument(policy_id, version_label, tuple(flows))


def to_inline(doc: PolicyDocument) -> str:
    """Debug helper: render a document back to inline markup."""
    parts = []
    for flow in doc.flows:
        body = []
        pos = 0
        for span in flow.spans:
            body.append(flow.text[pos : span.start])
            tag = span.kind.value
            body.append(f"<{tag}>{flow.text[span.start:span.end]}</{tag}>")
            pos = span.end
        body.append(flow.text[pos:])
        parts.append(f'<flow id="{flow.id}">{"".join(body)}</flow>')
    return "\n".join(parts)


# --- standoff JSON ---------------------------------------------------------


def _span_to_obj(span: Span) -> dict:
    return {"start": span.start, "end": span.end, "kind": span.kind.value}


def _require(obj, key, types, path):
    if not isinstance(obj, dict):
        raise SchemaError("expected an object", path)
    if key not in obj:
        raise SchemaError(f"missing required field {key!r}", path)
    value = obj[key]
    if not isinstance(value, types):
        raise SchemaError(f"field {key!r} has wrong type", f"{path}.{key}")
    return value


def to_standoff(doc: PolicyDocument) -> bytes:
    """Serialize to canonical standoff JSON: UTF-8, LF, 2-space indent,
    fixed key order, spans sorted by start."""
    obj = {
        "policy_id": doc.policy_id,
        "version_label": doc.version_label,
        "flows": [
            {
                "id": flow.id,
                "text": flow.text,
                "source_ref": flow.source_ref,
                "spans": [_span_to_obj(s) for s in flow.spans],
            }
            for flow in doc.flows
        ],
    }
    return (json.dumps(obj, ensure_ascii=False, indent=2) + "\n").encode("utf-8")


def from_standoff(data: bytes | str) -> PolicyDocument:
    """Parse canonical standoff JSON; inverse of to_standoff."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc

    policy_id = _require(obj, "policy_id", str, "$")
    version_label = _require(obj, "version_label", str, "$")
    flows_obj = _require(obj, "flows", list, "$")
    flows = []
    for i, fobj in enumerate(flows_obj):
        path = f"$.flows[{i}]"
        fid = _require(fobj, "id", str, path)
        ftext = _require(fobj, "text", str, path)
        source_ref = fobj.get("source_ref")
        if source_ref is not None and not isinstance(source_ref, str):
            raise SchemaError("field 'source_ref' has wrong type", f"{path}.source_ref")
        spans = []
        for j, sobj in enumerate(_require(fobj, "spans", list, path)):
            spath = f"{path}.spans[{j}]"
            start = _require(sobj, "start", int, spath)
            end = _require(sobj, "end", int, spath)
            kind_label = _require(sobj, "kind", str, spath)
            if isinstance(start, bool) or isinstance(end, bool):
                raise SchemaError("offsets must be integers", spath)
            try:
                kind = ParameterKind.from_label(kind_label)
            except SchemaError:
                raise SchemaError(f"unknown kind {kind_label!r}", f"{spath}.kind") from None
            try:
                spans.append(Span(start, end, kind))
            except SpanError as exc:
                raise SchemaError(str(exc), spath) from exc
        try:
            flows.append(FlowStatement(fid, ftext, tuple(spans), source_ref))
        except SpanError as exc:
            raise SchemaError(str(exc), path) from exc
    try:
        return PolicyDocument(policy_id, version_label, tuple(flows))
    except SpanError as exc:
        raise SchemaError(str(exc)) from exc


# --- annotation sets (service/bundle plumbing) -----------------------------


def annotation_to_obj(ann: AnnotationSet) -> dict:
    return {
        "annotator_id": ann.annotator_id,
        "excerpt_id": ann.excerpt_id,
        "spans": [_span_to_obj(s) for s in ann.spans],
        "submitted_at": ann.submitted_at,
    }


def annotation_from_obj(obj: dict) -> AnnotationSet:
    spans = []
    for j, sobj in enumerate(_require(obj, "spans", list, "$")):
        spath = f"$.spans[{j}]"
        spans.append(
            Span(
                _require(sobj, "start", int, spath),
                _require(sobj, "end", int, spath),
                ParameterKind.from_label(_require(sobj, "kind", str, spath)),
            )
        )
    submitted_at = obj.get("submitted_at")
    return AnnotationSet(
        _require(obj, "annotator_id", str, "$"),
        _require(obj, "excerpt_id", str, "$"),
        tuple(spans),
        submitted_at,
    )
