"""Contextual-integrity privacy policy annotation and analysis toolkit."""

from .model import (
    AnnotationSet,
    CiError,
    FlowStatement,
    KindScore,
    ParameterKind,
    ParseError,
    PolicyDocument,
    SchemaError,
    ScoreReport,
    Span,
    SpanError,
)

__all__ = [
    "AnnotationSet",
    "CiError",
    "FlowStatement",
    "KindScore",
    "ParameterKind",
    "ParseError",
    "PolicyDocument",
    "SchemaError",
    "ScoreReport",
    "Span",
    "SpanError",
]

__version__ = "0.1.0"
