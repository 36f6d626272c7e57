"""Recognize personal information in clinical text and mask, redact or keep it."""

from .core import AnnotatedSpan, Document, EntityClass, Tag, Token, spans_to_tags, tags_to_spans
from .masking import MaskPolicy, apply_policy, register_masker
from .ner import CrfRecognizer, Recognizer, RuleRecognizer, evaluate_recognizer
from .pipeline import Pipeline
from .tokenize import make_document, tokenize

__version__ = "0.1.0"

__all__ = [
    "AnnotatedSpan", "Document", "EntityClass", "Tag", "Token", "spans_to_tags", "tags_to_spans",
    "MaskPolicy", "apply_policy", "register_masker",
    "CrfRecognizer", "Recognizer", "RuleRecognizer", "evaluate_recognizer",
    "Pipeline", "make_document", "tokenize",
]
