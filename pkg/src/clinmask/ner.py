"""Recognizer plugin contract plus CRF and regex recognizers."""

from __future__ import annotations

import abc
import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .core import AnnotatedSpan, Document, EntityClass, Tag, Token, repair_bio, spans_to_tags, tags_to_spans
from .crf import CrfConfig, CrfModel, train_from_features, viterbi
from .features import extract_sequence, vectorize
from .gazetteer import Gazetteer
from .metrics import MetricsReport, span_metrics, token_metrics
from .tokenize import make_document


class Recognizer(abc.ABC):
    """Base class for NER plugins.

    Subclasses initialize resources in ``__init__`` and implement the four
    remaining hooks. ``sequences`` are lists of sentences, each a list of
    ``(token, tag)`` pairs where the token is a Token or plain string.
    """

    name = "recognizer"
    trainable = False

    @abc.abstractmethod
    def transform_sequences(self, sequences):
        """Return ``(features, labels)``, one entry per sentence."""

    @abc.abstractmethod
    def learn(self, features, labels) -> None:
        ...

    @abc.abstractmethod
    def perform_ner(self, text: str) -> list[tuple[Token, Tag]]:
        ...

    @abc.abstractmethod
    def predict_features(self, features) -> list[list[Tag]]:
        ...

    def evaluate(self, features, labels) -> MetricsReport:
        return token_metrics(labels, self.predict_features(features))

    def recognize(self, text: str) -> list[AnnotatedSpan]:
        pairs = self.perform_ner(text)
        return tags_to_spans([t for t, _ in pairs], [g for _, g in pairs], text)


def document_sequences(doc: Document) -> list[list[tuple[Token, Tag]]]:
    """Sentence-grouped ``(token, gold tag)`` pairs for a labeled document."""
    tags = spans_to_tags(doc.tokens, doc.gold or ())
    by_sent: dict[int, list] = {}
    for tok, tag in zip(doc.tokens, tags):
        by_sent.setdefault(tok.sentence_index, []).append((tok, tag))
    return [by_sent[k] for k in sorted(by_sent)]


class CrfRecognizer(Recognizer):
    name = "crf"
    trainable = True

    def __init__(self, config: Optional[CrfConfig] = None, gazetteers: Sequence[Gazetteer] = (),
                 model: Optional[CrfModel] = None):
        self.config = config or CrfConfig()
        self.gazetteers = list(gazetteers)
        self.model = model
        self.nll_history: list[float] = []

    def transform_sequences(self, sequences):
        features, labels = [], []
        for sent in sequences:
            if not sent:
                continue
            toks = [t.text if isinstance(t, Token) else t for t, _ in sent]
            features.append(extract_sequence(toks, self.config.use_gazetteers, self.gazetteers))
            labels.append([tag if isinstance(tag, Tag) else Tag.parse(tag) for _, tag in sent])
        return features, labels

    def learn(self, features, labels) -> None:
        result = train_from_features(features, labels, self.config, [g.name for g in self.gazetteers])
        self.model = result.model
        self.nll_history = result.nll_history

    def _decode(self, feature_seq) -> list[Tag]:
        x = [vectorize(v, self.model.feature_index) for v in feature_seq]
        return repair_bio([self.model.labels[i] for i in viterbi(self.model, x)])

    def predict_features(self, features) -> list[list[Tag]]:
        return [self._decode(fs) if len(fs) else [] for fs in features]

    def perform_ner(self, text: str) -> list[tuple[Token, Tag]]:
        return crf_perform_ner(self.model, text, self.gazetteers)


def crf_perform_ner(model: CrfModel, text: str, gazetteers: Sequence[Gazetteer] = ()) -> list[tuple[Token, Tag]]:
    if model is None:
        raise RuntimeError("CRF recognizer has no trained model")
    doc = make_document("", text)
    use_gaz = bool(model.metadata.get("config", {}).get("use_gazetteers"))
    wanted = model.metadata.get("gazetteers")
    gaz = [g for g in gazetteers if wanted is None or g.name in wanted]
    out = []
    for sent in doc.sentences():
        feats = extract_sequence(sent, use_gaz, gaz)
        x = [vectorize(v, model.feature_index) for v in feats]
        tags = repair_bio([model.labels[i] for i in viterbi(model, x)])
        out.extend(zip(sent, tags))
    return out


@dataclass(frozen=True)
class RulePattern:
    entity_class: EntityClass
    pattern: str
    priority: int = 0

    def __post_init__(self):
        compiled = re.compile(self.pattern)
        if compiled.match(""):
            raise ValueError(f"pattern {self.pattern!r} matches the empty string")
        object.__setattr__(self, "_compiled", compiled)

    @property
    def regex(self) -> re.Pattern:
        return self._compiled


DEFAULT_PATTERNS = (
    RulePattern(EntityClass.CONTACT, r"(?<!\d)(?:\(\d{3}\)\s?|\d{3}[-. ])\d{3}[-.]\d{4}(?!\d)", 30),
    RulePattern(EntityClass.CONTACT, r"\b[\w.+-]+@[\w-]+(?:\.[\w-]+)+\b", 30),
    RulePattern(EntityClass.DATE, r"\b\d{1,2}/\d{1,2}/(?:\d{4}|\d{2})\b", 20),
    RulePattern(EntityClass.DATE, r"\b\d{4}-\d{2}-\d{2}\b", 20),
    RulePattern(EntityClass.DATE, r"\b\d{1,2}-\d{1,2}-\d{4}\b", 20),
    RulePattern(EntityClass.DATE,
                r"\b(?:Jan|Feb|Mar|Apr|May|Jun|Jul|Aug|Sep|Oct|Nov|Dec)[a-z]*\.? \d{1,2}, \d{4}\b", 20),
    RulePattern(EntityClass.ID, r"\b(?=(?:[A-Za-z]*\d){2})[A-Za-z0-9]{6,}\b", 10),
)


def select_matches(candidates: Iterable[tuple[int, int, int, EntityClass]]) -> list[AnnotatedSpan]:
    """Greedy overlap resolution over ``(start, end, priority, class)`` tuples.

    Higher priority wins, then the longer match, then the earlier start.
    """
    chosen: list[AnnotatedSpan] = []
    for start, end, _, cls in sorted(candidates, key=lambda c: (-c[2], -(c[1] - c[0]), c[0])):
        span = AnnotatedSpan(start, end, cls)
        if not any(span.overlaps(s) for s in chosen):
            chosen.append(span)
    return sorted(chosen)


def rule_spans(patterns: Sequence[RulePattern], text: str) -> list[AnnotatedSpan]:
    cands = []
    for p in patterns:
        for m in p.regex.finditer(text):
            if m.end() > m.start():
                cands.append((m.start(), m.end(), p.priority, p.entity_class))
    return [AnnotatedSpan(s.start, s.end, s.entity_class, text[s.start:s.end]) for s in select_matches(cands)]


def rule_perform_ner(patterns: Sequence[RulePattern], text: str) -> list[tuple[Token, Tag]]:
    doc = make_document("", text)
    tags = spans_to_tags(doc.tokens, rule_spans(patterns, text))
    return list(zip(doc.tokens, tags))


def read_patterns(source: str) -> list[RulePattern]:
    """Parse ``CLASS<TAB>priority<TAB>regex`` lines."""
    out = []
    for lineno, line in enumerate(source.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t", 2)
        if len(parts) != 3:
            raise ValueError(f"pattern line {lineno}: expected CLASS<TAB>priority<TAB>regex")
        out.append(RulePattern(EntityClass.parse(parts[0]), parts[2], int(parts[1])))
    return out


class RuleRecognizer(Recognizer):
    name = "rules"

    def __init__(self, patterns: Sequence[RulePattern] = DEFAULT_PATTERNS):
        self.patterns = list(patterns)

    def transform_sequences(self, sequences):
        features, labels = [], []
        for sent in sequences:
            features.append([t.text if isinstance(t, Token) else t for t, _ in sent])
            labels.append([tag if isinstance(tag, Tag) else Tag.parse(tag) for _, tag in sent])
        return features, labels

    def learn(self, features, labels) -> None:
        pass

    def predict_features(self, features) -> list[list[Tag]]:
        out = []
        for words in features:
            # match over the space-joined sentence, then project onto its tokens
            text, toks, pos = [], [], 0
            for w in words:
                toks.append(Token(pos, pos + len(w), w))
                text.append(w)
                pos += len(w) + 1
            out.append(spans_to_tags(toks, rule_spans(self.patterns, " ".join(text))))
        return out

    def perform_ner(self, text: str) -> list[tuple[Token, Tag]]:
        return rule_perform_ner(self.patterns, text)


def evaluate_recognizer(recognizer: Recognizer, documents: Sequence[Document]) -> tuple[MetricsReport, MetricsReport]:
    """Token-level and strict span-level reports over labeled documents."""
    gold_tags, pred_tags, gold_spans, pred_spans = [], [], [], []
    for doc in documents:
        pairs = recognizer.perform_ner(doc.text)
        toks = [t for t, _ in pairs]
        tags = [g for _, g in pairs]
        gold_tags.append(spans_to_tags(toks, doc.gold or ()))
        pred_tags.append(tags)
        gold_spans.append(list(doc.gold or ()))
        pred_spans.append(tags_to_spans(toks, tags, doc.text))
    ids = [d.id for d in documents]
    return token_metrics(gold_tags, pred_tags, ids), span_metrics(gold_spans, pred_spans)


RECOGNIZERS = {"crf": CrfRecognizer, "rules": RuleRecognizer}
