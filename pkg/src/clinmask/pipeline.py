"""Library entry point: assigned recognizers per class, merged predictions, masking."""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .config import PipelineConfig, RecognizerSpec
from .core import AnnotatedSpan, Document, EntityClass
from .gazetteer import bundled_gazetteers, read_gazetteer
from .io import load_model
from .masking import MaskEvent, apply_policy
from .ner import DEFAULT_PATTERNS, CrfRecognizer, Recognizer, RuleRecognizer, read_patterns, select_matches
from .tokenize import make_document

# cross-class conflicts: earlier wins, then the longer span
CLASS_PRIORITY = (EntityClass.ID, EntityClass.CONTACT, EntityClass.DATE, EntityClass.NAME,
                  EntityClass.LOCATION, EntityClass.AGE, EntityClass.PROFESSION, EntityClass.PHI)


def load_gazetteers(spec: str) -> list:
    spec = spec.strip()
    if spec in ("", "none"):
        return []
    if spec == "bundled":
        return bundled_gazetteers()
    out = []
    for item in spec.split(","):
        name, _, path = item.strip().partition("=")
        out.append(read_gazetteer(name.strip(), path.strip()))
    return out


def build_recognizer(spec: RecognizerSpec, load: bool = True) -> Recognizer:
    if spec.type == "rules":
        if spec.patterns is None:
            return RuleRecognizer(DEFAULT_PATTERNS)
        return RuleRecognizer(read_patterns(Path(spec.patterns).read_text(encoding="utf-8")))
    gaz = load_gazetteers(spec.gazetteers) if spec.crf.use_gazetteers else []
    model = load_model(spec.model) if load else None
    return CrfRecognizer(spec.crf, gaz, model)


def merge_predictions(by_class: dict) -> list[AnnotatedSpan]:
    """Resolve overlaps between classes by fixed class priority, then span length."""
    rank = {c: i for i, c in enumerate(CLASS_PRIORITY)}
    cands = [(s.start, s.end, -rank[s.entity_class], s.entity_class)
             for spans in by_class.values() for s in spans]
    return select_matches(cands)


def split_documents(docs: Sequence[Document], fraction: float, seed: int) -> tuple[list, list]:
    """Seeded shuffle, then floor(n * fraction) documents for training and the rest for testing."""
    order = list(range(len(docs)))
    random.Random(seed).shuffle(order)
    n_train = int(len(docs) * fraction)
    return [docs[i] for i in order[:n_train]], [docs[i] for i in order[n_train:]]


@dataclass
class Pipeline:
    recognizers: dict  # name -> Recognizer
    assignment: dict  # EntityClass -> name
    config: PipelineConfig

    @classmethod
    def from_config(cls, config: PipelineConfig) -> "Pipeline":
        used = sorted(set(config.assignment.values()))
        recs = {name: build_recognizer(config.recognizers[name]) for name in used}
        return cls(recs, dict(config.assignment), config)

    def recognize(self, text: str) -> list[AnnotatedSpan]:
        by_class: dict = {}
        for name in sorted(self.recognizers):
            mine = {c for c, n in self.assignment.items() if n == name}
            for span in self.recognizers[name].recognize(text):
                if span.entity_class in mine:
                    by_class.setdefault(span.entity_class, []).append(span)
        merged = merge_predictions(by_class)
        return [AnnotatedSpan(s.start, s.end, s.entity_class, text[s.start:s.end]) for s in merged]

    def perform_ner(self, text: str):
        """Token/tag pairs for the merged predictions (lets the pipeline be evaluated like a recognizer)."""
        from .core import spans_to_tags

        doc = make_document("", text)
        return list(zip(doc.tokens, spans_to_tags(doc.tokens, self.recognize(text))))

    def deidentify(self, doc_id: str, text: str) -> tuple[str, list[MaskEvent]]:
        doc = Document(doc_id, text)
        seed = self.config.seed if self.config.seed is not None else 0
        return apply_policy(doc, self.recognize(text), self.config.policy, seed)
