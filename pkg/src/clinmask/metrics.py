"""Token-level and strict span-level precision/recall/F1 with table rendering."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import AnnotatedSpan, EntityClass, Tag


@dataclass(frozen=True)
class Score:
    precision: float
    recall: float
    f1: float
    support: int


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


@dataclass
class MetricsReport:
    level: str  # "token" or "span_strict"
    tp: Counter = field(default_factory=Counter)
    fp: Counter = field(default_factory=Counter)
    fn: Counter = field(default_factory=Counter)

    def score(self, cls: EntityClass) -> Score:
        tp, fp, fn = self.tp[cls], self.fp[cls], self.fn[cls]
        return Score(*prf(tp, fp, fn), tp + fn)

    @property
    def per_class(self) -> dict[EntityClass, Score]:
        return {c: self.score(c) for c in EntityClass}

    @property
    def overall(self) -> Score:
        tp, fp, fn = (sum(c.values()) for c in (self.tp, self.fp, self.fn))
        return Score(*prf(tp, fp, fn), tp + fn)

    def gold_classes(self) -> list[EntityClass]:
        return [c for c in EntityClass if self.tp[c] + self.fn[c] > 0]

    def merge(self, other: "MetricsReport") -> "MetricsReport":
        if other.level != self.level:
            raise ValueError("cannot merge reports of different levels")
        return MetricsReport(self.level, self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


def _tag_class(tag: Tag):
    return tag.entity_class  # None for O


def token_metrics(gold: Iterable[Sequence[Tag]], predicted: Iterable[Sequence[Tag]],
                  doc_ids: Sequence[str] = ()) -> MetricsReport:
    """Per-token class agreement, ignoring the B/I distinction."""
    report = MetricsReport("token")
    for k, (g_seq, p_seq) in enumerate(zip(gold, predicted)):
        if len(g_seq) != len(p_seq):
            name = doc_ids[k] if k < len(doc_ids) else f"#{k}"
            raise ValueError(f"document {name}: {len(g_seq)} gold tags vs {len(p_seq)} predicted")
        for g, p in zip(g_seq, p_seq):
            gc, pc = _tag_class(g), _tag_class(p)
            if gc is not None and gc == pc:
                report.tp[gc] += 1
                continue
            if gc is not None:
                report.fn[gc] += 1
            if pc is not None:
                report.fp[pc] += 1
    return report


def span_metrics(gold: Iterable[Sequence[AnnotatedSpan]],
                 predicted: Iterable[Sequence[AnnotatedSpan]]) -> MetricsReport:
    report = MetricsReport("span_strict")
    for g_spans, p_spans in zip(gold, predicted):
        g_keys = Counter((s.start, s.end, s.entity_class) for s in g_spans)
        p_keys = Counter((s.start, s.end, s.entity_class) for s in p_spans)
        for key, n in g_keys.items():
            hit = min(n, p_keys.get(key, 0))
            report.tp[key[2]] += hit
            report.fn[key[2]] += n - hit
        for key, n in p_keys.items():
            report.fp[key[2]] += n - min(n, g_keys.get(key, 0))
    return report


HEADER = f"{'':<12}{'Precision':>10}{'Recall':>10}{'F1-Score':>10}{'Support':>10}"


def _row(name: str, s: Score) -> str:
    return f"{name:<12}{s.precision:>10.2f}{s.recall:>10.2f}{s.f1:>10.2f}{s.support:>10d}"


def render_report(r: MetricsReport, title: str = "") -> str:
    lines = []
    if title:
        lines.append(title)
    lines.append(HEADER)
    lines.extend(_row(c.value, r.score(c)) for c in r.gold_classes())
    lines.append("-" * len(HEADER))
    lines.append(_row("Overall", r.overall))
    return "\n".join(lines) + "\n"


def report_lines(r: MetricsReport) -> str:
    """Machine-readable ``level, class, p, r, f1, support`` rows."""
    out = []
    for c in r.gold_classes():
        s = r.score(c)
        out.append(f"{r.level}\t{c.value}\t{s.precision!r}\t{s.recall!r}\t{s.f1!r}\t{s.support}")
    s = r.overall
    out.append(f"{r.level}\tOverall\t{s.precision!r}\t{s.recall!r}\t{s.f1!r}\t{s.support}")
    return "\n".join(out) + "\n"


def parse_report_lines(text: str) -> dict:
    rows = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        level, cls, p, r, f, n = line.split("\t")
        rows[(level, cls)] = Score(float(p), float(r), float(f), int(n))
    return rows
