"""Domain types shared across the package and the BIO tag codec."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence


class SpanConflictError(ValueError):
    """Two spans in one annotation set overlap."""

    def __init__(self, first: "AnnotatedSpan", second: "AnnotatedSpan"):
        self.first = first
        self.second = second
        super().__init__(f"overlapping spans: {first.describe()} and {second.describe()}")


class EntityClass(enum.Enum):
    NAME = "NAME"
    PROFESSION = "PROFESSION"
    LOCATION = "LOCATION"
    AGE = "AGE"
    DATE = "DATE"
    CONTACT = "CONTACT"
    ID = "ID"
    PHI = "PHI"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "EntityClass":
        try:
            return cls(text.strip().upper())
        except ValueError:
            raise ValueError(f"unknown entity class {text!r}") from None


@dataclass(frozen=True, order=True)
class Token:
    start: int
    end: int
    text: str = field(compare=False)
    sentence_index: int = field(default=0, compare=False)

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"empty or inverted token range [{self.start},{self.end})")


@dataclass(frozen=True, order=True)
class AnnotatedSpan:
    start: int
    end: int
    entity_class: EntityClass = field(compare=True)
    text: str = field(default="", compare=False)

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"empty or inverted span range [{self.start},{self.end})")

    def overlaps(self, other: "AnnotatedSpan") -> bool:
        return self.start < other.end and other.start < self.end

    def describe(self) -> str:
        return f"{self.entity_class.value}[{self.start},{self.end}]"


@dataclass(frozen=True)
class Tag:
    position: str  # "B", "I" or "O"
    entity_class: Optional[EntityClass] = None

    def __post_init__(self):
        if self.position not in ("B", "I", "O"):
            raise ValueError(f"bad tag position {self.position!r}")
        if (self.position == "O") != (self.entity_class is None):
            raise ValueError("O tags carry no class; B/I tags need one")

    def __str__(self) -> str:
        if self.position == "O":
            return "O"
        return f"{self.position}-{self.entity_class.value}"

    @classmethod
    def parse(cls, text: str) -> "Tag":
        text = text.strip()
        if text == "O":
            return OUTSIDE
        pos, sep, name = text.partition("-")
        if not sep or pos not in ("B", "I"):
            raise ValueError(f"malformed tag {text!r}")
        return cls(pos, EntityClass.parse(name))


OUTSIDE = Tag("O")


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    tokens: tuple = ()
    gold: Optional[tuple] = None

    def __post_init__(self):
        n = len(self.text)
        for tok in self.tokens:
            if tok.end > n:
                raise ValueError(f"{self.id}: token {tok} out of bounds")
        if self.gold is not None:
            for span in self.gold:
                if span.end > n:
                    raise ValueError(f"{self.id}: span {span.describe()} out of bounds")
            check_non_overlapping(self.gold)

    def sentences(self) -> list[list[Token]]:
        out: dict[int, list[Token]] = {}
        for tok in self.tokens:
            out.setdefault(tok.sentence_index, []).append(tok)
        return [out[k] for k in sorted(out)]


def check_non_overlapping(spans: Sequence[AnnotatedSpan]) -> list[AnnotatedSpan]:
    """Return spans sorted by start, raising SpanConflictError on any overlap."""
    ordered = sorted(spans, key=lambda s: (s.start, s.end))
    for a, b in zip(ordered, ordered[1:]):
        if a.overlaps(b):
            raise SpanConflictError(a, b)
    return ordered


def spans_to_tags(tokens: Sequence[Token], spans: Sequence[AnnotatedSpan]) -> list[Tag]:
    """Tag every token intersecting a span; the first such token gets B."""
    ordered = check_non_overlapping(spans)
    tags = [OUTSIDE] * len(tokens)
    j = 0
    for span in ordered:
        first = True
        # tokens are sorted and non-overlapping, so the scan pointer only moves forward
        while j < len(tokens) and tokens[j].end <= span.start:
            j += 1
        k = j
        while k < len(tokens) and tokens[k].start < span.end:
            if tags[k] is OUTSIDE or tags[k].position == "O":
                tags[k] = Tag("B" if first else "I", span.entity_class)
                first = False
            k += 1
    return tags


def repair_bio(tags: Sequence[Tag]) -> list[Tag]:
    """Promote any I-tag that does not continue a same-class entity to B."""
    out = []
    prev = OUTSIDE
    for tag in tags:
        if tag.position == "I" and (prev.position == "O" or prev.entity_class != tag.entity_class):
            tag = Tag("B", tag.entity_class)
        out.append(tag)
        prev = tag
    return out


def is_valid_bio(tags: Sequence[Tag]) -> bool:
    return list(tags) == repair_bio(tags)


def tags_to_spans(tokens: Sequence[Token], tags: Sequence[Tag], text: Optional[str] = None) -> list[AnnotatedSpan]:
    if len(tokens) != len(tags):
        raise ValueError(f"{len(tokens)} tokens but {len(tags)} tags")
    spans = []
    cur_cls = None
    cur_start = cur_end = 0

    def close():
        surface = text[cur_start:cur_end] if text is not None else ""
        spans.append(AnnotatedSpan(cur_start, cur_end, cur_cls, surface))

    for tok, tag in zip(tokens, repair_bio(tags)):
        if tag.position == "I":
            cur_end = tok.end
            continue
        if cur_cls is not None:
            close()
            cur_cls = None
        if tag.position == "B":
            cur_cls, cur_start, cur_end = tag.entity_class, tok.start, tok.end
    if cur_cls is not None:
        close()
    return spans
