import pytest
from hypothesis import given
from hypothesis import strategies as st

from clinmask.core import (
    OUTSIDE, AnnotatedSpan, Document, EntityClass, SpanConflictError, Tag, Token,
    is_valid_bio, repair_bio, spans_to_tags, tags_to_spans,
)
from clinmask.tokenize import tokenize

NAME, DATE, ID = EntityClass.NAME, EntityClass.DATE, EntityClass.ID


def toks(*ranges):
    return [Token(s, e, "x" * (e - s)) for s, e in ranges]


def tags(*names):
    return [Tag.parse(n) for n in names]


def test_entity_class_is_closed_and_round_trips():
    assert [c.value for c in EntityClass] == ["NAME", "PROFESSION", "LOCATION", "AGE", "DATE", "CONTACT", "ID", "PHI"]
    for c in EntityClass:
        assert EntityClass.parse(str(c)) is c
    with pytest.raises(ValueError):
        EntityClass.parse("PERSON")


def test_tag_parse_render():
    for text in ["O", "B-NAME", "I-PHI"]:
        assert str(Tag.parse(text)) == text
    for bad in ["X-NAME", "B", "B-FOO", "BNAME"]:
        with pytest.raises(ValueError):
            Tag.parse(bad)


def test_token_and_span_reject_empty_ranges():
    with pytest.raises(ValueError):
        Token(3, 3, "")
    with pytest.raises(ValueError):
        AnnotatedSpan(5, 2, NAME)


def test_spans_to_tags_basic():
    text = "John Smith visited"
    t = tokenize(text)
    assert [str(x) for x in spans_to_tags(t, [AnnotatedSpan(0, 10, NAME)])] == ["B-NAME", "I-NAME", "O"]
    assert spans_to_tags(t, []) == [OUTSIDE] * 3


def test_spans_to_tags_partial_overlap_uses_character_intersection():
    # a single token "2019-03-05" as a BIO reader would produce it
    t = [Token(0, 10, "2019-03-05")]
    span = AnnotatedSpan(0, 4, DATE)
    got = spans_to_tags(t, [span])
    # oracle: a token is tagged iff its character range intersects the span
    intersects = [max(tok.start, span.start) < min(tok.end, span.end) for tok in t]
    assert intersects == [True]
    assert got == [Tag("B", DATE)]


def test_spans_to_tags_rejects_overlap_naming_both():
    a, b = AnnotatedSpan(0, 5, NAME), AnnotatedSpan(3, 8, DATE)
    with pytest.raises(SpanConflictError) as exc:
        spans_to_tags(toks((0, 2), (3, 8)), [a, b])
    assert "NAME[0,5]" in str(exc.value) and "DATE[3,8]" in str(exc.value)


def test_tags_to_spans_basic():
    t = toks((0, 4), (5, 10), (11, 18))
    assert tags_to_spans(t, tags("B-NAME", "I-NAME", "O")) == [AnnotatedSpan(0, 10, NAME)]
    assert tags_to_spans(t, tags("O", "O", "O")) == []


def test_tags_to_spans_repairs_i_after_o():
    t = toks((0, 4), (5, 10), (11, 18))
    assert tags_to_spans(t, tags("O", "I-DATE", "O")) == [AnnotatedSpan(5, 10, DATE)]


def test_tags_to_spans_class_switch_inside_run():
    t = toks((0, 4), (5, 10))
    assert tags_to_spans(t, tags("B-NAME", "I-DATE")) == [AnnotatedSpan(0, 4, NAME), AnnotatedSpan(5, 10, DATE)]


def test_tags_to_spans_length_mismatch():
    with pytest.raises(ValueError):
        tags_to_spans(toks((0, 1)), [])


def test_document_rejects_out_of_bounds_and_overlaps():
    with pytest.raises(ValueError):
        Document("d", "abc", (Token(0, 5, "abcde"),))
    with pytest.raises(SpanConflictError):
        Document("d", "abcdef", (), (AnnotatedSpan(0, 3, NAME), AnnotatedSpan(2, 4, ID)))


@st.composite
def aligned_fixture(draw):
    """Random tokens over a synthetic text plus token-aligned non-overlapping spans."""
    n = draw(st.integers(0, 25))
    lengths = draw(st.lists(st.integers(1, 6), min_size=n, max_size=n))
    tokens, pos = [], 0
    for k, ln in enumerate(lengths):
        tokens.append(Token(pos, pos + ln, "a" * ln))
        pos += ln + 1
    spans, i = [], 0
    while i < n:
        if draw(st.booleans()):
            j = draw(st.integers(i, min(n - 1, i + 3)))
            cls = draw(st.sampled_from(list(EntityClass)))
            spans.append(AnnotatedSpan(tokens[i].start, tokens[j].end, cls))
            i = j + 1
        else:
            i += 1
    return tokens, spans


@given(aligned_fixture())
def test_round_trip_spans_tags(fixture):
    tokens, spans = fixture
    tg = spans_to_tags(tokens, spans)
    assert is_valid_bio(tg)
    assert tags_to_spans(tokens, tg) == spans


@given(st.lists(st.sampled_from(["O", "B-NAME", "I-NAME", "B-DATE", "I-DATE"]), max_size=20))
def test_repair_bio_is_idempotent_and_valid(names):
    fixed = repair_bio(tags(*names))
    assert is_valid_bio(fixed)
    assert repair_bio(fixed) == fixed
