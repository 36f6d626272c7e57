"""Offset-preserving tokenizer and a rule-based sentence splitter."""

from __future__ import annotations

from typing import Sequence

from .core import Document, Token

SENTENCE_TERMINATORS = frozenset(".!?")


def _char_class(ch: str) -> str:
    if ch.isalpha():
        return "L"
    if ch.isdecimal():
        return "D"
    if ch.isspace():
        return "S"
    return "P"


def tokenize(text: str) -> list[Token]:
    """Split text into letter runs, digit runs and single punctuation characters.

    >>> [t.text for t in tokenize("Dr. Smith")]
    ['Dr', '.', 'Smith']
    """
    tokens = []
    i, n = 0, len(text)
    while i < n:
        cls = _char_class(text[i])
        if cls == "S":
            i += 1
            continue
        j = i + 1
        if cls in ("L", "D"):
            while j < n and _char_class(text[j]) == cls:
                j += 1
        tokens.append(Token(i, j, text[i:j]))
        i = j
    return tokens


def split_sentences(text: str, tokens: Sequence[Token]) -> list[int]:
    """Return a sentence index for each token.

    A sentence ends after a terminator token or at a newline, provided the
    next token starts with an uppercase letter after some whitespace (or
    there is no next token). There is no abbreviation list, so "Dr." splits.
    """
    indices = []
    sent = 0
    for k, tok in enumerate(tokens):
        indices.append(sent)
        if k + 1 == len(tokens):
            break
        nxt = tokens[k + 1]
        gap = text[tok.end:nxt.start]
        if not gap or not nxt.text[0].isupper():
            continue
        if tok.text in SENTENCE_TERMINATORS or "\n" in gap:
            sent += 1
    return indices


def make_document(doc_id: str, text: str, gold=None) -> Document:
    """Tokenize, sentence-split and wrap text as a Document."""
    toks = tokenize(text)
    sent = split_sentences(text, toks)
    toks = tuple(Token(t.start, t.end, t.text, s) for t, s in zip(toks, sent))
    return Document(doc_id, text, toks, None if gold is None else tuple(gold))
