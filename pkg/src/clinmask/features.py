"""Sparse lexical, shape and dictionary features over a +/-4 token window."""

from __future__ import annotations

from typing import Iterable, Sequence

from .core import Token
from .gazetteer import Gazetteer

WINDOW = 4


def word_shape(token_text: str) -> str:
    out = []
    for ch in token_text:
        if ch.isupper():
            out.append("W")
        elif ch.islower():
            out.append("w")
        elif ch.isdigit():
            out.append("d")
        else:
            out.append(ch)
    return "".join(out)


def _fmt(offset: int) -> str:
    return f"{offset:+d}" if offset else "0"


def lexical_features(token_text: str, offset: int) -> set[str]:
    k = _fmt(offset)
    feats = {f"w[{k}]={token_text.casefold()}", f"shape[{k}]={word_shape(token_text)}"}
    if token_text.isupper():
        feats.add(f"upper[{k}]")
    if token_text.islower():
        feats.add(f"lower[{k}]")
    if token_text[:1].isupper():
        feats.add(f"initcap[{k}]")
    if token_text.isalnum():
        feats.add(f"alnum[{k}]")
    if token_text.isalpha():
        feats.add(f"alpha[{k}]")
    return feats


def gazetteer_features(token_text: str, offset: int, gazetteers: Iterable[Gazetteer]) -> set[str]:
    key = token_text.casefold()
    k = _fmt(offset)
    return {f"dict:{g.name}[{k}]" for g in gazetteers if key in g.entries}


def extract_sequence(tokens: Sequence[Token], use_gazetteers: bool = False,
                     gazetteers: Sequence[Gazetteer] = ()) -> list[frozenset]:
    """Feature sets for each token of one sentence."""
    texts = [t.text if isinstance(t, Token) else t for t in tokens]
    n = len(texts)
    # per-token features at every offset are reused by up to 9 positions
    cache: dict = {}

    def feats_at(j: int, offset: int) -> set[str]:
        key = (j, offset)
        if key not in cache:
            f = lexical_features(texts[j], offset)
            if use_gazetteers:
                f |= gazetteer_features(texts[j], offset, gazetteers)
            cache[key] = f
        return cache[key]

    out = []
    for i in range(n):
        active: set[str] = set()
        for offset in range(-WINDOW, WINDOW + 1):
            j = i + offset
            if j < 0:
                active.add(f"BOS[{_fmt(offset)}]")
            elif j >= n:
                active.add(f"EOS[{_fmt(offset)}]")
            else:
                active |= feats_at(j, offset)
        out.append(frozenset(active))
    return out


class FeatureIndex:
    """Maps feature strings to contiguous integer ids; frozen after indexing."""

    def __init__(self, names: Iterable[str] = ()):
        self._ids: dict[str, int] = {}
        self.frozen = False
        for name in names:
            self.add(name)

    def add(self, name: str) -> int:
        if self.frozen:
            raise RuntimeError("feature index is frozen")
        if name not in self._ids:
            self._ids[name] = len(self._ids)
        return self._ids[name]

    def freeze(self) -> "FeatureIndex":
        self.frozen = True
        return self

    def get(self, name: str):
        return self._ids.get(name)

    @property
    def names(self) -> list[str]:
        return list(self._ids)

    def __len__(self) -> int:
        return len(self._ids)

    def __eq__(self, other) -> bool:
        return isinstance(other, FeatureIndex) and self.names == other.names


def index_features(corpus: Iterable[Iterable[frozenset]]) -> FeatureIndex:
    """Index every feature in a corpus of feature sequences.

    Ids follow first appearance; within one vector, features are visited in
    sorted order so ids do not depend on set iteration order.
    """
    idx = FeatureIndex()
    for seq in corpus:
        for vec in seq:
            for name in sorted(vec):
                idx.add(name)
    return idx.freeze()


def vectorize(v: Iterable[str], idx: FeatureIndex) -> list[int]:
    if not idx.frozen:
        raise RuntimeError("vectorize requires a frozen feature index")
    ids = (idx._ids.get(name) for name in v)
    return sorted(i for i in ids if i is not None)
