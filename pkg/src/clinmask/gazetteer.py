"""Single-token dictionaries used as membership features."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Union

from .tokenize import tokenize

MIN_ENTRY_LENGTH = 2
BUNDLED = ("country", "city", "first_name", "last_name")


class EmptyGazetteerWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Gazetteer:
    name: str
    entries: frozenset

    @property
    def entry_count(self) -> int:
        return len(self.entries)

    def __contains__(self, token_text: str) -> bool:
        return token_text.casefold() in self.entries


def contains(g: Gazetteer, token_text: str) -> bool:
    return token_text.casefold() in g.entries


def load_gazetteer(name: str, source: Union[str, Iterable[str]]) -> Gazetteer:
    """Build a gazetteer from raw names, one per line.

    Multi-word names are split into their alphabetic tokens; tokens shorter
    than two characters are dropped.
    """
    lines = source.splitlines() if isinstance(source, str) else source
    entries = set()
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        for tok in tokenize(line):
            if tok.text.isalpha() and len(tok.text) >= MIN_ENTRY_LENGTH:
                entries.add(tok.text.casefold())
    if not entries:
        warnings.warn(f"gazetteer {name!r} is empty; wrong file?", EmptyGazetteerWarning, stacklevel=2)
    return Gazetteer(name, frozenset(entries))


def read_gazetteer(name: str, path: Union[str, Path]) -> Gazetteer:
    # newline=None accepts LF and CRLF
    with open(path, encoding="utf-8", newline=None) as f:
        return load_gazetteer(name, f.read())


def bundled_gazetteer(name: str) -> Gazetteer:
    text = resources.files("clinmask.data").joinpath(f"gazetteers/{name}.txt").read_text(encoding="utf-8")
    return load_gazetteer(name, text)


def bundled_gazetteers() -> list[Gazetteer]:
    return [bundled_gazetteer(n) for n in BUNDLED]
