"""Redact / mask / keep policies and the bundled format-preserving maskers.

Every pseudo-random choice is drawn from a fresh generator seeded by a hash of
``(seed, doc_key, purpose, casefolded span)``, so the same input always gets
the same replacement no matter how documents are ordered or parallelized.
"""

from __future__ import annotations

import abc
import calendar
import datetime as dt
import hashlib
import random
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Mapping, Optional, Sequence

from .core import AnnotatedSpan, Document, EntityClass, check_non_overlapping
from .features import word_shape

DEFAULT_REDACT = "XXX-{cls}"


class MaskingConfigError(ValueError):
    pass


class MaskFallback(Exception):
    """Raised by a masker that cannot safely transform a span; the span is redacted."""

    def __init__(self, flag: str):
        self.flag = flag
        super().__init__(flag)


def keyed_rng(seed: int, *key) -> random.Random:
    h = hashlib.blake2b(repr((int(seed),) + key).encode("utf-8"), digest_size=16)
    return random.Random(int.from_bytes(h.digest(), "big"))


@dataclass(frozen=True)
class MaskContext:
    doc_key: str
    text: str = ""
    start: int = 0
    end: int = 0


class Masker(abc.ABC):
    """Plugin contract: configure once, then map span text to a replacement."""

    def __init__(self, config: Optional[Mapping[str, str]] = None, seed: int = 0):
        self.initialize(dict(config or {}), seed)

    @abc.abstractmethod
    def initialize(self, config: dict, seed: int) -> None:
        ...

    @abc.abstractmethod
    def apply(self, span_text: str, entity_class: EntityClass, context: MaskContext) -> str:
        ...


def redact(span_text: str, entity_class: EntityClass, fixed: str = DEFAULT_REDACT) -> str:
    return fixed.format(cls=entity_class.value)


def keep(span_text: str) -> str:
    return span_text


# --- dates ---------------------------------------------------------------

MONTH_ABBR = [calendar.month_abbr[i] for i in range(1, 13)]
MONTH_FULL = [calendar.month_name[i] for i in range(1, 13)]
_ABBR = "|".join(MONTH_ABBR)
_FULL = "|".join(MONTH_FULL)

# (name, regex, group order) -- tried in order, first match wins
DATE_FORMATS = [
    ("MM/DD/YYYY", re.compile(r"(\d{2})/(\d{2})/(\d{4})"), "mdy"),
    ("M/D/YYYY", re.compile(r"(\d{1,2})/(\d{1,2})/(\d{4})"), "mdy"),
    ("YYYY-MM-DD", re.compile(r"(\d{4})-(\d{2})-(\d{2})"), "ymd"),
    ("MM-DD-YYYY", re.compile(r"(\d{2})-(\d{2})-(\d{4})"), "mdy"),
    ("Mon D, YYYY", re.compile(rf"({_ABBR}) (\d{{1,2}}), (\d{{4}})", re.I), "Mdy"),
    ("Month D, YYYY", re.compile(rf"({_FULL}) (\d{{1,2}}), (\d{{4}})", re.I), "Mdy"),
    ("D Month YYYY", re.compile(rf"(\d{{1,2}}) ({_FULL}) (\d{{4}})", re.I), "dMy"),
    ("MM/DD/YY", re.compile(r"(\d{2})/(\d{2})/(\d{2})"), "mdy"),
]
YEAR_PIVOT = 30


def _match_case(word: str, like: str) -> str:
    if like.isupper():
        return word.upper()
    if like.islower():
        return word.lower()
    return word


def parse_date(text: str):
    """Return ``(date, format_name, pieces)`` or None when no supported format matches."""
    s = text.strip()
    for name, rx, order in DATE_FORMATS:
        m = rx.fullmatch(s)
        if not m:
            continue
        pieces = dict(zip(order, m.groups()))
        if "M" in pieces:
            names = MONTH_ABBR if name.startswith("Mon ") else MONTH_FULL
            month = [n.lower() for n in names].index(pieces["M"].lower()) + 1
        else:
            month = int(pieces["m"])
        year = int(pieces["y"])
        if name == "MM/DD/YY":
            year += 2000 if year < YEAR_PIVOT else 1900
        try:
            return dt.date(year, month, int(pieces["d"])), name, pieces
        except ValueError:
            continue
    return None


def _render_date(d: dt.date, name: str, pieces: dict) -> str:
    def num(value: int, like: str, width: int) -> str:
        # fixed-width fields, or variable fields that were zero-padded, keep their padding
        if len(like) == width and (like.startswith("0") or width == 4):
            return f"{value:0{width}d}"
        return str(value)

    if name in ("MM/DD/YYYY", "MM-DD-YYYY"):
        sep = "/" if "/" in name else "-"
        return f"{d.month:02d}{sep}{d.day:02d}{sep}{d.year:04d}"
    if name == "M/D/YYYY":
        return f"{num(d.month, pieces['m'], 2)}/{num(d.day, pieces['d'], 2)}/{d.year:04d}"
    if name == "YYYY-MM-DD":
        return f"{d.year:04d}-{d.month:02d}-{d.day:02d}"
    if name == "MM/DD/YY":
        return f"{d.month:02d}/{d.day:02d}/{d.year % 100:02d}"
    day = num(d.day, pieces["d"], 2)
    if name == "Mon D, YYYY":
        return f"{_match_case(MONTH_ABBR[d.month - 1], pieces['M'])} {day}, {d.year:04d}"
    if name == "Month D, YYYY":
        return f"{_match_case(MONTH_FULL[d.month - 1], pieces['M'])} {day}, {d.year:04d}"
    return f"{day} {_match_case(MONTH_FULL[d.month - 1], pieces['M'])} {d.year:04d}"


def shift_date(span_text: str, shift_days: int) -> str:
    """Shift a date by whole days, rendering it back in its original format.

    Raises MaskFallback("unparsed-date") for unsupported or invalid dates.
    """
    parsed = parse_date(span_text)
    if parsed is None:
        raise MaskFallback("unparsed-date")
    d, name, pieces = parsed
    try:
        shifted = d + dt.timedelta(days=shift_days)
    except OverflowError:
        raise MaskFallback("unparsed-date") from None
    lead = span_text[: len(span_text) - len(span_text.lstrip())]
    trail = span_text[len(span_text.rstrip()):]
    return lead + _render_date(shifted, name, pieces) + trail


def document_shift(seed: int, doc_key: str, low: int = 1, high: int = 364) -> int:
    """Per-document shift in +/-[low, high] days."""
    rng = keyed_rng(seed, doc_key, "date-shift")
    return rng.choice((-1, 1)) * rng.randint(low, high)


class ShiftDateMasker(Masker):
    def initialize(self, config, seed):
        self.seed = seed
        self.days = int(config["days"]) if "days" in config else None
        self.low = int(config.get("min_days", 1))
        self.high = int(config.get("max_days", 364))
        if not 0 <= self.low <= self.high:
            raise MaskingConfigError("shift_date needs 0 <= min_days <= max_days")

    def shift_for(self, doc_key: str) -> int:
        if self.days is not None:
            return self.days
        return document_shift(self.seed, doc_key, self.low, self.high)

    def apply(self, span_text, entity_class, context):
        return shift_date(span_text, self.shift_for(context.doc_key))


# --- surrogates ----------------------------------------------------------

def _data_lines(rel: str) -> list[str]:
    text = resources.files("clinmask.data").joinpath(rel).read_text(encoding="utf-8")
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


def _case_style(text: str) -> Callable[[str], str]:
    letters = [c for c in text if c.isalpha()]
    if letters and all(c.isupper() for c in letters) and len(letters) > 1:
        return str.upper
    if letters and all(c.islower() for c in letters):
        return str.lower
    return lambda s: " ".join(w[:1].upper() + w[1:] for w in s.split(" "))


def _draw(seed, doc_key, purpose, span_text, choose: Callable[[random.Random], str]) -> str:
    """Keyed draw that avoids returning (or embedding) the original text."""
    key = span_text.casefold()
    out = ""
    for attempt in range(64):
        out = choose(keyed_rng(seed, doc_key, purpose, key, attempt))
        if key.strip() and key.strip() not in out.casefold():
            return out
    return out


def surrogate_name(span_text: str, first_names: Sequence[str], last_names: Sequence[str],
                   seed: int, doc_key: str) -> str:
    if not first_names or not last_names:
        raise MaskingConfigError("surrogate name lists must be nonempty")
    n_words = len([w for w in re.split(r"[\s,]+", span_text) if any(c.isalpha() for c in w)])

    def choose(rng):
        if n_words >= 2:
            return f"{rng.choice(first_names)} {rng.choice(last_names)}"
        return rng.choice(first_names)

    return _case_style(span_text)(_draw(seed, doc_key, "name", span_text, choose))


def surrogate_profession(span_text: str, professions: Sequence[str], seed: int, doc_key: str) -> str:
    if not professions:
        raise MaskingConfigError("profession list must be nonempty")
    out = _draw(seed, doc_key, "profession", span_text, lambda rng: rng.choice(professions))
    return _case_style(span_text)(out) if span_text[:1].isupper() or span_text.isupper() else out


class SurrogateNameMasker(Masker):
    def initialize(self, config, seed):
        self.seed = seed
        self.first = _read_list(config.get("first_names"), "gazetteers/first_name.txt")
        self.last = _read_list(config.get("last_names"), "gazetteers/last_name.txt")
        if not self.first or not self.last:
            raise MaskingConfigError("surrogate name lists must be nonempty")

    def apply(self, span_text, entity_class, context):
        return surrogate_name(span_text, self.first, self.last, self.seed, context.doc_key)


class SurrogateProfessionMasker(Masker):
    def initialize(self, config, seed):
        self.seed = seed
        self.professions = _read_list(config.get("professions"), "surrogates/professions.txt")
        if not self.professions:
            raise MaskingConfigError("profession list must be nonempty")

    def apply(self, span_text, entity_class, context):
        return surrogate_profession(span_text, self.professions, self.seed, context.doc_key)


def _read_list(path: Optional[str], bundled: str) -> list[str]:
    if path is None:
        return _data_lines(bundled)
    with open(path, encoding="utf-8") as f:
        return [ln.strip() for ln in f if ln.strip() and not ln.startswith("#")]


# --- digits and postal codes --------------------------------------------

def select_digit_positions(span_text: str, positions_spec: str = "last:4") -> list[int]:
    """Character indices of the digits chosen by ``positions_spec``.

    Specs: ``all``, ``last:N``, ``first:N``, or comma-separated digit ordinals
    (0-based, counting digits only).
    """
    digits = [i for i, c in enumerate(span_text) if c.isdigit()]
    spec = positions_spec.strip()
    if spec == "all":
        return digits
    kind, _, n = spec.partition(":")
    if kind == "last" and n:
        return digits[-int(n):] if int(n) else []
    if kind == "first" and n:
        return digits[: int(n)]
    try:
        ordinals = [int(v) for v in spec.split(",")]
    except ValueError:
        raise MaskingConfigError(f"bad digit position spec {positions_spec!r}") from None
    return [digits[k] for k in ordinals if -len(digits) <= k < len(digits)]


def randomize_digits(span_text: str, positions_spec: str = "last:4", seed: int = 0, doc_key: str = "") -> str:
    if not any(c.isdigit() for c in span_text):
        raise MaskFallback("no-digits")
    positions = select_digit_positions(span_text, positions_spec)
    if not positions:
        raise MaskFallback("no-digits-selected")
    chars = list(span_text)
    for attempt in range(1000):
        rng = keyed_rng(seed, doc_key, "digits", span_text.casefold(), attempt)
        for i in positions:
            chars[i] = str(rng.randrange(10))
        if any(chars[i] != span_text[i] for i in positions):
            return "".join(chars)
    raise MaskFallback("digit-collision")  # pragma: no cover - needs 1000 collisions


class RandomizeDigitsMasker(Masker):
    def initialize(self, config, seed):
        self.seed = seed
        self.positions = config.get("positions", "last:4")
        select_digit_positions("0123456789", self.positions)  # validate early

    def apply(self, span_text, entity_class, context):
        return randomize_digits(span_text, self.positions, self.seed, context.doc_key)


def mask_zip(span_text: str) -> str:
    """Generalize the last three non-space characters: digits to 0, letters to A."""
    idx = [i for i, c in enumerate(span_text) if not c.isspace()]
    if len(idx) < 3:
        raise MaskFallback("short-zip")
    chars = list(span_text)
    for i in idx[-3:]:
        c = chars[i]
        if c.isdigit():
            chars[i] = "0"
        elif c.isalpha():
            chars[i] = "A"
    out = "".join(chars)
    if out == span_text:
        raise MaskFallback("zip-unchanged")
    return out


class MaskZipMasker(Masker):
    def initialize(self, config, seed):
        pass

    def apply(self, span_text, entity_class, context):
        return mask_zip(span_text)


# --- registry and policies ----------------------------------------------

MASKERS: dict[str, type] = {}


def register_masker(name: str, masker: type) -> None:
    if name in MASKERS:
        raise MaskingConfigError(f"masker {name!r} already registered")
    if not (isinstance(masker, type) and issubclass(masker, Masker)):
        raise TypeError("maskers must subclass Masker")
    MASKERS[name] = masker


for _name, _cls in [("shift_date", ShiftDateMasker), ("surrogate_name", SurrogateNameMasker),
                    ("surrogate_profession", SurrogateProfessionMasker),
                    ("randomize_digits", RandomizeDigitsMasker), ("mask_zip", MaskZipMasker)]:
    register_masker(_name, _cls)


@dataclass(frozen=True)
class Action:
    kind: str  # "redact", "keep" or "mask"
    masker: Optional[str] = None
    config: tuple = ()  # sorted (key, value) pairs

    def __post_init__(self):
        if self.kind not in ("redact", "keep", "mask"):
            raise MaskingConfigError(f"unknown action {self.kind!r}")
        if (self.kind == "mask") != (self.masker is not None):
            raise MaskingConfigError("mask actions, and only mask actions, name a masker")

    @classmethod
    def parse(cls, text: str) -> "Action":
        """``redact``, ``keep`` or ``mask <masker> [key=value ...]``."""
        parts = text.split()
        if not parts:
            raise MaskingConfigError("empty action")
        kind = parts[0].lower()
        if kind != "mask":
            if len(parts) > 1:
                raise MaskingConfigError(f"{kind} takes no arguments")
            return cls(kind)
        if len(parts) < 2:
            raise MaskingConfigError("mask needs a masker name")
        cfg = []
        for kv in parts[2:]:
            k, sep, v = kv.partition("=")
            if not sep:
                raise MaskingConfigError(f"masker option {kv!r} is not key=value")
            cfg.append((k, v))
        return cls("mask", parts[1], tuple(sorted(cfg)))

    def __str__(self) -> str:
        if self.kind != "mask":
            return self.kind
        return " ".join(["mask", self.masker] + [f"{k}={v}" for k, v in self.config])


REDACT = Action("redact")
KEEP = Action("keep")


@dataclass(frozen=True)
class MaskPolicy:
    actions: Mapping = field(default_factory=dict)
    default: Action = REDACT
    redact_string: str = DEFAULT_REDACT

    def __post_init__(self):
        if not self.redact_string.format(cls="X"):
            raise MaskingConfigError("redact string must be nonempty")
        for cls, action in self.actions.items():
            if not isinstance(cls, EntityClass):
                raise MaskingConfigError(f"policy key {cls!r} is not an entity class")
            if action.kind == "mask" and action.masker not in MASKERS:
                raise MaskingConfigError(f"policy for {cls.value} names unknown masker {action.masker!r}")

    def action_for(self, cls: EntityClass) -> Action:
        return self.actions.get(cls, self.default)

    def build(self, seed: int) -> dict:
        """Instantiate one masker per distinct mask action."""
        built = {}
        for cls in EntityClass:
            action = self.action_for(cls)
            if action.kind == "mask" and action not in built:
                built[action] = MASKERS[action.masker](dict(action.config), seed)
        return built


def default_mask_policy() -> MaskPolicy:
    """Mask everything the bundled maskers can handle; redact the rest."""
    return MaskPolicy({
        EntityClass.NAME: Action("mask", "surrogate_name"),
        EntityClass.PROFESSION: Action("mask", "surrogate_profession"),
        EntityClass.DATE: Action("mask", "shift_date"),
        EntityClass.ID: Action("mask", "randomize_digits"),
        EntityClass.CONTACT: Action("mask", "randomize_digits"),
        EntityClass.AGE: REDACT,
        EntityClass.LOCATION: REDACT,
        EntityClass.PHI: REDACT,
    })


@dataclass(frozen=True)
class MaskEvent:
    start: int
    end: int
    text: str
    entity_class: EntityClass
    action: str
    replacement: str
    masker: str = "-"
    flag: str = ""


def apply_policy(doc: Document, predictions: Sequence[AnnotatedSpan], policy: MaskPolicy,
                 seed: int = 0) -> tuple[str, list[MaskEvent]]:
    """Replace each predicted span according to the policy.

    Returns the masked text and one event per prediction, in document order.
    """
    spans = check_non_overlapping(predictions)
    maskers = policy.build(seed)
    text = doc.text
    events = []
    for span in spans:
        original = text[span.start:span.end]
        action = policy.action_for(span.entity_class)
        fixed = redact(original, span.entity_class, policy.redact_string)
        if action.kind == "keep":
            events.append(MaskEvent(span.start, span.end, original, span.entity_class, "keep", original))
            continue
        if action.kind == "redact":
            events.append(MaskEvent(span.start, span.end, original, span.entity_class, "redact", fixed))
            continue
        ctx = MaskContext(doc.id, text, span.start, span.end)
        try:
            out = maskers[action].apply(original, span.entity_class, ctx)
            flag = ""
            if not out:
                raise MaskFallback("empty-replacement")
            if original in out:
                # e.g. "1/1/2020" shifted to "11/1/2020" still carries the original
                raise MaskFallback("contains-original")
            if action.masker == "shift_date" and word_shape(out) != word_shape(original):
                flag = "shape-changed"
            events.append(MaskEvent(span.start, span.end, original, span.entity_class, "mask", out,
                                    action.masker, flag))
        except MaskFallback as fb:
            events.append(MaskEvent(span.start, span.end, original, span.entity_class, "redact", fixed,
                                    action.masker, fb.flag))
    pieces = []
    cursor = len(text)
    # splice right-to-left so earlier offsets stay valid
    for ev in reversed(events):
        pieces.append(text[ev.end:cursor])
        pieces.append(ev.replacement)
        cursor = ev.start
    pieces.append(text[:cursor])
    return "".join(reversed(pieces)), events
