"""Seeded generator of synthetic clinical narratives with gold PII spans.

Names and cities are drawn from the bundled gazetteer lists, so dictionary
features are informative, and a share of sentences place a surname or a city
in the same neutral context so that only the token itself (or a dictionary
hit) tells the two apart.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Optional

from .core import AnnotatedSpan, Document, EntityClass
from .masking import MONTH_ABBR, MONTH_FULL, _data_lines
from .tokenize import make_document

N, P, L, A, D, C, I, H = (EntityClass.NAME, EntityClass.PROFESSION, EntityClass.LOCATION, EntityClass.AGE,
                          EntityClass.DATE, EntityClass.CONTACT, EntityClass.ID, EntityClass.PHI)

HEADER = [
    "Patient: {FULL}\nDOB: {DATE}\nMRN: {ID}\n",
    "Name: {FULL}\nDate of visit: {DATE}\nPhone: {PHONE}\n",
    "PATIENT NAME: {FULLUP}\nRECORD NO: {ID}\nADMITTED: {DATE}\n",
]

BODY = [
    "{FULL} is a {AGE} year old {PROF} who presents with chest pain.",
    "Mr. {LAST} was seen in clinic on {DATE} for follow up of diabetes.",
    "Mrs. {LAST} reports improved glucose control since {DATE}.",
    "She was referred by Dr. {FULL} for evaluation of neuropathy.",
    "He was referred by Dr. {LAST} after an abnormal HbA1c.",
    "The patient lives in {CITY} with her daughter {FIRST}.",
    "He moved from {COUNTRY} to {CITY} in {YEAR}.",
    "Patient works as a {PROF} and walks daily.",
    "She is employed as a {PROF} at a local firm.",
    "Age {AGE}, nonsmoker, no known drug allergies.",
    "The patient is {AGE} years old and lives alone in {CITY}.",
    "Please contact the clinic at {PHONE} with any questions.",
    "Family can be reached by email at {EMAIL}.",
    "Health card number {ID} was verified at registration.",
    "Lab requisition {ID} was sent on {DATE}.",
    "Follow up scheduled for {DATE} with Dr. {LAST}.",
    "Discussed with {AMBIG} on {DATE}.",
    "Records from {AMBIG} were reviewed today.",
    "A letter was sent to {AMBIG} regarding the results.",
    "{AMBIG} was mentioned in the previous note.",
    "Her vehicle plate {PLATE} was recorded by security.",
    "Remote access logged from IP {IP} during the televisit.",
    "The patient was transferred to {HOSPITAL} in {CITY}.",
    "Address on file is {STREET}, {CITY}, postal code {POSTAL}.",
    "Metformin was increased to 1000 mg twice daily.",
    "Blood pressure was 132/84 and weight was stable.",
    "No chest pain, dyspnea, or palpitations were reported.",
    "Insulin glargine 20 units at bedtime was continued.",
    "Foot exam showed decreased sensation bilaterally.",
    "Retinal screening is due in 6 months.",
    "Her son {OTHER} accompanied her today.",
    "Signed: {FULL}, MD",
    "Dictated by {OTHER} on {DATE}.",
]

STREETS = ["Maple", "Oak", "King", "Queen", "Church", "Elm", "Park", "Victoria", "Bloor", "Dundas", "College", "Main"]
STREET_KINDS = ["Street", "Avenue", "Road", "Drive", "Crescent"]
HOSPITALS = ["General Hospital", "Memorial Hospital", "Regional Health Centre", "Community Hospital"]


@dataclass
class _Lists:
    first: list
    last: list
    city: list
    country: list
    professions: list


def _lists() -> _Lists:
    return _Lists(_data_lines("gazetteers/first_name.txt"), _data_lines("gazetteers/last_name.txt"),
                  _data_lines("gazetteers/city.txt"), _data_lines("gazetteers/country.txt"),
                  _data_lines("surrogates/professions.txt"))


def _date(rng: random.Random) -> str:
    y, m, d = rng.randint(1940, 2090), rng.randint(1, 12), rng.randint(1, 28)
    fmt = rng.randrange(6)
    if fmt == 0:
        return f"{m:02d}/{d:02d}/{y}"
    if fmt == 1:
        return f"{m}/{d}/{y}"
    if fmt == 2:
        return f"{y}-{m:02d}-{d:02d}"
    if fmt == 3:
        return f"{MONTH_ABBR[m - 1]} {d}, {y}"
    if fmt == 4:
        return f"{MONTH_FULL[m - 1]} {d}, {y}"
    return f"{d} {MONTH_FULL[m - 1]} {y}"


def _slot(name: str, rng: random.Random, lists: _Lists, people: dict) -> list:
    """Pieces ``(text, class or None)`` for one template slot."""
    if name == "FULL":
        return [(f"{people['first']} {people['last']}", N)]
    if name == "FULLUP":
        return [(f"{people['first']} {people['last']}".upper(), N)]
    if name == "OTHER":
        return [(f"{rng.choice(lists.first)} {rng.choice(lists.last)}", N)]
    if name == "FIRST":
        return [(rng.choice(lists.first), N)]
    if name == "LAST":
        return [(people["last"] if rng.random() < 0.5 else rng.choice(lists.last), N)]
    if name == "AMBIG":
        if rng.random() < 0.5:
            return [(rng.choice(lists.last), N)]
        return [(rng.choice(lists.city), L)]
    if name == "CITY":
        return [(rng.choice(lists.city), L)]
    if name == "COUNTRY":
        return [(rng.choice(lists.country), L)]
    if name == "HOSPITAL":
        return [(f"{rng.choice(lists.last)} {rng.choice(HOSPITALS)}", L)]
    if name == "STREET":
        return [(f"{rng.randint(1, 999)} {rng.choice(STREETS)} {rng.choice(STREET_KINDS)}", L)]
    if name == "POSTAL":
        letters = "ABCEGHJKLMNPRSTVXY"
        return [(f"{rng.choice(letters)}{rng.randint(0, 9)}{rng.choice(letters)} "
                 f"{rng.randint(0, 9)}{rng.choice(letters)}{rng.randint(0, 9)}", L)]
    if name == "DATE":
        return [(_date(rng), D)]
    if name == "YEAR":
        return [(str(rng.randint(1950, 2020)), D)]
    if name == "AGE":
        return [(str(rng.randint(18, 99)), A)]
    if name == "PROF":
        return [(rng.choice(lists.professions), P)]
    if name == "PHONE":
        a, b, c = rng.randint(200, 999), rng.randint(200, 999), rng.randint(0, 9999)
        style = rng.randrange(3)
        if style == 0:
            return [(f"{a}-{b}-{c:04d}", C)]
        if style == 1:
            return [(f"({a}) {b}-{c:04d}", C)]
        return [(f"{a}.{b}.{c:04d}", C)]
    if name == "EMAIL":
        user = f"{rng.choice(lists.first).lower()}.{rng.choice(lists.last).lower()}".replace(" ", "")
        return [(f"{user}@{rng.choice(['mail', 'inbox', 'clinicnet'])}.{rng.choice(['com', 'ca', 'org'])}", C)]
    if name == "ID":
        style = rng.randrange(3)
        if style == 0:
            return [(str(rng.randint(1000000, 9999999)), I)]
        if style == 1:
            return [("".join(rng.choice("ABCDEFGHJKLMNPQRSTUVWXYZ") for _ in range(2)) + str(rng.randint(100000, 999999)), I)]
        return [(f"{rng.randint(1000, 9999)}-{rng.randint(100, 999)}-{rng.randint(100, 999)}", I)]
    if name == "PLATE":
        return [("".join(rng.choice("ABCDEFGHJKLMNPRSTVWXYZ") for _ in range(4)) + f" {rng.randint(100, 999)}", H)]
    if name == "IP":
        return [(".".join(str(rng.randint(1, 254)) for _ in range(4)), H)]
    raise KeyError(name)


_SLOT = re.compile(r"\{([A-Z]+)\}")


def _render(template: str, rng: random.Random, lists: _Lists, people: dict, parts: list) -> None:
    pos = 0
    for m in _SLOT.finditer(template):
        parts.append((template[pos:m.start()], None))
        parts.extend(_slot(m.group(1), rng, lists, people))
        pos = m.end()
    parts.append((template[pos:], None))


def generate_document(doc_id: str, rng: random.Random, lists: Optional[_Lists] = None,
                      n_sentences: int = 12) -> Document:
    lists = lists or _lists()
    people = {"first": rng.choice(lists.first), "last": rng.choice(lists.last)}
    parts: list = []
    _render(rng.choice(HEADER), rng, lists, people, parts)
    for k in range(n_sentences):
        _render(rng.choice(BODY), rng, lists, people, parts)
        parts.append(("\n" if rng.random() < 0.2 else " ", None))
    text, spans, pos = [], [], 0
    for piece, cls in parts:
        if cls is not None:
            spans.append(AnnotatedSpan(pos, pos + len(piece), cls, piece))
        text.append(piece)
        pos += len(piece)
    return make_document(doc_id, "".join(text).rstrip() + "\n", spans)


def generate_corpus(n_documents: int = 320, seed: int = 2087, n_sentences: int = 12) -> list[Document]:
    """Deterministic synthetic corpus; every entity class is represented."""
    rng = random.Random(seed)
    lists = _lists()
    return [generate_document(f"synth{i:04d}", rng, lists, n_sentences) for i in range(n_documents)]
