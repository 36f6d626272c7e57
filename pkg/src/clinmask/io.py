"""Corpus readers, masked-output and audit writers, and the model file container."""

from __future__ import annotations

import io as _io
import json
import zipfile
from pathlib import Path
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .core import AnnotatedSpan, Document, EntityClass, SpanConflictError, Tag, Token, check_non_overlapping, repair_bio, spans_to_tags, tags_to_spans
from .crf import CrfModel
from .features import FeatureIndex
from .masking import MaskEvent
from .tokenize import make_document

PathLike = Union[str, Path]
MODEL_FORMAT_VERSION = 1


class CorpusFormatError(ValueError):
    pass


class ModelFormatError(ValueError):
    pass


def _read_text(path: Path) -> str:
    # newline="" keeps CR characters so offsets index the file's characters exactly
    with open(path, encoding="utf-8", newline="") as f:
        return f.read()


def read_standoff(text_dir: PathLike, ann_dir: PathLike = None) -> list[Document]:
    """Read ``<id>.txt`` files with ``<id>.ann`` lines ``start<TAB>end<TAB>CLASS<TAB>surface``."""
    text_dir = Path(text_dir)
    ann_dir = Path(ann_dir) if ann_dir is not None else text_dir
    docs = []
    for txt in sorted(text_dir.glob("*.txt")):
        ann = ann_dir / (txt.stem + ".ann")
        if not ann.exists():
            raise CorpusFormatError(f"{txt}: missing annotation file {ann}")
        text = _read_text(txt)
        spans = []
        for lineno, line in enumerate(_read_text(ann).split("\n"), 1):
            line = line.rstrip("\r")
            if not line.strip():
                continue
            where = f"{ann}:{lineno}"
            parts = line.split("\t", 3)
            if len(parts) != 4:
                raise CorpusFormatError(f"{where}: expected start<TAB>end<TAB>CLASS<TAB>surface")
            try:
                start, end = int(parts[0]), int(parts[1])
            except ValueError:
                raise CorpusFormatError(f"{where}: offsets must be integers") from None
            if not 0 <= start < end <= len(text):
                raise CorpusFormatError(f"{where}: offsets [{start},{end}) out of bounds for {len(text)} characters")
            try:
                cls = EntityClass.parse(parts[2])
            except ValueError as exc:
                raise CorpusFormatError(f"{where}: {exc}") from None
            if text[start:end] != parts[3]:
                raise CorpusFormatError(f"{where}: surface {parts[3]!r} does not match text {text[start:end]!r}")
            spans.append(AnnotatedSpan(start, end, cls, parts[3]))
        try:
            spans = check_non_overlapping(spans)
        except SpanConflictError as exc:
            raise CorpusFormatError(f"{ann}: {exc}") from None
        docs.append(make_document(txt.stem, text, spans))
    return docs


def write_standoff(out_dir: PathLike, documents: Iterable[Document]) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for doc in documents:
        with open(out_dir / f"{doc.id}.txt", "w", encoding="utf-8", newline="") as f:
            f.write(doc.text)
        with open(out_dir / f"{doc.id}.ann", "w", encoding="utf-8", newline="") as f:
            for s in doc.gold or ():
                f.write(f"{s.start}\t{s.end}\t{s.entity_class.value}\t{doc.text[s.start:s.end]}\n")


def _bio_document(doc_id: str, sentences: list) -> Document:
    words, tags, toks = [], [], []
    pos = 0
    for k, sent in enumerate(sentences):
        for word, tag in sent:
            toks.append(Token(pos, pos + len(word), word, k))
            words.append(word)
            tags.append(tag)
            pos += len(word) + 1
    text = " ".join(words)
    spans = tags_to_spans(toks, repair_bio(tags), text)
    return Document(doc_id, text, tuple(toks), tuple(spans))


def read_bio(path: PathLike) -> list[Document]:
    """Read ``token<TAB>tag`` lines; a blank line ends a sentence, two end a document."""
    path = Path(path)
    docs, sentences, sent = [], [], []
    blanks = 0

    def flush_doc():
        if sentences:
            docs.append(_bio_document(f"{path.stem}-{len(docs):04d}", list(sentences)))
            sentences.clear()

    for lineno, line in enumerate(_read_text(path).splitlines(), 1):
        if not line.strip():
            blanks += 1
            if sent:
                sentences.append(sent)
                sent = []
            if blanks == 2:
                flush_doc()
            continue
        blanks = 0
        word, sep, tag = line.partition("\t")
        if not sep or not word or any(c.isspace() for c in word):
            raise CorpusFormatError(f"{path}:{lineno}: expected token<TAB>tag")
        try:
            sent.append((word, Tag.parse(tag)))
        except ValueError as exc:
            raise CorpusFormatError(f"{path}:{lineno}: {exc}") from None
    if sent:
        sentences.append(sent)
    flush_doc()
    return docs


def write_bio(path: PathLike, documents: Iterable[Document]) -> None:
    chunks = []
    for doc in documents:
        tags = spans_to_tags(doc.tokens, doc.gold or ())
        sents: dict[int, list[str]] = {}
        for tok, tag in zip(doc.tokens, tags):
            sents.setdefault(tok.sentence_index, []).append(f"{tok.text}\t{tag}")
        chunks.append("\n\n".join("\n".join(sents[k]) for k in sorted(sents)))
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("\n\n\n".join(chunks) + ("\n" if chunks else ""))


READERS: dict[str, Callable] = {"standoff": read_standoff, "bio": read_bio}


def read_corpus(fmt: str, *paths) -> list[Document]:
    if fmt not in READERS:
        raise CorpusFormatError(f"unknown corpus format {fmt!r}; known: {', '.join(READERS)}")
    return READERS[fmt](*paths)


def write_masked(out_dir: PathLike, doc_id: str, masked_text: str) -> Path:
    out = Path(out_dir) / f"{doc_id}.txt"
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8", newline="") as f:
            f.write(masked_text)
    except OSError as exc:
        raise OSError(f"cannot write masked output {out}: {exc}") from exc
    return out


AUDIT_HEADER = "doc_id\tstart\tend\tclass\taction\tmasker\toriginal_text\treplacement"


def _cell(s: str) -> str:
    return s.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n").replace("\r", "\\r")


def audit_rows(doc_id: str, events: Sequence[MaskEvent], include_originals: bool = False) -> list[str]:
    rows = []
    for ev in events:
        original = _cell(ev.text) if include_originals else "-"
        action = ev.action if not ev.flag else f"{ev.action}:{ev.flag}"
        rows.append("\t".join([doc_id, str(ev.start), str(ev.end), ev.entity_class.value, action,
                               ev.masker, original, _cell(ev.replacement)]))
    return rows


def write_audit(out_path: PathLike, events: Union[Sequence[MaskEvent], dict], include_originals: bool = False,
                doc_id: str = "-") -> None:
    """Write audit rows; ``events`` may be a single document's list or a ``{doc_id: events}`` mapping."""
    grouped = events if isinstance(events, dict) else {doc_id: events}
    try:
        with open(out_path, "w", encoding="utf-8", newline="") as f:
            f.write(AUDIT_HEADER + "\n")
            for did, evs in grouped.items():
                for row in audit_rows(did, evs, include_originals):
                    f.write(row + "\n")
    except OSError as exc:
        raise OSError(f"cannot write audit log {out_path}: {exc}") from exc


# --- model container ----------------------------------------------------

_ZIP_DATE = (1980, 1, 1, 0, 0, 0)


def _npy_bytes(arr: np.ndarray) -> bytes:
    buf = _io.BytesIO()
    np.save(buf, np.ascontiguousarray(arr, dtype="<f8"), allow_pickle=False)
    return buf.getvalue()


def save_model(model: CrfModel, path: PathLike) -> None:
    """Write a zip container with fixed timestamps so identical models give identical bytes."""
    meta = {
        "format_version": MODEL_FORMAT_VERSION,
        "labels": [str(t) for t in model.labels],
        "features": model.feature_index.names,
        "l2_lambda": model.l2_lambda,
        "metadata": model.metadata,
    }
    members = [("meta.json", json.dumps(meta, sort_keys=True, indent=1).encode("utf-8"))]
    for name in ("emission", "transition", "begin", "end"):
        members.append((f"{name}.npy", _npy_bytes(getattr(model, name))))
    tmp = Path(str(path) + ".tmp")
    with zipfile.ZipFile(tmp, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        for name, data in members:
            info = zipfile.ZipInfo(name, date_time=_ZIP_DATE)
            info.compress_type = zipfile.ZIP_DEFLATED
            info.external_attr = 0o644 << 16
            zf.writestr(info, data)
    tmp.replace(path)


def load_model(path: PathLike) -> CrfModel:
    try:
        with zipfile.ZipFile(path) as zf:
            meta = json.loads(zf.read("meta.json").decode("utf-8"))
            version = meta.get("format_version")
            if version != MODEL_FORMAT_VERSION:
                raise ModelFormatError(f"{path}: model format version {version}, expected {MODEL_FORMAT_VERSION}")
            arrays = {name: np.load(_io.BytesIO(zf.read(f"{name}.npy")), allow_pickle=False)
                      for name in ("emission", "transition", "begin", "end")}
    except ModelFormatError:
        raise
    except (zipfile.BadZipFile, KeyError, ValueError, OSError, EOFError) as exc:
        if isinstance(exc, FileNotFoundError):
            raise
        raise ModelFormatError(f"{path}: unreadable model file ({exc})") from exc
    try:
        labels = tuple(Tag.parse(t) for t in meta["labels"])
        index = FeatureIndex(meta["features"]).freeze()
        return CrfModel(labels, index, arrays["emission"], arrays["transition"], arrays["begin"], arrays["end"],
                        float(meta["l2_lambda"]), meta.get("metadata", {}))
    except (KeyError, ValueError, TypeError) as exc:
        raise ModelFormatError(f"{path}: inconsistent model file ({exc})") from exc
