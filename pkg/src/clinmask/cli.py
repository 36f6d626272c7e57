"""Command line: train, evaluate, deidentify, inspect."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, PipelineConfig, load_config
from .io import ModelFormatError, audit_rows, AUDIT_HEADER, load_model, read_corpus, save_model, write_masked
from .metrics import render_report, report_lines
from .ner import document_sequences, evaluate_recognizer
from .pipeline import Pipeline, build_recognizer, split_documents

log = logging.getLogger("clinmask")


class CliError(Exception):
    pass


def _config(args) -> PipelineConfig:
    cfg = load_config(args.config, seed=args.seed)
    if args.format:
        cfg.corpus.format = args.format
    return cfg


def _corpus_split(cfg: PipelineConfig):
    paths = cfg.corpus.paths()
    if any(p is None for p in paths):
        raise CliError("config [corpus] section does not name the corpus location")
    docs = read_corpus(cfg.corpus.format, *paths)
    if not docs:
        raise CliError(f"no documents found in {', '.join(map(str, paths))}")
    seed = cfg.seed if cfg.seed is not None else 0
    return split_documents(docs, cfg.split, seed)


def _print_reports(name: str, recognizer, docs, machine: bool, out) -> None:
    tok, span = evaluate_recognizer(recognizer, docs)
    if machine:
        out.write(report_lines(tok).replace("token\t", f"{name}\ttoken\t"))
        out.write(report_lines(span).replace("span_strict\t", f"{name}\tspan_strict\t"))
        return
    out.write(render_report(tok, f"== {name}: token level ({len(docs)} documents)"))
    out.write("\n")
    out.write(render_report(span, f"== {name}: strict span level ({len(docs)} documents)"))
    out.write("\n")


def cmd_train(args) -> int:
    cfg = _config(args)
    train, test = _corpus_split(cfg)
    print(f"split: {len(train)} train / {len(test)} test documents", file=sys.stderr)
    trained = 0
    for name in sorted(cfg.recognizers):
        spec = cfg.recognizers[name]
        rec = build_recognizer(spec, load=False)
        if rec.trainable:
            seqs = [s for d in train for s in document_sequences(d)]
            t0 = time.perf_counter()
            features, labels = rec.transform_sequences(seqs)
            rec.learn(features, labels)
            Path(spec.model).parent.mkdir(parents=True, exist_ok=True)
            save_model(rec.model, spec.model)
            with open(str(spec.model) + ".log", "w", encoding="utf-8") as f:
                for epoch, nll in enumerate(rec.nll_history):
                    f.write(f"{epoch}\t{nll!r}\n")
            print(f"{name}: trained in {time.perf_counter() - t0:.1f}s, saved {spec.model}", file=sys.stderr)
            trained += 1
        _print_reports(name, rec, test, args.machine, sys.stdout)
    if not trained:
        print("warning: no trainable recognizer configured", file=sys.stderr)
    return 0


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    train, test = _corpus_split(cfg)
    docs = train + test if args.all else test
    for item in args.model or []:
        name, sep, path = item.partition("=")
        if not sep or name not in cfg.recognizers:
            raise CliError(f"--model expects RECOGNIZER=PATH with a configured recognizer, got {item!r}")
        cfg.recognizers[name].model = Path(path)
    for name in sorted(cfg.recognizers):
        _print_reports(name, build_recognizer(cfg.recognizers[name]), docs, args.machine, sys.stdout)
    _print_reports("pipeline", Pipeline.from_config(cfg), docs, args.machine, sys.stdout)
    return 0


_WORKER_PIPELINE = None


def _init_worker(cfg):
    global _WORKER_PIPELINE
    _WORKER_PIPELINE = Pipeline.from_config(cfg)


def _deid_one(item):
    doc_id, text = item
    t0 = time.perf_counter()
    masked, events = _WORKER_PIPELINE.deidentify(doc_id, text)
    return doc_id, masked, events, time.perf_counter() - t0


def cmd_deidentify(args) -> int:
    cfg = _config(args)
    inp, out = Path(args.input), Path(args.output)
    if not inp.is_dir():
        raise CliError(f"input directory {inp} is not readable")
    files = sorted(inp.glob("*.txt"))
    out.mkdir(parents=True, exist_ok=True)
    if not files:
        print(f"warning: no .txt documents in {inp}", file=sys.stderr)
    items = []
    for f in files:
        with open(f, encoding="utf-8", newline="") as fh:
            items.append((f.stem, fh.read()))
    t0 = time.perf_counter()
    if args.workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(args.workers, initializer=_init_worker, initargs=(cfg,)) as pool:
            results = list(pool.map(_deid_one, items))
    else:
        _init_worker(cfg)
        results = [_deid_one(it) for it in items]
    audit_path = out / "audit.tsv"
    with open(audit_path, "w", encoding="utf-8", newline="") as audit:
        audit.write(AUDIT_HEADER + "\n")
        for doc_id, masked, events, secs in results:
            write_masked(out, doc_id, masked)
            for row in audit_rows(doc_id, events, args.include_originals):
                audit.write(row + "\n")
            print(f"{doc_id}: {len(events)} entities, {secs:.3f}s", file=sys.stderr)
    total = time.perf_counter() - t0
    rate = len(items) / total if total > 0 else 0.0
    print(f"{len(items)} documents in {total:.2f}s ({rate:.1f} docs/s)", file=sys.stderr)
    return 0


def cmd_inspect(args) -> int:
    model = load_model(args.model_path)
    out = sys.stdout
    out.write(f"labels: {' '.join(str(t) for t in model.labels)}\n")
    out.write(f"features: {len(model.feature_index)}\n")
    out.write(f"l2: {model.l2_lambda}\n")
    names = model.feature_index.names
    if args.top_k <= 0:
        return 0
    for i, label in enumerate(model.labels):
        w = model.emission[i]
        # stable sort keeps ties in feature-id order
        top = np.argsort(-w, kind="stable")[: args.top_k]
        out.write(f"[{label}]\n")
        for j in top:
            out.write(f"  {w[j]:+.4f}  {names[j]}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="pipeline config file (INI)")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override the config seed")
    common.add_argument("--workers", type=int, default=argparse.SUPPRESS, help="deidentify worker processes")
    common.add_argument("--include-originals", action="store_true", default=argparse.SUPPRESS,
                        help="write original PII text into the audit log")
    common.add_argument("--format", choices=("standoff", "bio"), default=argparse.SUPPRESS,
                        help="corpus format override")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="clinmask", parents=[common],
                                     description="Recognize and mask PII in clinical text.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="train recognizers and report held-out scores")
    p.add_argument("--machine", action="store_true", help="tab-separated report rows")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common], help="token and span reports on the held-out split")
    p.add_argument("--model", action="append", metavar="NAME=PATH", help="model path for a recognizer (overrides config)")
    p.add_argument("--all", action="store_true", help="evaluate on the whole corpus")
    p.add_argument("--machine", action="store_true", help="tab-separated report rows")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("deidentify", parents=[common], help="mask a directory of .txt files")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_deidentify)

    p = sub.add_parser("inspect", parents=[common], help="summarize a CRF model file")
    p.add_argument("model_path")
    p.add_argument("-k", "--top-k", type=int, default=10)
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name, default in [("config", None), ("seed", None), ("workers", 1), ("include_originals", False),
                          ("format", None), ("verbose", False)]:
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CliError, ModelFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
