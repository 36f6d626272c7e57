"""Lexical-only vs gazetteer-enabled CRF on the synthetic corpus (80/20 split)."""

import argparse
import time

from clinmask.crf import CrfConfig
from clinmask.gazetteer import bundled_gazetteers
from clinmask.metrics import render_report
from clinmask.ner import CrfRecognizer, document_sequences, evaluate_recognizer
from clinmask.pipeline import split_documents
from clinmask.synthetic import generate_corpus


def run(train, test, use_gazetteers, epochs):
    rec = CrfRecognizer(CrfConfig(max_epochs=epochs, use_gazetteers=use_gazetteers),
                        bundled_gazetteers() if use_gazetteers else [])
    t0 = time.perf_counter()
    rec.learn(*rec.transform_sequences([s for d in train for s in document_sequences(d)]))
    secs = time.perf_counter() - t0
    tok, span = evaluate_recognizer(rec, test)
    return rec, tok, span, secs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-n", "--documents", type=int, default=320)
    ap.add_argument("--seed", type=int, default=2087)
    ap.add_argument("--epochs", type=int, default=100)
    args = ap.parse_args()
    train, test = split_documents(generate_corpus(args.documents, args.seed), 0.8, args.seed)
    for label, gaz in (("lexical features", False), ("with dictionaries", True)):
        _, tok, span, secs = run(train, test, gaz, args.epochs)
        print(render_report(tok, f"== CRF {label}: token level (trained in {secs:.1f}s)"))
        print(render_report(span, f"== CRF {label}: strict span level"))


if __name__ == "__main__":
    main()
