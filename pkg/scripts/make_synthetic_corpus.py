"""Write the seeded synthetic corpus as standoff (.txt/.ann) or BIO files."""

import argparse

from clinmask.io import write_bio, write_standoff
from clinmask.synthetic import generate_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", help="output directory (standoff) or file (bio)")
    ap.add_argument("-n", "--documents", type=int, default=320)
    ap.add_argument("--sentences", type=int, default=12)
    ap.add_argument("--seed", type=int, default=2087)
    ap.add_argument("--format", choices=("standoff", "bio"), default="standoff")
    args = ap.parse_args()
    docs = generate_corpus(args.documents, args.seed, args.sentences)
    (write_bio if args.format == "bio" else write_standoff)(args.out, docs)
    n_spans = sum(len(d.gold) for d in docs)
    print(f"wrote {len(docs)} documents, {sum(len(d.tokens) for d in docs)} tokens, {n_spans} entities")


if __name__ == "__main__":
    main()
