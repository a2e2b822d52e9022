#!/usr/bin/env python3
"""Write a synthetic toy corpus as PGM/PPM files.

Example:
    python3 scripts/make_toy_corpus.py --out data/toy --count 500 --size 64
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from maecodec import dataset


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--count", type=int, default=500)
    parser.add_argument("--size", type=int, default=64)
    parser.add_argument("--channels", type=int, default=1, choices=(1, 3))
    parser.add_argument("--seed", type=int, default=11)
    args = parser.parse_args()

    os.makedirs(args.out, exist_ok=True)
    corpus = dataset.synthetic_corpus(args.count, args.size, args.channels, args.seed)
    ext = "ppm" if args.channels == 3 else "pgm"
    for name, image in corpus:
        dataset.save_image(os.path.join(args.out, f"{name}.{ext}"), image)
    print(f"{args.out}: {len(corpus)} images of {args.size}x{args.size}x{args.channels}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
