#!/usr/bin/env python3
"""Train the toy reconstruction model on a synthetic corpus.

The defaults reproduce the configuration the test suite trains: a patch-4
model on 32x32 crops of 500 synthetic 64x64 images, about a minute of CPU.

Example:
    python3 scripts/train_toy.py --out toy.tmck
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from maecodec import dataset, mae, training


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="checkpoint path")
    parser.add_argument("--dataset", default=None, help="PPM/PGM directory (default: synthetic)")
    parser.add_argument("--synthetic", type=int, default=500)
    parser.add_argument("--image-size", type=int, default=64)
    parser.add_argument("--crop-size", type=int, default=32)
    parser.add_argument("--epochs", type=int, default=40)
    parser.add_argument("--lr", type=float, default=2e-3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--patch-size", type=int, default=4)
    args = parser.parse_args()

    if args.dataset:
        corpus = dataset.load_corpus(args.dataset)
    else:
        corpus = dataset.synthetic_corpus(args.synthetic, size=args.image_size, seed=11)

    config = mae.TMAEConfig(
        patch_size=args.patch_size, channels=1,
        enc_d_model=32, enc_depth=2, enc_heads=2, enc_d_ff=64,
        dec_d_model=16, dec_depth=1, dec_heads=2, dec_d_ff=32,
    )
    cfg = training.TrainConfig(
        crop_size=args.crop_size, epochs=args.epochs, batch_size=8,
        learning_rate=args.lr, seed=args.seed, ratio_low=0.5, ratio_high=0.8,
    )
    result = training.train(corpus, config, cfg, log=print)
    mae.save_checkpoint(result.model, args.out)
    print(f"saved {args.out} (final loss {result.epoch_losses[-1]:.6f})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
