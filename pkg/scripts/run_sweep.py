#!/usr/bin/env python3
"""Rate-distortion sweep over a corpus with a trained model.

Writes the per-image and corpus-mean CSV, one gnuplot curve per mask
ratio, the Pareto front, and prints the operating point a given bit
budget would select.

Example:
    python3 scripts/run_sweep.py --dataset data/toy --model toy.tmck \
        --csv-out sweep.csv --plot-dir plots --budget-bits 100000
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from maecodec import dataset, mae, sweep
from maecodec.errors import InfeasibleBudgetError


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dataset", required=True, help="PPM/PGM directory")
    parser.add_argument("--model", required=True, help="checkpoint path")
    parser.add_argument("--ratios", default="0.5,0.6,0.67,0.75,0.8")
    parser.add_argument("--qualities", default="10,20,30,40,50,60,70,80,90")
    parser.add_argument("--csv-out", required=True)
    parser.add_argument("--plot-dir", default=None)
    parser.add_argument("--budget-bits", type=int, default=None)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    corpus = dataset.load_corpus(args.dataset)
    model = mae.load_checkpoint(args.model)
    ratios = [float(r) for r in args.ratios.split(",") if r]
    qualities = [int(q) for q in args.qualities.split(",") if q]

    result = sweep.rd_sweep(corpus, ratios, qualities, model, seed=args.seed)
    for failure in result.failures:
        print(
            f"failed: {failure.image_id} ratio {failure.mask_ratio:g} "
            f"q {failure.quality}: {failure.error}",
            file=sys.stderr,
        )
    means = sweep.corpus_mean(result.points)
    sweep.write_csv(result.points + means, args.csv_out)
    print(f"{args.csv_out}: {len(result.points)} points + {len(means)} means")

    front = sweep.pareto_front(means)
    if args.plot_dir:
        os.makedirs(args.plot_dir, exist_ok=True)
        for ratio, pts in sorted(sweep.group_by_ratio(means).items()):
            path = os.path.join(args.plot_dir, f"curve_r{ratio:g}.dat")
            sweep.write_curve_dat(pts, path)
            print(path)
        front_path = os.path.join(args.plot_dir, "pareto.dat")
        sweep.write_curve_dat(front, front_path)
        print(front_path)

    if args.budget_bits is not None:
        h, w = corpus[0][1].shape[:2]
        try:
            config = sweep.select_config_for_budget(args.budget_bits, w, h, front)
        except InfeasibleBudgetError as exc:
            print(f"budget {args.budget_bits} bits infeasible: {exc}", file=sys.stderr)
            return 2
        print(
            f"budget {args.budget_bits} bits at {w}x{h}: mask_ratio "
            f"{config.mask_ratio:g}, quality {config.codec.quality}"
        )
    return 1 if result.failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
