#!/usr/bin/env python3
"""Lossless abstraction against no abstraction.

Two studies, both with abstractions that are exactly lossless, so the
bucketed run must reproduce the unabstracted solution while carrying
smaller regret tables:

- Leduc round 1: the three ranks appear in two suits each, and suits
  never matter before the board card lands, so a 6-hand to 3-bucket
  map is lossless.  Both arms are solved and compared on reference
  exploitability and on the final average strategy.
- Preflop subgame: the 169 preflop classes (13 pairs, 78 suited, 78
  offsuit) partition all 1326 two-card combos.  The tree is depth
  limited at the flop deal with a synthetic leaf evaluator; the arms
  are compared on the root average strategy, which the lossless map
  must leave untouched.

Example:
    python scripts/bucket_ablation.py --leduc-iters 500 --out ablation.csv
"""

import argparse
import sys
import time

import numpy as np

from parcfr import cfr_pipeline as pipeline
from parcfr import reference_oracle
from parcfr.abstraction_pruning import BucketMap, lossless_preflop_buckets
from parcfr.cfr_variants import variant_from_key
from parcfr.leaf_eval import make_evaluator
from parcfr.poker_games import SubgameConfig, build_hunl_subgame, build_leduc

CSV_HEADER = ["# parcfr-csv ablation 1",
              "game,abstraction,classes,solve_s,expl_pot,root_strategy_dev"]


def solve(tree, variant, iterations, workers, bucket_map=None,
          evaluator=None):
    t0 = time.perf_counter()
    result = pipeline.run_solve(tree, variant, iterations, workers=workers,
                                bucket_map=bucket_map, evaluator=evaluator)
    return result, time.perf_counter() - t0


def strategy_dev(a, b):
    return max(float(np.abs(a[nid] - b[nid]).max()) for nid in a)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--variant", default="cfr+")
    ap.add_argument("--leduc-iters", type=int, default=500)
    ap.add_argument("--preflop-iters", type=int, default=100)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--spr", type=float, default=4.0)
    ap.add_argument("--out", default=None, help="CSV output path")
    args = ap.parse_args(argv)

    variant = variant_from_key(args.variant)
    lines = list(CSV_HEADER)
    print(f"{'game':>8} {'abstraction':>12} {'classes':>8} {'solve_s':>8} "
          f"{'expl_pot':>11} {'strategy_dev':>13}")

    leduc = build_leduc()
    rank_map = {0: BucketMap(bucket_of=np.array([0, 0, 1, 1, 2, 2]), B=3,
                             lossless=True)}
    arms = {}
    for label, bm in (("none", None), ("rank3", rank_map)):
        result, secs = solve(leduc, variant, args.leduc_iters, args.workers,
                             bucket_map=bm)
        expl = reference_oracle.exploitability_report(
            leduc, result.avg_strategy).expl_pot
        classes = 6 if bm is None else 3
        arms[label] = result.avg_strategy
        dev = (0.0 if label == "none"
               else strategy_dev(arms["none"], arms["rank3"]))
        lines.append(f"leduc,{label},{classes},{secs:.3f},{expl:.6e},"
                     f"{dev:.3e}")
        print(f"{'leduc':>8} {label:>12} {classes:>8} {secs:8.2f} "
              f"{expl:11.3e} {dev:13.3e}")

    pf_tree = build_hunl_subgame(SubgameConfig(
        street="preflop", board=(), spr=args.spr, n_raise=2,
        depth_limited=True))
    evaluator = make_evaluator("synthetic_net", tree=pf_tree, seed=0)
    bm169 = lossless_preflop_buckets(pf_tree.hands)
    arms = {}
    for label, bm in (("none", None), ("lossless169", {0: bm169})):
        result, secs = solve(pf_tree, variant, args.preflop_iters,
                             args.workers, bucket_map=bm,
                             evaluator=evaluator)
        classes = len(pf_tree.hands) if bm is None else bm169.B
        arms[label] = result.avg_strategy
        dev = (0.0 if label == "none"
               else strategy_dev(arms["none"], arms["lossless169"]))
        lines.append(f"preflop,{label},{classes},{secs:.3f},nan,{dev:.3e}")
        print(f"{'preflop':>8} {label:>12} {classes:>8} {secs:8.2f} "
              f"{'n/a':>11} {dev:13.3e}")

    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
