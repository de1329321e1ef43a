#!/usr/bin/env python3
"""Per-stage wall-clock breakdown across streets.

Builds one heads-up subgame per street on a shared board prefix, runs a
fixed number of measured passes each, and reports the mean wall-clock
time per pipeline stage.  The river subgame terminates in showdowns, so
its stage-5 (leaf evaluation) column should sit at zero; the flop and
turn subgames are built depth limited and route their leaf batches
through a synthetic evaluator, which populates stage 5 and exercises
the concurrent fork against stages 3 and 4.

Example:
    python scripts/bench_streets.py --measure 30 --out streets.csv
"""

import argparse
import sys
import time

import numpy as np

from parcfr import cfr_pipeline as pipeline
from parcfr.cfr_variants import variant_from_key
from parcfr.leaf_eval import make_evaluator
from parcfr.poker_games import SubgameConfig, build_hunl_subgame

CSV_HEADER = ["# parcfr-csv bench 1", "stage,street,mean_ms,std_ms"]


def measure_game(tree, variant, workers, warmup, passes, evaluator=None):
    tables = pipeline.compile_tree(tree)
    state = pipeline.init_state(tables)
    for _ in range(warmup):
        pipeline.run_iteration(tables, state, variant, workers=workers,
                               evaluator=evaluator)
    stage_ms = np.zeros((passes, 7))
    totals = np.zeros(passes)
    for m in range(passes):
        t = pipeline.run_iteration(tables, state, variant, workers=workers,
                                   evaluator=evaluator)
        stage_ms[m] = t.stage_ms
        totals[m] = t.total_ms
    return stage_ms, totals


def build_street(street, board, spr, n_raise):
    cut = {"flop": 3, "turn": 4, "river": 5}[street]
    cfg = SubgameConfig(street=street, board=tuple(board[:cut]), spr=spr,
                        n_raise=n_raise, depth_limited=(street != "river"))
    return build_hunl_subgame(cfg)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--board", default="12,25,33,41,50",
                    help="five card ids; streets use a prefix of this")
    ap.add_argument("--spr", type=float, default=4.0)
    ap.add_argument("--n-raise", type=int, default=2)
    ap.add_argument("--variant", default="dcfr")
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--warmup", type=int, default=6)
    ap.add_argument("--measure", type=int, default=20)
    ap.add_argument("--eval-seed", type=int, default=0)
    ap.add_argument("--out", default=None, help="CSV output path")
    args = ap.parse_args(argv)

    board = tuple(int(c) for c in args.board.split(","))
    variant = variant_from_key(args.variant)
    lines = list(CSV_HEADER)
    print(f"{'street':>7} {'S1':>8} {'S2':>8} {'S3':>8} {'S4':>8} "
          f"{'S5':>8} {'S6':>8} {'S7':>8} {'total':>9}")
    for street in ("flop", "turn", "river"):
        t0 = time.perf_counter()
        tree = build_street(street, board, args.spr, args.n_raise)
        evaluator = None
        if street != "river":
            evaluator = make_evaluator("synthetic_net", tree=tree,
                                       seed=args.eval_seed)
        stage_ms, totals = measure_game(tree, variant, args.workers,
                                        args.warmup, args.measure,
                                        evaluator)
        mean = stage_ms.mean(axis=0)
        std = stage_ms.std(axis=0)
        for s in range(7):
            lines.append(f"S{s + 1},{street},{mean[s]:.6f},{std[s]:.6f}")
        lines.append(f"Total,{street},{totals.mean():.6f},{totals.std():.6f}")
        cells = " ".join(f"{mean[s]:8.3f}" for s in range(7))
        print(f"{street:>7} {cells} {totals.mean():9.3f}   "
              f"[{len(tree.hands)} hands, built+run "
              f"{time.perf_counter() - t0:.1f}s]")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
