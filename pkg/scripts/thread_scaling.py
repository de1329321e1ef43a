#!/usr/bin/env python3
"""Solve throughput versus worker count on one game.

Runs the same pass repeatedly at each worker count in a sweep and
reports mean pass time and speedup against the single-worker baseline.
Numbers are highly machine dependent: thread scaling tops out near the
physical core count, and a loaded or single-core host will show flat
curves.  The CSV is archived so results can be compared across hosts.

Example:
    python scripts/thread_scaling.py --k-list 1,2,4,8 --out scaling.csv
"""

import argparse
import os
import sys

import numpy as np

from parcfr import cfr_pipeline as pipeline
from parcfr.cfr_variants import variant_from_key
from parcfr.poker_games import (SubgameConfig, build_hunl_subgame, build_kuhn,
                                build_leduc)

CSV_HEADER = ["# parcfr-csv scaling 1", "workers,mean_ms,std_ms,speedup"]


def build_game(name, board, spr, n_raise):
    if name == "kuhn":
        return build_kuhn()
    if name == "leduc":
        return build_leduc()
    cfg = SubgameConfig(street="river", board=board, spr=spr,
                        n_raise=n_raise, depth_limited=False)
    return build_hunl_subgame(cfg)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--game", default="river",
                    choices=("kuhn", "leduc", "river"))
    ap.add_argument("--board", default="0,5,10,19,47")
    ap.add_argument("--spr", type=float, default=16.0)
    ap.add_argument("--n-raise", type=int, default=3)
    ap.add_argument("--variant", default="dcfr")
    ap.add_argument("--k-list", default="1,2,4")
    ap.add_argument("--warmup", type=int, default=6)
    ap.add_argument("--measure", type=int, default=20)
    ap.add_argument("--out", default=None, help="CSV output path")
    args = ap.parse_args(argv)

    ks = tuple(int(k) for k in args.k_list.split(","))
    if not ks or ks[0] != 1 or any(k < 1 for k in ks):
        ap.error("--k-list must start at 1 and contain positive counts")
    board = tuple(int(c) for c in args.board.split(","))
    tree = build_game(args.game, board, args.spr, args.n_raise)
    variant = variant_from_key(args.variant)
    tables = pipeline.compile_tree(tree)

    print(f"game={args.game} hands={len(tree.hands)} "
          f"nodes={len(tree.nodes)} cpus={os.cpu_count()}")
    lines = list(CSV_HEADER)
    base = None
    print(f"{'K':>3} {'mean_ms':>10} {'std_ms':>9} {'speedup':>8}")
    for k in ks:
        state = pipeline.init_state(tables)
        for _ in range(args.warmup):
            pipeline.run_iteration(tables, state, variant, workers=k)
        samples = np.zeros(args.measure)
        for m in range(args.measure):
            samples[m] = pipeline.run_iteration(tables, state, variant,
                                                workers=k).total_ms
        mean = samples.mean()
        base = mean if base is None else base
        speed = base / mean
        lines.append(f"{k},{mean:.6f},{samples.std():.6f},{speed:.6f}")
        print(f"{k:>3} {mean:10.3f} {samples.std():9.3f} {speed:8.2f}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
