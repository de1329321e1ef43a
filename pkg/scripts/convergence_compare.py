#!/usr/bin/env python3
"""Exploitability curves for all four regret variants on one game.

Solves the chosen game once per variant from a cold start, measuring
reference exploitability of the running average strategy at log-spaced
checkpoints.  The printed table shows the final values; the CSV holds
the full curves for plotting.

Example:
    python scripts/convergence_compare.py --game leduc --iterations 10000
"""

import argparse
import sys
import time

import numpy as np

from parcfr import cfr_pipeline as pipeline
from parcfr import reference_oracle
from parcfr.cfr_variants import variant_from_key
from parcfr.poker_games import SubgameConfig, build_hunl_subgame, build_kuhn, \
    build_leduc

CSV_HEADER = ["# parcfr-csv convergence-compare 1",
              "variant,iteration,expl_pot,expl_mbb"]
VARIANTS = ("cfr", "cfr+", "dcfr", "pcfr+")


def build_game(name, board, spr, n_raise):
    if name == "kuhn":
        return build_kuhn()
    if name == "leduc":
        return build_leduc()
    cfg = SubgameConfig(street="river", board=board, spr=spr,
                        n_raise=n_raise, depth_limited=False)
    return build_hunl_subgame(cfg)


def checkpoints(iterations, points):
    lo = min(10, iterations)
    grid = np.unique(np.round(np.logspace(
        np.log10(lo), np.log10(iterations), points)).astype(int))
    return [int(t) for t in grid]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--game", default="leduc",
                    choices=("kuhn", "leduc", "river"))
    ap.add_argument("--board", default="12,25,33,41,50")
    ap.add_argument("--spr", type=float, default=4.0)
    ap.add_argument("--n-raise", type=int, default=2)
    ap.add_argument("--iterations", type=int, default=3000)
    ap.add_argument("--points", type=int, default=12)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--out", default=None, help="CSV output path")
    args = ap.parse_args(argv)

    board = tuple(int(c) for c in args.board.split(","))
    tree = build_game(args.game, board, args.spr, args.n_raise)
    marks = checkpoints(args.iterations, args.points)
    lines = list(CSV_HEADER)
    finals = {}
    for key in VARIANTS:
        variant = variant_from_key(key)
        tables = pipeline.compile_tree(tree)
        state = pipeline.init_state(tables)
        t0 = time.perf_counter()
        done = 0
        for mark in marks:
            while done < mark:
                pipeline.run_iteration(tables, state, variant,
                                       workers=args.workers)
                pipeline.run_iteration(tables, state, variant,
                                       workers=args.workers)
                done += 1
            avg = pipeline.average_strategy(tables, state)
            rep = reference_oracle.exploitability_report(tree, avg)
            lines.append(f"{key},{mark},{rep.expl_pot:.6e},"
                         f"{rep.expl_mbb:.6e}")
        finals[key] = (rep.expl_pot, time.perf_counter() - t0)
        print(f"{key:>6}: expl_pot={rep.expl_pot:.3e} after {marks[-1]} "
              f"iterations ({finals[key][1]:.1f}s)")

    best = min(finals, key=lambda k: finals[k][0])
    print(f"lowest final exploitability: {best}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
