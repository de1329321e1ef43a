"""Vectorized range arithmetic with O(1) card-blocking corrections.

A range is a plain float64 array indexed by hand id (reach probabilities or
per-hand values).  The three-level summary (total mass, per-card incident
mass, per-hand mass) lets the opponent reach compatible with a given hand be
recovered by inclusion-exclusion instead of an O(n) sum per hand, and lets
showdown values be computed in one rank-ordered sweep instead of an O(n^2)
pairwise comparison.

All operations are pure functions of their inputs and safe to call
concurrently on distinct output buffers.  The ``brute_force_*`` functions
are the deliberately quadratic reference paths used by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game_core import HandIndex
from .poker_games import HandRanking


@dataclass
class Aggregates:
    """Three-level reach summary: total, per-card incident, per-hand."""

    p_sum: float
    p_card: np.ndarray
    p_hand: np.ndarray
    hand_size: int


def _card_arrays(hands: list[HandIndex]) -> tuple[np.ndarray, np.ndarray]:
    c1 = np.array([h.cards[0] for h in hands], dtype=np.int64)
    if len(hands[0].cards) == 2:
        c2 = np.array([h.cards[1] for h in hands], dtype=np.int64)
    else:
        c2 = np.full(len(hands), -1, dtype=np.int64)
    return c1, c2


def aggregate(values: np.ndarray, hands: list[HandIndex],
              deck_size: int) -> Aggregates:
    """Sum a nonnegative range into its three-level summary."""
    values = np.asarray(values, dtype=np.float64)
    p_card = np.zeros(deck_size)
    c1, c2 = _card_arrays(hands)
    np.add.at(p_card, c1, values)
    if c2[0] >= 0:
        np.add.at(p_card, c2, values)
    return Aggregates(p_sum=float(values.sum()), p_card=p_card,
                      p_hand=values.copy(), hand_size=len(hands[0].cards))


def counterfactual_reach(agg: Aggregates, hand: HandIndex) -> float:
    """Total aggregated mass over hands sharing no card with ``hand``."""
    if agg.hand_size == 1:
        return agg.p_sum - agg.p_card[hand.cards[0]]
    c1, c2 = hand.cards
    return float(agg.p_sum - agg.p_card[c1] - agg.p_card[c2]
                 + agg.p_hand[hand.id])


def counterfactual_reach_all(agg: Aggregates,
                             hands: list[HandIndex]) -> np.ndarray:
    """Vectorized counterfactual_reach over every hand."""
    c1, c2 = _card_arrays(hands)
    out = agg.p_sum - agg.p_card[c1]
    if agg.hand_size == 2:
        out = out - agg.p_card[c2] + agg.p_hand
    return out


def fold_values(opp_agg: Aggregates, fold_amount: float, hero_is_folder: bool,
                hands: list[HandIndex]) -> np.ndarray:
    """Per-hand fold payoff: +/- fold_amount times unblocked opponent mass."""
    if fold_amount <= 0:
        raise ValueError("fold_amount must be positive")
    sign = -1.0 if hero_is_folder else 1.0
    return sign * fold_amount * counterfactual_reach_all(opp_agg, hands)


def _ranks_of(ranking) -> np.ndarray:
    if isinstance(ranking, HandRanking):
        return ranking.rank
    return np.asarray(ranking)


def showdown_values(opp_range: np.ndarray, ranking, pot: float,
                    hands: list[HandIndex], deck_size: int) -> np.ndarray:
    """Per-hand showdown value via one ascending-rank sweep.

    value(h) = (pot/2) * (W(h) - L(h)) with W/L the blocking-corrected
    opponent mass ranked strictly below/above h.  Equal-rank tie groups are
    processed atomically: members see below/above sums excluding the whole
    group.  Hands with rank -1 (board-blocked) carry no mass and get value 0.
    """
    values, _ = _showdown_scan(np.asarray(opp_range, dtype=np.float64),
                               _ranks_of(ranking), pot, hands, deck_size)
    return values


def showdown_values_counted(opp_range: np.ndarray, ranking, pot: float,
                            hands: list[HandIndex],
                            deck_size: int) -> tuple[np.ndarray, int]:
    """showdown_values plus the inner-loop operation count (for complexity
    assertions)."""
    return _showdown_scan(np.asarray(opp_range, dtype=np.float64),
                          _ranks_of(ranking), pot, hands, deck_size)


def _showdown_scan(s, ranks, pot, hands, deck_size):
    n = len(hands)
    c1, c2 = _card_arrays(hands)
    two = bool(c2[0] >= 0)
    out = np.zeros(n)
    ops = 0

    valid = np.nonzero(ranks >= 0)[0]
    s_valid = np.where(ranks >= 0, s, 0.0)
    total_sum = float(s_valid.sum())
    total_card = np.zeros(deck_size)
    np.add.at(total_card, c1[valid], s_valid[valid])
    if two:
        np.add.at(total_card, c2[valid], s_valid[valid])
    ops += len(valid)

    order = valid[np.argsort(ranks[valid], kind="stable")]
    below_sum = 0.0
    card_below = np.zeros(deck_size)
    g_card = np.zeros(deck_size)
    half_pot = 0.5 * pot

    i = 0
    m = len(order)
    while i < m:
        j = i
        r = ranks[order[i]]
        g_sum = 0.0
        while j < m and ranks[order[j]] == r:
            h = order[j]
            g_sum += s_valid[h]
            g_card[c1[h]] += s_valid[h]
            if two:
                g_card[c2[h]] += s_valid[h]
            j += 1
            ops += 1
        for idx in range(i, j):
            h = order[idx]
            w = below_sum - card_below[c1[h]]
            t = g_sum - g_card[c1[h]]
            tot = total_sum - total_card[c1[h]]
            if two:
                w -= card_below[c2[h]]
                t += -g_card[c2[h]] + s_valid[h]
                tot += -total_card[c2[h]] + s_valid[h]
            lose = tot - w - t
            out[h] = half_pot * (w - lose)
            ops += 1
        for idx in range(i, j):
            h = order[idx]
            below_sum += s_valid[h]
            card_below[c1[h]] += s_valid[h]
            g_card[c1[h]] = 0.0
            if two:
                card_below[c2[h]] += s_valid[h]
                g_card[c2[h]] = 0.0
            ops += 1
        i = j
    return out, ops


# --- quadratic reference paths ---------------------------------------------


def brute_force_reach(opp_range: np.ndarray, hands: list[HandIndex],
                      hand: HandIndex) -> float:
    """Literal sum of opponent reach over card-disjoint opponent hands."""
    total = 0.0
    for o in hands:
        if not hand.blocks(o):
            total += float(opp_range[o.id])
    return total


def brute_force_showdown(opp_range: np.ndarray, ranking, pot: float,
                         hands: list[HandIndex]) -> np.ndarray:
    """O(n^2) double loop with explicit blocking and rank comparisons."""
    ranks = _ranks_of(ranking)
    out = np.zeros(len(hands))
    for h in hands:
        if ranks[h.id] < 0:
            continue
        acc = 0.0
        for o in hands:
            if ranks[o.id] < 0 or h.blocks(o):
                continue
            if ranks[h.id] > ranks[o.id]:
                acc += float(opp_range[o.id])
            elif ranks[h.id] < ranks[o.id]:
                acc -= float(opp_range[o.id])
        out[h.id] = 0.5 * pot * acc
    return out
