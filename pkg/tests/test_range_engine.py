"""Vectorized range operations versus quadratic brute-force references."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parcfr.game_core import HandIndex
from parcfr.poker_games import enumerate_hands
from parcfr.range_engine import (aggregate, brute_force_reach,
                                 brute_force_showdown, counterfactual_reach,
                                 counterfactual_reach_all, fold_values,
                                 showdown_values, showdown_values_counted)
from oracles import brute_counterfactual_reach, brute_showdown_values


def _one_card_hands(n):
    return [HandIndex(id=i, cards=(i,)) for i in range(n)]


@st.composite
def hand_universe(draw):
    """A small deck with either 1-card or 2-card hands plus a range."""
    two_card = draw(st.booleans())
    if two_card:
        deck = draw(st.integers(min_value=5, max_value=9))
        hands = enumerate_hands(range(deck), (), 2)
    else:
        deck = draw(st.integers(min_value=3, max_value=9))
        hands = _one_card_hands(deck)
    vals = draw(st.lists(
        st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
        min_size=len(hands), max_size=len(hands)))
    return deck, hands, np.array(vals)


@given(hand_universe())
@settings(max_examples=120, deadline=None)
def test_counterfactual_reach_matches_brute_force(universe):
    deck, hands, vals = universe
    agg = aggregate(vals, hands, deck)
    assert agg.p_sum == pytest.approx(float(vals.sum()))
    fast = counterfactual_reach_all(agg, hands)
    for h in hands:
        scalar = counterfactual_reach(agg, h)
        assert fast[h.id] == pytest.approx(scalar, abs=1e-12)
        assert scalar == pytest.approx(
            brute_counterfactual_reach(vals, hands, h.id), abs=1e-12)
        assert scalar == pytest.approx(
            brute_force_reach(vals, hands, h), abs=1e-12)


@given(hand_universe(), st.data())
@settings(max_examples=120, deadline=None)
def test_showdown_matches_brute_force(universe, data):
    deck, hands, vals = universe
    H = len(hands)
    ranks = np.array(data.draw(st.lists(
        st.integers(min_value=-1, max_value=4), min_size=H, max_size=H)))
    pot = data.draw(st.floats(min_value=0.5, max_value=8.0))
    fast = showdown_values(vals, ranks, pot, hands, deck)
    slow = brute_showdown_values(vals, ranks, pot, hands)
    pkg_slow = brute_force_showdown(vals, ranks, pot, hands)
    np.testing.assert_allclose(fast, slow, atol=1e-12)
    np.testing.assert_allclose(fast, pkg_slow, atol=1e-12)


def test_aggregate_per_card_masses():
    hands = enumerate_hands(range(6), (), 2)
    vals = np.arange(len(hands), dtype=float)
    agg = aggregate(vals, hands, 6)
    for c in range(6):
        want = sum(float(vals[h.id]) for h in hands if c in h.cards)
        assert agg.p_card[c] == pytest.approx(want)


def test_all_tied_showdown_is_zero_everywhere():
    hands = enumerate_hands(range(8), (), 2)
    vals = np.random.default_rng(0).random(len(hands))
    ranks = np.zeros(len(hands), dtype=np.int64)
    out = showdown_values(vals, ranks, 4.0, hands, 8)
    np.testing.assert_allclose(out, 0.0, atol=1e-12)


def test_blocked_hands_carry_no_mass_and_get_zero():
    hands = enumerate_hands(range(8), (), 2)
    rng = np.random.default_rng(1)
    vals = rng.random(len(hands))
    ranks = rng.integers(0, 5, len(hands))
    ranks[3] = -1
    ranks[10] = -1
    out = showdown_values(vals, ranks, 2.0, hands, 8)
    assert out[3] == 0.0 and out[10] == 0.0
    # zeroing a blocked hand's range weight must not change anything
    vals2 = vals.copy()
    vals2[3] = 0.0
    out2 = showdown_values(vals2, ranks, 2.0, hands, 8)
    np.testing.assert_allclose(out, out2, atol=1e-12)


def test_showdown_self_play_is_zero_sum():
    """Playing a range against itself nets zero by antisymmetry."""
    hands = enumerate_hands(range(9), (), 2)
    rng = np.random.default_rng(7)
    vals = rng.random(len(hands))
    ranks = rng.integers(-1, 6, len(hands))
    out = showdown_values(vals, ranks, 2.0, hands, 9)
    assert float(vals @ out) == pytest.approx(0.0, abs=1e-10)


def test_fold_values_signs_and_validation():
    hands = _one_card_hands(4)
    vals = np.array([0.1, 0.2, 0.3, 0.4])
    agg = aggregate(vals, hands, 4)
    won = fold_values(agg, 1.5, hero_is_folder=False, hands=hands)
    lost = fold_values(agg, 1.5, hero_is_folder=True, hands=hands)
    np.testing.assert_allclose(won, -lost)
    assert np.all(won >= 0.0)
    assert won[0] == pytest.approx(1.5 * (0.2 + 0.3 + 0.4))
    with pytest.raises(ValueError, match="fold_amount"):
        fold_values(agg, 0.0, hero_is_folder=False, hands=hands)


def test_showdown_scan_is_linear_in_hands():
    """The counted inner-loop work grows linearly, not quadratically."""
    rng = np.random.default_rng(3)
    ops_per_hand = []
    for deck in (10, 14, 18):
        hands = enumerate_hands(range(deck), (), 2)
        vals = rng.random(len(hands))
        ranks = rng.integers(0, deck * 2, len(hands))
        _, ops = showdown_values_counted(vals, ranks, 2.0, hands, deck)
        ops_per_hand.append(ops / len(hands))
    assert max(ops_per_hand) <= 4.0
    assert max(ops_per_hand) / min(ops_per_hand) < 1.5


def test_river_scale_consistency():
    """Full river hand universe agrees with the quadratic oracle."""
    from parcfr.poker_games import SubgameConfig, build_hunl_subgame

    cfg = SubgameConfig(street="river", board=(0, 5, 10, 19, 47), spr=4.0,
                        n_raise=0, starting_pot=1.0)
    tree = build_hunl_subgame(cfg)
    showdown_nid = next(n.node_id for n in tree.nodes
                        if n.node_id in tree.rankings)
    ranking = tree.rankings[showdown_nid]
    rng = np.random.default_rng(5)
    vals = rng.random(len(tree.hands))
    fast = showdown_values(vals, ranking, 1.0, tree.hands, 52)
    slow = brute_showdown_values(vals, ranking, 1.0, tree.hands)
    np.testing.assert_allclose(fast, slow, atol=1e-12)
    agg = aggregate(vals, tree.hands, 52)
    fast_cf = counterfactual_reach_all(agg, tree.hands)
    for h in tree.hands[::97]:
        assert fast_cf[h.id] == pytest.approx(
            brute_counterfactual_reach(vals, tree.hands, h.id), abs=1e-12)
