"""Leaf evaluators: layout encoding, antisymmetry, and the equity oracle.

The exact check-down evaluator is compared against a from-scratch board
enumeration that shares nothing with the package's ranking machinery.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parcfr.leaf_eval import (EvaluatorConfigError, EquityOracleEvaluator,
                              ExternalMLPEvaluator, LayoutDescriptor,
                              LeafBatch, SyntheticNetEvaluator,
                              antisymmetrize, encode_leaf_input,
                              equity_oracle, evaluate_batch, load_mlp,
                              make_evaluator, save_mlp)
from parcfr.poker_games import SubgameConfig, build_hunl_subgame
from oracles import checkdown_equity


@pytest.fixture(scope="module")
def turn_tree():
    cfg = SubgameConfig(street="turn", board=(0, 5, 10, 19), spr=2.0,
                        n_raise=1, starting_pot=1.0)
    return build_hunl_subgame(cfg)


@pytest.fixture(scope="module")
def flop_tree():
    cfg = SubgameConfig(street="flop", board=(0, 5, 10), spr=2.0, n_raise=1,
                        starting_pot=1.0, depth_limited=True)
    return build_hunl_subgame(cfg)


# --- layout and encoding -----------------------------------------------------

def test_layout_dimensions(turn_tree):
    lay = LayoutDescriptor.from_tree(turn_tree)
    H = len(turn_tree.hands)
    assert lay.input_dim == 52 + 1 + 2 * H
    assert lay.output_dim == 2 * H
    assert lay.pot_index == 52
    assert lay.range_slice(0) == slice(53, 53 + H)
    assert lay.range_slice(1) == slice(53 + H, 53 + 2 * H)
    assert lay.pot_scale == turn_tree.pot_scale


def test_encode_leaf_input_normalizes_ranges(turn_tree):
    lay = LayoutDescriptor.from_tree(turn_tree)
    H = lay.hands
    rng = np.random.default_rng(0)
    r0, r1 = rng.random(H), rng.random(H)
    row = encode_leaf_input(lay, (0, 5, 10, 19), 3.0, r0, r1)
    assert row[0] == 1.0 and row[5] == 1.0 and row[1] == 0.0
    assert row[lay.pot_index] == pytest.approx(3.0 / lay.pot_scale)
    np.testing.assert_allclose(row[lay.range_slice(0)], r0 / r0.sum())
    scaled = encode_leaf_input(lay, (0, 5, 10, 19), 3.0, 7.5 * r0, r1)
    np.testing.assert_allclose(row, scaled)


def test_encode_leaf_input_rejects_negative_range(turn_tree):
    lay = LayoutDescriptor.from_tree(turn_tree)
    bad = np.full(lay.hands, -1.0)
    with pytest.raises(ValueError, match="nonnegative"):
        encode_leaf_input(lay, (), 1.0, bad, np.abs(bad))


def test_encode_leaf_input_zero_range_stays_zero(turn_tree):
    lay = LayoutDescriptor.from_tree(turn_tree)
    row = encode_leaf_input(lay, (), 1.0, np.zeros(lay.hands),
                            np.ones(lay.hands))
    assert np.all(row[lay.range_slice(0)] == 0.0)


# --- antisymmetrization ------------------------------------------------------

@given(st.integers(min_value=0, max_value=2 ** 31 - 1))
@settings(max_examples=40, deadline=None)
def test_antisymmetrize_enforces_zero_sum(seed):
    lay = LayoutDescriptor(deck_size=6, hands=4, pot_scale=2.0)
    rng = np.random.default_rng(seed)
    X = rng.random((5, lay.input_dim))
    raw = rng.standard_normal((5, lay.output_dim))
    out = antisymmetrize(raw, X, lay)
    H = lay.hands
    np.testing.assert_allclose(out[:, :H], -out[:, H:], atol=1e-12)
    q0, q1 = X[:, lay.range_slice(0)], X[:, lay.range_slice(1)]
    inner = np.einsum("ij,ij->i", q0, out[:, :H]) + \
        np.einsum("ij,ij->i", q1, out[:, H:])
    np.testing.assert_allclose(inner, 0.0, atol=1e-9)


def test_antisymmetrize_fixes_antisymmetric_zero_sum_inputs():
    lay = LayoutDescriptor(deck_size=4, hands=3, pot_scale=1.0)
    rng = np.random.default_rng(5)
    X = rng.random((3, lay.input_dim))
    v0 = rng.standard_normal((3, lay.hands))
    g = X[:, lay.range_slice(0)] - X[:, lay.range_slice(1)]
    # remove the zero-sum-violating component by hand, then roundtrip
    coef = np.einsum("ij,ij->i", g, v0) / np.einsum("ij,ij->i", g, g)
    v0 -= coef[:, None] * g
    raw = np.hstack([v0, -v0])
    np.testing.assert_allclose(antisymmetrize(raw, X, lay), raw, atol=1e-12)


# --- exact equity oracle -----------------------------------------------------

def test_equity_oracle_matches_independent_enumeration(turn_tree):
    rng = np.random.default_rng(3)
    H = len(turn_tree.hands)
    r0, r1 = rng.random(H), rng.random(H)
    v0, v1 = equity_oracle(turn_tree, 0, r0, r1)
    w0, w1 = checkdown_equity(turn_tree, 0, r0, r1)
    np.testing.assert_allclose(v0, w0, atol=1e-11)
    np.testing.assert_allclose(v1, w1, atol=1e-11)


def test_equity_oracle_sampled_boards_match_enumeration_subset(flop_tree):
    import itertools

    rng = np.random.default_rng(4)
    H = len(flop_tree.hands)
    r0, r1 = rng.random(H), rng.random(H)
    n_sample, seed = 40, 11
    v0, v1 = equity_oracle(flop_tree, 0, r0, r1, sample_boards=n_sample,
                           seed=seed)
    rem = [c for c in range(52) if c not in flop_tree.board]
    n_all = sum(1 for _ in itertools.combinations(rem, 2))
    idx = np.sort(np.random.default_rng(seed).choice(n_all, n_sample,
                                                     replace=False))
    w0, w1 = checkdown_equity(flop_tree, 0, r0, r1,
                              boards_subset=idx.tolist())
    np.testing.assert_allclose(v0, w0, atol=1e-11)
    np.testing.assert_allclose(v1, w1, atol=1e-11)


def test_equity_oracle_self_play_is_zero_sum(turn_tree):
    rng = np.random.default_rng(9)
    H = len(turn_tree.hands)
    r0, r1 = rng.random(H), rng.random(H)
    v0, v1 = equity_oracle(turn_tree, 0, r0, r1)
    assert float(r0 @ v0 + r1 @ v1) == pytest.approx(0.0, abs=1e-9)


def test_equity_evaluator_batches_match_single_node_calls(turn_tree):
    """Batched rows reproduce per-node oracle values after normalization.

    The batch contract takes board-masked ranges and emits values divided
    by each hand's unblocked opponent mass; the single-node helper emits
    the reach-weighted form, so the comparison renormalizes with the
    inclusion-exclusion reach.
    """
    from parcfr.game_core import hand_mask
    from parcfr.range_engine import aggregate, counterfactual_reach_all

    ev = EquityOracleEvaluator(turn_tree)
    lay = ev.layout
    rng = np.random.default_rng(6)
    H = lay.hands
    board = tuple(turn_tree.board)
    mask = hand_mask(turn_tree.hands, board)
    leaf = next(n for n in turn_tree.nodes if n.kind == "leaf")
    rows, expected = [], []
    for _ in range(3):
        r0 = rng.random(H) * mask
        r1 = rng.random(H) * mask
        rows.append(encode_leaf_input(lay, board, leaf.pot, r0, r1))
        q0, q1 = r0 / r0.sum(), r1 / r1.sum()
        v0, v1 = equity_oracle(turn_tree, leaf.node_id, q0, q1)
        want = np.zeros(2 * H)
        for hero, (v, q_opp) in enumerate(((v0, q1), (v1, q0))):
            ie = counterfactual_reach_all(
                aggregate(q_opp, turn_tree.hands, 52), turn_tree.hands)
            want[hero * H:(hero + 1) * H] = np.divide(
                v, ie, out=np.zeros(H), where=ie > 0.0)
        expected.append(want)
    out = ev(np.array(rows))
    assert ev.calls == 1 and ev.rows == 3
    np.testing.assert_allclose(out, np.array(expected), atol=1e-10)


def test_equity_evaluator_rejects_one_card_games():
    from parcfr.poker_games import build_leduc

    with pytest.raises(EvaluatorConfigError, match="two-card"):
        EquityOracleEvaluator(build_leduc())


# --- synthetic and external nets ---------------------------------------------

def test_synthetic_net_is_seed_deterministic(turn_tree):
    lay = LayoutDescriptor.from_tree(turn_tree)
    rng = np.random.default_rng(2)
    X = rng.random((4, lay.input_dim))
    a = SyntheticNetEvaluator(lay, seed=123)(X)
    b = SyntheticNetEvaluator(lay, seed=123)(X)
    c = SyntheticNetEvaluator(lay, seed=124)(X)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_synthetic_net_outputs_are_zero_sum(turn_tree):
    lay = LayoutDescriptor.from_tree(turn_tree)
    ev = SyntheticNetEvaluator(lay, seed=0)
    rng = np.random.default_rng(8)
    H = lay.hands
    row = encode_leaf_input(lay, tuple(turn_tree.board), 1.0,
                            rng.random(H), rng.random(H))
    out = ev(row[None, :])
    q0, q1 = row[lay.range_slice(0)], row[lay.range_slice(1)]
    assert float(q0 @ out[0, :H] + q1 @ out[0, H:]) == \
        pytest.approx(0.0, abs=1e-9)


def test_mlp_bundle_roundtrip(tmp_path, turn_tree):
    lay = LayoutDescriptor.from_tree(turn_tree)
    src = SyntheticNetEvaluator(lay, seed=42, hidden=16)
    path = tmp_path / "net.bin"
    save_mlp(path, src.weights, antisym=True)
    weights, antisym = load_mlp(path)
    assert antisym
    ev = ExternalMLPEvaluator(lay, weights, antisym)
    X = np.random.default_rng(1).random((5, lay.input_dim))
    np.testing.assert_array_equal(ev(X), src(X))


def test_load_mlp_rejects_corrupt_files(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"not a weight bundle at all")
    with pytest.raises(EvaluatorConfigError, match="not a weight bundle"):
        load_mlp(path)


def test_external_evaluator_checks_dimensions(tmp_path, turn_tree):
    lay = LayoutDescriptor.from_tree(turn_tree)
    wrong = LayoutDescriptor(deck_size=6, hands=3, pot_scale=1.0)
    src = SyntheticNetEvaluator(wrong, seed=0, hidden=4)
    path = tmp_path / "net.bin"
    save_mlp(path, src.weights)
    weights, antisym = load_mlp(path)
    with pytest.raises(EvaluatorConfigError, match="dimensions"):
        ExternalMLPEvaluator(lay, weights, antisym)


# --- dispatch and batch contract ---------------------------------------------

def test_make_evaluator_dispatch(turn_tree, tmp_path):
    assert make_evaluator("equity_oracle", tree=turn_tree).spec.kind == \
        "equity_oracle"
    assert make_evaluator("synthetic_net", tree=turn_tree).spec.kind == \
        "synthetic_net"
    lay = LayoutDescriptor.from_tree(turn_tree)
    path = tmp_path / "w.bin"
    save_mlp(path, SyntheticNetEvaluator(lay, 0, 8).weights)
    assert make_evaluator("external", tree=turn_tree,
                          path=path).spec.kind == "external"
    with pytest.raises(EvaluatorConfigError, match="unknown evaluator"):
        make_evaluator("gru", tree=turn_tree)
    with pytest.raises(EvaluatorConfigError, match="path"):
        make_evaluator("external", tree=turn_tree)
    with pytest.raises(EvaluatorConfigError, match="tree or an explicit"):
        make_evaluator("synthetic_net")


def test_evaluate_batch_contract(turn_tree):
    lay = LayoutDescriptor.from_tree(turn_tree)
    ev = SyntheticNetEvaluator(lay, seed=0, hidden=8)
    empty = LeafBatch(inputs=np.zeros((0, lay.input_dim)),
                      leaf_node_ids=np.zeros(0, dtype=np.int64), layout=lay)
    out = evaluate_batch(ev, empty)
    assert out.values.shape == (0, lay.output_dim)
    assert ev.calls == 0  # empty batches never reach the backend
    X = np.random.default_rng(0).random((3, lay.input_dim))
    batch = LeafBatch(inputs=X, leaf_node_ids=np.arange(3), layout=lay)
    vals = evaluate_batch(ev, batch)
    assert vals.values.shape == (3, lay.output_dim)
    assert ev.calls == 1
    bad = LeafBatch(inputs=np.zeros((2, 3)), leaf_node_ids=np.arange(2),
                    layout=lay)
    with pytest.raises(EvaluatorConfigError, match="batch dim"):
        evaluate_batch(ev, bad)
