"""Regret-matching and per-variant update rules, mostly property-based."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parcfr.game_core import InfosetBlock
from parcfr.cfr_variants import (RM_UNIFORM_EPS, VARIANT_KEYS, VariantConfig,
                                 discount_factors, extract_average_strategy,
                                 next_strategy, regret_match, strategy_scale,
                                 update_cfr_plus, update_dcfr,
                                 update_pcfr_plus, update_vanilla,
                                 variant_from_key)

finite_rows = st.lists(
    st.floats(min_value=-50.0, max_value=50.0, allow_nan=False),
    min_size=2, max_size=6)


@given(finite_rows)
@settings(max_examples=200, deadline=None)
def test_regret_match_outputs_a_distribution(row):
    sigma = regret_match(np.array(row))
    assert np.all(sigma >= 0.0)
    assert float(sigma.sum()) == pytest.approx(1.0, abs=1e-12)


@given(finite_rows)
@settings(max_examples=200, deadline=None)
def test_regret_match_is_proportional_to_positive_part(row):
    cum = np.array(row)
    sigma = regret_match(cum)
    pos = np.maximum(cum, 0.0)
    if pos.sum() > RM_UNIFORM_EPS * max(np.abs(cum).sum(), 1.0) \
            and np.abs(cum).sum() > RM_UNIFORM_EPS:
        np.testing.assert_allclose(sigma, pos / pos.sum(), atol=1e-12)
    else:
        np.testing.assert_allclose(sigma, 1.0 / len(row), atol=1e-12)


def test_regret_match_uniform_on_nonpositive_rows():
    for row in ([-3.0, -1.0], [0.0, 0.0, 0.0], [-1e-300, 0.0]):
        sigma = regret_match(np.array(row))
        np.testing.assert_allclose(sigma, 1.0 / len(row))


def test_regret_match_knife_edge_rounding_residue():
    """Rows that are zero up to summation ulps must act like exact zeros.

    Two implementations summing the same regrets in different orders can
    land on 0.0 and 2.2e-16; both must produce the uniform strategy or
    downstream trajectories fork.
    """
    exact = regret_match(np.array([0.0, 0.0, 0.0]))
    noisy = regret_match(np.array([2.2e-16, -1.1e-16, 0.0]))
    np.testing.assert_array_equal(exact, noisy)
    np.testing.assert_allclose(exact, 1.0 / 3.0)
    # but a genuinely tiny signal on an otherwise large row still resolves
    decisive = regret_match(np.array([1e-6, -50.0]))
    np.testing.assert_allclose(decisive, [1.0, 0.0])


def test_regret_match_handles_2d_blocks():
    block = np.array([[1.0, 3.0], [-2.0, -2.0]])
    sigma = regret_match(block)
    np.testing.assert_allclose(sigma, [[0.25, 0.75], [0.5, 0.5]])


def test_variant_config_validation():
    with pytest.raises(ValueError, match="unknown variant kind"):
        VariantConfig(kind="cfr++")
    with pytest.raises(ValueError, match="finite"):
        VariantConfig(kind="dcfr", dcfr_alpha=math.inf)
    with pytest.raises(ValueError, match="gamma"):
        VariantConfig(kind="dcfr", dcfr_gamma=-1.0)


def test_variant_key_mapping():
    assert sorted(VARIANT_KEYS) == ["cfr", "cfr+", "dcfr", "pcfr+"]
    assert variant_from_key("cfr").kind == "vanilla"
    assert variant_from_key("pcfr+").uses_prediction
    assert not variant_from_key("cfr+").uses_prediction
    with pytest.raises(ValueError, match="unknown variant"):
        variant_from_key("mccfr")


def test_averaging_exponents_per_variant():
    assert variant_from_key("cfr").averaging_exponent == 0.0
    assert variant_from_key("cfr+").averaging_exponent == 1.0
    assert variant_from_key("pcfr+").averaging_exponent == 2.0
    assert variant_from_key("dcfr", gamma=2.0).averaging_exponent == 2.0


@pytest.mark.parametrize("key", ["cfr", "cfr+", "dcfr", "pcfr+"])
def test_strategy_scale_reproduces_polynomial_weights(key):
    """Incremental rescaling must equal explicit t**g weighted averaging."""
    cfg = variant_from_key(key)
    g = cfg.averaging_exponent
    T = 9
    contribs = [float(t + 1) for t in range(T)]  # arbitrary per-pass values
    acc = 0.0
    for t in range(1, T + 1):
        acc = acc * strategy_scale(cfg, t) + contribs[t - 1]
    explicit = sum((t ** g) * contribs[t - 1] for t in range(1, T + 1))
    assert acc * (T ** g) == pytest.approx(explicit, rel=1e-12)


def test_strategy_scale_first_iteration():
    assert strategy_scale(variant_from_key("cfr"), 1) == 1.0
    assert strategy_scale(variant_from_key("cfr+"), 1) == 0.0
    with pytest.raises(ValueError):
        strategy_scale(variant_from_key("cfr"), 0)


def test_discount_factors_formulas():
    cfg = variant_from_key("dcfr")
    for t in (1, 2, 5, 100):
        fpos, fneg = discount_factors(cfg, t)
        ta = t ** 1.5
        assert fpos == pytest.approx(ta / (ta + 1.0), rel=1e-12)
        assert fneg == pytest.approx(0.5)  # beta = 0
    assert discount_factors(variant_from_key("cfr+"), 7) == (1.0, 1.0)
    with pytest.raises(ValueError):
        discount_factors(cfg, 0)


def test_discount_factors_extreme_exponents_are_stable():
    cfg = variant_from_key("dcfr", alpha=1e6, beta=-1e6)
    fpos, fneg = discount_factors(cfg, 10)
    assert fpos == 1.0
    assert fneg == pytest.approx(0.0, abs=1e-300)


@given(finite_rows, st.data())
@settings(max_examples=150, deadline=None)
def test_update_rules_against_direct_formulas(row, data):
    cum = np.array(row)
    inst = np.array(data.draw(st.lists(
        st.floats(min_value=-10.0, max_value=10.0, allow_nan=False),
        min_size=len(row), max_size=len(row))))
    t = data.draw(st.integers(min_value=1, max_value=50))

    np.testing.assert_allclose(update_vanilla(cum, inst, t), cum + inst)
    np.testing.assert_allclose(update_cfr_plus(cum, inst, t),
                               np.maximum(cum + inst, 0.0))
    ta, tb = t ** 1.5, 1.0
    want = np.where(cum > 0, cum * ta / (ta + 1.0),
                    cum * tb / (tb + 1.0)) + inst
    np.testing.assert_allclose(update_dcfr(cum, inst, t), want, atol=1e-12)
    new_cum, pred = update_pcfr_plus(cum, inst, t)
    np.testing.assert_allclose(new_cum, np.maximum(cum + inst, 0.0))
    np.testing.assert_allclose(pred, inst)


def test_dcfr_discounts_before_adding():
    """The running sum is discounted first; the fresh regret is not."""
    cum = np.array([4.0, -4.0])
    inst = np.array([1.0, 1.0])
    t = 4
    fpos, fneg = discount_factors(variant_from_key("dcfr"), t)
    out = update_dcfr(cum, inst, t)
    assert out[0] == pytest.approx(4.0 * fpos + 1.0)
    assert out[1] == pytest.approx(-4.0 * fneg + 1.0)
    # discount-after-add would instead give (4 + 1) * fpos
    assert out[0] != pytest.approx(5.0 * fpos)


def test_cfr_plus_floor_forgets_negative_history():
    cum = np.array([-100.0, 0.0])
    inst = np.array([1.0, -1.0])
    out = update_cfr_plus(cum, inst, 3)
    np.testing.assert_allclose(out, [0.0, 0.0])


def test_next_strategy_prediction_plumbing():
    cfg = variant_from_key("pcfr+")
    cum = np.array([1.0, 0.0])
    pred = np.array([0.0, 3.0])
    np.testing.assert_allclose(next_strategy(cfg, cum, pred), [0.25, 0.75])
    with pytest.raises(ValueError, match="prediction"):
        next_strategy(cfg, cum, None)
    plain = variant_from_key("cfr+")
    np.testing.assert_allclose(next_strategy(plain, cum, pred), [1.0, 0.0])


def test_extract_average_strategy_normalizes_blocks():
    blocks = [
        InfosetBlock(node_id=4, player=0,
                     strategy=np.zeros((2, 2)),
                     cum_regret=np.zeros((2, 2)),
                     cum_strategy=np.array([[3.0, 1.0], [0.0, 0.0]])),
    ]
    avg = extract_average_strategy(blocks)
    np.testing.assert_allclose(avg[4], [[0.75, 0.25], [0.5, 0.5]])
